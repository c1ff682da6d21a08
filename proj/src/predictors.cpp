#include "mobility/predictors.hpp"

namespace mobility::predictors {

void PredictionReport::record(std::size_t index, Symbol predicted, Symbol actual, bool keep_step) {
  const bool correct = predicted == actual;
  ++n_predictions;
  if (correct) ++n_correct;
  if (keep_step) per_step.push_back({index, predicted, actual, correct});
}

void PredictionReport::finish() {
  accuracy = n_predictions == 0 ? 0.0 : static_cast<double>(n_correct) / static_cast<double>(n_predictions);
}

void FrequencyTable::add(Symbol s) {
  auto [it, inserted] = counts_.try_emplace(s, Entry{0, counts_.size()});
  ++it->second.count;
  if (!best_) {
    best_ = s;
    return;
  }
  if (*best_ == s) return;
  const Entry& b = counts_.at(*best_);
  const Entry& e = it->second;
  if (e.count > b.count || (e.count == b.count && e.first_seen < b.first_seen)) best_ = s;
}

std::size_t FrequencyTable::count(Symbol s) const {
  auto it = counts_.find(s);
  return it == counts_.end() ? 0 : it->second.count;
}

void ToplocPredictor::observe(Symbol s) {
  if (s != kMissing) freq_.add(s);
}

void StationaryPredictor::observe(Symbol s) {
  if (s != kMissing) last_ = s;
}

void MarkovModel::add_transition(Symbol from, Symbol to) {
  Row& row = rows_[from];
  auto [it, inserted] = row.slot.try_emplace(to, row.counts.size());
  if (inserted) row.counts.emplace_back(to, 0);
  const std::size_t k = it->second;
  ++row.counts[k].second;
  ++row.total;
  // Slots are in first-observed order, so a lower index wins ties.
  if (row.counts[k].second > row.counts[row.best].second ||
      (row.counts[k].second == row.counts[row.best].second && k < row.best)) {
    row.best = k;
  }
}

std::optional<Symbol> MarkovModel::predict(std::optional<Symbol> current) const {
  if (current) {
    auto it = rows_.find(*current);
    if (it != rows_.end() && it->second.total > 0) return it->second.counts[it->second.best].first;
  }
  return freq_.mode();
}

std::size_t MarkovModel::transition_count(Symbol from, Symbol to) const {
  auto it = rows_.find(from);
  if (it == rows_.end()) return 0;
  auto jt = it->second.slot.find(to);
  return jt == it->second.slot.end() ? 0 : it->second.counts[jt->second].second;
}

std::size_t MarkovModel::out_transitions(Symbol from) const {
  auto it = rows_.find(from);
  return it == rows_.end() ? 0 : it->second.total;
}

void MarkovPredictor::observe(Symbol s) {
  if (s == kMissing) return;
  if (current_) model_.add_transition(*current_, s);
  model_.add_symbol(s);
  current_ = s;
}

PredictionReport evaluate_online(const SymbolStream& stream, SequencePredictor& predictor, bool keep_steps) {
  PredictionReport report;
  const auto& symbols = stream.symbols;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i >= 1 && symbols[i] != kMissing) {
      if (auto p = predictor.predict()) report.record(i, *p, symbols[i], keep_steps);
    }
    predictor.observe(symbols[i]);
  }
  report.finish();
  return report;
}

std::optional<Symbol> toploc_predict(std::span<const Symbol> history) {
  FrequencyTable freq;
  for (Symbol s : history) {
    if (s != kMissing) freq.add(s);
  }
  return freq.mode();
}

std::optional<Symbol> stationary_predict(std::span<const Symbol> history) {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (*it != kMissing) return *it;
  }
  return std::nullopt;
}

std::optional<Symbol> markov_predict(const MarkovModel& model, std::optional<Symbol> current) {
  return model.predict(current);
}

}  // namespace mobility::predictors
