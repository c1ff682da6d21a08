#include "mobility/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace mobility::exploration {

ExplorationLabels label_explorations(std::span<const int> places) {
  ExplorationLabels out;
  out.labels.reserve(places.size());
  std::unordered_set<int> seen;
  for (int p : places) {
    const bool fresh = seen.insert(p).second;
    out.labels.push_back(fresh ? 1 : 0);
    if (fresh) ++out.n_explorations;
  }
  out.p_exploration = places.empty() ? 0.0 : static_cast<double>(out.n_explorations) / static_cast<double>(places.size());
  return out;
}

std::optional<double> fraction_visited_once(std::span<const int> places) {
  if (places.empty()) return std::nullopt;
  std::unordered_map<int, std::size_t> visits;
  for (int p : places) ++visits[p];
  std::size_t once = 0;
  for (const auto& [p, c] : visits) once += c == 1 ? 1 : 0;
  return static_cast<double>(once) / static_cast<double>(visits.size());
}

std::int64_t week_index(ingest::Timestamp t, ingest::Timestamp tz_offset_s) {
  const auto day = ingest::floor_div(t + tz_offset_s, ingest::kSecondsPerDay);
  // Day 0 is a Thursday; shift so weeks start on Monday.
  return ingest::floor_div(day + 3, 7);
}

WeeklyNewPlaces weekly_new_places(const stops::StopSequence& seq, const std::optional<ingest::TimeWindow>& window,
                                  ingest::Timestamp tz_offset_s) {
  WeeklyNewPlaces out;
  std::int64_t first = 0;
  std::int64_t last = 0;
  if (window && window->end > window->start) {
    first = week_index(window->start, tz_offset_s);
    last = week_index(window->end - 1, tz_offset_s);
  } else if (!seq.stops.empty()) {
    first = week_index(seq.stops.front().t_start, tz_offset_s);
    last = week_index(seq.stops.back().t_start, tz_offset_s);
  } else {
    return out;
  }
  out.first_week = first;
  out.counts.assign(static_cast<std::size_t>(last - first + 1), 0);
  const auto labels = label_explorations(seq.labels()).labels;
  for (std::size_t i = 0; i < seq.stops.size(); ++i) {
    if (!labels[i]) continue;
    const auto w = week_index(seq.stops[i].t_start, tz_offset_s) - first;
    if (w >= 0 && w < static_cast<std::int64_t>(out.counts.size())) ++out.counts[static_cast<std::size_t>(w)];
  }
  std::size_t running = 0;
  for (auto c : out.counts) {
    running += c;
    out.cumulative.push_back(running);
  }
  return out;
}

PrecisionRecallF1 score_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  PrecisionRecallF1 s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  s.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  s.recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  const double denom = s.precision + s.recall;
  s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
  return s;
}

double RandomExploreBaseline::rate() const {
  return seen_ == 0 ? prior_ : static_cast<double>(positives_) / static_cast<double>(seen_);
}

bool RandomExploreBaseline::predict(const features::FeatureRow&) {
  std::bernoulli_distribution coin(rate());
  return coin(rng_);
}

void RandomExploreBaseline::update(const features::FeatureRow&, bool explored_next) {
  ++seen_;
  if (explored_next) ++positives_;
}

LogisticExploreModel::LogisticExploreModel(features::FeatureSet set, double threshold, softmax::SgdParams params)
    : encoder_(set), model_(params), threshold_(threshold), name_("logreg:" + features::to_string(set)) {}

bool LogisticExploreModel::predict(const features::FeatureRow& row) {
  pending_ = encoder_.encode(row.x);
  return model_.probability(pending_) >= threshold_;
}

void LogisticExploreModel::update(const features::FeatureRow& row, bool explored_next) {
  if (pending_.empty()) pending_ = encoder_.encode(row.x);
  model_.update(pending_, explored_next);
  pending_.clear();
}

std::unique_ptr<ExplorationModel> make_exploration_model(std::string_view desc, std::uint64_t seed, double threshold) {
  if (desc == "random") return std::make_unique<RandomExploreBaseline>(seed);
  if (desc == "always_return") return std::make_unique<AlwaysReturn>();
  constexpr std::string_view prefix = "logreg:";
  if (desc.starts_with(prefix)) {
    return std::make_unique<LogisticExploreModel>(features::parse_feature_set(desc.substr(prefix.size()), true),
                                                  threshold);
  }
  throw std::invalid_argument("unknown exploration model '" + std::string(desc) + "'");
}

PrecisionRecallF1 evaluate_exploration(const std::vector<features::FeatureRow>& rows, ExplorationModel& model) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& row : rows) {
    const bool predicted = model.predict(row);
    const bool truth = row.explored_next;
    if (predicted && truth) ++tp;
    else if (predicted) ++fp;
    else if (truth) ++fn;
    else ++tn;
    model.update(row, truth);
  }
  return score_confusion(tp, fp, fn, tn);
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace mobility::exploration
