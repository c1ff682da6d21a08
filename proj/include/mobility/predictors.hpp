#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mobility/symbols.hpp"

namespace mobility::predictors {

struct StepRecord {
  std::size_t index = 0;
  Symbol predicted = kMissing;
  Symbol actual = kMissing;
  bool correct = false;
};

struct PredictionReport {
  std::size_t n_predictions = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  std::vector<StepRecord> per_step;  // filled only when requested

  void record(std::size_t index, Symbol predicted, Symbol actual, bool keep_step);
  void finish();
};

/// Online next-symbol predictor. predict() sees only what was passed to
/// observe(); observing kMissing leaves the state untouched.
class SequencePredictor {
 public:
  virtual ~SequencePredictor() = default;
  virtual std::optional<Symbol> predict() const = 0;
  virtual void observe(Symbol s) = 0;
  virtual std::string_view name() const = 0;
};

/// Most frequent symbol so far; ties go to the earliest first occurrence.
class FrequencyTable {
 public:
  void add(Symbol s);
  std::optional<Symbol> mode() const { return best_; }
  std::size_t count(Symbol s) const;
  std::size_t distinct() const { return counts_.size(); }

 private:
  struct Entry {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<Symbol, Entry> counts_;
  std::optional<Symbol> best_;
};

class ToplocPredictor final : public SequencePredictor {
 public:
  std::optional<Symbol> predict() const override { return freq_.mode(); }
  void observe(Symbol s) override;
  std::string_view name() const override { return "toploc"; }

 private:
  FrequencyTable freq_;
};

class StationaryPredictor final : public SequencePredictor {
 public:
  std::optional<Symbol> predict() const override { return last_; }
  void observe(Symbol s) override;
  std::string_view name() const override { return "stationary"; }

 private:
  std::optional<Symbol> last_;
};

/// First-order transition counts plus symbol frequencies for the fallback.
class MarkovModel {
 public:
  void add_transition(Symbol from, Symbol to);
  void add_symbol(Symbol s) { freq_.add(s); }

  /// Most frequent successor of `current` (ties: earliest first-observed
  /// transition); falls back to the most frequent symbol.
  std::optional<Symbol> predict(std::optional<Symbol> current) const;

  std::size_t transition_count(Symbol from, Symbol to) const;
  std::size_t out_transitions(Symbol from) const;
  const FrequencyTable& frequencies() const { return freq_; }

 private:
  struct Row {
    std::unordered_map<Symbol, std::size_t> slot;  // successor -> index into counts
    std::vector<std::pair<Symbol, std::size_t>> counts;  // first-observed order
    std::size_t best = 0;
    std::size_t total = 0;
  };
  std::unordered_map<Symbol, Row> rows_;
  FrequencyTable freq_;
};

class MarkovPredictor final : public SequencePredictor {
 public:
  std::optional<Symbol> predict() const override { return model_.predict(current_); }
  void observe(Symbol s) override;
  std::string_view name() const override { return "markov"; }
  const MarkovModel& model() const { return model_; }

 private:
  MarkovModel model_;
  std::optional<Symbol> current_;
};

/// Progressive train-then-predict. Step 0 is never scored; steps whose truth
/// is kMissing or where the predictor has nothing to say are skipped.
PredictionReport evaluate_online(const SymbolStream& stream, SequencePredictor& predictor, bool keep_steps = false);

std::optional<Symbol> toploc_predict(std::span<const Symbol> history);
std::optional<Symbol> stationary_predict(std::span<const Symbol> history);
std::optional<Symbol> markov_predict(const MarkovModel& model, std::optional<Symbol> current);

}  // namespace mobility::predictors
