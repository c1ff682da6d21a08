#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobility/features.hpp"
#include "mobility/softmax.hpp"
#include "mobility/stops.hpp"

namespace mobility::exploration {

struct ExplorationLabels {
  std::vector<std::uint8_t> labels;
  std::size_t n_explorations = 0;
  double p_exploration = 0.0;
};

/// 1 at the first occurrence of each label, 0 for returns.
ExplorationLabels label_explorations(std::span<const int> places);

/// Share of places with exactly one stop; nullopt for an empty sequence.
std::optional<double> fraction_visited_once(std::span<const int> places);

struct WeeklyNewPlaces {
  std::int64_t first_week = 0;  // Monday-based week index since the epoch
  std::vector<std::size_t> counts;
  std::vector<std::size_t> cumulative;
};

/// First-visit counts per calendar week (weeks start Monday 00:00 civil
/// time). Covers the weeks of `window` if given, else those of the stops.
WeeklyNewPlaces weekly_new_places(const stops::StopSequence& seq,
                                  const std::optional<ingest::TimeWindow>& window = std::nullopt,
                                  ingest::Timestamp tz_offset_s = features::kDefaultTzOffsetS);

std::int64_t week_index(ingest::Timestamp t, ingest::Timestamp tz_offset_s);

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

PrecisionRecallF1 score_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn = 0);

/// Online binary classifier for "is the next stop an exploration?".
class ExplorationModel {
 public:
  virtual ~ExplorationModel() = default;
  virtual bool predict(const features::FeatureRow& row) = 0;
  virtual void update(const features::FeatureRow& row, bool explored_next) = 0;
  virtual std::string name() const = 0;
};

/// Emits 1 with probability equal to the running share of explorations among
/// the targets seen so far (the prior before any data).
class RandomExploreBaseline final : public ExplorationModel {
 public:
  explicit RandomExploreBaseline(std::uint64_t seed, double prior = 0.2) : rng_(seed), prior_(prior) {}
  bool predict(const features::FeatureRow& row) override;
  void update(const features::FeatureRow& row, bool explored_next) override;
  std::string name() const override { return "random"; }
  double rate() const;

 private:
  std::mt19937_64 rng_;
  double prior_;
  std::size_t seen_ = 0;
  std::size_t positives_ = 0;
};

class AlwaysReturn final : public ExplorationModel {
 public:
  bool predict(const features::FeatureRow&) override { return false; }
  void update(const features::FeatureRow&, bool) override {}
  std::string name() const override { return "always_return"; }
};

class LogisticExploreModel final : public ExplorationModel {
 public:
  LogisticExploreModel(features::FeatureSet set, double threshold = 0.5, softmax::SgdParams params = {});
  bool predict(const features::FeatureRow& row) override;
  void update(const features::FeatureRow& row, bool explored_next) override;
  std::string name() const override { return name_; }

 private:
  features::FeatureEncoder encoder_;
  softmax::OnlineLogistic model_;
  double threshold_;
  std::string name_;
  softmax::SparseVector pending_;
};

/// "random", "always_return", or "logreg:<feature-set>" (all = every feature
/// including the exploration flags).
std::unique_ptr<ExplorationModel> make_exploration_model(std::string_view desc, std::uint64_t seed,
                                                         double threshold = 0.5);

/// Online predict-then-update over the rows; positive class = exploration.
PrecisionRecallF1 evaluate_exploration(const std::vector<features::FeatureRow>& rows, ExplorationModel& model);

/// Product-moment correlation; nullopt for mismatched sizes, n < 2 or zero variance.
std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace mobility::exploration
