#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mobility/ingest.hpp"
#include "mobility/predictors.hpp"
#include "mobility/softmax.hpp"
#include "mobility/stops.hpp"

namespace mobility::features {

using ingest::Timestamp;

inline constexpr Timestamp kContextWindowS = 1800;
inline constexpr Timestamp kDefaultTzOffsetS = 3600;  // fixed UTC+1, no DST

struct FeatureVector {
  int location = 0;
  int hour = 0;
  int weekhour = 0;
  int weekday = 0;  // Monday = 0
  int weekend = 0;
  int explore_before = 0;
  int explore_now = 0;
  int home = 0;
  double d_from_home = 0.0;
  int sms_received_30min = 0;
  int sms_sent_30min = 0;
  int calls_received_30min = 0;
  int calls_sent_30min = 0;
  double bt_entropy_30min = 0.0;
  int bt_unique_30min = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct FeatureRow {
  FeatureVector x;
  Timestamp t_start = 0;
  int next_place = 0;
  bool explored_next = false;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct CivilTime {
  int hour = 0;
  int weekday = 0;
  int weekhour = 0;
  bool weekend = false;
};

CivilTime civil_time(Timestamp t, Timestamp tz_offset_s);

/// Most visited label; ties by larger total duration, then smaller label.
/// Throws std::invalid_argument on an empty sequence.
int home_place(const stops::StopSequence& seq);

/// Shannon entropy (bits) of device ids among the bt_scan events given.
double bt_entropy(std::span<const ingest::ContextEvent> events);

/// One row per stop except the last; targets come from the following stop.
/// Context counts use events in (t_start - 1800, t_start]. `events` must be
/// time-sorted.
std::vector<FeatureRow> build_feature_rows(const stops::StopSequence& seq,
                                           const std::vector<ingest::ContextEvent>& events,
                                           Timestamp tz_offset_s = kDefaultTzOffsetS);

enum class Feature {
  location,
  hour,
  weekhour,
  weekday,
  weekend,
  explore_before,
  explore_now,
  home,
  d_from_home,
  sms_received_30min,
  sms_sent_30min,
  calls_received_30min,
  calls_sent_30min,
  bt_entropy_30min,
  bt_unique_30min,
};

inline constexpr std::size_t kFeatureCount = 15;

std::string_view feature_name(Feature f);
const std::array<Feature, kFeatureCount>& all_features();

/// CSV with one column per feature name plus t_start,next_place,explored_next.
std::string serialize_feature_rows(const std::vector<FeatureRow>& rows);

using FeatureSet = std::vector<Feature>;

/// Comma-separated feature names, or "all". The next-place "all" set leaves
/// out the two exploration flags; pass include_explore for the exploration task.
FeatureSet parse_feature_set(std::string_view names, bool include_explore_in_all = false);
std::string to_string(const FeatureSet& set);

/// Maps rows to sparse model inputs: a bias term, one-hot location / hour /
/// weekday / weekhour, raw 0-1 flags, and numeric features standardized by
/// running mean and variance.
class FeatureEncoder {
 public:
  explicit FeatureEncoder(FeatureSet set) : set_(std::move(set)) {}
  softmax::SparseVector encode(const FeatureVector& x);
  std::size_t dimension() const { return next_index_; }

 private:
  struct RunningStats {
    double n = 0.0;
    double mean = 0.0;
    double m2 = 0.0;
  };
  std::size_t index_of(Feature f, long long value);

  FeatureSet set_;
  std::map<std::pair<int, long long>, std::size_t> index_;
  std::map<int, RunningStats> stats_;
  std::size_t next_index_ = 1;  // 0 is the bias
};

/// Online multinomial next-place model over the given features.
predictors::PredictionReport evaluate_logreg_next_place(const std::vector<FeatureRow>& rows, const FeatureSet& set,
                                                        softmax::SgdParams params = {}, bool keep_steps = false);

}  // namespace mobility::features
