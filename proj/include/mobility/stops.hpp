#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobility/geo.hpp"
#include "mobility/ingest.hpp"
#include "mobility/symbols.hpp"

namespace mobility::stops {

using ingest::Timestamp;

inline constexpr int kUnassigned = -1;

struct Stop {
  std::string user_id;
  Timestamp t_start = 0;
  Timestamp t_end = 0;
  geo::GeoPoint centroid;  // per-axis median of member coordinates
  std::size_t n_samples = 0;
  int place = kUnassigned;

  Timestamp duration() const { return t_end - t_start; }
};

struct StopSequence {
  std::string user_id;
  std::vector<Stop> stops;
  int n_places = 0;

  std::vector<int> labels() const;
};

enum class JoinRule {
  median_centroid,  // distance to the forming stop's running median
  previous_sample,  // distance to the last accepted sample
};

struct StopParams {
  double delta_m = 50.0;
  Timestamp min_duration_s = 900;
  Timestamp gap_s = 1800;
  JoinRule join = JoinRule::median_centroid;
};

struct ClusterParams {
  double eps_m = 50.0;
  std::size_t min_pts = 2;  // includes the point itself
};

/// Greedy sequential grouping of time-sorted samples into dwell stops. Stops
/// lasting no more than min_duration_s are dropped.
std::vector<Stop> extract_stops(const std::vector<ingest::LocationSample>& samples, const StopParams& params = {});

/// DBSCAN over stop centroids with the haversine metric. Border points go to
/// the cluster of their nearest core neighbour, noise points become singleton
/// places, and labels are numbered by first appearance in input order.
std::vector<Stop> cluster_places(std::vector<Stop> stops, const ClusterParams& params = {});

/// Cluster ids per point without relabeling: -1 for noise. Exposed for tests.
std::vector<int> dbscan(const std::vector<geo::GeoPoint>& points, const ClusterParams& params);

/// Collapses maximal runs of equal labels into one stop.
StopSequence merge_consecutive(const std::vector<Stop>& stops);

/// Full per-user transform: extract, cluster, merge.
StopSequence build_stop_sequence(const std::vector<ingest::LocationSample>& samples, const StopParams& stop_params = {},
                                 const ClusterParams& cluster_params = {});

struct DailyRate {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t days = 0;
};

/// Stops per calendar day (by t_start, shifted by tz_offset_s), over the days
/// spanned by `window` or, if absent, by the stops themselves.
DailyRate stops_per_day(const StopSequence& seq, const std::optional<ingest::TimeWindow>& window = std::nullopt,
                        Timestamp tz_offset_s = 0);

/// `t_start,t_end,lat,lon,place_label`
std::string serialize_stop_sequence(const StopSequence& seq);
StopSequence parse_stop_sequence(std::string_view text, std::string user_id);

SymbolStream to_symbol_stream(const StopSequence& seq);

double median(std::vector<double> values);

}  // namespace mobility::stops
