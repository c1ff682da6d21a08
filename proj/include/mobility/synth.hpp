#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mobility/geo.hpp"
#include "mobility/ingest.hpp"
#include "mobility/stops.hpp"

namespace mobility::synth {

using ingest::Timestamp;

struct Region {
  double lat_min = 55.60;
  double lat_max = 55.80;
  double lon_min = 12.35;
  double lon_max = 12.65;
};

/// Exploration / preferential-return generator settings. The gateway and
/// routine knobs are optional structure layered on top of the basic process.
struct EprParams {
  std::string user_id = "u000";
  double rho = 0.6;
  double gamma = 0.21;
  std::size_t n_stops = 2000;
  double stay_pareto_alpha = 0.35;
  Timestamp min_stay_s = 3600;
  Timestamp max_stay_s = 12 * 3600;
  Timestamp travel_min_s = 60;
  Timestamp travel_max_s = 1800;
  Region region;
  double min_spacing_m = 150.0;
  std::uint64_t seed = 1;
  Timestamp start_time = 1378080000;  // Monday 2013-09-02 00:00 UTC
  std::size_t seed_places = 0;

  // After a stop at a gateway place the next stop explores with
  // gateway_explore_p; returns go to a gateway with gateway_return_p.
  std::size_t gateway_places = 0;
  double gateway_explore_p = 0.0;
  double gateway_return_p = 0.0;

  // With routine_p a return goes to the anchor scheduled for the time slot
  // (weekday/weekend x 6-hour block) in which the current stop started.
  // Anchors are the first routine_anchors seeded places.
  std::size_t routine_anchors = 0;
  double routine_p = 0.0;
  Timestamp routine_tz_offset_s = 3600;
};

struct SynthStop {
  int place = 0;
  Timestamp t_start = 0;
  Timestamp t_end = 0;
  bool is_exploration = false;
};

struct SyntheticTrace {
  EprParams params;
  std::vector<geo::GeoPoint> places;
  std::vector<std::uint8_t> is_gateway;
  std::vector<SynthStop> stops;

  std::vector<int> place_sequence() const;
  /// The generated stops as a labeled stop sequence at the exact place locations.
  stops::StopSequence as_stop_sequence() const;
};

/// Throws std::invalid_argument for bad parameters and std::runtime_error
/// when the region cannot host another place after bounded rejection.
SyntheticTrace epr_generate(const EprParams& params);

/// One fix per lattice point inside each stop's [t_start, t_end], jittered by
/// isotropic Gaussian noise with standard deviation jitter_m. Travel is left empty.
std::vector<ingest::LocationSample> expand_to_samples(const SyntheticTrace& trace, Timestamp bin_s = 900,
                                                      double jitter_m = 10.0, std::uint64_t seed = 0);

/// Phone and Bluetooth activity for the context features: Poisson SMS/calls
/// and periodic scans of devices drawn from per-place pools.
std::vector<ingest::ContextEvent> synth_context_events(const SyntheticTrace& trace, std::uint64_t seed = 0);

/// `stop_index,place_label,is_exploration`
std::string serialize_ground_truth(const SyntheticTrace& trace);

struct RecoveryStats {
  std::size_t truth_stops = 0;
  std::size_t recovered = 0;  // overlapping detected stop with consistent place grouping
  double fraction = 0.0;
};

/// Matches each generated stop to the detected stop with the largest time
/// overlap and checks that place labels correspond one-to-one.
RecoveryStats stop_recovery(const SyntheticTrace& truth, const stops::StopSequence& detected);
RecoveryStats stop_recovery(const stops::StopSequence& truth, const stops::StopSequence& detected);

}  // namespace mobility::synth
