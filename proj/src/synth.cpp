#include "mobility/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>

namespace mobility::synth {
namespace {

constexpr int kMaxPlacementAttempts = 2000;

class Generator {
 public:
  explicit Generator(const EprParams& p) : p_(p), rng_(p.seed) {}

  SyntheticTrace run() {
    SyntheticTrace trace;
    trace.params = p_;
    if (p_.routine_anchors > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, p_.routine_anchors - 1);
      for (auto& a : schedule_) a = static_cast<int>(pick(rng_));
    }

    const std::size_t seeded = p_.seed_places + p_.gateway_places;
    Timestamp t = p_.start_time;
    std::optional<int> current;
    for (std::size_t k = 0; k < p_.n_stops; ++k) {
      SynthStop stop;
      if (k < seeded || !current) {
        stop.place = new_place(trace, k >= p_.seed_places);
        stop.is_exploration = true;
      } else {
        stop = next_stop(trace, *current, trace.stops.back().t_start);
      }
      ++visits_[static_cast<std::size_t>(stop.place)];
      stop.t_start = t;
      stop.t_end = t + stay();
      trace.stops.push_back(stop);
      current = stop.place;
      std::uniform_int_distribution<Timestamp> travel(p_.travel_min_s, p_.travel_max_s);
      t = stop.t_end + travel(rng_);
    }
    return trace;
  }

 private:
  SynthStop next_stop(SyntheticTrace& trace, int current, Timestamp current_start) {
    SynthStop stop;
    const std::size_t known = trace.places.size();
    double p_new = known == 0 ? 1.0 : std::min(1.0, p_.rho * std::pow(static_cast<double>(known), -p_.gamma));
    if (p_.gateway_places > 0 && trace.is_gateway[static_cast<std::size_t>(current)]) p_new = p_.gateway_explore_p;
    // With a single known place a return would be a self-transition.
    const bool explore = known <= 1 || std::bernoulli_distribution(p_new)(rng_);
    if (explore) {
      stop.place = new_place(trace, false);
      stop.is_exploration = true;
      return stop;
    }
    stop.place = choose_return(trace, current, current_start);
    return stop;
  }

  int choose_return(const SyntheticTrace& trace, int current, Timestamp current_start) {
    if (p_.routine_anchors > 0 && p_.routine_p > 0.0 && std::bernoulli_distribution(p_.routine_p)(rng_)) {
      const int anchor = schedule_[slot(current_start)];
      if (anchor != current && static_cast<std::size_t>(anchor) < trace.places.size()) return anchor;
    }
    if (p_.gateway_places > 0 && p_.gateway_return_p > 0.0 && std::bernoulli_distribution(p_.gateway_return_p)(rng_)) {
      std::vector<int> options;
      for (std::size_t i = 0; i < trace.places.size(); ++i) {
        if (trace.is_gateway[i] && static_cast<int>(i) != current) options.push_back(static_cast<int>(i));
      }
      if (!options.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        return options[pick(rng_)];
      }
    }
    // Preferential return, excluding the current place.
    double total = 0.0;
    for (std::size_t i = 0; i < trace.places.size(); ++i) {
      if (static_cast<int>(i) != current) total += static_cast<double>(visits_[i]);
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng_);
    int chosen = -1;
    for (std::size_t i = 0; i < trace.places.size(); ++i) {
      if (static_cast<int>(i) == current) continue;
      chosen = static_cast<int>(i);
      u -= static_cast<double>(visits_[i]);
      if (u < 0.0) break;
    }
    return chosen;
  }

  std::size_t slot(Timestamp t) const {
    const Timestamp local = t + p_.routine_tz_offset_s;
    const Timestamp day = ingest::floor_div(local, ingest::kSecondsPerDay);
    const int weekday = static_cast<int>(((day + 3) % 7 + 7) % 7);
    const int hour = static_cast<int>((local - day * ingest::kSecondsPerDay) / 3600);
    return static_cast<std::size_t>((weekday >= 5 ? 4 : 0) + hour / 6);
  }

  int new_place(SyntheticTrace& trace, bool gateway) {
    std::uniform_real_distribution<double> lat(p_.region.lat_min, p_.region.lat_max);
    std::uniform_real_distribution<double> lon(p_.region.lon_min, p_.region.lon_max);
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
      const geo::GeoPoint cand{lat(rng_), lon(rng_)};
      const bool clear = std::none_of(trace.places.begin(), trace.places.end(), [&](const geo::GeoPoint& q) {
        return geo::haversine_m(cand, q) < p_.min_spacing_m;
      });
      if (!clear) continue;
      trace.places.push_back(cand);
      trace.is_gateway.push_back(gateway ? 1 : 0);
      visits_.push_back(0);
      return static_cast<int>(trace.places.size() - 1);
    }
    throw std::runtime_error("epr_generate: region too small to place another location");
  }

  Timestamp stay() {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
    const double x = static_cast<double>(p_.min_stay_s) * std::pow(1.0 - u, -1.0 / p_.stay_pareto_alpha);
    return std::clamp(static_cast<Timestamp>(x), p_.min_stay_s, p_.max_stay_s);
  }

  const EprParams& p_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> visits_;
  std::array<int, 8> schedule_{};
};

void validate(const EprParams& p) {
  if (!(p.rho >= 0.0) || !(p.gamma >= 0.0)) throw std::invalid_argument("epr: rho and gamma must be >= 0");
  if (!(p.stay_pareto_alpha > 0.0)) throw std::invalid_argument("epr: stay_pareto_alpha must be > 0");
  if (p.min_stay_s <= 0 || p.max_stay_s < p.min_stay_s) throw std::invalid_argument("epr: bad stay bounds");
  if (p.travel_min_s < 1 || p.travel_max_s < p.travel_min_s) throw std::invalid_argument("epr: bad travel bounds");
  if (!(p.region.lat_max > p.region.lat_min) || !(p.region.lon_max > p.region.lon_min)) {
    throw std::invalid_argument("epr: empty region");
  }
  if (p.routine_anchors > p.seed_places) throw std::invalid_argument("epr: routine anchors must be seeded places");
}

}  // namespace

std::vector<int> SyntheticTrace::place_sequence() const {
  std::vector<int> out;
  out.reserve(stops.size());
  for (const auto& s : stops) out.push_back(s.place);
  return out;
}

stops::StopSequence SyntheticTrace::as_stop_sequence() const {
  stops::StopSequence seq;
  seq.user_id = params.user_id;
  for (const auto& s : stops) {
    stops::Stop st;
    st.user_id = params.user_id;
    st.t_start = s.t_start;
    st.t_end = s.t_end;
    st.centroid = places[static_cast<std::size_t>(s.place)];
    st.place = s.place;
    seq.stops.push_back(st);
  }
  seq.n_places = static_cast<int>(places.size());
  return seq;
}

SyntheticTrace epr_generate(const EprParams& params) {
  validate(params);
  return Generator(params).run();
}

std::vector<ingest::LocationSample> expand_to_samples(const SyntheticTrace& trace, Timestamp bin_s, double jitter_m,
                                                      std::uint64_t seed) {
  std::vector<ingest::LocationSample> out;
  std::mt19937_64 rng(seed ^ (trace.params.seed * 0x9e3779b97f4a7c15ULL));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (const auto& s : trace.stops) {
    const auto& place = trace.places[static_cast<std::size_t>(s.place)];
    const double m_per_deg_lon = geo::kMetersPerDegree * std::cos(place.lat * std::numbers::pi / 180.0);
    Timestamp t = ingest::floor_div(s.t_start + bin_s - 1, bin_s) * bin_s;
    for (; t <= s.t_end; t += bin_s) {
      ingest::LocationSample sample;
      sample.user_id = trace.params.user_id;
      sample.timestamp = t;
      sample.lat = place.lat;
      sample.lon = place.lon;
      if (jitter_m > 0.0) {
        sample.lat += noise(rng) * jitter_m / geo::kMetersPerDegree;
        sample.lon += noise(rng) * jitter_m / m_per_deg_lon;
      }
      sample.accuracy_m = jitter_m > 0.0 ? jitter_m : 5.0;
      out.push_back(std::move(sample));
    }
  }
  return out;
}

std::vector<ingest::ContextEvent> synth_context_events(const SyntheticTrace& trace, std::uint64_t seed) {
  std::vector<ingest::ContextEvent> out;
  std::mt19937_64 rng(seed ^ (trace.params.seed * 0xbf58476d1ce4e5b9ULL));
  constexpr double kPerHour[] = {0.25, 0.2, 0.08, 0.06};  // sms_in, sms_out, call_in, call_out
  constexpr ingest::EventKind kKinds[] = {ingest::EventKind::sms_in, ingest::EventKind::sms_out,
                                          ingest::EventKind::call_in, ingest::EventKind::call_out};
  const std::string& user = trace.params.user_id;
  for (const auto& s : trace.stops) {
    const double hours = static_cast<double>(s.t_end - s.t_start) / 3600.0;
    std::uniform_int_distribution<Timestamp> when(s.t_start, s.t_end);
    for (int k = 0; k < 4; ++k) {
      const int n = std::poisson_distribution<int>(kPerHour[k] * hours)(rng);
      for (int i = 0; i < n; ++i) out.push_back({user, when(rng), kKinds[k], ""});
    }
    // Scan every 30 minutes; each of the place's 4 regular devices is seen
    // with probability 0.5, plus an occasional passer-by.
    std::bernoulli_distribution seen(0.5);
    std::bernoulli_distribution stranger(0.2);
    std::uniform_int_distribution<int> stranger_id(0, 9999);
    for (Timestamp t = s.t_start; t <= s.t_end; t += 1800) {
      for (int d = 0; d < 4; ++d) {
        if (seen(rng)) out.push_back({user, t, ingest::EventKind::bt_scan, "p" + std::to_string(s.place) + "d" + std::to_string(d)});
      }
      if (stranger(rng)) out.push_back({user, t, ingest::EventKind::bt_scan, "x" + std::to_string(stranger_id(rng))});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  return out;
}

std::string serialize_ground_truth(const SyntheticTrace& trace) {
  std::string out = "stop_index,place_label,is_exploration\n";
  for (std::size_t i = 0; i < trace.stops.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += std::to_string(trace.stops[i].place);
    out += ',';
    out += trace.stops[i].is_exploration ? '1' : '0';
    out += '\n';
  }
  return out;
}

RecoveryStats stop_recovery(const stops::StopSequence& truth, const stops::StopSequence& detected) {
  RecoveryStats stats;
  stats.truth_stops = truth.stops.size();
  std::vector<int> match(truth.stops.size(), -1);
  std::size_t j = 0;
  for (std::size_t i = 0; i < truth.stops.size(); ++i) {
    const auto& t = truth.stops[i];
    while (j < detected.stops.size() && detected.stops[j].t_end < t.t_start) ++j;
    Timestamp best_overlap = -1;
    for (std::size_t k = j; k < detected.stops.size() && detected.stops[k].t_start <= t.t_end; ++k) {
      const Timestamp overlap =
          std::min(t.t_end, detected.stops[k].t_end) - std::max(t.t_start, detected.stops[k].t_start);
      if (overlap > best_overlap) {
        best_overlap = overlap;
        match[i] = detected.stops[k].place;
      }
    }
  }

  // Majority correspondence in each direction.
  std::map<int, std::map<int, std::size_t>> truth_to_det;
  std::map<int, std::map<int, std::size_t>> det_to_truth;
  for (std::size_t i = 0; i < truth.stops.size(); ++i) {
    if (match[i] < 0) continue;
    ++truth_to_det[truth.stops[i].place][match[i]];
    ++det_to_truth[match[i]][truth.stops[i].place];
  }
  auto majority = [](const std::map<int, std::size_t>& m) {
    return std::max_element(m.begin(), m.end(), [](const auto& a, const auto& b) { return a.second < b.second; })->first;
  };
  for (std::size_t i = 0; i < truth.stops.size(); ++i) {
    if (match[i] < 0) continue;
    const int tp = truth.stops[i].place;
    if (majority(truth_to_det[tp]) == match[i] && majority(det_to_truth[match[i]]) == tp) ++stats.recovered;
  }
  stats.fraction = stats.truth_stops == 0 ? 1.0
                                          : static_cast<double>(stats.recovered) / static_cast<double>(stats.truth_stops);
  return stats;
}

RecoveryStats stop_recovery(const SyntheticTrace& truth, const stops::StopSequence& detected) {
  return stop_recovery(truth.as_stop_sequence(), detected);
}

}  // namespace mobility::synth
