#include "mobility/stops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <queue>
#include <set>

#include "mobility/textio.hpp"

namespace mobility::stops {
namespace {

// Two-heap running median.
class RunningMedian {
 public:
  void push(double v) {
    if (low_.empty() || v <= low_.top()) {
      low_.push(v);
    } else {
      high_.push(v);
    }
    if (low_.size() > high_.size() + 1) {
      high_.push(low_.top());
      low_.pop();
    } else if (high_.size() > low_.size()) {
      low_.push(high_.top());
      high_.pop();
    }
  }
  double value() const {
    if (low_.size() > high_.size()) return low_.top();
    return 0.5 * (low_.top() + high_.top());
  }

 private:
  std::priority_queue<double> low_;
  std::priority_queue<double, std::vector<double>, std::greater<>> high_;
};

struct FormingStop {
  Timestamp t_first = 0;
  Timestamp t_last = 0;
  std::size_t n = 0;
  RunningMedian lat;
  RunningMedian lon;
  geo::GeoPoint last;

  void add(const ingest::LocationSample& s) {
    if (n == 0) t_first = s.timestamp;
    t_last = s.timestamp;
    ++n;
    lat.push(s.lat);
    lon.push(s.lon);
    last = s.point();
  }
  geo::GeoPoint centroid() const { return {lat.value(), lon.value()}; }
};

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<int> StopSequence::labels() const {
  std::vector<int> out;
  out.reserve(stops.size());
  for (const auto& s : stops) out.push_back(s.place);
  return out;
}

std::vector<Stop> extract_stops(const std::vector<ingest::LocationSample>& samples, const StopParams& params) {
  std::vector<Stop> out;
  if (samples.empty()) return out;

  auto close = [&](const FormingStop& f) {
    if (f.t_last - f.t_first <= params.min_duration_s) return;
    Stop s;
    s.user_id = samples.front().user_id;
    s.t_start = f.t_first;
    s.t_end = f.t_last;
    s.centroid = f.centroid();
    s.n_samples = f.n;
    out.push_back(std::move(s));
  };

  FormingStop forming;
  forming.add(samples.front());
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const geo::GeoPoint ref = params.join == JoinRule::median_centroid ? forming.centroid() : forming.last;
    const bool joins = geo::haversine_m(ref, s.point()) <= params.delta_m && s.timestamp - forming.t_last <= params.gap_s;
    if (!joins) {
      close(forming);
      forming = FormingStop{};
    }
    forming.add(s);
  }
  close(forming);
  return out;
}

std::vector<int> dbscan(const std::vector<geo::GeoPoint>& points, const ClusterParams& params) {
  const std::size_t n = points.size();
  std::vector<int> cluster(n, -1);
  if (n == 0) return cluster;

  // Great-circle distance is at least the meridional arc, so neighbours lie
  // inside a latitude band of half-width eps / R.
  const double band_deg = params.eps_m / geo::kEarthRadiusM * 180.0 / std::numbers::pi * (1.0 + 1e-9);
  std::vector<std::size_t> by_lat(n);
  std::iota(by_lat.begin(), by_lat.end(), 0);
  std::sort(by_lat.begin(), by_lat.end(), [&](std::size_t a, std::size_t b) {
    return points[a].lat != points[b].lat ? points[a].lat < points[b].lat : a < b;
  });
  std::vector<double> sorted_lat(n);
  for (std::size_t k = 0; k < n; ++k) sorted_lat[k] = points[by_lat[k]].lat;

  std::vector<std::vector<std::size_t>> neighbours(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t p = by_lat[k];
    for (std::size_t m = k + 1; m < n && sorted_lat[m] - sorted_lat[k] <= band_deg; ++m) {
      const std::size_t q = by_lat[m];
      if (geo::haversine_m(points[p], points[q]) <= params.eps_m) {
        neighbours[p].push_back(q);
        neighbours[q].push_back(p);
      }
    }
  }

  std::vector<std::uint8_t> core(n, 0);
  for (std::size_t p = 0; p < n; ++p) core[p] = neighbours[p].size() + 1 >= params.min_pts;

  DisjointSets sets(n);
  for (std::size_t p = 0; p < n; ++p) {
    if (!core[p]) continue;
    for (auto q : neighbours[p]) {
      if (core[q]) sets.unite(p, q);
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (core[p]) cluster[p] = static_cast<int>(sets.find(p));
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (core[p]) continue;
    std::optional<std::size_t> best;
    double best_d = 0.0;
    for (auto q : neighbours[p]) {
      if (!core[q]) continue;
      const double d = geo::haversine_m(points[p], points[q]);
      const bool better = !best || d < best_d ||
                          (d == best_d && std::pair(points[q].lat, points[q].lon) <
                                              std::pair(points[*best].lat, points[*best].lon));
      if (better) {
        best = q;
        best_d = d;
      }
    }
    if (best) cluster[p] = static_cast<int>(sets.find(*best));
  }
  return cluster;
}

std::vector<Stop> cluster_places(std::vector<Stop> stops, const ClusterParams& params) {
  std::vector<geo::GeoPoint> points;
  points.reserve(stops.size());
  for (const auto& s : stops) points.push_back(s.centroid);
  const auto raw = dbscan(points, params);

  std::map<int, int> relabel;
  int next = 0;
  for (std::size_t i = 0; i < stops.size(); ++i) {
    if (raw[i] < 0) {
      stops[i].place = next++;
      continue;
    }
    auto [it, inserted] = relabel.try_emplace(raw[i], next);
    if (inserted) ++next;
    stops[i].place = it->second;
  }
  return stops;
}

StopSequence merge_consecutive(const std::vector<Stop>& stops) {
  StopSequence seq;
  if (!stops.empty()) seq.user_id = stops.front().user_id;
  std::size_t i = 0;
  while (i < stops.size()) {
    std::size_t j = i;
    std::vector<double> lats;
    std::vector<double> lons;
    Stop merged = stops[i];
    merged.n_samples = 0;
    while (j < stops.size() && stops[j].place == stops[i].place) {
      lats.push_back(stops[j].centroid.lat);
      lons.push_back(stops[j].centroid.lon);
      merged.n_samples += stops[j].n_samples;
      merged.t_end = stops[j].t_end;
      ++j;
    }
    merged.centroid = {median(std::move(lats)), median(std::move(lons))};
    seq.stops.push_back(std::move(merged));
    i = j;
  }
  std::set<int> distinct;
  for (const auto& s : seq.stops) distinct.insert(s.place);
  seq.n_places = static_cast<int>(distinct.size());
  return seq;
}

StopSequence build_stop_sequence(const std::vector<ingest::LocationSample>& samples, const StopParams& stop_params,
                                 const ClusterParams& cluster_params) {
  auto seq = merge_consecutive(cluster_places(extract_stops(samples, stop_params), cluster_params));
  if (seq.user_id.empty() && !samples.empty()) seq.user_id = samples.front().user_id;
  return seq;
}

DailyRate stops_per_day(const StopSequence& seq, const std::optional<ingest::TimeWindow>& window,
                        Timestamp tz_offset_s) {
  DailyRate rate;
  Timestamp first_day = 0;
  Timestamp last_day = 0;
  if (window && window->end > window->start) {
    first_day = ingest::floor_div(window->start + tz_offset_s, ingest::kSecondsPerDay);
    last_day = ingest::floor_div(window->end - 1 + tz_offset_s, ingest::kSecondsPerDay);
  } else if (!seq.stops.empty()) {
    first_day = ingest::floor_div(seq.stops.front().t_start + tz_offset_s, ingest::kSecondsPerDay);
    last_day = ingest::floor_div(seq.stops.back().t_start + tz_offset_s, ingest::kSecondsPerDay);
  } else {
    return rate;
  }
  std::vector<double> counts(static_cast<std::size_t>(last_day - first_day + 1), 0.0);
  for (const auto& s : seq.stops) {
    const Timestamp d = ingest::floor_div(s.t_start + tz_offset_s, ingest::kSecondsPerDay) - first_day;
    if (d >= 0 && d < static_cast<Timestamp>(counts.size())) counts[static_cast<std::size_t>(d)] += 1.0;
  }
  rate.days = counts.size();
  const double n = static_cast<double>(counts.size());
  rate.mean = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  double ss = 0.0;
  for (double c : counts) ss += (c - rate.mean) * (c - rate.mean);
  rate.sd = std::sqrt(ss / n);
  return rate;
}

std::string serialize_stop_sequence(const StopSequence& seq) {
  std::string out = "t_start,t_end,lat,lon,place_label\n";
  for (const auto& s : seq.stops) {
    out += std::to_string(s.t_start);
    out += ',';
    out += std::to_string(s.t_end);
    out += ',';
    out += textio::format_double(s.centroid.lat);
    out += ',';
    out += textio::format_double(s.centroid.lon);
    out += ',';
    out += std::to_string(s.place);
    out += '\n';
  }
  return out;
}

StopSequence parse_stop_sequence(std::string_view text, std::string user_id) {
  StopSequence seq;
  seq.user_id = std::move(user_id);
  bool have_header = false;
  std::set<int> distinct;
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!have_header) {
      if (line != "t_start,t_end,lat,lon,place_label") throw FormatError("unexpected stop header");
      have_header = true;
      return;
    }
    const auto f = textio::split(line);
    Stop s;
    s.user_id = seq.user_id;
    long long t0 = 0;
    long long t1 = 0;
    long long label = 0;
    if (f.size() != 5 || !textio::parse_int64(f[0], t0) || !textio::parse_int64(f[1], t1) ||
        !textio::parse_double(f[2], s.centroid.lat) || !textio::parse_double(f[3], s.centroid.lon) ||
        !textio::parse_int64(f[4], label) || label < 0) {
      throw FormatError("bad stop row at line " + std::to_string(line_no));
    }
    s.t_start = t0;
    s.t_end = t1;
    s.place = static_cast<int>(label);
    distinct.insert(s.place);
    seq.stops.push_back(std::move(s));
  });
  if (!have_header) throw FormatError("missing stop header");
  seq.n_places = static_cast<int>(distinct.size());
  return seq;
}

SymbolStream to_symbol_stream(const StopSequence& seq) {
  SymbolStream stream;
  stream.formulation = Formulation::next_place;
  for (const auto& s : seq.stops) stream.symbols.push_back(s.place);
  return stream;
}

}  // namespace mobility::stops
