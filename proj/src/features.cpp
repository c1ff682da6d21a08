#include "mobility/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "mobility/exploration.hpp"
#include "mobility/geo.hpp"
#include "mobility/textio.hpp"

namespace mobility::features {
namespace {

constexpr std::array<Feature, kFeatureCount> kAll = {
    Feature::location,           Feature::hour,           Feature::weekhour,
    Feature::weekday,            Feature::weekend,        Feature::explore_before,
    Feature::explore_now,        Feature::home,           Feature::d_from_home,
    Feature::sms_received_30min, Feature::sms_sent_30min, Feature::calls_received_30min,
    Feature::calls_sent_30min,   Feature::bt_entropy_30min, Feature::bt_unique_30min,
};

enum class Encoding { one_hot, flag, numeric };

Encoding encoding_of(Feature f) {
  switch (f) {
    case Feature::location:
    case Feature::hour:
    case Feature::weekhour:
    case Feature::weekday:
      return Encoding::one_hot;
    case Feature::weekend:
    case Feature::explore_before:
    case Feature::explore_now:
    case Feature::home:
      return Encoding::flag;
    default:
      return Encoding::numeric;
  }
}

double value_of(const FeatureVector& x, Feature f) {
  switch (f) {
    case Feature::location: return x.location;
    case Feature::hour: return x.hour;
    case Feature::weekhour: return x.weekhour;
    case Feature::weekday: return x.weekday;
    case Feature::weekend: return x.weekend;
    case Feature::explore_before: return x.explore_before;
    case Feature::explore_now: return x.explore_now;
    case Feature::home: return x.home;
    case Feature::d_from_home: return x.d_from_home;
    case Feature::sms_received_30min: return x.sms_received_30min;
    case Feature::sms_sent_30min: return x.sms_sent_30min;
    case Feature::calls_received_30min: return x.calls_received_30min;
    case Feature::calls_sent_30min: return x.calls_sent_30min;
    case Feature::bt_entropy_30min: return x.bt_entropy_30min;
    case Feature::bt_unique_30min: return x.bt_unique_30min;
  }
  return 0.0;
}

}  // namespace

std::string_view feature_name(Feature f) {
  switch (f) {
    case Feature::location: return "location";
    case Feature::hour: return "hour";
    case Feature::weekhour: return "weekhour";
    case Feature::weekday: return "weekday";
    case Feature::weekend: return "weekend";
    case Feature::explore_before: return "explore_before";
    case Feature::explore_now: return "explore_now";
    case Feature::home: return "home";
    case Feature::d_from_home: return "d_from_home";
    case Feature::sms_received_30min: return "sms_received_30min";
    case Feature::sms_sent_30min: return "sms_sent_30min";
    case Feature::calls_received_30min: return "calls_received_30min";
    case Feature::calls_sent_30min: return "calls_sent_30min";
    case Feature::bt_entropy_30min: return "bt_entropy_30min";
    case Feature::bt_unique_30min: return "bt_unique_30min";
  }
  return "?";
}

const std::array<Feature, kFeatureCount>& all_features() { return kAll; }

CivilTime civil_time(Timestamp t, Timestamp tz_offset_s) {
  const Timestamp local = t + tz_offset_s;
  const Timestamp day = ingest::floor_div(local, ingest::kSecondsPerDay);
  const Timestamp sec_of_day = local - day * ingest::kSecondsPerDay;
  CivilTime c;
  c.hour = static_cast<int>(sec_of_day / 3600);
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  c.weekday = static_cast<int>(((day + 3) % 7 + 7) % 7);
  c.weekhour = c.weekday * 24 + c.hour;
  c.weekend = c.weekday >= 5;
  return c;
}

int home_place(const stops::StopSequence& seq) {
  if (seq.stops.empty()) throw std::invalid_argument("home_place: empty stop sequence");
  struct Tally {
    std::size_t count = 0;
    Timestamp duration = 0;
  };
  std::unordered_map<int, Tally> tally;
  for (const auto& s : seq.stops) {
    auto& t = tally[s.place];
    ++t.count;
    t.duration += s.duration();
  }
  int best = seq.stops.front().place;
  for (const auto& [label, t] : tally) {
    const auto& b = tally.at(best);
    if (t.count > b.count || (t.count == b.count && t.duration > b.duration) ||
        (t.count == b.count && t.duration == b.duration && label < best)) {
      best = label;
    }
  }
  return best;
}

double bt_entropy(std::span<const ingest::ContextEvent> events) {
  std::unordered_map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& e : events) {
    if (e.kind != ingest::EventKind::bt_scan) continue;
    ++counts[e.payload];
    ++total;
  }
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [device, c] : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : h;  // avoid -0
}

std::vector<FeatureRow> build_feature_rows(const stops::StopSequence& seq,
                                           const std::vector<ingest::ContextEvent>& events, Timestamp tz_offset_s) {
  std::vector<FeatureRow> rows;
  if (seq.stops.size() < 2) return rows;

  const int home = home_place(seq);
  geo::GeoPoint home_centroid;
  {
    std::vector<double> lats;
    std::vector<double> lons;
    for (const auto& s : seq.stops) {
      if (s.place != home) continue;
      lats.push_back(s.centroid.lat);
      lons.push_back(s.centroid.lon);
    }
    home_centroid = {stops::median(std::move(lats)), stops::median(std::move(lons))};
  }
  const auto labels = exploration::label_explorations(seq.labels()).labels;

  rows.reserve(seq.stops.size() - 1);
  for (std::size_t i = 0; i + 1 < seq.stops.size(); ++i) {
    const auto& stop = seq.stops[i];
    FeatureRow row;
    row.t_start = stop.t_start;
    row.next_place = seq.stops[i + 1].place;
    row.explored_next = labels[i + 1] != 0;

    FeatureVector& x = row.x;
    x.location = stop.place;
    const auto civil = civil_time(stop.t_start, tz_offset_s);
    x.hour = civil.hour;
    x.weekday = civil.weekday;
    x.weekhour = civil.weekhour;
    x.weekend = civil.weekend ? 1 : 0;
    x.explore_now = labels[i];
    x.explore_before = i > 0 ? labels[i - 1] : 0;
    x.home = stop.place == home ? 1 : 0;
    x.d_from_home = x.home ? 0.0 : geo::haversine_m(stop.centroid, home_centroid);

    // (t - 1800, t]
    const Timestamp lo = stop.t_start - kContextWindowS;
    auto first = std::upper_bound(events.begin(), events.end(), lo,
                                  [](Timestamp v, const ingest::ContextEvent& e) { return v < e.timestamp; });
    auto last = std::upper_bound(first, events.end(), stop.t_start,
                                 [](Timestamp v, const ingest::ContextEvent& e) { return v < e.timestamp; });
    std::span<const ingest::ContextEvent> window(events.data() + (first - events.begin()),
                                                 static_cast<std::size_t>(last - first));
    std::vector<std::string_view> devices;
    for (const auto& e : window) {
      switch (e.kind) {
        case ingest::EventKind::sms_in: ++x.sms_received_30min; break;
        case ingest::EventKind::sms_out: ++x.sms_sent_30min; break;
        case ingest::EventKind::call_in: ++x.calls_received_30min; break;
        case ingest::EventKind::call_out: ++x.calls_sent_30min; break;
        case ingest::EventKind::bt_scan: devices.push_back(e.payload); break;
      }
    }
    std::sort(devices.begin(), devices.end());
    x.bt_unique_30min = static_cast<int>(std::unique(devices.begin(), devices.end()) - devices.begin());
    x.bt_entropy_30min = bt_entropy(window);
    rows.push_back(row);
  }
  return rows;
}

std::string serialize_feature_rows(const std::vector<FeatureRow>& rows) {
  std::string out = "t_start";
  for (auto f : kAll) {
    out += ',';
    out += feature_name(f);
  }
  out += ",next_place,explored_next\n";
  for (const auto& r : rows) {
    out += std::to_string(r.t_start);
    for (auto f : kAll) {
      out += ',';
      if (encoding_of(f) == Encoding::numeric && (f == Feature::d_from_home || f == Feature::bt_entropy_30min)) {
        out += textio::format_double(value_of(r.x, f));
      } else {
        out += std::to_string(static_cast<long long>(value_of(r.x, f)));
      }
    }
    out += ',';
    out += std::to_string(r.next_place);
    out += ',';
    out += r.explored_next ? '1' : '0';
    out += '\n';
  }
  return out;
}

FeatureSet parse_feature_set(std::string_view names, bool include_explore_in_all) {
  FeatureSet set;
  if (names == "all") {
    for (auto f : kAll) {
      if (!include_explore_in_all && (f == Feature::explore_before || f == Feature::explore_now)) continue;
      set.push_back(f);
    }
    return set;
  }
  for (auto name : textio::split(names, ',')) {
    name = textio::trim(name);
    auto it = std::find_if(kAll.begin(), kAll.end(), [&](Feature f) { return feature_name(f) == name; });
    if (it == kAll.end()) throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
    if (std::find(set.begin(), set.end(), *it) == set.end()) set.push_back(*it);
  }
  if (set.empty()) throw std::invalid_argument("empty feature set");
  return set;
}

std::string to_string(const FeatureSet& set) {
  std::string out;
  for (auto f : set) {
    if (!out.empty()) out += ',';
    out += feature_name(f);
  }
  return out;
}

std::size_t FeatureEncoder::index_of(Feature f, long long value) {
  auto [it, inserted] = index_.try_emplace({static_cast<int>(f), value}, next_index_);
  if (inserted) ++next_index_;
  return it->second;
}

softmax::SparseVector FeatureEncoder::encode(const FeatureVector& x) {
  softmax::SparseVector v;
  v.emplace_back(0, 1.0);
  for (auto f : set_) {
    const double raw = value_of(x, f);
    switch (encoding_of(f)) {
      case Encoding::one_hot:
        v.emplace_back(index_of(f, static_cast<long long>(raw)), 1.0);
        break;
      case Encoding::flag:
        if (raw != 0.0) v.emplace_back(index_of(f, 0), raw);
        break;
      case Encoding::numeric: {
        auto& st = stats_[static_cast<int>(f)];
        st.n += 1.0;
        const double delta = raw - st.mean;
        st.mean += delta / st.n;
        st.m2 += delta * (raw - st.mean);
        const double var = st.n > 1.0 ? st.m2 / st.n : 0.0;
        const double z = var > 0.0 ? (raw - st.mean) / std::sqrt(var) : 0.0;
        if (z != 0.0) v.emplace_back(index_of(f, 0), z);
        break;
      }
    }
  }
  return v;
}

predictors::PredictionReport evaluate_logreg_next_place(const std::vector<FeatureRow>& rows, const FeatureSet& set,
                                                        softmax::SgdParams params, bool keep_steps) {
  predictors::PredictionReport report;
  FeatureEncoder encoder(set);
  softmax::OnlineSoftmax model(params);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto x = encoder.encode(rows[i].x);
    if (auto p = model.predict(x)) report.record(i + 1, *p, rows[i].next_place, keep_steps);
    model.update(x, rows[i].next_place);
  }
  report.finish();
  return report;
}

}  // namespace mobility::features
