#include "mobility/ingest.hpp"

#include <algorithm>
#include <cmath>

#include "mobility/textio.hpp"

namespace mobility::ingest {
namespace {

constexpr std::size_t kMaxReasons = 50;

void note_reject(std::vector<std::string>& reasons, std::size_t& count, std::size_t line, std::string_view why) {
  ++count;
  if (reasons.size() < kMaxReasons) reasons.push_back("line " + std::to_string(line) + ": " + std::string(why));
}

void expect_header(std::string_view line, std::initializer_list<std::string_view> names) {
  const auto fields = textio::split(line);
  bool ok = fields.size() == names.size();
  if (ok) {
    std::size_t i = 0;
    for (auto name : names) ok = ok && textio::trim(fields[i++]) == name;
  }
  if (!ok) throw FormatError("unexpected header: '" + std::string(line) + "'");
}

}  // namespace

Timestamp floor_div(Timestamp a, Timestamp b) {
  Timestamp q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::sms_in: return "sms_in";
    case EventKind::sms_out: return "sms_out";
    case EventKind::call_in: return "call_in";
    case EventKind::call_out: return "call_out";
    case EventKind::bt_scan: return "bt_scan";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : {EventKind::sms_in, EventKind::sms_out, EventKind::call_in, EventKind::call_out, EventKind::bt_scan}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

SampleParseResult parse_samples(std::string_view text) {
  SampleParseResult result;
  bool have_header = false;
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!have_header) {
      expect_header(line, {"user_id", "timestamp", "lat", "lon", "accuracy"});
      have_header = true;
      return;
    }
    const auto f = textio::split(line);
    if (f.size() != 5) return note_reject(result.reject_reasons, result.rejected, line_no, "expected 5 fields");
    LocationSample s;
    s.user_id = std::string(textio::trim(f[0]));
    long long ts = 0;
    if (s.user_id.empty()) return note_reject(result.reject_reasons, result.rejected, line_no, "empty user_id");
    if (!textio::parse_int64(f[1], ts)) return note_reject(result.reject_reasons, result.rejected, line_no, "bad timestamp");
    s.timestamp = ts;
    if (!textio::parse_double(f[2], s.lat) || !textio::parse_double(f[3], s.lon) ||
        !textio::parse_double(f[4], s.accuracy_m)) {
      return note_reject(result.reject_reasons, result.rejected, line_no, "bad number");
    }
    if (!(s.lat >= -90.0 && s.lat <= 90.0)) return note_reject(result.reject_reasons, result.rejected, line_no, "lat out of range");
    if (!(s.lon > -180.0 && s.lon <= 180.0)) return note_reject(result.reject_reasons, result.rejected, line_no, "lon out of range");
    if (!(s.accuracy_m >= 0.0)) return note_reject(result.reject_reasons, result.rejected, line_no, "negative accuracy");
    result.by_user[s.user_id].push_back(std::move(s));
  });
  if (!have_header) throw FormatError("missing trajectory header");

  for (auto& [user, samples] : result.by_user) {
    std::stable_sort(samples.begin(), samples.end(), [](const auto& a, const auto& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.accuracy_m < b.accuracy_m;
    });
    const auto before = samples.size();
    samples.erase(std::unique(samples.begin(), samples.end(),
                              [](const auto& a, const auto& b) { return a.timestamp == b.timestamp; }),
                  samples.end());
    result.duplicates_collapsed += before - samples.size();
  }
  return result;
}

SampleParseResult read_samples(const std::string& path) { return parse_samples(textio::read_file(path)); }

EventParseResult parse_events(std::string_view text) {
  EventParseResult result;
  bool have_header = false;
  textio::for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
    if (!have_header) {
      expect_header(line, {"user_id", "timestamp", "kind", "payload"});
      have_header = true;
      return;
    }
    const auto f = textio::split(line);
    if (f.size() != 4) return note_reject(result.reject_reasons, result.rejected, line_no, "expected 4 fields");
    ContextEvent e;
    e.user_id = std::string(textio::trim(f[0]));
    long long ts = 0;
    if (e.user_id.empty()) return note_reject(result.reject_reasons, result.rejected, line_no, "empty user_id");
    if (!textio::parse_int64(f[1], ts)) return note_reject(result.reject_reasons, result.rejected, line_no, "bad timestamp");
    e.timestamp = ts;
    const auto kind = parse_event_kind(textio::trim(f[2]));
    if (!kind) return note_reject(result.reject_reasons, result.rejected, line_no, "unknown kind");
    e.kind = *kind;
    e.payload = std::string(textio::trim(f[3]));
    if (e.kind == EventKind::bt_scan && e.payload.empty()) {
      return note_reject(result.reject_reasons, result.rejected, line_no, "bt_scan without device id");
    }
    if (e.kind != EventKind::bt_scan) e.payload.clear();
    result.by_user[e.user_id].push_back(std::move(e));
  });
  if (!have_header) throw FormatError("missing context header");
  for (auto& [user, events] : result.by_user) {
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }
  return result;
}

EventParseResult read_events(const std::string& path) { return parse_events(textio::read_file(path)); }

std::string samples_header() { return "user_id,timestamp,lat,lon,accuracy\n"; }

void append_sample_row(std::string& out, const LocationSample& s) {
  out += s.user_id;
  out += ',';
  out += std::to_string(s.timestamp);
  out += ',';
  out += textio::format_double(s.lat);
  out += ',';
  out += textio::format_double(s.lon);
  out += ',';
  out += textio::format_double(s.accuracy_m);
  out += '\n';
}

std::string serialize_samples(const SamplesByUser& samples) {
  std::string out = samples_header();
  for (const auto& [user, list] : samples) {
    for (const auto& s : list) append_sample_row(out, s);
  }
  return out;
}

std::string events_header() { return "user_id,timestamp,kind,payload\n"; }

void append_event_row(std::string& out, const ContextEvent& e) {
  out += e.user_id;
  out += ',';
  out += std::to_string(e.timestamp);
  out += ',';
  out += to_string(e.kind);
  out += ',';
  out += e.payload;
  out += '\n';
}

std::string serialize_events(const EventsByUser& events) {
  std::string out = events_header();
  for (const auto& [user, list] : events) {
    for (const auto& e : list) append_event_row(out, e);
  }
  return out;
}

std::optional<BinRange> longest_complete_run(const std::vector<std::uint8_t>& occupied, double threshold) {
  // Completeness >= threshold  <=>  sum over the run of (occ*scale - t*scale) >= 0,
  // evaluated in integers so the comparison is exact for decimal thresholds.
  constexpr std::int64_t kScale = 1'000'000;
  const std::int64_t t = std::llround(threshold * static_cast<double>(kScale));
  const std::size_t n = occupied.size();
  std::vector<std::int64_t> prefix(n + 1, 0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + (occupied[k] ? kScale : 0) - t;

  // Start candidates: occupied bins that are strict prefix minima among candidates.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < n; ++i) {
    if (!occupied[i]) continue;
    if (starts.empty() || prefix[i] < prefix[starts.back()]) starts.push_back(i);
  }
  if (starts.empty()) return std::nullopt;

  std::size_t best_len = 0;
  for (std::size_t j = n; j >= 1 && !starts.empty(); --j) {
    while (!starts.empty() && starts.back() >= j) starts.pop_back();
    if (!occupied[j - 1]) continue;
    while (!starts.empty() && prefix[starts.back()] <= prefix[j]) {
      best_len = std::max(best_len, j - starts.back());
      starts.pop_back();
    }
  }
  if (best_len == 0) return std::nullopt;

  for (std::size_t i = 0; i + best_len <= n; ++i) {
    const std::size_t j = i + best_len;
    if (occupied[i] && occupied[j - 1] && prefix[j] >= prefix[i]) {
      std::size_t occ = 0;
      for (std::size_t k = i; k < j; ++k) occ += occupied[k] ? 1 : 0;
      return BinRange{i, j, occ};
    }
  }
  return std::nullopt;
}

std::optional<TimeWindow> select_complete_window(const std::vector<LocationSample>& samples, Timestamp bin_s,
                                                 double threshold, Timestamp min_length_s) {
  if (samples.empty() || bin_s <= 0 || !(threshold > 0.0 && threshold <= 1.0)) return std::nullopt;
  const Timestamp first_bin = floor_div(samples.front().timestamp, bin_s);
  const Timestamp last_bin = floor_div(samples.back().timestamp, bin_s);
  std::vector<std::uint8_t> occupied(static_cast<std::size_t>(last_bin - first_bin + 1), 0);
  for (const auto& s : samples) occupied[static_cast<std::size_t>(floor_div(s.timestamp, bin_s) - first_bin)] = 1;

  const auto run = longest_complete_run(occupied, threshold);
  if (!run) return std::nullopt;
  const Timestamp len_bins = static_cast<Timestamp>(run->last - run->first);
  if (len_bins * bin_s < min_length_s) return std::nullopt;
  TimeWindow w;
  w.start = (first_bin + static_cast<Timestamp>(run->first)) * bin_s;
  w.end = w.start + len_bins * bin_s;
  w.completeness = static_cast<double>(run->occupied) / static_cast<double>(len_bins);
  return w;
}

}  // namespace mobility::ingest
