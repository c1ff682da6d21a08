#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mobility/geo.hpp"

namespace mobility::ingest {

using Timestamp = std::int64_t;

inline constexpr Timestamp kDefaultBinSeconds = 900;
inline constexpr Timestamp kSecondsPerDay = 86'400;
inline constexpr Timestamp kDefaultMinWindowSeconds = 90 * kSecondsPerDay;

struct LocationSample {
  std::string user_id;
  Timestamp timestamp = 0;
  double lat = 0.0;
  double lon = 0.0;
  double accuracy_m = 0.0;

  geo::GeoPoint point() const { return {lat, lon}; }
  friend bool operator==(const LocationSample&, const LocationSample&) = default;
};

enum class EventKind { sms_in, sms_out, call_in, call_out, bt_scan };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_event_kind(std::string_view s);

struct ContextEvent {
  std::string user_id;
  Timestamp timestamp = 0;
  EventKind kind = EventKind::sms_in;
  std::string payload;  // device id for bt_scan, empty otherwise

  friend bool operator==(const ContextEvent&, const ContextEvent&) = default;
};

/// Half-open interval [start, end) on the bin lattice.
struct TimeWindow {
  Timestamp start = 0;
  Timestamp end = 0;
  double completeness = 0.0;

  Timestamp length() const { return end - start; }
  bool contains(Timestamp t) const { return start <= t && t < end; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

using SamplesByUser = std::map<std::string, std::vector<LocationSample>>;
using EventsByUser = std::map<std::string, std::vector<ContextEvent>>;

struct SampleParseResult {
  SamplesByUser by_user;
  std::size_t rejected = 0;
  std::size_t duplicates_collapsed = 0;
  std::vector<std::string> reject_reasons;  // "line N: reason", capped
};

struct EventParseResult {
  EventsByUser by_user;
  std::size_t rejected = 0;
  std::vector<std::string> reject_reasons;
};

/// Parses `user_id,timestamp,lat,lon,accuracy`. Throws FormatError on a
/// missing or wrong header; bad rows are tallied and skipped. Per user the
/// result is time-sorted with duplicate timestamps collapsed to the fix with
/// the smallest accuracy.
SampleParseResult parse_samples(std::string_view text);
SampleParseResult read_samples(const std::string& path);

/// Parses `user_id,timestamp,kind,payload`; sorted by timestamp per user.
EventParseResult parse_events(std::string_view text);
EventParseResult read_events(const std::string& path);

std::string samples_header();
void append_sample_row(std::string& out, const LocationSample& s);
std::string serialize_samples(const SamplesByUser& samples);

std::string events_header();
void append_event_row(std::string& out, const ContextEvent& e);
std::string serialize_events(const EventsByUser& events);

/// Longest bin-aligned window whose fraction of occupied bins is at least
/// `threshold`. Windows begin and end on occupied bins. Returns nullopt when
/// the input is empty or the best window is shorter than `min_length_s`.
/// Samples must be sorted by timestamp.
std::optional<TimeWindow> select_complete_window(const std::vector<LocationSample>& samples,
                                                 Timestamp bin_s = kDefaultBinSeconds,
                                                 double threshold = 0.9,
                                                 Timestamp min_length_s = kDefaultMinWindowSeconds);

/// Same search over an explicit occupancy lattice; returns [first_bin, last_bin).
struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t occupied = 0;
};
std::optional<BinRange> longest_complete_run(const std::vector<std::uint8_t>& occupied, double threshold);

template <typename Record>
std::vector<Record> filter_to_window(const std::vector<Record>& records, const TimeWindow& window) {
  std::vector<Record> out;
  for (const auto& r : records) {
    if (window.contains(r.timestamp)) out.push_back(r);
  }
  return out;
}

Timestamp floor_div(Timestamp a, Timestamp b);

}  // namespace mobility::ingest
