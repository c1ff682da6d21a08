#include <doctest.h>

#include <random>

#include "mobility/discretize.hpp"

using namespace mobility;
using ingest::Timestamp;

namespace {

constexpr Timestamp kT0 = 1378080000;

// Scans every bin independently: last fix in the bin, else the most recent
// observed bin at most fill_limit bins back, else missing.
std::vector<std::optional<geo::CellId>> per_bin_reference(const std::vector<ingest::LocationSample>& samples,
                                                          const ingest::TimeWindow& w, Timestamp bin_s, double size,
                                                          double ref_lat, int fill_limit) {
  const Timestamp first = ingest::floor_div(w.start, bin_s);
  const Timestamp last = ingest::floor_div(w.end - 1, bin_s);
  auto observed = [&](Timestamp b) -> std::optional<geo::CellId> {
    std::optional<geo::CellId> cell;
    for (const auto& s : samples) {
      if (ingest::floor_div(s.timestamp, bin_s) == b) cell = geo::grid_cell(s.point(), size, ref_lat);
    }
    return cell;
  };
  std::vector<std::optional<geo::CellId>> out;
  for (Timestamp b = first; b <= last; ++b) {
    std::optional<geo::CellId> cell;
    for (Timestamp back = 0; back <= fill_limit && b - back >= first && !cell; ++back) cell = observed(b - back);
    out.push_back(cell);
  }
  return out;
}

}  // namespace

TEST_CASE("constant position gives a constant sequence") {
  std::vector<ingest::LocationSample> samples;
  for (int i = 0; i < 20; ++i) samples.push_back({"u", kT0 + i * 900 + 7, 55.7, 12.5, 5});
  const auto seq = discretize::build_cell_sequence(samples, {kT0, kT0 + 20 * 900, 1.0}, 900, 50);
  REQUIRE(seq.symbols.size() == 20);
  CHECK(seq.missing_count() == 0);
  for (const auto& s : seq.symbols) CHECK(*s == *seq.symbols.front());
  const auto stream = discretize::to_symbol_stream(seq);
  CHECK(stream.formulation == Formulation::next_cell);
  CHECK(std::all_of(stream.symbols.begin(), stream.symbols.end(), [](Symbol s) { return s == 0; }));
}

TEST_CASE("empty bins are filled up to the limit") {
  std::vector<ingest::LocationSample> samples = {{"u", kT0, 55.7, 12.5, 5}, {"u", kT0 + 3 * 900, 55.8, 12.6, 5}};
  const ingest::TimeWindow w{kT0, kT0 + 4 * 900, 0.5};
  const auto seq = discretize::build_cell_sequence(samples, w, 900, 50, 2);
  const auto c = geo::grid_cell({55.7, 12.5}, 50, seq.ref_lat);
  const auto c2 = geo::grid_cell({55.8, 12.6}, 50, seq.ref_lat);
  REQUIRE(seq.symbols.size() == 4);
  CHECK(*seq.symbols[0] == c);
  CHECK(*seq.symbols[1] == c);
  CHECK(*seq.symbols[2] == c);
  CHECK(*seq.symbols[3] == c2);

  const auto strict = discretize::build_cell_sequence(samples, w, 900, 50, 1);
  CHECK_FALSE(strict.symbols[2].has_value());
  CHECK(discretize::to_symbol_stream(strict).symbols == std::vector<Symbol>{0, 0, kMissing, 1});
}

TEST_CASE("reference latitude is the median sample latitude") {
  std::vector<ingest::LocationSample> samples = {{"u", 0, 10, 0, 1}, {"u", 1, 30, 0, 1}, {"u", 2, 20, 0, 1}};
  CHECK(discretize::median_latitude(samples) == 20.0);
  samples.push_back({"u", 3, 40, 0, 1});
  CHECK(discretize::median_latitude(samples) == 25.0);
}

TEST_CASE("cell sequences match a per-bin reference") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> step(0.0, 40.0);
  for (int instance = 0; instance < 100; ++instance) {
    std::vector<ingest::LocationSample> samples;
    double lat = 55.7, lon = 12.5;
    for (int b = 0; b < 100; ++b) {
      const int fixes = u(rng) < 0.3 ? 0 : 1 + static_cast<int>(u(rng) * 3);
      for (int k = 0; k < fixes; ++k) {
        lat += step(rng) / geo::kMetersPerDegree;
        lon += step(rng) / geo::kMetersPerDegree;
        samples.push_back({"u", kT0 + b * 900 + k * 200 + static_cast<Timestamp>(u(rng) * 150), lat, lon, 5});
      }
    }
    const ingest::TimeWindow w{kT0, kT0 + 100 * 900, 0.0};
    const int fill = instance % 5;
    const double size = instance % 2 ? 50.0 : 500.0;
    const auto seq = discretize::build_cell_sequence(samples, w, 900, size, fill);
    CHECK(seq.first_bin == kT0 / 900);
    CHECK(seq.symbols == per_bin_reference(samples, w, 900, size, seq.ref_lat, fill));
  }
}

TEST_CASE("serialized sequence marks missing bins with empty fields") {
  std::vector<ingest::LocationSample> samples = {{"u", kT0, 0.0, 0.0, 5}};
  const auto seq = discretize::build_cell_sequence(samples, {kT0, kT0 + 2 * 900, 0.5}, 900, 50, 0);
  const std::string first = std::to_string(kT0 / 900);
  const std::string second = std::to_string(kT0 / 900 + 1);
  CHECK(discretize::serialize_cell_sequence(seq) == "bin_index,row,col\n" + first + ",0,0\n" + second + ",,\n");
}
