#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mobility/geo.hpp"
#include "mobility/ingest.hpp"
#include "mobility/symbols.hpp"

namespace mobility::discretize {

inline constexpr int kDefaultFillLimit = 4;

struct CellSequence {
  std::string user_id;
  ingest::Timestamp bin_s = ingest::kDefaultBinSeconds;
  double size_m = 50.0;
  double ref_lat = 0.0;
  std::int64_t first_bin = 0;  // absolute bin index (epoch-anchored) of symbols[0]
  std::vector<std::optional<geo::CellId>> symbols;

  std::size_t missing_count() const;
};

double median_latitude(const std::vector<ingest::LocationSample>& samples);

/// One symbol per bin of the window: the cell of the last sample in the bin.
/// Empty bins repeat the previous symbol for at most `fill_limit` consecutive
/// bins and are missing beyond that. Samples must be time-sorted and already
/// restricted to the window.
CellSequence build_cell_sequence(const std::vector<ingest::LocationSample>& samples,
                                 const ingest::TimeWindow& window, ingest::Timestamp bin_s, double size_m,
                                 int fill_limit = kDefaultFillLimit);

/// `bin_index,row,col`; missing bins have empty row/col.
std::string serialize_cell_sequence(const CellSequence& seq);

/// Interns cells into a next_cell stream; missing bins map to kMissing.
SymbolStream to_symbol_stream(const CellSequence& seq);

}  // namespace mobility::discretize
