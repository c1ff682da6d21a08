#include "mobility/discretize.hpp"

#include <algorithm>

namespace mobility::discretize {

std::size_t CellSequence::missing_count() const {
  return static_cast<std::size_t>(std::count(symbols.begin(), symbols.end(), std::nullopt));
}

double median_latitude(const std::vector<ingest::LocationSample>& samples) {
  if (samples.empty()) return 0.0;
  std::vector<double> lats;
  lats.reserve(samples.size());
  for (const auto& s : samples) lats.push_back(s.lat);
  std::sort(lats.begin(), lats.end());
  const std::size_t n = lats.size();
  return n % 2 == 1 ? lats[n / 2] : 0.5 * (lats[n / 2 - 1] + lats[n / 2]);
}

CellSequence build_cell_sequence(const std::vector<ingest::LocationSample>& samples,
                                 const ingest::TimeWindow& window, ingest::Timestamp bin_s, double size_m,
                                 int fill_limit) {
  CellSequence seq;
  seq.bin_s = bin_s;
  seq.size_m = size_m;
  if (!samples.empty()) seq.user_id = samples.front().user_id;
  if (samples.empty() || window.end <= window.start) return seq;

  seq.ref_lat = median_latitude(samples);
  seq.first_bin = ingest::floor_div(window.start, bin_s);
  const std::int64_t last_bin = ingest::floor_div(window.end - 1, bin_s);
  seq.symbols.assign(static_cast<std::size_t>(last_bin - seq.first_bin + 1), std::nullopt);

  std::vector<std::uint8_t> observed(seq.symbols.size(), 0);
  for (const auto& s : samples) {
    const std::int64_t b = ingest::floor_div(s.timestamp, bin_s) - seq.first_bin;
    if (b < 0 || b >= static_cast<std::int64_t>(seq.symbols.size())) continue;
    // Time-sorted input: later samples overwrite earlier ones in the same bin.
    seq.symbols[static_cast<std::size_t>(b)] = geo::grid_cell(s.point(), size_m, seq.ref_lat);
    observed[static_cast<std::size_t>(b)] = 1;
  }

  std::optional<geo::CellId> last;
  int run = 0;
  for (std::size_t b = 0; b < seq.symbols.size(); ++b) {
    if (observed[b]) {
      last = seq.symbols[b];
      run = 0;
    } else if (last && run < fill_limit) {
      seq.symbols[b] = last;
      ++run;
    } else {
      ++run;
    }
  }
  return seq;
}

std::string serialize_cell_sequence(const CellSequence& seq) {
  std::string out = "bin_index,row,col\n";
  for (std::size_t i = 0; i < seq.symbols.size(); ++i) {
    out += std::to_string(seq.first_bin + static_cast<std::int64_t>(i));
    out += ',';
    if (seq.symbols[i]) {
      out += std::to_string(seq.symbols[i]->row);
      out += ',';
      out += std::to_string(seq.symbols[i]->col);
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

SymbolStream to_symbol_stream(const CellSequence& seq) {
  SymbolStream stream;
  stream.formulation = Formulation::next_cell;
  stream.symbols.reserve(seq.symbols.size());
  Interner<geo::CellId, geo::CellIdHash> interner;
  for (const auto& c : seq.symbols) stream.symbols.push_back(c ? interner.intern(*c) : kMissing);
  return stream;
}

}  // namespace mobility::discretize
