#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mobility/symbols.hpp"

namespace mobility::predictability {

struct EntropyEstimate {
  double s_bits = 0.0;  // per symbol
  std::size_t n = 0;
  std::size_t n_symbols = 0;
};

struct PredictabilityBound {
  double pi_max = 1.0;
  EntropyEstimate entropy;
};

/// Lambda_i for every position: length of the shortest substring starting at
/// i that does not occur inside symbols[0, i). When every substring starting
/// at i occurs there, Lambda_i = n - i + 1. Runs in O(n log n).
std::vector<std::size_t> match_lengths(std::span<const Symbol> symbols);

/// s = n log2(n) / sum(Lambda_i). Throws std::invalid_argument for n < 2 or
/// when the stream contains kMissing.
EntropyEstimate lz_entropy(std::span<const Symbol> symbols);

/// Solves s = H(p) + (1 - p) log2(N - 1) for p in [1/N, 1] by bisection.
/// N = 1 or s <= 0 gives 1; s >= log2 N gives 1/N. Throws std::invalid_argument
/// for N < 1 or NaN s.
double fano_pi_max(double s_bits, long long n_symbols);

/// Fano right-hand side H(p) + (1 - p) log2(N - 1).
double fano_entropy(double p, long long n_symbols);

/// Drops kMissing, then composes lz_entropy and fano_pi_max with N equal to
/// the number of distinct symbols.
PredictabilityBound bound_for_stream(std::span<const Symbol> symbols);

std::vector<Symbol> drop_missing(std::span<const Symbol> symbols);

}  // namespace mobility::predictability
