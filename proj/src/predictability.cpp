#include "mobility/predictability.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace mobility::predictability {
namespace {

// Prefix-doubling suffix array over dense integer ranks.
std::vector<std::size_t> suffix_array(const std::vector<std::size_t>& s) {
  const std::size_t n = s.size();
  std::vector<std::size_t> sa(n), rank(s), tmp(n);
  std::iota(sa.begin(), sa.end(), 0);
  for (std::size_t k = 1;; k <<= 1) {
    auto key = [&](std::size_t i) { return std::pair(rank[i], i + k < n ? rank[i + k] + 1 : 0); };
    std::sort(sa.begin(), sa.end(), [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    tmp[sa[0]] = 0;
    for (std::size_t r = 1; r < n; ++r) tmp[sa[r]] = tmp[sa[r - 1]] + (key(sa[r - 1]) < key(sa[r]) ? 1 : 0);
    rank.swap(tmp);
    if (rank[sa[n - 1]] == n - 1) break;
  }
  return sa;
}

// lcp[r] = LCP(suffix sa[r-1], suffix sa[r]); lcp[0] = 0.
std::vector<std::size_t> kasai(const std::vector<std::size_t>& s, const std::vector<std::size_t>& sa,
                               const std::vector<std::size_t>& rank) {
  const std::size_t n = s.size();
  std::vector<std::size_t> lcp(n, 0);
  std::size_t h = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rank[i] == 0) {
      h = 0;
      continue;
    }
    const std::size_t j = sa[rank[i] - 1];
    while (i + h < n && j + h < n && s[i + h] == s[j + h]) ++h;
    lcp[rank[i]] = h;
    if (h > 0) --h;
  }
  return lcp;
}

class SparseMin {
 public:
  explicit SparseMin(const std::vector<std::size_t>& v) {
    const std::size_t n = v.size();
    table_.push_back(v);
    for (std::size_t k = 1; (std::size_t{1} << k) <= n; ++k) {
      const std::size_t half = std::size_t{1} << (k - 1);
      const auto& prev = table_.back();
      std::vector<std::size_t> level(n - (std::size_t{1} << k) + 1);
      for (std::size_t i = 0; i < level.size(); ++i) level[i] = std::min(prev[i], prev[i + half]);
      table_.push_back(std::move(level));
    }
  }
  // Minimum over [lo, hi], lo <= hi.
  std::size_t query(std::size_t lo, std::size_t hi) const {
    const std::size_t k = std::bit_width(hi - lo + 1) - 1;
    return std::min(table_[k][lo], table_[k][hi - (std::size_t{1} << k) + 1]);
  }

 private:
  std::vector<std::vector<std::size_t>> table_;
};

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace

std::vector<std::size_t> match_lengths(std::span<const Symbol> symbols) {
  const std::size_t n = symbols.size();
  std::vector<std::size_t> lambda(n, 1);
  if (n == 0) return lambda;

  std::vector<Symbol> sorted(symbols.begin(), symbols.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), symbols[i]) - sorted.begin());
  }

  const auto sa = suffix_array(s);
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[sa[r]] = r;
  const auto lcp = kasai(s, sa, rank);
  const SparseMin lcp_min(lcp);
  const SparseMin pos_min(sa);

  // True iff symbols[i, i+len) occurs entirely inside symbols[0, i).
  auto occurs_before = [&](std::size_t i, std::size_t len) {
    if (len == 0) return true;
    if (len > i) return false;
    const std::size_t r = rank[i];
    // Widen [lo, hi] around r while the shared prefix stays >= len.
    std::size_t lo = r;
    {
      std::size_t a = 0, b = r;  // find smallest lo in [0, r] with min(lcp[lo+1..r]) >= len
      while (a < b) {
        const std::size_t m = (a + b) / 2;
        if (lcp_min.query(m + 1, r) >= len) b = m;
        else a = m + 1;
      }
      lo = a;
    }
    std::size_t hi = r;
    {
      std::size_t a = r, b = n - 1;  // largest hi with min(lcp[r+1..hi]) >= len
      while (a < b) {
        const std::size_t m = (a + b + 1) / 2;
        if (lcp_min.query(r + 1, m) >= len) a = m;
        else b = m - 1;
      }
      hi = a;
    }
    return pos_min.query(lo, hi) + len <= i;
  };

  std::size_t prev = 0;
  for (std::size_t i = 0; i < n; ++i) {
    // A match at i - 1 of length L leaves a match of length L - 1 at i.
    std::size_t len = prev > 0 ? prev - 1 : 0;
    while (i + len + 1 <= n && occurs_before(i, len + 1)) ++len;
    lambda[i] = len + 1;
    prev = len;
  }
  return lambda;
}

EntropyEstimate lz_entropy(std::span<const Symbol> symbols) {
  const std::size_t n = symbols.size();
  if (n < 2) throw std::invalid_argument("lz_entropy: need at least 2 symbols");
  if (std::find(symbols.begin(), symbols.end(), kMissing) != symbols.end()) {
    throw std::invalid_argument("lz_entropy: stream contains missing symbols");
  }
  const auto lambda = match_lengths(symbols);
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  EntropyEstimate e;
  e.n = n;
  e.n_symbols = std::unordered_set<Symbol>(symbols.begin(), symbols.end()).size();
  e.s_bits = static_cast<double>(n) * std::log2(static_cast<double>(n)) / total;
  return e;
}

double fano_entropy(double p, long long n_symbols) {
  const double tail = n_symbols > 1 ? (1.0 - p) * std::log2(static_cast<double>(n_symbols - 1)) : 0.0;
  return binary_entropy(p) + tail;
}

double fano_pi_max(double s_bits, long long n_symbols) {
  if (n_symbols < 1) throw std::invalid_argument("fano_pi_max: alphabet size must be >= 1");
  if (std::isnan(s_bits)) throw std::invalid_argument("fano_pi_max: entropy is NaN");
  if (n_symbols == 1 || s_bits <= 0.0) return 1.0;
  const double uniform = 1.0 / static_cast<double>(n_symbols);
  if (s_bits >= std::log2(static_cast<double>(n_symbols))) return uniform;

  // fano_entropy is strictly decreasing on [1/N, 1].
  double lo = uniform;
  double hi = 1.0;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (fano_entropy(mid, n_symbols) > s_bits) lo = mid;
    else hi = mid;
  }
  return std::clamp(0.5 * (lo + hi), uniform, 1.0);
}

std::vector<Symbol> drop_missing(std::span<const Symbol> symbols) {
  std::vector<Symbol> out;
  out.reserve(symbols.size());
  for (Symbol s : symbols) {
    if (s != kMissing) out.push_back(s);
  }
  return out;
}

PredictabilityBound bound_for_stream(std::span<const Symbol> symbols) {
  const auto kept = drop_missing(symbols);
  PredictabilityBound b;
  b.entropy = lz_entropy(kept);
  b.pi_max = fano_pi_max(b.entropy.s_bits, static_cast<long long>(b.entropy.n_symbols));
  return b;
}

}  // namespace mobility::predictability
