#include "mobility/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mobility::softmax {
namespace {

constexpr double kMinScale = 1e-9;

double dot(const std::vector<double>& row, double scale, const SparseVector& x) {
  double s = 0.0;
  for (const auto& [f, v] : x) {
    if (f < row.size()) s += row[f] * v;
  }
  return s * scale;
}

void softmax_inplace(std::vector<double>& z) {
  if (z.empty()) return;
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

double sigmoid(double m) {
  if (m >= 0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

}  // namespace

std::vector<double> OnlineSoftmax::scores(const SparseVector& x) const {
  std::vector<double> z(rows_.size());
  for (std::size_t k = 0; k < rows_.size(); ++k) z[k] = dot(rows_[k], scale_, x);
  return z;
}

std::optional<Symbol> OnlineSoftmax::predict(const SparseVector& x) const {
  if (classes_.empty()) return std::nullopt;
  const auto z = scores(x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < z.size(); ++k) {
    if (z[k] > z[best]) best = k;
  }
  return classes_[best];
}

std::vector<double> OnlineSoftmax::probabilities(const SparseVector& x) const {
  auto z = scores(x);
  softmax_inplace(z);
  return z;
}

std::optional<std::size_t> OnlineSoftmax::class_index(Symbol label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t OnlineSoftmax::add_class(Symbol label) {
  auto [it, inserted] = index_.try_emplace(label, classes_.size());
  if (inserted) {
    classes_.push_back(label);
    rows_.emplace_back();
  }
  return it->second;
}

double OnlineSoftmax::weight(std::size_t k, std::size_t f) const {
  return f < rows_.at(k).size() ? rows_[k][f] * scale_ : 0.0;
}

void OnlineSoftmax::set_weight(std::size_t k, std::size_t f, double w) {
  auto& row = rows_.at(k);
  if (f >= row.size()) row.resize(f + 1, 0.0);
  row[f] = w / scale_;
}

void OnlineSoftmax::renormalize() {
  for (auto& row : rows_) {
    for (double& w : row) w *= scale_;
  }
  scale_ = 1.0;
}

void OnlineSoftmax::update(const SparseVector& x, Symbol label) {
  const std::size_t y = add_class(label);
  const auto p = probabilities(x);
  const double lr = params_.lr0 / (1.0 + params_.decay * static_cast<double>(t_));
  ++t_;

  // W <- (1 - lr*l2) W - lr * g, with the shrink folded into scale_.
  scale_ *= 1.0 - lr * params_.l2;
  if (scale_ < kMinScale) renormalize();
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const double residual = p[k] - (k == y ? 1.0 : 0.0);
    if (residual == 0.0) continue;
    auto& row = rows_[k];
    for (const auto& [f, v] : x) {
      if (f >= row.size()) row.resize(f + 1, 0.0);
      row[f] -= lr * residual * v / scale_;
    }
  }
}

double OnlineSoftmax::loss(const SparseVector& x, Symbol label) const {
  const std::size_t y = index_.at(label);
  const auto p = probabilities(x);
  double reg = 0.0;
  for (const auto& row : rows_) {
    for (double w : row) reg += (w * scale_) * (w * scale_);
  }
  return -std::log(std::max(p[y], std::numeric_limits<double>::min())) + 0.5 * params_.l2 * reg;
}

std::vector<std::vector<double>> OnlineSoftmax::gradient(const SparseVector& x, Symbol label,
                                                         std::size_t n_features) const {
  const std::size_t y = index_.at(label);
  const auto p = probabilities(x);
  std::vector<std::vector<double>> g(rows_.size(), std::vector<double>(n_features, 0.0));
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const double residual = p[k] - (k == y ? 1.0 : 0.0);
    for (const auto& [f, v] : x) {
      if (f < n_features) g[k][f] += residual * v;
    }
    for (std::size_t f = 0; f < n_features; ++f) g[k][f] += params_.l2 * weight(k, f);
  }
  return g;
}

double OnlineLogistic::margin(const SparseVector& x) const { return dot(w_, scale_, x); }

double OnlineLogistic::probability(const SparseVector& x) const { return sigmoid(margin(x)); }

void OnlineLogistic::update(const SparseVector& x, bool label) {
  const double residual = probability(x) - (label ? 1.0 : 0.0);
  const double lr = params_.lr0 / (1.0 + params_.decay * static_cast<double>(t_));
  ++t_;
  scale_ *= 1.0 - lr * params_.l2;
  if (scale_ < kMinScale) {
    for (double& w : w_) w *= scale_;
    scale_ = 1.0;
  }
  for (const auto& [f, v] : x) {
    if (f >= w_.size()) w_.resize(f + 1, 0.0);
    w_[f] -= lr * residual * v / scale_;
  }
}

double OnlineLogistic::loss(const SparseVector& x, bool label) const {
  const double m = margin(x);
  // -log sigmoid(m) = log(1 + exp(-m)), evaluated stably.
  const double signed_m = label ? m : -m;
  const double nll = signed_m > 0 ? std::log1p(std::exp(-signed_m)) : -signed_m + std::log1p(std::exp(signed_m));
  double reg = 0.0;
  for (double w : w_) reg += (w * scale_) * (w * scale_);
  return nll + 0.5 * params_.l2 * reg;
}

std::vector<double> OnlineLogistic::gradient(const SparseVector& x, bool label, std::size_t n_features) const {
  const double residual = probability(x) - (label ? 1.0 : 0.0);
  std::vector<double> g(n_features, 0.0);
  for (const auto& [f, v] : x) {
    if (f < n_features) g[f] += residual * v;
  }
  for (std::size_t f = 0; f < n_features; ++f) g[f] += params_.l2 * weight(f);
  return g;
}

double OnlineLogistic::weight(std::size_t f) const { return f < w_.size() ? w_[f] * scale_ : 0.0; }

void OnlineLogistic::set_weight(std::size_t f, double w) {
  if (f >= w_.size()) w_.resize(f + 1, 0.0);
  w_[f] = w / scale_;
}

}  // namespace mobility::softmax
