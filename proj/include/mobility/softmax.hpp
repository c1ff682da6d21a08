#pragma once

#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mobility/symbols.hpp"

namespace mobility::softmax {

/// (feature index, value) pairs; indices may be repeated.
using SparseVector = std::vector<std::pair<std::size_t, double>>;

/// SGD schedule shared by the online linear models: step size
/// lr0 / (1 + decay * t) with L2 penalty (l2 / 2) * ||W||^2.
struct SgdParams {
  double lr0 = 0.1;
  double decay = 1e-3;
  double l2 = 1e-4;
};

/// Multinomial logistic regression trained one observation at a time. Both
/// the class set and the feature dimension grow on demand; new weights start
/// at zero.
class OnlineSoftmax {
 public:
  explicit OnlineSoftmax(SgdParams params = {}) : params_(params) {}

  /// Argmax of the linear scores over known classes (ties: earliest class).
  std::optional<Symbol> predict(const SparseVector& x) const;
  std::vector<double> probabilities(const SparseVector& x) const;

  /// One cross-entropy SGD step; registers `label` if unseen.
  void update(const SparseVector& x, Symbol label);

  /// Regularized loss and its dense gradient (class x feature) at the current
  /// weights. `label` must already be known.
  double loss(const SparseVector& x, Symbol label) const;
  std::vector<std::vector<double>> gradient(const SparseVector& x, Symbol label, std::size_t n_features) const;

  std::size_t n_classes() const { return classes_.size(); }
  std::optional<std::size_t> class_index(Symbol label) const;
  Symbol class_label(std::size_t k) const { return classes_[k]; }
  double weight(std::size_t k, std::size_t f) const;
  void set_weight(std::size_t k, std::size_t f, double w);
  std::size_t updates() const { return t_; }
  const SgdParams& params() const { return params_; }

 private:
  std::vector<double> scores(const SparseVector& x) const;
  std::size_t add_class(Symbol label);
  void renormalize();

  SgdParams params_;
  std::vector<Symbol> classes_;
  std::unordered_map<Symbol, std::size_t> index_;
  std::vector<std::vector<double>> rows_;  // effective weight = scale_ * rows_
  double scale_ = 1.0;
  std::size_t t_ = 0;
};

/// Binary logistic regression with the same schedule; models P(y = 1 | x).
class OnlineLogistic {
 public:
  explicit OnlineLogistic(SgdParams params = {}) : params_(params) {}

  double probability(const SparseVector& x) const;
  void update(const SparseVector& x, bool label);

  double loss(const SparseVector& x, bool label) const;
  std::vector<double> gradient(const SparseVector& x, bool label, std::size_t n_features) const;
  double weight(std::size_t f) const;
  void set_weight(std::size_t f, double w);

 private:
  double margin(const SparseVector& x) const;

  SgdParams params_;
  std::vector<double> w_;
  double scale_ = 1.0;
  std::size_t t_ = 0;
};

}  // namespace mobility::softmax
