#ifndef OPSPLIT_OPERATORS_HPP
#define OPSPLIT_OPERATORS_HPP

#include <cmath>
#include <cstddef>
#include <utility>

#include "opsplit/atomic_ops.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/linalg.hpp"
#include "opsplit/partition.hpp"

namespace opsplit {

// Forward operators are gradient steps v -> v - eta_f * grad(v); backward
// operators are prox maps / projections. Each forward operator keeps a cache
// vector so one coordinate of the step costs a column slice instead of a
// full matrix pass. Problem data is read-only after construction; the cache
// is shared mutable state maintained through atomic element additions.

// sign(v) * max(|v| - t, 0)
double soft_threshold(double v, double t);

// argmin_y 0.5*(y - v)^2 + t*lambda*y^2  =  v / (1 + 2*t*lambda)
double shrink_sum_square(double v, double t, double lambda);

DenseVector prox_l1(const DenseVector& v, double t);
DenseVector prox_sum_square(const DenseVector& v, double t, double lambda);
DenseVector proj_nonneg(const DenseVector& v);

namespace detail {

inline void check_step(double eta_f) {
  if (!(eta_f > 0.0) || !std::isfinite(eta_f)) {
    throw ParameterError("step size must be positive");
  }
}

// Construction admits a zero step (the operator degenerates to the
// identity); only later updates insist on positivity.
inline void check_step_nonneg(double eta_f) {
  if (!(eta_f >= 0.0) || !std::isfinite(eta_f)) {
    throw ParameterError("step size must be nonnegative");
  }
}

// 1 / (1 + e^m), computed without overflowing for large |m|.
inline double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace detail

// Gradient step for the logistic loss sum_i log(1 + exp(-b_i a_i'x)).
// The cache holds the per-sample products c = Ax.
template <class MatT>
class LogLossForward {
 public:
  LogLossForward(const MatT* a, const DenseVector* b, double eta_f)
      : a_(a), b_(b), cache_(a->rows(), 0.0) {
    if (b->size() != a->rows()) {
      throw DimensionError("label count must match sample count");
    }
    detail::check_step_nonneg(eta_f);
    eta_ = eta_f;
  }

  std::size_t dim() const { return a_->cols(); }
  std::size_t cache_length() const { return a_->rows(); }
  double eta() const { return eta_; }
  const DenseVector& cache() const { return cache_; }

  void update_step_size(double eta_f) {
    detail::check_step(eta_f);
    eta_ = eta_f;
  }

  // Component i of grad, read from the cache: sum over column i of
  // -b_r * A(r,i) * sigma(-b_r c_r).
  double grad_coord(std::size_t i) const {
    if (i >= dim()) throw DimensionError("coordinate out of range");
    double g = 0.0;
    for_col(*a_, i, [&](std::size_t r, double arj) {
      const double br = (*b_)[r];
      const double cr = shared_load(cache_[r]);
      g -= br * arj * detail::sigmoid_neg(br * cr);
    });
    return g;
  }

  double coord_from(double base_i, std::size_t i) const {
    return base_i - eta_ * grad_coord(i);
  }

  double coord(const DenseVector& x, std::size_t i) const {
    return coord_from(shared_load(x[i]), i);
  }

  // Forward step at v, without touching the cache.
  void full_fresh(const DenseVector& v, DenseVector& out) const {
    if (v.size() != dim()) throw DimensionError("vector length mismatch");
    DenseVector t = matvec(*a_, v);
    for (std::size_t r = 0; r < t.size(); ++r) {
      const double br = (*b_)[r];
      t[r] = -br * detail::sigmoid_neg(br * t[r]);
    }
    DenseVector g = matvec_t(*a_, t);
    out.resize(dim());
    for (std::size_t j = 0; j < dim(); ++j) out[j] = v[j] - eta_ * g[j];
  }

  // Forward step using the current cache for the gradient, base taken from x.
  void full_from_cache(const DenseVector& x, DenseVector& out) const {
    out.resize(dim());
    for (std::size_t j = 0; j < dim(); ++j) {
      out[j] = shared_load(x[j]) - eta_ * grad_coord(j);
    }
  }

  void update_cache_coordinate(double old_xi, double new_xi, std::size_t i) {
    if (i >= dim()) throw DimensionError("coordinate out of range");
    const double delta = new_xi - old_xi;
    if (delta == 0.0) return;
    for_col(*a_, i,
            [&](std::size_t r, double arj) { shared_add(cache_[r], delta * arj); });
  }

  // Adds this rank's column block of Ax into the cache. Starting from a zero
  // cache and composing over all ranks rebuilds c = Ax.
  void update_cache_block(const DenseVector& x, std::size_t rank,
                          std::size_t num_parts) {
    const auto [lo, hi] = block_partition(dim(), num_parts, rank);
    for (std::size_t j = lo; j < hi; ++j) {
      const double xj = shared_load(x[j]);
      if (xj == 0.0) continue;
      for_col(*a_, j,
              [&](std::size_t r, double arj) { shared_add(cache_[r], xj * arj); });
    }
  }

  // Applies recorded per-coordinate deltas to cache rows in [row_lo, row_hi),
  // visiting columns in ascending order so the summation order per cache
  // entry does not depend on how rows are partitioned.
  void refresh_cache_rows(const DenseVector& delta, std::size_t row_lo,
                          std::size_t row_hi) {
    for (std::size_t j = 0; j < dim(); ++j) {
      const double dj = delta[j];
      if (dj == 0.0) continue;
      for_col(*a_, j, [&](std::size_t r, double arj) {
        if (r >= row_lo && r < row_hi) cache_[r] += dj * arj;
      });
    }
  }

  void reset_cache() { cache_.assign(cache_.size(), 0.0); }

  void rebuild_cache(const DenseVector& x) {
    reset_cache();
    update_cache_block(x, 0, 1);
  }

 private:
  const MatT* a_;
  const DenseVector* b_;
  DenseVector cache_;  // c = Ax, one entry per sample
  double eta_ = 0.0;
};

// Gradient step for 0.5*||Ax - b||^2; grad = A'(Ax - b). Cache c = Ax.
template <class MatT>
class SquareLossForward {
 public:
  SquareLossForward(const MatT* a, const DenseVector* b, double eta_f)
      : a_(a), b_(b), cache_(a->rows(), 0.0) {
    if (b->size() != a->rows()) {
      throw DimensionError("label count must match sample count");
    }
    detail::check_step_nonneg(eta_f);
    eta_ = eta_f;
  }

  std::size_t dim() const { return a_->cols(); }
  std::size_t cache_length() const { return a_->rows(); }
  double eta() const { return eta_; }
  const DenseVector& cache() const { return cache_; }

  void update_step_size(double eta_f) {
    detail::check_step(eta_f);
    eta_ = eta_f;
  }

  double grad_coord(std::size_t i) const {
    if (i >= dim()) throw DimensionError("coordinate out of range");
    double g = 0.0;
    for_col(*a_, i, [&](std::size_t r, double arj) {
      g += arj * (shared_load(cache_[r]) - (*b_)[r]);
    });
    return g;
  }

  double coord_from(double base_i, std::size_t i) const {
    return base_i - eta_ * grad_coord(i);
  }

  double coord(const DenseVector& x, std::size_t i) const {
    return coord_from(shared_load(x[i]), i);
  }

  void full_fresh(const DenseVector& v, DenseVector& out) const {
    if (v.size() != dim()) throw DimensionError("vector length mismatch");
    DenseVector t = matvec(*a_, v);
    for (std::size_t r = 0; r < t.size(); ++r) t[r] -= (*b_)[r];
    DenseVector g = matvec_t(*a_, t);
    out.resize(dim());
    for (std::size_t j = 0; j < dim(); ++j) out[j] = v[j] - eta_ * g[j];
  }

  void full_from_cache(const DenseVector& x, DenseVector& out) const {
    out.resize(dim());
    for (std::size_t j = 0; j < dim(); ++j) {
      out[j] = shared_load(x[j]) - eta_ * grad_coord(j);
    }
  }

  void update_cache_coordinate(double old_xi, double new_xi, std::size_t i) {
    if (i >= dim()) throw DimensionError("coordinate out of range");
    const double delta = new_xi - old_xi;
    if (delta == 0.0) return;
    for_col(*a_, i,
            [&](std::size_t r, double arj) { shared_add(cache_[r], delta * arj); });
  }

  void update_cache_block(const DenseVector& x, std::size_t rank,
                          std::size_t num_parts) {
    const auto [lo, hi] = block_partition(dim(), num_parts, rank);
    for (std::size_t j = lo; j < hi; ++j) {
      const double xj = shared_load(x[j]);
      if (xj == 0.0) continue;
      for_col(*a_, j,
              [&](std::size_t r, double arj) { shared_add(cache_[r], xj * arj); });
    }
  }

  void refresh_cache_rows(const DenseVector& delta, std::size_t row_lo,
                          std::size_t row_hi) {
    for (std::size_t j = 0; j < dim(); ++j) {
      const double dj = delta[j];
      if (dj == 0.0) continue;
      for_col(*a_, j, [&](std::size_t r, double arj) {
        if (r >= row_lo && r < row_hi) cache_[r] += dj * arj;
      });
    }
  }

  void reset_cache() { cache_.assign(cache_.size(), 0.0); }

  void rebuild_cache(const DenseVector& x) {
    reset_cache();
    update_cache_block(x, 0, 1);
  }

 private:
  const MatT* a_;
  const DenseVector* b_;
  DenseVector cache_;  // c = Ax
  double eta_ = 0.0;
};

// Gradient step for 0.5*x'Qx with symmetric Q; grad = Qx, cached directly.
class QuadraticForward {
 public:
  QuadraticForward(const DenseMatrix* q, double eta_f);

  std::size_t dim() const { return q_->cols(); }
  std::size_t cache_length() const { return q_->rows(); }
  double eta() const { return eta_; }
  const DenseVector& cache() const { return cache_; }

  void update_step_size(double eta_f) {
    detail::check_step(eta_f);
    eta_ = eta_f;
  }

  double grad_coord(std::size_t i) const {
    if (i >= dim()) throw DimensionError("coordinate out of range");
    return shared_load(cache_[i]);
  }

  double coord_from(double base_i, std::size_t i) const {
    return base_i - eta_ * grad_coord(i);
  }

  double coord(const DenseVector& x, std::size_t i) const {
    return coord_from(shared_load(x[i]), i);
  }

  void full_fresh(const DenseVector& v, DenseVector& out) const;
  void full_from_cache(const DenseVector& x, DenseVector& out) const;

  void update_cache_coordinate(double old_xi, double new_xi, std::size_t i);
  void update_cache_block(const DenseVector& x, std::size_t rank,
                          std::size_t num_parts);
  void refresh_cache_rows(const DenseVector& delta, std::size_t row_lo,
                          std::size_t row_hi);
  void reset_cache() { cache_.assign(cache_.size(), 0.0); }
  void rebuild_cache(const DenseVector& x);

 private:
  const DenseMatrix* q_;
  DenseVector cache_;  // q = Qx
  double eta_ = 0.0;
};

// prox of eta_f * lambda * ||.||_1 : the soft threshold at t = eta_f*lambda.
class ProxL1 {
 public:
  static constexpr bool separable = true;

  ProxL1(double lambda, double eta_f);

  double lambda() const { return lambda_; }
  double threshold() const { return eta_ * lambda_; }

  void update_step_size(double eta_f);

  double scalar(double v) const { return soft_threshold(v, threshold()); }
  void full(const DenseVector& in, DenseVector& out) const;

 private:
  double lambda_;
  double eta_;
};

// prox of eta_f * lambda * ||.||_2^2 : componentwise v / (1 + 2 eta_f lambda).
class ProxSumSquare {
 public:
  static constexpr bool separable = true;

  ProxSumSquare(double lambda, double eta_f);

  double lambda() const { return lambda_; }

  void update_step_size(double eta_f);

  double scalar(double v) const { return shrink_sum_square(v, eta_, lambda_); }
  void full(const DenseVector& in, DenseVector& out) const;

 private:
  double lambda_;
  double eta_;
};

// Projection onto the positive orthant.
class ProjNonneg {
 public:
  static constexpr bool separable = true;

  void update_step_size(double eta_f) { detail::check_step(eta_f); }

  double scalar(double v) const { return v > 0.0 ? v : 0.0; }
  void full(const DenseVector& in, DenseVector& out) const;
};

// Euclidean projection onto {y >= 0, sum(y) <= 1, xi'y >= c}. Not coordinate
// separable: one output component needs the dual multipliers of the whole
// vector. Solved through the two-multiplier dual
//     y(mu, nu) = max(v - mu*1 + nu*xi, 0),  mu, nu >= 0,
// with nested bisection (outer mu for the budget, inner nu for the return)
// down to complementary-slackness tolerance `tol`.
class ProjPortfolio {
 public:
  static constexpr bool separable = false;

  ProjPortfolio(DenseVector xi, double c, double tol = 1e-10);

  const DenseVector& xi() const { return xi_; }
  double required_return() const { return c_; }
  double tol() const { return tol_; }

  void update_step_size(double eta_f) { detail::check_step(eta_f); }

  void full(const DenseVector& in, DenseVector& out) const;
  DenseVector operator()(const DenseVector& v) const;

 private:
  DenseVector xi_;
  double c_;
  double tol_;
};

}  // namespace opsplit

#endif
