#include "opsplit/operators.hpp"

#include <algorithm>
#include <cmath>

namespace opsplit {

double soft_threshold(double v, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ParameterError("soft threshold must be nonnegative");
  }
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double shrink_sum_square(double v, double t, double lambda) {
  if (!(t >= 0.0) || !(lambda >= 0.0)) {
    throw ParameterError("shrink_sum_square needs t >= 0 and lambda >= 0");
  }
  return v / (1.0 + 2.0 * t * lambda);
}

DenseVector prox_l1(const DenseVector& v, double t) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], t);
  return out;
}

DenseVector prox_sum_square(const DenseVector& v, double t, double lambda) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = shrink_sum_square(v[i], t, lambda);
  }
  return out;
}

DenseVector proj_nonneg(const DenseVector& v) {
  DenseVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return out;
}

QuadraticForward::QuadraticForward(const DenseMatrix* q, double eta_f)
    : q_(q), cache_(q->rows(), 0.0) {
  if (q->rows() != q->cols()) {
    throw DimensionError("quadratic term must be square");
  }
  if (q->symmetry_gap() > 1e-12) {
    throw ParameterError("quadratic term must be symmetric");
  }
  detail::check_step_nonneg(eta_f);
  eta_ = eta_f;
}

void QuadraticForward::full_fresh(const DenseVector& v,
                                  DenseVector& out) const {
  if (v.size() != dim()) throw DimensionError("vector length mismatch");
  DenseVector g = matvec(*q_, v);
  out.resize(dim());
  for (std::size_t j = 0; j < dim(); ++j) out[j] = v[j] - eta_ * g[j];
}

void QuadraticForward::full_from_cache(const DenseVector& x,
                                       DenseVector& out) const {
  out.resize(dim());
  for (std::size_t j = 0; j < dim(); ++j) {
    out[j] = shared_load(x[j]) - eta_ * shared_load(cache_[j]);
  }
}

// Symmetry makes column i equal to row i, which is contiguous in row-major
// storage; all cache walks below use rows for that reason.
void QuadraticForward::update_cache_coordinate(double old_xi, double new_xi,
                                               std::size_t i) {
  if (i >= dim()) throw DimensionError("coordinate out of range");
  const double delta = new_xi - old_xi;
  if (delta == 0.0) return;
  for (std::size_t r = 0; r < cache_.size(); ++r) {
    shared_add(cache_[r], delta * (*q_)(i, r));
  }
}

void QuadraticForward::update_cache_block(const DenseVector& x,
                                          std::size_t rank,
                                          std::size_t num_parts) {
  const auto [lo, hi] = block_partition(dim(), num_parts, rank);
  for (std::size_t j = lo; j < hi; ++j) {
    const double xj = shared_load(x[j]);
    if (xj == 0.0) continue;
    for (std::size_t r = 0; r < cache_.size(); ++r) {
      shared_add(cache_[r], xj * (*q_)(j, r));
    }
  }
}

void QuadraticForward::refresh_cache_rows(const DenseVector& delta,
                                          std::size_t row_lo,
                                          std::size_t row_hi) {
  for (std::size_t j = 0; j < dim(); ++j) {
    const double dj = delta[j];
    if (dj == 0.0) continue;
    for (std::size_t r = row_lo; r < row_hi; ++r) {
      cache_[r] += dj * (*q_)(j, r);
    }
  }
}

void QuadraticForward::rebuild_cache(const DenseVector& x) {
  reset_cache();
  update_cache_block(x, 0, 1);
}

ProxL1::ProxL1(double lambda, double eta_f) : lambda_(lambda), eta_(eta_f) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("l1 weight must be nonnegative");
  }
  detail::check_step_nonneg(eta_f);
}

void ProxL1::update_step_size(double eta_f) {
  detail::check_step(eta_f);
  eta_ = eta_f;
}

void ProxL1::full(const DenseVector& in, DenseVector& out) const {
  out.resize(in.size());
  const double t = threshold();
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = soft_threshold(in[i], t);
  }
}

ProxSumSquare::ProxSumSquare(double lambda, double eta_f)
    : lambda_(lambda), eta_(eta_f) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ParameterError("l2 weight must be nonnegative");
  }
  detail::check_step_nonneg(eta_f);
}

void ProxSumSquare::update_step_size(double eta_f) {
  detail::check_step(eta_f);
  eta_ = eta_f;
}

void ProxSumSquare::full(const DenseVector& in, DenseVector& out) const {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = shrink_sum_square(in[i], eta_, lambda_);
  }
}

void ProjNonneg::full(const DenseVector& in, DenseVector& out) const {
  out.resize(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] > 0.0 ? in[i] : 0.0;
  }
}

namespace {

struct DualSums {
  double mass;    // 1'y
  double ret;     // xi'y
};

DualSums eval_dual(const DenseVector& v, const DenseVector& xi, double mu,
                   double nu) {
  DualSums s{0.0, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double yi = v[i] - mu + nu * xi[i];
    if (yi > 0.0) {
      s.mass += yi;
      s.ret += xi[i] * yi;
    }
  }
  return s;
}

constexpr int kMaxIter = 200;
// Bracket expansion stops here; beyond this scale the y components lose the
// low-order digits of v to cancellation and wider brackets only hurt.
constexpr double kMaxMultiplier = 1e12;

}  // namespace

ProjPortfolio::ProjPortfolio(DenseVector xi, double c, double tol)
    : xi_(std::move(xi)), c_(c), tol_(tol) {
  if (!(tol > 0.0) || !std::isfinite(tol)) {
    throw ParameterError("dual tolerance must be positive");
  }
  if (!std::isfinite(c)) throw ParameterError("required return must be finite");
  double best = 0.0;  // xi'y over the budget simplex peaks at max(0, max xi)
  for (double x : xi_) {
    if (!std::isfinite(x)) throw ParameterError("return rates must be finite");
    best = std::max(best, x);
  }
  if (c_ > best) {
    throw InfeasibleError("required return exceeds the best attainable rate");
  }
}

void ProjPortfolio::full(const DenseVector& in, DenseVector& out) const {
  const std::size_t n = xi_.size();
  if (in.size() != n) throw DimensionError("vector length mismatch");
  out.resize(n);
  if (n == 0) return;

  // Smallest nu >= 0 with xi'y(mu, nu) >= c; the return sum is nondecreasing
  // in nu, so doubling followed by bisection brackets it.
  const auto solve_nu = [&](double mu) {
    if (eval_dual(in, xi_, mu, 0.0).ret >= c_) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    int iter = 0;
    while (eval_dual(in, xi_, mu, hi).ret < c_ && ++iter < kMaxIter &&
           hi < kMaxMultiplier) {
      lo = hi;
      hi *= 2.0;
    }
    iter = 0;
    while (hi - lo > tol_ * std::max(1.0, hi) && ++iter <= kMaxIter) {
      const double mid = 0.5 * (lo + hi);
      if (eval_dual(in, xi_, mu, mid).ret >= c_) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return hi;
  };

  const auto write_out = [&](double mu, double nu) {
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = in[i] - mu + nu * xi_[i];
      out[i] = yi > 0.0 ? yi : 0.0;
    }
  };

  // Both multipliers inactive: v clipped to the orthant already satisfies
  // the two linear constraints.
  const DualSums free = eval_dual(in, xi_, 0.0, 0.0);
  if (free.mass <= 1.0 + tol_ && free.ret >= c_ - tol_) {
    write_out(0.0, 0.0);
    return;
  }

  // Budget mass after restoring the return constraint at a given mu. This is
  // a supergradient of the partially maximized dual, hence nonincreasing.
  const auto mass_at = [&](double mu) {
    const double nu = solve_nu(mu);
    return std::make_pair(eval_dual(in, xi_, mu, nu).mass, nu);
  };

  auto [mass0, nu0] = mass_at(0.0);
  if (mass0 <= 1.0 + tol_) {
    write_out(0.0, nu0);
    return;
  }

  double lo = 0.0;
  double hi = 1.0;
  int iter = 0;
  while (mass_at(hi).first > 1.0 && ++iter < kMaxIter && hi < kMaxMultiplier) {
    lo = hi;
    hi *= 2.0;
  }
  iter = 0;
  while (hi - lo > tol_ * std::max(1.0, hi) && ++iter <= kMaxIter) {
    const double mid = 0.5 * (lo + hi);
    if (mass_at(mid).first > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  write_out(hi, solve_nu(hi));
}

DenseVector ProjPortfolio::operator()(const DenseVector& v) const {
  DenseVector out;
  full(v, out);
  return out;
}

}  // namespace opsplit
