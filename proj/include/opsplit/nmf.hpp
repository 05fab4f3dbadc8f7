#ifndef OPSPLIT_NMF_HPP
#define OPSPLIT_NMF_HPP

#include <cstddef>
#include <cstdint>

#include "opsplit/engine.hpp"
#include "opsplit/linalg.hpp"

namespace opsplit {

// State for min_{X,Y >= 0} ||A - X'Y||_F^2 with A m-by-n, X k-by-m, Y k-by-n.
// Both factors live in one flat variable vector (X row-major first, then Y
// row-major) so the coordinate machinery can treat the problem as a single
// k*(m+n)-dimensional update space. The cache is the residual R = A - X'Y,
// stored row-major; an X entry touches one row of R, a Y entry one column.
class NmfState {
 public:
  NmfState(DenseMatrix a, std::size_t k);

  // A = Xhat' * Yhat with both true factors sampled from N(0,1) and
  // thresholded positive; the starting factors are drawn the same way from a
  // second stream.
  static NmfState synthetic(std::size_t m, std::size_t n, std::size_t k,
                            std::uint64_t seed);

  std::size_t m() const { return a_.rows(); }
  std::size_t n() const { return a_.cols(); }
  std::size_t k() const { return k_; }
  std::size_t var_count() const { return k_ * (m() + n()); }

  const DenseMatrix& a() const { return a_; }
  DenseVector& vars() { return vars_; }
  const DenseVector& vars() const { return vars_; }
  DenseVector& residual() { return resid_; }
  const DenseVector& residual() const { return resid_; }

  std::size_t x_index(std::size_t r, std::size_t j) const {
    return r * m() + j;
  }
  std::size_t y_index(std::size_t r, std::size_t l) const {
    return k_ * m() + r * n() + l;
  }

  double x_at(std::size_t r, std::size_t j) const {
    return shared_load(vars_[x_index(r, j)]);
  }
  double y_at(std::size_t r, std::size_t l) const {
    return shared_load(vars_[y_index(r, l)]);
  }

  // d/dX_rj ||A - X'Y||^2 = -2 * sum_l Y_rl R_jl
  double grad_x(std::size_t r, std::size_t j) const;
  // d/dY_rl = -2 * sum_j X_rj R_jl
  double grad_y(std::size_t r, std::size_t l) const;

  // R_{j,:} -= delta * Y_{r,:} (atomic additions), after X_rj grew by delta.
  void residual_delta_x(std::size_t r, std::size_t j, double delta);
  // R_{:,l} -= delta * X_{r,:}
  void residual_delta_y(std::size_t r, std::size_t l, double delta);

  void rebuild_residual();
  void rebuild_residual_rows(std::size_t row_lo, std::size_t row_hi);

  double objective_cached() const;  // ||R||_F^2 from the cache
  double objective() const;         // recomputed from scratch
  double objective_of(const DenseVector& v) const;
  double rel_fit() const;           // ||A - X'Y||_F / ||A||_F, fresh

  // Squared spectral norms of the factors via their k-by-k Grams.
  double x_norm_sq() const;
  double y_norm_sq() const;

  void randomize_factors(std::uint64_t seed);

 private:
  DenseMatrix a_;
  std::size_t k_;
  DenseVector vars_;   // X then Y, row-major each
  DenseVector resid_;  // R = A - X'Y, row-major m*n
};

// Projected-gradient coordinate step X_rj <- max(X_rj - eta_f * grad, 0)
// (update_x false addresses Y_rj), followed by the residual delta.
void nmf_coord_update(NmfState& state, bool update_x, std::size_t r,
                      std::size_t j, double eta_f);

// Coordinate-scheme view of the NMF state for the async driver: cyclic order
// sweeps all X entries, then all Y entries. Step sizes are the safeguarded
// 0.45 / (2 ||other factor||_2^2), frozen at construction; in sync mode use
// nmf_run_sync below, which refreshes them every phase.
class NmfScheme {
 public:
  explicit NmfScheme(NmfState* state);

  std::size_t dimension() const { return state_->var_count(); }
  DenseVector& solution() { return state_->vars(); }
  const DenseVector& solution() const { return state_->vars(); }

  double eta_x() const { return eta_x_; }
  double eta_y() const { return eta_y_; }
  void set_eta_x(double eta) { eta_x_ = eta; }
  void set_eta_y(double eta) { eta_y_ = eta; }
  void refresh_step_sizes();

  void update_params(double eta_f);

  double compute_coord_from(double vi, std::size_t idx) const;
  double compute_coord(std::size_t idx) const;
  void apply_coord(std::size_t idx, double eta_r);
  void apply_block(const DenseVector& staged, std::size_t lo, std::size_t hi,
                   double eta_r, DenseVector& delta);

  // The residual is bilinear in the variables, so a round that moves both
  // factors cannot be patched from per-coordinate deltas; sync refresh
  // recomputes the owned rows instead.
  std::size_t cache_length() const { return state_->m(); }
  void refresh_cache_rows(const DenseVector& delta, std::size_t rank,
                          std::size_t num_parts);
  void rebuild_caches() { state_->rebuild_residual(); }

  void full_map(const DenseVector& v, DenseVector& out) const;

 private:
  NmfState* state_;
  double eta_x_ = 0.0;
  double eta_y_ = 0.0;
};

// Barriered two-phase driver: per epoch one Jacobi pass over X with Y fixed,
// then one over Y, each with a step refreshed from the other factor's
// spectral norm and a rollback-and-halve safeguard, so the objective never
// increases across epochs.
RunReport nmf_run_sync(NmfState& state, const Params& params);

}  // namespace opsplit

#endif
