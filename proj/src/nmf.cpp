#include "opsplit/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace opsplit {

namespace {

constexpr double kTinyNorm = 1e-12;

double safeguarded_eta(double norm_sq, double shrink) {
  return 0.45 * shrink / std::max(2.0 * norm_sq, kTinyNorm);
}

}  // namespace

NmfState::NmfState(DenseMatrix a, std::size_t k)
    : a_(std::move(a)),
      k_(k),
      vars_(k * (a_.rows() + a_.cols()), 0.0),
      resid_(a_.rows() * a_.cols(), 0.0) {
  if (k_ == 0) throw ConfigError("factor rank must be at least 1");
  rebuild_residual();
}

NmfState NmfState::synthetic(std::size_t m, std::size_t n, std::size_t k,
                             std::uint64_t seed) {
  if (k == 0) throw ConfigError("factor rank must be at least 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseVector xh(k * m), yh(k * n);
  for (auto& v : xh) v = std::max(normal(rng), 0.0);
  for (auto& v : yh) v = std::max(normal(rng), 0.0);
  DenseMatrix a(m, n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r) s += xh[r * m + j] * yh[r * n + l];
      a(j, l) = s;
    }
  }
  NmfState state(std::move(a), k);
  state.randomize_factors(seed + 0x9e3779b97f4a7c15ull);
  return state;
}

void NmfState::randomize_factors(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : vars_) v = std::max(normal(rng), 0.0);
  rebuild_residual();
}

double NmfState::grad_x(std::size_t r, std::size_t j) const {
  if (r >= k_ || j >= m()) throw DimensionError("factor index out of range");
  const std::size_t cols = n();
  double g = 0.0;
  for (std::size_t l = 0; l < cols; ++l) {
    g += shared_load(vars_[y_index(r, l)]) * shared_load(resid_[j * cols + l]);
  }
  return -2.0 * g;
}

double NmfState::grad_y(std::size_t r, std::size_t l) const {
  if (r >= k_ || l >= n()) throw DimensionError("factor index out of range");
  const std::size_t cols = n();
  double g = 0.0;
  for (std::size_t j = 0; j < m(); ++j) {
    g += shared_load(vars_[x_index(r, j)]) * shared_load(resid_[j * cols + l]);
  }
  return -2.0 * g;
}

void NmfState::residual_delta_x(std::size_t r, std::size_t j, double delta) {
  if (r >= k_ || j >= m()) throw DimensionError("factor index out of range");
  if (delta == 0.0) return;
  const std::size_t cols = n();
  for (std::size_t l = 0; l < cols; ++l) {
    shared_add(resid_[j * cols + l],
               -delta * shared_load(vars_[y_index(r, l)]));
  }
}

void NmfState::residual_delta_y(std::size_t r, std::size_t l, double delta) {
  if (r >= k_ || l >= n()) throw DimensionError("factor index out of range");
  if (delta == 0.0) return;
  const std::size_t cols = n();
  for (std::size_t j = 0; j < m(); ++j) {
    shared_add(resid_[j * cols + l],
               -delta * shared_load(vars_[x_index(r, j)]));
  }
}

void NmfState::rebuild_residual() { rebuild_residual_rows(0, m()); }

void NmfState::rebuild_residual_rows(std::size_t row_lo, std::size_t row_hi) {
  const std::size_t cols = n();
  for (std::size_t j = row_lo; j < row_hi; ++j) {
    for (std::size_t l = 0; l < cols; ++l) {
      double s = 0.0;
      for (std::size_t r = 0; r < k_; ++r) {
        s += vars_[x_index(r, j)] * vars_[y_index(r, l)];
      }
      resid_[j * cols + l] = a_(j, l) - s;
    }
  }
}

double NmfState::objective_cached() const {
  double acc = 0.0;
  for (const double v : resid_) acc += v * v;
  return acc;
}

double NmfState::objective_of(const DenseVector& v) const {
  if (v.size() != var_count()) throw DimensionError("variable length mismatch");
  const std::size_t rows = m();
  const std::size_t cols = n();
  double acc = 0.0;
  for (std::size_t j = 0; j < rows; ++j) {
    for (std::size_t l = 0; l < cols; ++l) {
      double s = 0.0;
      for (std::size_t r = 0; r < k_; ++r) {
        s += v[x_index(r, j)] * v[y_index(r, l)];
      }
      const double d = a_(j, l) - s;
      acc += d * d;
    }
  }
  return acc;
}

double NmfState::objective() const { return objective_of(vars_); }

double NmfState::rel_fit() const {
  double an = 0.0;
  for (const double v : a_.data()) an += v * v;
  if (an == 0.0) return 0.0;
  return std::sqrt(objective() / an);
}

double NmfState::x_norm_sq() const {
  DenseMatrix gram(k_, k_);
  for (std::size_t r = 0; r < k_; ++r) {
    for (std::size_t s = r; s < k_; ++s) {
      double acc = 0.0;
      for (std::size_t j = 0; j < m(); ++j) {
        acc += vars_[x_index(r, j)] * vars_[x_index(s, j)];
      }
      gram(r, s) = acc;
      gram(s, r) = acc;
    }
  }
  return std::max(sym_eig_max(gram), 0.0);
}

double NmfState::y_norm_sq() const {
  DenseMatrix gram(k_, k_);
  for (std::size_t r = 0; r < k_; ++r) {
    for (std::size_t s = r; s < k_; ++s) {
      double acc = 0.0;
      for (std::size_t l = 0; l < n(); ++l) {
        acc += vars_[y_index(r, l)] * vars_[y_index(s, l)];
      }
      gram(r, s) = acc;
      gram(s, r) = acc;
    }
  }
  return std::max(sym_eig_max(gram), 0.0);
}

void nmf_coord_update(NmfState& state, bool update_x, std::size_t r,
                      std::size_t j, double eta_f) {
  if (eta_f < 0.0 || !std::isfinite(eta_f)) {
    throw ParameterError("step size must be nonnegative");
  }
  const std::size_t idx =
      update_x ? state.x_index(r, j) : state.y_index(r, j);
  const double old = shared_load(state.vars()[idx]);
  const double g = update_x ? state.grad_x(r, j) : state.grad_y(r, j);
  const double next = std::max(old - eta_f * g, 0.0);
  if (next == old) return;
  // Exchange so the residual delta spans the value actually displaced.
  const double prev = shared_exchange(state.vars()[idx], next);
  if (update_x) {
    state.residual_delta_x(r, j, next - prev);
  } else {
    state.residual_delta_y(r, j, next - prev);
  }
}

NmfScheme::NmfScheme(NmfState* state) : state_(state) { refresh_step_sizes(); }

void NmfScheme::refresh_step_sizes() {
  eta_x_ = safeguarded_eta(state_->y_norm_sq(), 1.0);
  eta_y_ = safeguarded_eta(state_->x_norm_sq(), 1.0);
}

void NmfScheme::update_params(double eta_f) {
  if (!(eta_f > 0.0) || !std::isfinite(eta_f)) {
    throw ParameterError("step size must be positive");
  }
  eta_x_ = eta_f;
  eta_y_ = eta_f;
}

double NmfScheme::compute_coord_from(double vi, std::size_t idx) const {
  const std::size_t km = state_->k() * state_->m();
  double g;
  double eta;
  if (idx < km) {
    g = state_->grad_x(idx / state_->m(), idx % state_->m());
    eta = eta_x_;
  } else {
    const std::size_t rem = idx - km;
    g = state_->grad_y(rem / state_->n(), rem % state_->n());
    eta = eta_y_;
  }
  const double t = vi - eta * g;
  return t > 0.0 ? t : 0.0;
}

double NmfScheme::compute_coord(std::size_t idx) const {
  return compute_coord_from(shared_load(state_->vars()[idx]), idx);
}

void NmfScheme::apply_coord(std::size_t idx, double eta_r) {
  DenseVector& v = state_->vars();
  const double vi = shared_load(v[idx]);
  const double s = compute_coord_from(vi, idx);
  const double vn = vi - eta_r * (vi - s);
  if (vn == vi) return;
  const double prev = shared_exchange(v[idx], vn);
  const std::size_t km = state_->k() * state_->m();
  if (idx < km) {
    state_->residual_delta_x(idx / state_->m(), idx % state_->m(), vn - prev);
  } else {
    const std::size_t rem = idx - km;
    state_->residual_delta_y(rem / state_->n(), rem % state_->n(), vn - prev);
  }
}

void NmfScheme::apply_block(const DenseVector& staged, std::size_t lo,
                            std::size_t hi, double eta_r, DenseVector& delta) {
  DenseVector& v = state_->vars();
  for (std::size_t idx = lo; idx < hi; ++idx) {
    const double vi = v[idx];
    const double vn = vi - eta_r * (vi - staged[idx]);
    delta[idx] = vn - vi;
    if (vn != vi) v[idx] = vn;
  }
}

void NmfScheme::refresh_cache_rows(const DenseVector& delta, std::size_t rank,
                                   std::size_t num_parts) {
  (void)delta;
  const auto [lo, hi] = block_partition(state_->m(), num_parts, rank);
  state_->rebuild_residual_rows(lo, hi);
}

void NmfScheme::full_map(const DenseVector& v, DenseVector& out) const {
  const std::size_t m = state_->m();
  const std::size_t n = state_->n();
  const std::size_t k = state_->k();
  const DenseMatrix& a = state_->a();
  DenseVector resid(m * n);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        s += v[state_->x_index(r, j)] * v[state_->y_index(r, l)];
      }
      resid[j * n + l] = a(j, l) - s;
    }
  }
  out.resize(v.size());
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < m; ++j) {
      double g = 0.0;
      for (std::size_t l = 0; l < n; ++l) {
        g += v[state_->y_index(r, l)] * resid[j * n + l];
      }
      const double t = v[state_->x_index(r, j)] + 2.0 * eta_x_ * g;
      out[state_->x_index(r, j)] = t > 0.0 ? t : 0.0;
    }
  }
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t l = 0; l < n; ++l) {
      double g = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        g += v[state_->x_index(r, j)] * resid[j * n + l];
      }
      const double t = v[state_->y_index(r, l)] + 2.0 * eta_y_ * g;
      out[state_->y_index(r, l)] = t > 0.0 ? t : 0.0;
    }
  }
}

RunReport nmf_run_sync(NmfState& state, const Params& params) {
  Params sp = params;
  sp.mode = Mode::sync;
  validate_params(sp);
  const std::size_t p = sp.n_threads;
  const double eta_r = sp.eta_r > 0.0 ? sp.eta_r : 1.0;
  const std::size_t m = state.m();
  const std::size_t n = state.n();
  const std::size_t k = state.k();
  const std::size_t km = k * m;
  const std::size_t kn = k * n;
  const std::size_t nvars = state.var_count();

  NmfScheme scheme(&state);
  const bool fixed_eta = sp.eta_f > 0.0;
  if (fixed_eta) scheme.update_params(sp.eta_f);
  state.rebuild_residual();

  RunReport rep;
  double prev_obj = state.objective_cached();
  rep.trace.push_back(TraceRow{
      0.0, 0.0, prev_obj, fixed_point_residual(scheme, state.vars())});
  if (sp.max_epoch <= 0) {
    rep.final_objective = prev_obj;
    rep.final_residual = rep.trace.front().residual;
    return rep;
  }

  DenseVector staged(nvars, 0.0);
  DenseVector delta(nvars, 0.0);
  DenseVector var_snap;
  DenseVector resid_snap;
  double shrink_x = 1.0;
  double shrink_y = 1.0;
  std::atomic<bool> stop{false};
  std::atomic<long long> updates{0};
  double last_secs = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  std::barrier<> bar(static_cast<std::ptrdiff_t>(p));

  // One Jacobi pass over the variable range [var_lo, var_lo + len) with the
  // complementary factor held fixed, then a fresh rebuild of the residual
  // rows and a monotonicity check with rollback.
  auto phase = [&](std::size_t rank, bool x_phase) {
    const std::size_t var_lo = x_phase ? 0 : km;
    const std::size_t len = x_phase ? km : kn;
    if (rank == 0) {
      if (!fixed_eta) {
        if (x_phase) {
          scheme.set_eta_x(safeguarded_eta(state.y_norm_sq(), shrink_x));
        } else {
          scheme.set_eta_y(safeguarded_eta(state.x_norm_sq(), shrink_y));
        }
      }
      var_snap.assign(state.vars().begin() + static_cast<std::ptrdiff_t>(var_lo),
                      state.vars().begin() +
                          static_cast<std::ptrdiff_t>(var_lo + len));
      resid_snap = state.residual();
    }
    bar.arrive_and_wait();
    const auto [blo, bhi] = block_partition(len, p, rank);
    for (std::size_t i = var_lo + blo; i < var_lo + bhi; ++i) {
      staged[i] = scheme.compute_coord(i);
    }
    bar.arrive_and_wait();
    scheme.apply_block(staged, var_lo + blo, var_lo + bhi, eta_r, delta);
    bar.arrive_and_wait();
    {
      const auto [rlo, rhi] = block_partition(m, p, rank);
      state.rebuild_residual_rows(rlo, rhi);
    }
    bar.arrive_and_wait();
    if (rank == 0) {
      const double obj = state.objective_cached();
      if (obj > prev_obj + 1e-12 * std::max(1.0, std::abs(prev_obj))) {
        std::copy(var_snap.begin(), var_snap.end(),
                  state.vars().begin() + static_cast<std::ptrdiff_t>(var_lo));
        std::copy(resid_snap.begin(), resid_snap.end(),
                  state.residual().begin());
        if (!fixed_eta) (x_phase ? shrink_x : shrink_y) *= 0.5;
      } else {
        prev_obj = obj;
      }
    }
    bar.arrive_and_wait();
  };

  auto worker = [&](std::size_t rank) {
    for (long long round = 0; round < sp.max_epoch; ++round) {
      phase(rank, true);
      phase(rank, false);
      if (rank == 0) {
        updates.fetch_add(static_cast<long long>(nvars),
                          std::memory_order_relaxed);
        const long long ep = round + 1;
        if (ep % sp.check_interval == 0 || ep == sp.max_epoch) {
          const double secs =
              detail::bump_seconds(detail::elapsed_seconds(t0), last_secs);
          const double resid = fixed_point_residual(scheme, state.vars());
          rep.trace.push_back(
              TraceRow{static_cast<double>(ep), secs, prev_obj, resid});
          if (sp.tol > 0.0 && resid < sp.tol) {
            stop.store(true, std::memory_order_relaxed);
          }
        }
      }
      bar.arrive_and_wait();
      if (stop.load(std::memory_order_relaxed)) return;
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(p);
  for (std::size_t rank = 0; rank < p; ++rank) pool.emplace_back(worker, rank);
  for (auto& t : pool) t.join();

  rep.wall_seconds = detail::elapsed_seconds(t0);
  rep.epochs_completed =
      updates.load(std::memory_order_relaxed) / static_cast<long long>(nvars);
  rep.final_objective = state.objective();
  rep.final_residual = fixed_point_residual(scheme, state.vars());
  return rep;
}

}  // namespace opsplit
