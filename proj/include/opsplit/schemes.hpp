#ifndef OPSPLIT_SCHEMES_HPP
#define OPSPLIT_SCHEMES_HPP

#include <cstddef>

#include "opsplit/atomic_ops.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/linalg.hpp"
#include "opsplit/partition.hpp"

namespace opsplit {

// A scheme is one iteration rule S composed from operators, exposed two ways:
//   async path   apply_coord(i, eta_r)     reads x_i, applies the relaxed
//                                          update and the cache delta at once
//   sync path    compute_coord(i) staged by the driver, then apply_block and
//                refresh_cache_rows under barriers
// Both paths realize x_i <- x_i - eta_r*(x_i - S_i(x)). Scheme objects hold
// pointers to shared state only, so one instance serves all agents.
//
// Async deposits must be atomic adds (or exchanges that return the displaced
// value). A plain store would let two racing agents both post their cache
// deltas while only one write to x survives, and the cache never recovers
// from that: x and cache then settle on a common fixed point that is not a
// fixed point of the true map.

// S(x) = backward(forward(x)). The coordinate path composes per component
// when the backward operator is separable; otherwise S_i needs the full
// projection of the cached forward step.
template <class Fwd, class Bwd>
class ForwardBackward {
 public:
  ForwardBackward(Fwd* forward, Bwd* backward, DenseVector* x)
      : fwd_(forward), bwd_(backward), x_(x) {
    if (x_->size() != fwd_->dim()) {
      throw DimensionError("solution length must match operator width");
    }
  }

  std::size_t dimension() const { return x_->size(); }
  DenseVector& solution() { return *x_; }
  const DenseVector& solution() const { return *x_; }

  void update_params(double eta_f) {
    fwd_->update_step_size(eta_f);
    bwd_->update_step_size(eta_f);
  }

  double compute_coord_from(double xi, std::size_t i) const {
    if constexpr (Bwd::separable) {
      return bwd_->scalar(fwd_->coord_from(xi, i));
    } else {
      (void)xi;
      thread_local DenseVector step, proj;
      fwd_->full_from_cache(*x_, step);
      bwd_->full(step, proj);
      return proj[i];
    }
  }

  double compute_coord(std::size_t i) const {
    return compute_coord_from(shared_load((*x_)[i]), i);
  }

  void apply_coord(std::size_t i, double eta_r) {
    const double xi = shared_load((*x_)[i]);
    const double s = compute_coord_from(xi, i);
    const double d = eta_r * (s - xi);
    if (d != 0.0) {
      shared_add((*x_)[i], d);
      fwd_->update_cache_coordinate(xi, xi + d, i);
    }
  }

  void apply_block(const DenseVector& staged, std::size_t lo, std::size_t hi,
                   double eta_r, DenseVector& delta) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double xi = (*x_)[i];
      const double xn = xi - eta_r * (xi - staged[i]);
      delta[i] = xn - xi;
      if (xn != xi) (*x_)[i] = xn;
    }
  }

  std::size_t cache_length() const { return fwd_->cache_length(); }

  void refresh_cache_rows(const DenseVector& delta, std::size_t rank,
                          std::size_t num_parts) {
    const auto [lo, hi] = block_partition(cache_length(), num_parts, rank);
    fwd_->refresh_cache_rows(delta, lo, hi);
  }

  void rebuild_caches() { fwd_->rebuild_cache(*x_); }

  void full_map(const DenseVector& v, DenseVector& out) const {
    DenseVector step;
    fwd_->full_fresh(v, step);
    bwd_->full(step, out);
  }

 private:
  Fwd* fwd_;
  Bwd* bwd_;
  DenseVector* x_;
};

// S(x) = forward(backward(x)). The forward component at i needs backward(x)
// globally, so the scheme owns an auxiliary y = backward(x), maintained in
// lockstep with x; the forward cache then tracks A*y. Requires a separable
// backward operator.
template <class Fwd, class Bwd>
class BackwardForward {
  static_assert(Bwd::separable,
                "backward-forward needs a separable backward operator");

 public:
  BackwardForward(Fwd* forward, Bwd* backward, DenseVector* x)
      : fwd_(forward), bwd_(backward), x_(x), y_(x->size(), 0.0) {
    if (x_->size() != fwd_->dim()) {
      throw DimensionError("solution length must match operator width");
    }
  }

  std::size_t dimension() const { return x_->size(); }
  DenseVector& solution() { return *x_; }
  const DenseVector& solution() const { return *x_; }
  const DenseVector& auxiliary() const { return y_; }

  void update_params(double eta_f) {
    fwd_->update_step_size(eta_f);
    bwd_->update_step_size(eta_f);
  }

  double compute_coord_from(double xi, std::size_t i) const {
    return fwd_->coord_from(bwd_->scalar(xi), i);
  }

  double compute_coord(std::size_t i) const {
    return compute_coord_from(shared_load((*x_)[i]), i);
  }

  void apply_coord(std::size_t i, double eta_r) {
    const double xi = shared_load((*x_)[i]);
    const double s = compute_coord_from(xi, i);
    const double d = eta_r * (s - xi);
    if (d == 0.0) return;
    shared_add((*x_)[i], d);
    // The exchange returns the value it displaced, so cache deltas chain
    // across racing agents and sum to y's true net change.
    const double yn = bwd_->scalar(shared_load((*x_)[i]));
    const double yo = shared_exchange(y_[i], yn);
    if (yn != yo) fwd_->update_cache_coordinate(yo, yn, i);
  }

  void apply_block(const DenseVector& staged, std::size_t lo, std::size_t hi,
                   double eta_r, DenseVector& delta) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double xi = (*x_)[i];
      const double xn = xi - eta_r * (xi - staged[i]);
      if (xn != xi) (*x_)[i] = xn;
      const double yo = y_[i];
      const double yn = bwd_->scalar(xn);
      delta[i] = yn - yo;
      if (yn != yo) y_[i] = yn;
    }
  }

  std::size_t cache_length() const { return fwd_->cache_length(); }

  void refresh_cache_rows(const DenseVector& delta, std::size_t rank,
                          std::size_t num_parts) {
    const auto [lo, hi] = block_partition(cache_length(), num_parts, rank);
    fwd_->refresh_cache_rows(delta, lo, hi);
  }

  void rebuild_caches() {
    for (std::size_t i = 0; i < y_.size(); ++i) {
      y_[i] = bwd_->scalar((*x_)[i]);
    }
    fwd_->rebuild_cache(y_);
  }

  void full_map(const DenseVector& v, DenseVector& out) const {
    DenseVector yv;
    bwd_->full(v, yv);
    fwd_->full_fresh(yv, out);
  }

 private:
  Fwd* fwd_;
  Bwd* bwd_;
  DenseVector* x_;
  DenseVector y_;  // backward(x), the forward cache's source
};

// S(x) = forward(x).
template <class Fwd>
class GradientDescentScheme {
 public:
  GradientDescentScheme(Fwd* forward, DenseVector* x) : fwd_(forward), x_(x) {
    if (x_->size() != fwd_->dim()) {
      throw DimensionError("solution length must match operator width");
    }
  }

  std::size_t dimension() const { return x_->size(); }
  DenseVector& solution() { return *x_; }
  const DenseVector& solution() const { return *x_; }

  void update_params(double eta_f) { fwd_->update_step_size(eta_f); }

  double compute_coord_from(double xi, std::size_t i) const {
    return fwd_->coord_from(xi, i);
  }

  double compute_coord(std::size_t i) const {
    return compute_coord_from(shared_load((*x_)[i]), i);
  }

  void apply_coord(std::size_t i, double eta_r) {
    const double xi = shared_load((*x_)[i]);
    const double s = compute_coord_from(xi, i);
    const double d = eta_r * (s - xi);
    if (d != 0.0) {
      shared_add((*x_)[i], d);
      fwd_->update_cache_coordinate(xi, xi + d, i);
    }
  }

  void apply_block(const DenseVector& staged, std::size_t lo, std::size_t hi,
                   double eta_r, DenseVector& delta) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double xi = (*x_)[i];
      const double xn = xi - eta_r * (xi - staged[i]);
      delta[i] = xn - xi;
      if (xn != xi) (*x_)[i] = xn;
    }
  }

  std::size_t cache_length() const { return fwd_->cache_length(); }

  void refresh_cache_rows(const DenseVector& delta, std::size_t rank,
                          std::size_t num_parts) {
    const auto [lo, hi] = block_partition(cache_length(), num_parts, rank);
    fwd_->refresh_cache_rows(delta, lo, hi);
  }

  void rebuild_caches() { fwd_->rebuild_cache(*x_); }

  void full_map(const DenseVector& v, DenseVector& out) const {
    fwd_->full_fresh(v, out);
  }

 private:
  Fwd* fwd_;
  DenseVector* x_;
};

// S(x) = backward(x), componentwise. No cache to maintain.
template <class Bwd>
class ProximalPointScheme {
  static_assert(Bwd::separable,
                "proximal-point coordinate path needs a separable operator");

 public:
  ProximalPointScheme(Bwd* backward, DenseVector* x) : bwd_(backward), x_(x) {}

  std::size_t dimension() const { return x_->size(); }
  DenseVector& solution() { return *x_; }
  const DenseVector& solution() const { return *x_; }

  void update_params(double eta_f) { bwd_->update_step_size(eta_f); }

  double compute_coord_from(double xi, std::size_t i) const {
    (void)i;
    return bwd_->scalar(xi);
  }

  double compute_coord(std::size_t i) const {
    return compute_coord_from(shared_load((*x_)[i]), i);
  }

  void apply_coord(std::size_t i, double eta_r) {
    const double xi = shared_load((*x_)[i]);
    const double s = compute_coord_from(xi, i);
    const double d = eta_r * (s - xi);
    if (d != 0.0) shared_add((*x_)[i], d);
  }

  void apply_block(const DenseVector& staged, std::size_t lo, std::size_t hi,
                   double eta_r, DenseVector& delta) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double xi = (*x_)[i];
      const double xn = xi - eta_r * (xi - staged[i]);
      delta[i] = xn - xi;
      if (xn != xi) (*x_)[i] = xn;
    }
  }

  std::size_t cache_length() const { return 0; }
  void refresh_cache_rows(const DenseVector&, std::size_t, std::size_t) {}
  void rebuild_caches() {}

  void full_map(const DenseVector& v, DenseVector& out) const {
    bwd_->full(v, out);
  }

 private:
  Bwd* bwd_;
  DenseVector* x_;
};

// z' = z + prox_f(2 prox_g(z) - z) - prox_g(z)
template <class PF, class PG>
void drs_step(const PF& prox_f, const PG& prox_g, const DenseVector& z,
              DenseVector& out) {
  DenseVector g;
  prox_g.full(z, g);
  DenseVector r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = 2.0 * g[i] - z[i];
  DenseVector f;
  prox_f.full(r, f);
  out.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] + f[i] - g[i];
}

// z' = (2 prox_f - I)(2 prox_g - I) z
template <class PF, class PG>
void prs_step(const PF& prox_f, const PG& prox_g, const DenseVector& z,
              DenseVector& out) {
  DenseVector g;
  prox_g.full(z, g);
  DenseVector r(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) r[i] = 2.0 * g[i] - z[i];
  DenseVector f;
  prox_f.full(r, f);
  out.resize(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = 2.0 * f[i] - r[i];
}

// Full-vector schemes over the auxiliary variable z. The solution estimate
// for reporting is prox_g(z), where the fixed point minimizes f + g.
template <class PF, class PG>
class DouglasRachford {
 public:
  DouglasRachford(PF* prox_f, PG* prox_g, DenseVector* z)
      : pf_(prox_f), pg_(prox_g), z_(z) {}

  void update_params(double eta_f) {
    pf_->update_step_size(eta_f);
    pg_->update_step_size(eta_f);
  }

  void step() {
    drs_step(*pf_, *pg_, *z_, scratch_);
    z_->swap(scratch_);
  }

  DenseVector& auxiliary() { return *z_; }

  DenseVector point() const {
    DenseVector g;
    pg_->full(*z_, g);
    return g;
  }

 private:
  PF* pf_;
  PG* pg_;
  DenseVector* z_;
  DenseVector scratch_;
};

template <class PF, class PG>
class PeacemanRachford {
 public:
  PeacemanRachford(PF* prox_f, PG* prox_g, DenseVector* z)
      : pf_(prox_f), pg_(prox_g), z_(z) {}

  void update_params(double eta_f) {
    pf_->update_step_size(eta_f);
    pg_->update_step_size(eta_f);
  }

  void step() {
    prs_step(*pf_, *pg_, *z_, scratch_);
    z_->swap(scratch_);
  }

  DenseVector& auxiliary() { return *z_; }

  DenseVector point() const {
    DenseVector g;
    pg_->full(*z_, g);
    return g;
  }

 private:
  PF* pf_;
  PG* pg_;
  DenseVector* z_;
  DenseVector scratch_;
};

}  // namespace opsplit

#endif
