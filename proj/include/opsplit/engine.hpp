#ifndef OPSPLIT_ENGINE_HPP
#define OPSPLIT_ENGINE_HPP

#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "opsplit/atomic_ops.hpp"
#include "opsplit/errors.hpp"
#include "opsplit/io.hpp"
#include "opsplit/linalg.hpp"
#include "opsplit/partition.hpp"

namespace opsplit {

enum class Kernel { cyclic, random_block, gauss_seidel };
enum class Mode { sync, async };

Kernel kernel_from_string(const std::string& name);
Mode mode_from_string(const std::string& name);

struct Params {
  double eta_f = 0.0;    // 0 keeps the operators' current step size
  double eta_r = 0.0;    // 0 resolves to 1.0 (sync or one agent) / 0.5 (async)
  long long max_epoch = 100;
  std::size_t n_threads = 1;
  Kernel kernel = Kernel::cyclic;
  Mode mode = Mode::async;
  double tol = 0.0;      // 0 disables the residual stop
  std::uint64_t seed = 1;
  long long check_interval = 1;  // epochs between controller checks
  // Halve eta_f whenever a residual check comes back larger than the
  // previous one. Requires an explicit eta_f and sync mode: the step is
  // only touched at a barrier, while every agent is quiescent.
  bool adapt_step = false;
};

void validate_params(const Params& params);

struct RunReport {
  double wall_seconds = 0.0;
  long long epochs_completed = 0;
  double final_objective = std::numeric_limits<double>::quiet_NaN();
  double final_residual = 0.0;
  std::vector<TraceRow> trace;
};

using ObjectiveFn = std::function<double(const DenseVector&)>;

// Independent per-agent RNG stream so one agent's draw sequence does not
// depend on how many other agents exist.
std::uint64_t agent_stream_seed(std::uint64_t seed, std::size_t rank);

// ||v - S(v)||_2 with S evaluated fresh (no shared caches involved).
template <class Scheme>
double fixed_point_residual(const Scheme& scheme, const DenseVector& v) {
  DenseVector sv;
  scheme.full_map(v, sv);
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - sv[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

namespace detail {

inline double elapsed_seconds(
    std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       since)
      .count();
}

// Trace timestamps must be strictly increasing even when the clock ticks
// coarser than the work.
inline double bump_seconds(double now, double& last) {
  if (now <= last) now = last + 1e-9;
  last = now;
  return now;
}

template <class Scheme>
void append_trace(RunReport& rep, const Scheme& scheme, const DenseVector& v,
                  const ObjectiveFn& objective, double epoch, double seconds) {
  const double resid = fixed_point_residual(scheme, v);
  const double obj =
      objective ? objective(v) : std::numeric_limits<double>::quiet_NaN();
  rep.trace.push_back(TraceRow{epoch, seconds, obj, resid});
}

}  // namespace detail

// Algorithm: p agents share the solution vector and the operator caches.
// Each agent repeatedly picks a coordinate by its kernel rule and applies the
// relaxed update in place; writes are per-element atomic, cache deltas are
// atomic additions, and stale reads are tolerated. A dedicated controller
// thread snapshots x, traces progress, and raises the stop flag. The update
// budget is ticketed: exactly max_epoch * n coordinate updates run.
template <class Scheme>
RunReport run_async(Scheme& scheme, const Params& params,
                    const ObjectiveFn& objective = {}) {
  validate_params(params);
  const std::size_t n = scheme.dimension();
  const std::size_t p = params.n_threads;
  const double eta_r =
      params.eta_r > 0.0 ? params.eta_r : (p == 1 ? 1.0 : 0.5);

  if (params.eta_f > 0.0) scheme.update_params(params.eta_f);
  scheme.rebuild_caches();

  RunReport rep;
  const long long budget =
      params.max_epoch * static_cast<long long>(n);
  detail::append_trace(rep, scheme, scheme.solution(), objective, 0.0, 0.0);
  if (n == 0 || budget <= 0) {
    rep.final_objective = rep.trace.front().objective;
    rep.final_residual = rep.trace.front().residual;
    return rep;
  }

  std::atomic<long long> tickets{0};
  std::atomic<bool> stop{false};
  const auto t0 = std::chrono::steady_clock::now();

  auto try_ticket = [&]() {
    if (tickets.fetch_add(1, std::memory_order_relaxed) >= budget) {
      stop.store(true, std::memory_order_relaxed);
      return false;
    }
    return true;
  };

  auto agent = [&](std::size_t rank) {
    switch (params.kernel) {
      case Kernel::cyclic: {
        const auto [lo, hi] = block_partition(n, p, rank);
        if (lo == hi) {
          while (!stop.load(std::memory_order_relaxed)) {
            std::this_thread::yield();
          }
          return;
        }
        std::size_t i = lo;
        while (!stop.load(std::memory_order_relaxed)) {
          if (!try_ticket()) return;
          scheme.apply_coord(i, eta_r);
          if (++i == hi) i = lo;
        }
        return;
      }
      case Kernel::random_block: {
        std::mt19937_64 rng(agent_stream_seed(params.seed, rank));
        std::uniform_int_distribution<std::size_t> pick(0, p - 1);
        while (!stop.load(std::memory_order_relaxed)) {
          const auto [lo, hi] = block_partition(n, p, pick(rng));
          for (std::size_t i = lo; i < hi; ++i) {
            if (stop.load(std::memory_order_relaxed) || !try_ticket()) return;
            scheme.apply_coord(i, eta_r);
          }
        }
        return;
      }
      case Kernel::gauss_seidel: {
        while (!stop.load(std::memory_order_relaxed)) {
          for (std::size_t i = 0; i < n; ++i) {
            if (stop.load(std::memory_order_relaxed) || !try_ticket()) return;
            scheme.apply_coord(i, eta_r);
          }
        }
        return;
      }
    }
  };

  double last_secs = 0.0;
  std::thread controller([&]() {
    long long last_epoch = 0;
    while (!stop.load(std::memory_order_relaxed)) {
      const long long done =
          std::min(tickets.load(std::memory_order_relaxed), budget);
      const long long ep = done / static_cast<long long>(n);
      if (ep - last_epoch >= params.check_interval) {
        last_epoch = ep;
        DenseVector snap(n);
        const DenseVector& x = scheme.solution();
        for (std::size_t i = 0; i < n; ++i) snap[i] = shared_load(x[i]);
        const double secs =
            detail::bump_seconds(detail::elapsed_seconds(t0), last_secs);
        detail::append_trace(rep, scheme, snap, objective,
                             static_cast<double>(ep), secs);
        if (params.tol > 0.0 && rep.trace.back().residual < params.tol) {
          stop.store(true, std::memory_order_relaxed);
        }
      }
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });

  std::vector<std::thread> pool;
  pool.reserve(p);
  for (std::size_t rank = 0; rank < p; ++rank) pool.emplace_back(agent, rank);
  for (auto& t : pool) t.join();
  stop.store(true, std::memory_order_relaxed);
  controller.join();

  rep.wall_seconds = detail::elapsed_seconds(t0);
  const long long executed =
      std::min(tickets.load(std::memory_order_relaxed), budget);
  rep.epochs_completed = executed / static_cast<long long>(n);
  const DenseVector& x = scheme.solution();
  DenseVector final_x(x.begin(), x.end());
  rep.final_residual = fixed_point_residual(scheme, final_x);
  rep.final_objective = objective ? objective(final_x)
                                  : std::numeric_limits<double>::quiet_NaN();
  detail::append_trace(
      rep, scheme, final_x, objective,
      static_cast<double>(executed) / static_cast<double>(n),
      detail::bump_seconds(rep.wall_seconds, last_secs));
  return rep;
}

// Barriered Jacobi rounds: every S_i of a round is computed against the
// same state, then applied, then the caches are refreshed from the recorded
// deltas with each rank owning a row slice and walking columns in ascending
// order. The arithmetic per element is therefore a fixed sequence regardless
// of the thread count, which makes sync runs bit-reproducible and their
// result independent of p.
template <class Scheme>
RunReport run_sync(Scheme& scheme, const Params& params,
                   const ObjectiveFn& objective = {}) {
  validate_params(params);
  if (params.kernel == Kernel::gauss_seidel) {
    throw ConfigError("gauss_seidel overlaps full sweeps; async mode only");
  }
  const std::size_t n = scheme.dimension();
  const std::size_t p = params.n_threads;
  const double eta_r = params.eta_r > 0.0 ? params.eta_r : 1.0;

  if (params.eta_f > 0.0) scheme.update_params(params.eta_f);
  scheme.rebuild_caches();

  RunReport rep;
  detail::append_trace(rep, scheme, scheme.solution(), objective, 0.0, 0.0);
  if (n == 0 || params.max_epoch <= 0) {
    rep.final_objective = rep.trace.front().objective;
    rep.final_residual = rep.trace.front().residual;
    return rep;
  }

  DenseVector staged(n, 0.0);
  DenseVector delta(n, 0.0);
  std::atomic<bool> stop{false};
  std::atomic<long long> updates{0};
  double last_secs = 0.0;
  double cur_eta = params.eta_f;
  double last_resid = rep.trace.front().residual;
  const auto t0 = std::chrono::steady_clock::now();
  std::barrier<> bar(static_cast<std::ptrdiff_t>(p));

  auto worker = [&](std::size_t rank) {
    const auto [lo, hi] = block_partition(n, p, rank);
    for (long long round = 0; round < params.max_epoch; ++round) {
      for (std::size_t i = lo; i < hi; ++i) {
        staged[i] = scheme.compute_coord(i);
      }
      bar.arrive_and_wait();
      scheme.apply_block(staged, lo, hi, eta_r, delta);
      bar.arrive_and_wait();
      scheme.refresh_cache_rows(delta, rank, p);
      bar.arrive_and_wait();
      if (rank == 0) {
        updates.fetch_add(static_cast<long long>(n),
                          std::memory_order_relaxed);
        const long long ep = round + 1;
        if (ep % params.check_interval == 0 || ep == params.max_epoch) {
          const double secs =
              detail::bump_seconds(detail::elapsed_seconds(t0), last_secs);
          detail::append_trace(rep, scheme, scheme.solution(), objective,
                               static_cast<double>(ep), secs);
          const double resid = rep.trace.back().residual;
          if (params.adapt_step && resid > last_resid) {
            cur_eta *= 0.5;
            scheme.update_params(cur_eta);
          }
          last_resid = resid;
          if (params.tol > 0.0 && resid < params.tol) {
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
      updates.load(std::memory_order_relaxed) / static_cast<long long>(n);
  const DenseVector& x = scheme.solution();
  rep.final_residual = fixed_point_residual(scheme, x);
  rep.final_objective =
      objective ? objective(x) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

template <class Scheme>
RunReport run(Scheme& scheme, const Params& params,
              const ObjectiveFn& objective = {}) {
  return params.mode == Mode::sync ? run_sync(scheme, params, objective)
                                   : run_async(scheme, params, objective);
}

}  // namespace opsplit

#endif
