#ifndef OPSPLIT_ATOMIC_OPS_HPP
#define OPSPLIT_ATOMIC_OPS_HPP

#include <atomic>

namespace opsplit {

// Element-level access to vectors shared between agents.
//
// Contract: individual 64-bit reads and writes are untorn, cache deltas are
// atomic additions so concurrent contributions commute, and no ordering is
// implied between agents (relaxed memory order throughout). Phase ordering,
// where needed, comes from thread joins and barriers in the driver.

inline double shared_load(const double& slot) {
  return std::atomic_ref<double>(const_cast<double&>(slot))
      .load(std::memory_order_relaxed);
}

inline void shared_store(double& slot, double value) {
  std::atomic_ref<double>(slot).store(value, std::memory_order_relaxed);
}

inline void shared_add(double& slot, double delta) {
  std::atomic_ref<double>(slot).fetch_add(delta, std::memory_order_relaxed);
}

inline double shared_exchange(double& slot, double value) {
  return std::atomic_ref<double>(slot).exchange(value,
                                                std::memory_order_relaxed);
}

}  // namespace opsplit

#endif
