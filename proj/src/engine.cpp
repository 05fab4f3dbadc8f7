#include "opsplit/engine.hpp"

namespace opsplit {

Kernel kernel_from_string(const std::string& name) {
  if (name == "cyclic") return Kernel::cyclic;
  if (name == "random_block") return Kernel::random_block;
  if (name == "gauss_seidel") return Kernel::gauss_seidel;
  throw ConfigError("unknown kernel '" + name +
                    "' (choices: cyclic, random_block, gauss_seidel)");
}

Mode mode_from_string(const std::string& name) {
  if (name == "sync") return Mode::sync;
  if (name == "async") return Mode::async;
  throw ConfigError("unknown mode '" + name + "' (choices: sync, async)");
}

void validate_params(const Params& params) {
  if (params.n_threads < 1) {
    throw ConfigError("thread count must be at least 1");
  }
  if (params.eta_f < 0.0 || !std::isfinite(params.eta_f)) {
    throw ConfigError("forward step size must be nonnegative");
  }
  if (params.eta_r < 0.0 || params.eta_r > 1.0 ||
      !std::isfinite(params.eta_r)) {
    throw ConfigError("relaxation must lie in (0, 1] (or 0 for the default)");
  }
  if (params.max_epoch < 0) {
    throw ConfigError("epoch count must be nonnegative");
  }
  if (params.tol < 0.0 || !std::isfinite(params.tol)) {
    throw ConfigError("tolerance must be nonnegative");
  }
  if (params.check_interval < 1) {
    throw ConfigError("check interval must be at least 1");
  }
  if (params.mode == Mode::sync && params.kernel == Kernel::gauss_seidel) {
    throw ConfigError("gauss_seidel overlaps full sweeps; async mode only");
  }
  if (params.adapt_step &&
      (params.mode != Mode::sync || params.eta_f <= 0.0)) {
    throw ConfigError(
        "step adaptation needs sync mode and an explicit forward step");
  }
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t agent_stream_seed(std::uint64_t seed, std::size_t rank) {
  return splitmix64(splitmix64(seed) ^ (static_cast<std::uint64_t>(rank) + 1));
}

}  // namespace opsplit
