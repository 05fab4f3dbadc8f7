#ifndef OPSPLIT_PARTITION_HPP
#define OPSPLIT_PARTITION_HPP

#include <cstddef>
#include <utility>

#include "opsplit/errors.hpp"

namespace opsplit {

// Half-open coordinate range owned by `rank` out of `parts` approximately
// equal blocks covering [0, n). Sizes differ by at most one; the first
// n mod parts ranks get the larger size.
inline std::pair<std::size_t, std::size_t> block_partition(std::size_t n,
                                                           std::size_t parts,
                                                           std::size_t rank) {
  if (parts == 0 || rank >= parts) {
    throw ParameterError("block_partition: rank out of range");
  }
  const std::size_t base = n / parts;
  const std::size_t rem = n % parts;
  const std::size_t lo = rank * base + std::min(rank, rem);
  const std::size_t hi = lo + base + (rank < rem ? 1 : 0);
  return {lo, hi};
}

}  // namespace opsplit

#endif
