#ifndef OPSPLIT_IO_HPP
#define OPSPLIT_IO_HPP

#include <string>
#include <vector>

#include "opsplit/linalg.hpp"

namespace opsplit {

// Training data: one sample per row of A, labels in {-1,+1}.
struct LabeledDataset {
  SparseMatrix a;
  DenseVector b;
};

// Reads SVMLight/LIBSVM text: every nonempty line is
//   <label> <index>:<value> <index>:<value> ...
// with 1-based, strictly increasing indices per line. Labels must be in
// {-1, 0, 1}; 0/1 label files are remapped to -1/+1. The feature count is
// max(dim_hint, largest index seen).
LabeledDataset parse_libsvm(const std::string& path, std::size_t dim_hint = 0);

// One convergence-trace record.
struct TraceRow {
  double epoch;
  double seconds;
  double objective;
  double residual;
};

// CSV with header `epoch,seconds,objective,residual`, round-trip precision.
void write_trace(const std::string& path, const std::vector<TraceRow>& rows);

}  // namespace opsplit

#endif
