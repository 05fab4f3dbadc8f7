#ifndef OPSPLIT_LINALG_HPP
#define OPSPLIT_LINALG_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opsplit/errors.hpp"

namespace opsplit {

// Minimal numeric containers for the layers above. Native loops only; the
// point of this layer is a storage contract the coordinate machinery can
// rely on (column slices, word-sized element writes), not BLAS speed.

using DenseVector = std::vector<double>;

// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, DenseVector data);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }

  const DenseVector& data() const { return data_; }
  DenseVector& data() { return data_; }

  // max |Q_ij - Q_ji|; 0 for empty matrices. Square matrices only.
  double symmetry_gap() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  DenseVector data_;
};

// Compressed-sparse-column matrix. Column slices are the hot access path:
// every coordinate update walks one column.
class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), col_ptr_(cols + 1, 0) {}

  // Validates: indices in range, no duplicates, finite values. Zeros are kept
  // if present in the triplet list.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& col_ptr() const { return col_ptr_; }
  const std::vector<std::size_t>& row_idx() const { return row_idx_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> col_ptr_;  // size cols+1, nondecreasing
  std::vector<std::size_t> row_idx_;  // strictly increasing within a column
  std::vector<double> values_;
};

// f(row, value) over the stored entries of column j, ascending row order.
template <class F>
inline void for_col(const SparseMatrix& a, std::size_t j, F&& f) {
  for (std::size_t k = a.col_ptr()[j]; k < a.col_ptr()[j + 1]; ++k) {
    f(a.row_idx()[k], a.values()[k]);
  }
}

template <class F>
inline void for_col(const DenseMatrix& a, std::size_t j, F&& f) {
  for (std::size_t i = 0; i < a.rows(); ++i) {
    f(i, a(i, j));
  }
}

double dot(const DenseVector& v, const DenseVector& w);

// w <- w + alpha * v
void axpy(double alpha, const DenseVector& v, DenseVector& w);

// c <- c + alpha * A(:,j). Cost is nnz of the column (sparse) or rows (dense).
void col_axpy(const SparseMatrix& a, std::size_t j, double alpha,
              DenseVector& c);
void col_axpy(const DenseMatrix& a, std::size_t j, double alpha,
              DenseVector& c);

DenseVector matvec(const SparseMatrix& a, const DenseVector& x);
DenseVector matvec(const DenseMatrix& a, const DenseVector& x);

// A^T y
DenseVector matvec_t(const SparseMatrix& a, const DenseVector& y);
DenseVector matvec_t(const DenseMatrix& a, const DenseVector& y);

double norm2(const DenseVector& v);
double norm1(const DenseVector& v);

// ||A||_2^2 estimated by `iters` power-iteration steps on A^T A,
// deterministic start vector.
double op_norm_sq(const SparseMatrix& a, int iters = 100);
double op_norm_sq(const DenseMatrix& a, int iters = 100);

// Extreme eigenvalues of a symmetric matrix by power iteration
// (the minimum via iteration on the shifted matrix).
double sym_eig_max(const DenseMatrix& q, int iters = 100);
double sym_eig_min(const DenseMatrix& q, int iters = 100);

}  // namespace opsplit

#endif
