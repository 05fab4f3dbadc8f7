#include "opsplit/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace opsplit {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, DenseVector data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("DenseMatrix: data length must equal rows*cols");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

double DenseMatrix::symmetry_gap() const {
  if (rows_ != cols_) {
    throw DimensionError("symmetry_gap: matrix must be square");
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = i + 1; j < cols_; ++j) {
      gap = std::max(gap, std::abs((*this)(i, j) - (*this)(j, i)));
    }
  }
  return gap;
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw DimensionError("from_triplets: entry index out of range");
    }
    if (!std::isfinite(t.value)) {
      throw ParameterError("from_triplets: nonfinite value");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.col != b.col ? a.col < b.col : a.row < b.row;
            });
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].col == entries[k - 1].col &&
        entries[k].row == entries[k - 1].row) {
      throw ParameterError("from_triplets: duplicate entry");
    }
  }
  SparseMatrix m(rows, cols);
  m.row_idx_.resize(entries.size());
  m.values_.resize(entries.size());
  for (const auto& t : entries) ++m.col_ptr_[t.col + 1];
  for (std::size_t j = 0; j < cols; ++j) m.col_ptr_[j + 1] += m.col_ptr_[j];
  std::vector<std::size_t> next(m.col_ptr_.begin(), m.col_ptr_.end() - 1);
  for (const auto& t : entries) {
    const std::size_t k = next[t.col]++;
    m.row_idx_[k] = t.row;
    m.values_[k] = t.value;
  }
  return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(entries));
}

double dot(const DenseVector& v, const DenseVector& w) {
  if (v.size() != w.size()) {
    throw DimensionError("dot: length mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
  return s;
}

void axpy(double alpha, const DenseVector& v, DenseVector& w) {
  if (v.size() != w.size()) {
    throw DimensionError("axpy: length mismatch");
  }
  for (std::size_t i = 0; i < v.size(); ++i) w[i] += alpha * v[i];
}

void col_axpy(const SparseMatrix& a, std::size_t j, double alpha,
              DenseVector& c) {
  if (j >= a.cols()) throw DimensionError("col_axpy: column out of range");
  if (c.size() != a.rows()) throw DimensionError("col_axpy: length mismatch");
  for_col(a, j, [&](std::size_t i, double v) { c[i] += alpha * v; });
}

void col_axpy(const DenseMatrix& a, std::size_t j, double alpha,
              DenseVector& c) {
  if (j >= a.cols()) throw DimensionError("col_axpy: column out of range");
  if (c.size() != a.rows()) throw DimensionError("col_axpy: length mismatch");
  for_col(a, j, [&](std::size_t i, double v) { c[i] += alpha * v; });
}

namespace {

template <class Mat>
DenseVector matvec_impl(const Mat& a, const DenseVector& x) {
  if (x.size() != a.cols()) throw DimensionError("matvec: length mismatch");
  DenseVector y(a.rows(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double xj = x[j];
    if (xj != 0.0) {
      for_col(a, j, [&](std::size_t i, double v) { y[i] += xj * v; });
    }
  }
  return y;
}

template <class Mat>
DenseVector matvec_t_impl(const Mat& a, const DenseVector& y) {
  if (y.size() != a.rows()) throw DimensionError("matvec_t: length mismatch");
  DenseVector z(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for_col(a, j, [&](std::size_t i, double v) { s += v * y[i]; });
    z[j] = s;
  }
  return z;
}

// Deterministic unit-norm start vector for the power iterations.
DenseVector power_start(std::size_t n) {
  std::mt19937_64 gen(0x9e3779b97f4a7c15ull);
  std::normal_distribution<double> dist(0.0, 1.0);
  DenseVector u(n);
  for (auto& v : u) v = dist(gen);
  const double nrm = norm2(u);
  if (nrm > 0.0) {
    for (auto& v : u) v /= nrm;
  }
  return u;
}

template <class Mat>
double op_norm_sq_impl(const Mat& a, int iters) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  DenseVector u = power_start(a.cols());
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    DenseVector w = matvec_t(a, matvec(a, u));  // A^T A u
    lambda = dot(u, w);
    const double nrm = norm2(w);
    if (nrm == 0.0) return 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] /= nrm;
    u = std::move(w);
  }
  return lambda;
}

// Rayleigh quotient after power iteration on shift*I + sgn*Q.
double sym_power(const DenseMatrix& q, double shift, double sgn, int iters) {
  DenseVector u = power_start(q.cols());
  double lambda = 0.0;
  for (int k = 0; k < iters; ++k) {
    DenseVector w = matvec(q, u);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = shift * u[i] + sgn * w[i];
    lambda = dot(u, w);
    const double nrm = norm2(w);
    if (nrm == 0.0) break;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] /= nrm;
    u = std::move(w);
  }
  return lambda;
}

}  // namespace

DenseVector matvec(const SparseMatrix& a, const DenseVector& x) {
  return matvec_impl(a, x);
}
DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  return matvec_impl(a, x);
}
DenseVector matvec_t(const SparseMatrix& a, const DenseVector& y) {
  return matvec_t_impl(a, y);
}
DenseVector matvec_t(const DenseMatrix& a, const DenseVector& y) {
  return matvec_t_impl(a, y);
}

double norm2(const DenseVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm1(const DenseVector& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double op_norm_sq(const SparseMatrix& a, int iters) {
  return op_norm_sq_impl(a, iters);
}
double op_norm_sq(const DenseMatrix& a, int iters) {
  return op_norm_sq_impl(a, iters);
}

double sym_eig_max(const DenseMatrix& q, int iters) {
  if (q.rows() != q.cols()) throw DimensionError("sym_eig_max: square only");
  if (q.rows() == 0) return 0.0;
  const double rho = std::abs(sym_power(q, 0.0, 1.0, iters));
  // rho*I + Q is PSD with top eigenvalue rho + lambda_max
  return sym_power(q, rho, 1.0, iters) - rho;
}

double sym_eig_min(const DenseMatrix& q, int iters) {
  if (q.rows() != q.cols()) throw DimensionError("sym_eig_min: square only");
  if (q.rows() == 0) return 0.0;
  const double rho = std::abs(sym_power(q, 0.0, 1.0, iters));
  // rho*I - Q is PSD with top eigenvalue rho - lambda_min
  return rho - sym_power(q, rho, -1.0, iters);
}

}  // namespace opsplit
