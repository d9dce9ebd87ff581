#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rkz {

struct SparseEntry {
  std::size_t index;
  double value;
};

// Row-oriented matrix storage. Each row is held either densely (all n values)
// or as sorted index/value pairs; rows denser than 50% are stored densely.
// Squared row norms are cached at construction and zero rows are rejected,
// since the Kaczmarz update divides by them. Immutable once built except for
// appending rows, so instances can be shared read-only across threads.
class RowMatrix {
 public:
  explicit RowMatrix(std::size_t n_cols) : n_cols_(n_cols) {
    if (n_cols == 0) throw std::invalid_argument("RowMatrix: need at least one column");
  }

  static RowMatrix from_dense(std::size_t m, std::size_t n, std::span<const double> row_major) {
    if (row_major.size() != m * n)
      throw std::invalid_argument("RowMatrix::from_dense: size mismatch");
    RowMatrix mat(n);
    for (std::size_t i = 0; i < m; ++i) mat.add_dense_row(row_major.subspan(i * n, n));
    return mat;
  }

  void add_dense_row(std::span<const double> values) {
    if (values.size() != n_cols_)
      throw std::invalid_argument("RowMatrix: dense row has wrong length");
    double norm2 = 0.0;
    for (double v : values) norm2 += v * v;
    check_norm(norm2);
    values_.insert(values_.end(), values.begin(), values.end());
    val_off_.push_back(values_.size());
    idx_off_.push_back(indices_.size());
    row_norm2_.push_back(norm2);
  }

  void add_sparse_row(std::span<const SparseEntry> entries) {
    if (entries.empty()) throw std::invalid_argument("RowMatrix: zero row rejected");
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (entries[j].index >= n_cols_)
        throw std::invalid_argument("RowMatrix: sparse index out of range");
      if (j > 0 && entries[j].index <= entries[j - 1].index)
        throw std::invalid_argument("RowMatrix: sparse indices must be strictly increasing");
    }
    if (2 * entries.size() > n_cols_) {  // dense fallback above 50% density
      std::vector<double> dense(n_cols_, 0.0);
      for (const auto& e : entries) dense[e.index] = e.value;
      add_dense_row(dense);
      return;
    }
    double norm2 = 0.0;
    for (const auto& e : entries) norm2 += e.value * e.value;
    check_norm(norm2);
    for (const auto& e : entries) {
      values_.push_back(e.value);
      indices_.push_back(e.index);
    }
    val_off_.push_back(values_.size());
    idx_off_.push_back(indices_.size());
    row_norm2_.push_back(norm2);
  }

  std::size_t rows() const { return row_norm2_.size(); }
  std::size_t cols() const { return n_cols_; }

  bool row_is_dense(std::size_t i) const {
    check_row(i);
    return idx_off_[i + 1] == idx_off_[i];
  }

  std::size_t row_nnz(std::size_t i) const {
    check_row(i);
    return row_is_dense(i) ? n_cols_ : idx_off_[i + 1] - idx_off_[i];
  }

  std::span<const double> row_values(std::size_t i) const {
    check_row(i);
    return {values_.data() + val_off_[i], val_off_[i + 1] - val_off_[i]};
  }

  // Empty for dense rows.
  std::span<const std::size_t> row_indices(std::size_t i) const {
    check_row(i);
    return {indices_.data() + idx_off_[i], idx_off_[i + 1] - idx_off_[i]};
  }

  double row_norm2(std::size_t i) const {
    check_row(i);
    return row_norm2_[i];
  }

  const std::vector<double>& row_norms2() const { return row_norm2_; }

  double row_dot(std::size_t i, std::span<const double> v) const {
    check_row(i);
    if (v.size() != n_cols_) throw std::invalid_argument("row_dot: vector length mismatch");
    const auto vals = row_values(i);
    double acc = 0.0;
    if (row_is_dense(i)) {
      for (std::size_t j = 0; j < n_cols_; ++j) acc += vals[j] * v[j];
    } else {
      const auto idx = row_indices(i);
      for (std::size_t j = 0; j < idx.size(); ++j) acc += vals[j] * v[idx[j]];
    }
    return acc;
  }

  // x += coeff * a_i; touches only the stored coordinates of sparse rows.
  void axpy_row(std::size_t i, double coeff, std::span<double> x) const {
    check_row(i);
    if (x.size() != n_cols_) throw std::invalid_argument("axpy_row: vector length mismatch");
    const auto vals = row_values(i);
    if (row_is_dense(i)) {
      for (std::size_t j = 0; j < n_cols_; ++j) x[j] += coeff * vals[j];
    } else {
      const auto idx = row_indices(i);
      for (std::size_t j = 0; j < idx.size(); ++j) x[idx[j]] += coeff * vals[j];
    }
  }

  double frobenius_norm2() const {
    double acc = 0.0;
    for (double r : row_norm2_) acc += r;
    return acc;
  }

  // Recomputed squared norm, for invariant checks against the cache.
  double recompute_row_norm2(std::size_t i) const {
    const auto vals = row_values(i);
    double norm2 = 0.0;
    for (double v : vals) norm2 += v * v;
    return norm2;
  }

 private:
  void check_row(std::size_t i) const {
    if (i >= row_norm2_.size()) throw std::out_of_range("RowMatrix: row index out of range");
  }
  static void check_norm(double norm2) {
    if (!(norm2 > 0.0) || !std::isfinite(norm2))
      throw std::invalid_argument("RowMatrix: zero or non-finite row rejected");
  }

  std::size_t n_cols_;
  std::vector<double> values_;
  std::vector<std::size_t> indices_;
  std::vector<std::size_t> val_off_{0};
  std::vector<std::size_t> idx_off_{0};
  std::vector<double> row_norm2_;
};

namespace detail {

// Smallest eigenvalue of A^T A by cyclic Jacobi on the dense n x n Gram
// matrix. Adequate at desk scale (n <= 500); quadratically convergent.
inline double min_eigenvalue_gram(const RowMatrix& a, double tol, std::size_t max_sweeps = 64) {
  const std::size_t n = a.cols();
  std::vector<double> g(n * n, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto vals = a.row_values(i);
    if (a.row_is_dense(i)) {
      for (std::size_t p = 0; p < n; ++p) {
        if (vals[p] == 0.0) continue;
        for (std::size_t q = p; q < n; ++q) g[p * n + q] += vals[p] * vals[q];
      }
    } else {
      const auto idx = a.row_indices(i);
      for (std::size_t p = 0; p < idx.size(); ++p)
        for (std::size_t q = p; q < idx.size(); ++q)
          g[idx[p] * n + idx[q]] += vals[p] * vals[q];
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < p; ++q) g[p * n + q] = g[q * n + p];

  double total = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) total += g[p * n + q] * g[p * n + q];
  total = std::sqrt(total);
  if (total == 0.0) return 0.0;

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * g[p * n + q] * g[p * n + q];
    if (std::sqrt(off) <= tol * total) {
      double lambda_min = g[0];
      for (std::size_t p = 1; p < n; ++p) lambda_min = std::min(lambda_min, g[p * n + p]);
      return lambda_min;
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double gpq = g[p * n + q];
        if (gpq == 0.0) continue;
        const double gpp = g[p * n + p];
        const double gqq = g[q * n + q];
        const double tau = (gqq - gpp) / (2.0 * gpq);
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < n; ++r) {
          const double grp = g[r * n + p];
          const double grq = g[r * n + q];
          g[r * n + p] = c * grp - s * grq;
          g[r * n + q] = s * grp + c * grq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double gpr = g[p * n + r];
          const double gqr = g[q * n + r];
          g[p * n + r] = c * gpr - s * gqr;
          g[q * n + r] = s * gpr + c * gqr;
        }
      }
    }
  }
  throw std::runtime_error("min_eigenvalue_gram: Jacobi sweeps did not converge");
}

}  // namespace detail

// Smallest singular value; requires at least as many rows as columns, and
// returns ~0 for rank-deficient input.
inline double min_singular_value(const RowMatrix& a, double tol = 1e-12) {
  if (a.rows() < a.cols())
    throw std::invalid_argument("min_singular_value: requires m >= n");
  if (!(tol > 0.0)) throw std::invalid_argument("min_singular_value: tol must be positive");
  return std::sqrt(std::max(0.0, detail::min_eigenvalue_gram(a, tol)));
}

// Condition-number parameter eta = sigma_min(A)^2 / |A|_F^2, the decay-rate
// constant of the randomized iteration.
inline double eta_of(const RowMatrix& a, double tol = 1e-12) {
  if (a.rows() < a.cols()) throw std::invalid_argument("eta_of: requires m >= n");
  if (!(tol > 0.0)) throw std::invalid_argument("eta_of: tol must be positive");
  return std::max(0.0, detail::min_eigenvalue_gram(a, tol)) / a.frobenius_norm2();
}

}  // namespace rkz
