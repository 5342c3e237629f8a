#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "msgfem/errors.hpp"
#include "msgfem/sparse.hpp"

namespace msgfem {

/// Row-major dense matrix used for interface-sized (Schur / eigen) blocks.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }
  double* row(int i) { return a_.data() + static_cast<std::size_t>(i) * cols_; }
  const double* row(int i) const { return a_.data() + static_cast<std::size_t>(i) * cols_; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

  Vector column(int j) const {
    Vector c(rows_);
    for (int i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  Vector multiply(std::span<const double> x) const {
    MSGFEM_REQUIRE(static_cast<int>(x.size()) == cols_);
    Vector y(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) y[i] = dot({row(i), static_cast<std::size_t>(cols_)}, x);
    return y;
  }

  Vector multiply_transposed(std::span<const double> x) const {
    MSGFEM_REQUIRE(static_cast<int>(x.size()) == rows_);
    Vector y(cols_, 0.0);
    for (int i = 0; i < rows_; ++i) axpy(x[i], {row(i), static_cast<std::size_t>(cols_)}, y);
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> a_;
};

/// C = Aᵀ B for row-major A (n×p), B (n×q): tiled over the long dimension so
/// the interface-sized result stays cache resident.
inline DenseMatrix at_b(const DenseMatrix& A, const DenseMatrix& B) {
  MSGFEM_REQUIRE(A.rows() == B.rows());
  const int n = A.rows(), p = A.cols(), q = B.cols();
  DenseMatrix C(p, q);
  constexpr int tile = 64;
  for (int i0 = 0; i0 < p; i0 += tile) {
    int i1 = std::min(i0 + tile, p);
    for (int k = 0; k < n; ++k) {
      const double* ar = A.row(k);
      const double* br = B.row(k);
      for (int i = i0; i < i1; ++i) {
        double aik = ar[i];
        if (aik == 0.0) continue;
        double* cr = C.row(i);
        for (int j = 0; j < q; ++j) cr[j] += aik * br[j];
      }
    }
  }
  return C;
}

/// C = ½(M + Mᵀ) in place; guards symmetric kernels against roundoff drift.
inline void symmetrize(DenseMatrix& M) {
  MSGFEM_REQUIRE(M.rows() == M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < i; ++j) {
      double v = 0.5 * (M(i, j) + M(j, i));
      M(i, j) = v;
      M(j, i) = v;
    }
}

/**
 * @brief Dense Cholesky A = LLᵀ for SPD interface blocks.
 *
 * Throws NotSpdError naming the first non-positive pivot. The factor is kept
 * lower-triangular in place; solves run forward/backward substitution.
 */
class DenseCholesky {
 public:
  explicit DenseCholesky(DenseMatrix a, const char* where = "dense_cholesky") : l_(std::move(a)) {
    MSGFEM_REQUIRE(l_.rows() == l_.cols());
    const int n = l_.rows();
    for (int j = 0; j < n; ++j) {
      double d = l_(j, j);
      for (int k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > 0.0)) throw NotSpdError(where, j);
      double lj = std::sqrt(d);
      l_(j, j) = lj;
      for (int i = j + 1; i < n; ++i) {
        double s = l_(i, j);
        const double* ri = l_.row(i);
        const double* rj = l_.row(j);
        for (int k = 0; k < j; ++k) s -= ri[k] * rj[k];
        l_(i, j) = s / lj;
      }
    }
  }

  int size() const { return l_.rows(); }
  const DenseMatrix& factor() const { return l_; }

  void solve_lower(std::span<double> x) const {  // L y = x
    const int n = size();
    for (int i = 0; i < n; ++i) {
      double s = x[i];
      const double* ri = l_.row(i);
      for (int k = 0; k < i; ++k) s -= ri[k] * x[k];
      x[i] = s / ri[i];
    }
  }

  void solve_upper(std::span<double> x) const {  // Lᵀ y = x
    const int n = size();
    for (int i = n - 1; i >= 0; --i) {
      double s = x[i];
      for (int k = i + 1; k < n; ++k) s -= l_(k, i) * x[k];
      x[i] = s / l_(i, i);
    }
  }

  void solve(std::span<double> x) const {
    solve_lower(x);
    solve_upper(x);
  }

 private:
  DenseMatrix l_;
};

/**
 * @brief Diagonally pivoted Cholesky with small-pivot dropping.
 *
 * Factors PAPᵀ = LLᵀ keeping only pivots above `rel_tol` times the largest
 * initial diagonal entry. Components of the solve belonging to dropped pivots
 * are returned as zero, which discards numerically dependent coarse basis
 * columns instead of failing.
 */
class PivotedCholesky {
 public:
  explicit PivotedCholesky(DenseMatrix a, double rel_tol = 1e-12) : l_(std::move(a)) {
    MSGFEM_REQUIRE(l_.rows() == l_.cols());
    const int n = l_.rows();
    perm_.resize(n);
    for (int i = 0; i < n; ++i) perm_[i] = i;
    double dmax = 0.0;
    for (int i = 0; i < n; ++i) dmax = std::max(dmax, l_(i, i));
    const double cut = dmax * rel_tol;
    rank_ = n;
    for (int j = 0; j < n; ++j) {
      int piv = j;
      for (int i = j + 1; i < n; ++i)
        if (l_(perm_[i], perm_[i]) > l_(perm_[piv], perm_[piv])) piv = i;
      std::swap(perm_[j], perm_[piv]);
      const int pj = perm_[j];
      double d = l_(pj, pj);
      if (!(d > cut)) {
        rank_ = j;
        break;
      }
      double lj = std::sqrt(d);
      l_(pj, pj) = lj;
      for (int i = j + 1; i < n; ++i) l_(perm_[i], pj) /= lj;
      // Keep the trailing block symmetric in physical storage: later pivot
      // swaps reorder rows logically, so one-sided updates would leave stale
      // mirror entries behind.
      for (int i = j + 1; i < n; ++i) {
        const double lij = l_(perm_[i], pj);
        for (int k = j + 1; k <= i; ++k) {
          const double v = lij * l_(perm_[k], pj);
          l_(perm_[i], perm_[k]) -= v;
          if (k != i) l_(perm_[k], perm_[i]) -= v;
        }
      }
    }
  }

  int rank() const { return rank_; }
  int dropped() const { return l_.rows() - rank_; }

  /// Minimum-norm-style solve: dropped components are zeroed.
  void solve(std::span<double> x) const {
    const int n = l_.rows();
    MSGFEM_REQUIRE(static_cast<int>(x.size()) == n);
    Vector y(n, 0.0);
    for (int j = 0; j < rank_; ++j) {
      double s = x[perm_[j]];
      for (int k = 0; k < j; ++k) s -= l_(perm_[j], perm_[k]) * y[k];
      y[j] = s / l_(perm_[j], perm_[j]);
    }
    for (int j = rank_ - 1; j >= 0; --j) {
      double s = y[j];
      for (int k = j + 1; k < rank_; ++k) s -= l_(perm_[k], perm_[j]) * y[k];
      y[j] = s / l_(perm_[j], perm_[j]);
    }
    std::fill(x.begin(), x.end(), 0.0);
    for (int j = 0; j < rank_; ++j) x[perm_[j]] = y[j];
  }

  /// Copying variant; named distinctly so in-place `solve(x)` calls through
  /// the span conversion keep their meaning.
  Vector solve_copy(Vector x) const {
    solve(std::span<double>(x));
    return x;
  }

 private:
  DenseMatrix l_;
  std::vector<int> perm_;
  int rank_ = 0;
};

}  // namespace msgfem
