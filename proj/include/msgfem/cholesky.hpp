#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "msgfem/dense.hpp"
#include "msgfem/errors.hpp"
#include "msgfem/ordering.hpp"
#include "msgfem/sparse.hpp"

namespace msgfem {

/**
 * @brief Sparse Cholesky factorization PAPᵀ = LLᵀ for SPD matrices.
 *
 * Up-looking factorization driven by the elimination tree: the pattern of
 * each row of L is the tree reach of the corresponding upper-triangular row
 * of A, so only structural nonzeros are stored or touched. The elimination
 * order is supplied by the caller (reverse Cuthill–McKee by default); a
 * non-positive pivot raises NotSpdError naming the first failing unknown in
 * the caller's numbering.
 */
class SparseCholesky {
 public:
  explicit SparseCholesky(const SparseMatrix& a, std::vector<int> perm = {})
      : n_(a.rows()), perm_(std::move(perm)) {
    MSGFEM_REQUIRE(a.rows() == a.cols());
    if (perm_.empty()) perm_ = ordering_rcm(a);
    MSGFEM_REQUIRE(static_cast<int>(perm_.size()) == n_);
    iperm_.assign(n_, -1);
    for (int k = 0; k < n_; ++k) {
      MSGFEM_REQUIRE(perm_[k] >= 0 && perm_[k] < n_ && iperm_[perm_[k]] == -1);
      iperm_[perm_[k]] = k;
    }

    // Permuted upper-triangular pattern of A in compressed columns.
    std::vector<std::int64_t> ucount(n_ + 1, 0);
    for (int r = 0; r < n_; ++r)
      for (int c : a.row_cols(r))
        if (iperm_[r] <= iperm_[c]) ++ucount[iperm_[c] + 1];
    std::vector<std::int64_t> uptr(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) uptr[j + 1] = uptr[j] + ucount[j + 1];
    std::vector<int> urow(uptr[n_]);
    std::vector<double> uval(uptr[n_]);
    {
      std::vector<std::int64_t> next(uptr.begin(), uptr.end() - 1);
      for (int r = 0; r < n_; ++r) {
        auto cols = a.row_cols(r);
        auto vals = a.row_vals(r);
        for (std::size_t p = 0; p < cols.size(); ++p) {
          int i = iperm_[r], j = iperm_[cols[p]];
          if (i <= j) {
            urow[next[j]] = i;
            uval[next[j]] = vals[p];
            ++next[j];
          }
        }
      }
      for (int j = 0; j < n_; ++j) {
        auto lo = urow.begin() + uptr[j], hi = urow.begin() + uptr[j + 1];
        std::vector<std::pair<int, double>> tmp;
        tmp.reserve(hi - lo);
        for (auto it = lo; it != hi; ++it)
          tmp.emplace_back(*it, uval[it - urow.begin()]);
        std::sort(tmp.begin(), tmp.end());
        for (std::size_t q = 0; q < tmp.size(); ++q) {
          urow[uptr[j] + q] = tmp[q].first;
          uval[uptr[j] + q] = tmp[q].second;
        }
      }
    }

    // Elimination tree from the upper pattern (path-compressed ancestors).
    std::vector<int> parent(n_, -1), ancestor(n_, -1);
    for (int j = 0; j < n_; ++j)
      for (std::int64_t p = uptr[j]; p < uptr[j + 1]; ++p) {
        int k = urow[p];
        while (k != -1 && k < j) {
          int nxt = ancestor[k];
          ancestor[k] = j;
          if (nxt == -1) {
            parent[k] = j;
            break;
          }
          k = nxt;
        }
      }

    // Row pattern of L via tree reach; first pass counts, second fills.
    std::vector<int> mark(n_, -1), reach;
    reach.reserve(64);
    auto ereach = [&](int i) {
      reach.clear();
      for (std::int64_t p = uptr[i]; p < uptr[i + 1]; ++p) {
        int k = urow[p];
        while (k != i && mark[k] != i) {
          mark[k] = i;
          reach.push_back(k);
          k = parent[k] == -1 ? i : parent[k];
        }
      }
      std::sort(reach.begin(), reach.end());
    };

    std::vector<std::int64_t> count(n_, 1);  // diagonal slot per column
    for (int i = 0; i < n_; ++i) {
      ereach(i);
      for (int j : reach) ++count[j];
    }
    colptr_.assign(n_ + 1, 0);
    for (int j = 0; j < n_; ++j) colptr_[j + 1] = colptr_[j] + count[j];
    rowind_.resize(colptr_[n_]);
    val_.resize(colptr_[n_]);
    std::vector<std::int64_t> fill(n_);
    for (int j = 0; j < n_; ++j) fill[j] = colptr_[j] + 1;  // after the diagonal

    std::fill(mark.begin(), mark.end(), -1);
    std::vector<double> x(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
      ereach(i);
      double d = 0.0;
      for (std::int64_t p = uptr[i]; p < uptr[i + 1]; ++p) {
        if (urow[p] == i)
          d = uval[p];
        else
          x[urow[p]] = uval[p];
      }
      for (int j : reach) {
        const double lij = x[j] / val_[colptr_[j]];
        x[j] = 0.0;
        for (std::int64_t p = colptr_[j] + 1; p < fill[j]; ++p)
          x[rowind_[p]] -= val_[p] * lij;
        d -= lij * lij;
        rowind_[fill[j]] = i;
        val_[fill[j]] = lij;
        ++fill[j];
      }
      if (!(d > 0.0)) throw NotSpdError("sparse_cholesky", perm_[i]);
      rowind_[colptr_[i]] = i;
      val_[colptr_[i]] = std::sqrt(d);
    }
  }

  int size() const { return n_; }
  std::int64_t factor_nnz() const { return colptr_.empty() ? 0 : colptr_[n_]; }
  const std::vector<int>& ordering() const { return perm_; }

  void solve(std::span<double> b) const {
    MSGFEM_REQUIRE(static_cast<int>(b.size()) == n_);
    Vector z(n_);
    for (int k = 0; k < n_; ++k) z[k] = b[perm_[k]];
    for (int j = 0; j < n_; ++j) {
      z[j] /= val_[colptr_[j]];
      const double zj = z[j];
      for (std::int64_t p = colptr_[j] + 1; p < colptr_[j + 1]; ++p)
        z[rowind_[p]] -= val_[p] * zj;
    }
    for (int j = n_ - 1; j >= 0; --j) {
      double s = z[j];
      for (std::int64_t p = colptr_[j] + 1; p < colptr_[j + 1]; ++p)
        s -= val_[p] * z[rowind_[p]];
      z[j] = s / val_[colptr_[j]];
    }
    for (int k = 0; k < n_; ++k) b[perm_[k]] = z[k];
  }

  /// Copying variant; named distinctly so in-place `solve(x)` calls through
  /// the span conversion keep their meaning.
  Vector solve_copy(Vector b) const {
    solve(std::span<double>(b));
    return b;
  }

  /// Simultaneous solve of all columns of a row-major n×k block; one factor
  /// sweep serves every right-hand side, which is what the interface Schur
  /// assembly leans on.
  void solve_block(DenseMatrix& b) const {
    MSGFEM_REQUIRE(b.rows() == n_);
    const int k = b.cols();
    DenseMatrix z(n_, k);
    for (int r = 0; r < n_; ++r)
      std::copy(b.row(perm_[r]), b.row(perm_[r]) + k, z.row(r));
    for (int j = 0; j < n_; ++j) {
      double* zj = z.row(j);
      const double dinv = 1.0 / val_[colptr_[j]];
      for (int c = 0; c < k; ++c) zj[c] *= dinv;
      for (std::int64_t p = colptr_[j] + 1; p < colptr_[j + 1]; ++p) {
        double* zi = z.row(rowind_[p]);
        const double v = val_[p];
        for (int c = 0; c < k; ++c) zi[c] -= v * zj[c];
      }
    }
    for (int j = n_ - 1; j >= 0; --j) {
      double* zj = z.row(j);
      for (std::int64_t p = colptr_[j] + 1; p < colptr_[j + 1]; ++p) {
        const double* zi = z.row(rowind_[p]);
        const double v = val_[p];
        for (int c = 0; c < k; ++c) zj[c] -= v * zi[c];
      }
      const double dinv = 1.0 / val_[colptr_[j]];
      for (int c = 0; c < k; ++c) zj[c] *= dinv;
    }
    for (int r = 0; r < n_; ++r)
      std::copy(z.row(r), z.row(r) + k, b.row(perm_[r]));
  }

 private:
  int n_ = 0;
  std::vector<int> perm_, iperm_;
  std::vector<std::int64_t> colptr_;
  std::vector<int> rowind_;
  std::vector<double> val_;
};

/// Convenience one-shot solve used by small systems and tests.
inline Vector chol_solve(const SparseMatrix& a, Vector b) {
  SparseCholesky f(a);
  f.solve(b);
  return b;
}

}  // namespace msgfem
