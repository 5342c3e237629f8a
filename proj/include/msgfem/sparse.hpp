#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "msgfem/errors.hpp"

namespace msgfem {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  MSGFEM_REQUIRE(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  MSGFEM_REQUIRE(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// One coefficient contribution during assembly; duplicates are summed.
struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/**
 * @brief Compressed sparse row matrix with deterministic triplet assembly.
 *
 * Rows hold column-sorted entries; duplicate (row, col) contributions are
 * summed in index order, so repeated assembly of the same element stream is
 * bitwise reproducible.
 */
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), ptr_(rows + 1, 0) {}

  static SparseMatrix from_triplets(int rows, int cols, std::vector<Triplet> t) {
    MSGFEM_REQUIRE(rows >= 0 && cols >= 0);
    for (const Triplet& e : t)
      MSGFEM_REQUIRE(e.row >= 0 && e.row < rows && e.col >= 0 && e.col < cols);
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m(rows, cols);
    m.col_.reserve(t.size());
    m.val_.reserve(t.size());
    std::size_t i = 0;
    for (int r = 0; r < rows; ++r) {
      while (i < t.size() && t[i].row == r) {
        double v = t[i].value;
        int c = t[i].col;
        ++i;
        while (i < t.size() && t[i].row == r && t[i].col == c) v += t[i++].value;
        m.col_.push_back(c);
        m.val_.push_back(v);
      }
      m.ptr_[r + 1] = static_cast<std::int64_t>(m.col_.size());
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(val_.size()); }

  std::span<const int> row_cols(int r) const {
    return {col_.data() + ptr_[r], col_.data() + ptr_[r + 1]};
  }
  std::span<const double> row_vals(int r) const {
    return {val_.data() + ptr_[r], val_.data() + ptr_[r + 1]};
  }

  double coeff(int r, int c) const {
    auto cols = row_cols(r);
    auto it = std::lower_bound(cols.begin(), cols.end(), c);
    if (it == cols.end() || *it != c) return 0.0;
    return val_[ptr_[r] + (it - cols.begin())];
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    MSGFEM_REQUIRE(static_cast<int>(x.size()) == cols_ &&
                   static_cast<int>(y.size()) == rows_);
    for (int r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p) s += val_[p] * x[col_[p]];
      y[r] = s;
    }
  }

  Vector multiply(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
  }

  /// y[r] = sum over selected rows only; used by subdomain restrictions.
  void multiply_rows(std::span<const int> rows, std::span<const double> x,
                     std::span<double> y) const {
    MSGFEM_REQUIRE(rows.size() == y.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      int r = rows[k];
      double s = 0.0;
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p) s += val_[p] * x[col_[p]];
      y[k] = s;
    }
  }

  /// A(rows, cols) with indices renumbered by position. Index maps must be
  /// duplicate-free; `cols` may cover only part of the sparsity.
  SparseMatrix submatrix(std::span<const int> rows, std::span<const int> cols) const {
    std::vector<int> colmap(cols_, -1);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      MSGFEM_REQUIRE(colmap[cols[j]] == -1);
      colmap[cols[j]] = static_cast<int>(j);
    }
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      int r = rows[i];
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p) {
        int cj = colmap[col_[p]];
        if (cj >= 0) t.push_back({static_cast<int>(i), cj, val_[p]});
      }
    }
    return from_triplets(static_cast<int>(rows.size()), static_cast<int>(cols.size()),
                         std::move(t));
  }

  SparseMatrix transposed() const {
    std::vector<Triplet> t;
    t.reserve(val_.size());
    for (int r = 0; r < rows_; ++r)
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p)
        t.push_back({col_[p], r, val_[p]});
    return from_triplets(cols_, rows_, std::move(t));
  }

  double symmetry_defect() const {
    double d = 0.0;
    SparseMatrix at = transposed();
    for (int r = 0; r < rows_; ++r)
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p)
        d = std::max(d, std::abs(val_[p] - at.coeff(col_[p], r)));
    return d;
  }

  /// MatrixMarket coordinate output (1-based indices), row-major order.
  void write_matrix_market(std::ostream& os) const {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << rows_ << " " << cols_ << " " << nnz() << "\n";
    std::streamsize old = os.precision(17);
    for (int r = 0; r < rows_; ++r)
      for (std::int64_t p = ptr_[r]; p < ptr_[r + 1]; ++p)
        os << r + 1 << " " << col_[p] + 1 << " " << val_[p] << "\n";
    os.precision(old);
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> ptr_;
  std::vector<int> col_;
  std::vector<double> val_;
};

}  // namespace msgfem
