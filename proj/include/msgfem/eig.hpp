#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "msgfem/dense.hpp"
#include "msgfem/errors.hpp"

namespace msgfem {

namespace detail {

// Householder reduction of a symmetric matrix to tridiagonal form with
// accumulated transform: on exit z holds Q with A = Q T Qᵀ, d the diagonal
// of T and e its subdiagonal (e[0] = 0).
inline void tridiagonalize(DenseMatrix& z, Vector& d, Vector& e) {
  const int n = z.rows();
  d.assign(n, 0.0);
  e.assign(n, 0.0);
  for (int i = n - 1; i >= 1; --i) {
    const int l = i - 1;
    double h = 0.0, scale = 0.0;
    if (l > 0) {
      for (int k = 0; k <= l; ++k) scale += std::abs(z(i, k));
      if (scale == 0.0) {
        e[i] = z(i, l);
      } else {
        for (int k = 0; k <= l; ++k) {
          z(i, k) /= scale;
          h += z(i, k) * z(i, k);
        }
        double f = z(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        z(i, l) = f - g;
        f = 0.0;
        for (int j = 0; j <= l; ++j) {
          z(j, i) = z(i, j) / h;
          g = 0.0;
          for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
          for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
          e[j] = g / h;
          f += e[j] * z(i, j);
        }
        const double hh = f / (h + h);
        for (int j = 0; j <= l; ++j) {
          f = z(i, j);
          g = e[j] - hh * f;
          e[j] = g;
          for (int k = 0; k <= j; ++k) z(j, k) -= f * e[k] + g * z(i, k);
        }
      }
    } else {
      e[i] = z(i, l);
    }
    d[i] = h;
  }
  d[0] = 0.0;
  e[0] = 0.0;
  for (int i = 0; i < n; ++i) {
    if (d[i] != 0.0) {
      for (int j = 0; j < i; ++j) {
        double g = 0.0;
        for (int k = 0; k < i; ++k) g += z(i, k) * z(k, j);
        for (int k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
      }
    }
    d[i] = z(i, i);
    z(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      z(j, i) = 0.0;
      z(i, j) = 0.0;
    }
  }
}

// Implicit-shift QL sweeps on the tridiagonal (d, e), rotating the columns of
// z along. Deterministic; throws after 50 sweeps on one eigenvalue.
inline void ql_implicit(Vector& d, Vector& e, DenseMatrix& z) {
  const int n = static_cast<int>(d.size());
  const double eps = std::numeric_limits<double>::epsilon();
  for (int i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;
  // Absolute deflation floor: graded spectra can drive neighboring diagonals
  // to roundoff, where the relative test below never fires; an off-diagonal
  // at machine precision of the overall scale is converged regardless.
  double anorm = 0.0;
  for (int i = 0; i < n; ++i) anorm = std::max(anorm, std::abs(d[i]) + std::abs(e[i]));
  const double abs_floor = eps * anorm;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd || std::abs(e[m]) <= abs_floor) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw InternalError("symmetric eigensolver: QL sweep limit reached");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i = m - 1;
        bool underflow = false;
        for (; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (int k = 0; k < n; ++k) {
            f = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * f;
            z(k, i) = c * z(k, i) - s * f;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace detail

/// Full eigendecomposition of a symmetric matrix; eigenvalues ascending,
/// eigenvector j in column j of `vectors`.
struct SymEig {
  Vector values;
  DenseMatrix vectors;
};

inline SymEig sym_eig(DenseMatrix a) {
  MSGFEM_REQUIRE(a.rows() == a.cols());
  const int n = a.rows();
  SymEig out;
  if (n == 0) return out;
  Vector d, e;
  detail::tridiagonalize(a, d, e);
  detail::ql_implicit(d, e, a);
  // Ascending selection sort, carrying eigenvector columns along.
  for (int i = 0; i < n - 1; ++i) {
    int k = i;
    for (int j = i + 1; j < n; ++j)
      if (d[j] < d[k]) k = j;
    if (k != i) {
      std::swap(d[i], d[k]);
      for (int r = 0; r < n; ++r) std::swap(a(r, i), a(r, k));
    }
  }
  out.values = std::move(d);
  out.vectors = std::move(a);
  return out;
}

/// The k dominant pairs of B g = λ S g (B symmetric positive semidefinite,
/// S symmetric positive definite), eigenvalues descending and eigenvectors
/// S-orthonormal. Solved by the LLᵀ reduction S = LLᵀ, C = L⁻¹BL⁻ᵀ.
struct GenEig {
  Vector values;        // descending, size k
  DenseMatrix vectors;  // n×k, column j pairs with values[j]
};

inline GenEig gen_sym_eig(const DenseMatrix& b, const DenseMatrix& s, int k) {
  const int n = b.rows();
  MSGFEM_REQUIRE(b.cols() == n && s.rows() == n && s.cols() == n);
  MSGFEM_REQUIRE(k >= 0 && k <= n);
  GenEig out;
  out.vectors = DenseMatrix(n, k);
  if (k == 0) return out;
  DenseCholesky chol(s, "gen_sym_eig");
  // C = L⁻¹ B L⁻ᵀ, built column-wise then row-wise so it stays row-major.
  DenseMatrix c(n, n);
  Vector col(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) col[i] = b(i, j);
    chol.solve_lower(col);
    for (int i = 0; i < n; ++i) c(i, j) = col[i];
  }
  for (int i = 0; i < n; ++i)
    chol.solve_lower({c.row(i), static_cast<std::size_t>(n)});
  symmetrize(c);
  SymEig se = sym_eig(std::move(c));
  out.values.resize(k);
  Vector x(n);
  for (int j = 0; j < k; ++j) {
    const int src = n - 1 - j;  // descending
    out.values[j] = se.values[src];
    for (int i = 0; i < n; ++i) x[i] = se.vectors(i, src);
    chol.solve_upper(x);  // back-transform; keeps S-orthonormality
    int am = 0;
    for (int i = 1; i < n; ++i)
      if (std::abs(x[i]) > std::abs(x[am])) am = i;
    const double sign = x[am] < 0.0 ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i) out.vectors(i, j) = sign * x[i];
  }
  return out;
}

}  // namespace msgfem
