#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>
#include <vector>

#include "msgfem/cholesky.hpp"
#include "msgfem/decomposition.hpp"
#include "msgfem/dense.hpp"
#include "msgfem/eig.hpp"
#include "msgfem/errors.hpp"
#include "msgfem/fem.hpp"
#include "msgfem/ordering.hpp"
#include "msgfem/sparse.hpp"

namespace msgfem {

namespace detail {

/// Dense product S * X for CSR S.
inline DenseMatrix sp_mul_dense(const SparseMatrix& s, const DenseMatrix& x) {
  MSGFEM_REQUIRE(s.cols() == x.rows());
  DenseMatrix y(s.rows(), x.cols());
  for (int r = 0; r < s.rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_vals(r);
    double* yr = y.row(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double* xr = x.row(cols[p]);
      const double v = vals[p];
      for (int j = 0; j < x.cols(); ++j) yr[j] += v * xr[j];
    }
  }
  return y;
}

inline DenseMatrix densify(const SparseMatrix& s) {
  DenseMatrix d(s.rows(), s.cols());
  for (int r = 0; r < s.rows(); ++r) {
    auto cols = s.row_cols(r);
    auto vals = s.row_vals(r);
    for (std::size_t p = 0; p < cols.size(); ++p) d.row(r)[cols[p]] = vals[p];
  }
  return d;
}

/// Local blocks of one subdomain problem.  The interior-row blocks coincide
/// with the corresponding global submatrices because every triangle incident
/// to an interior dof lies inside omega_star; only the interface-interface
/// block needs a local assembly restricted to omega_star.
struct LocalSystem {
  SparseMatrix a_ii;      ///< interior x interior
  SparseMatrix a_ig;      ///< interior x interface
  SparseMatrix a_gi;      ///< interface x interior
  SparseMatrix a_gg;      ///< interface x interface, assembled on omega_star
  Vector rhs_interior;    ///< global right side restricted to interior dofs
  std::shared_ptr<SparseCholesky> factor;  ///< factor of a_ii
};

inline LocalSystem build_local_system(const Mesh& mesh, const DofMap& dofs,
                                      const Coefficients& coeffs, const SparseMatrix& a,
                                      const Vector& rhs, const Subdomain& sub) {
  LocalSystem ls;
  ls.a_ii = a.submatrix(sub.interior_dofs, sub.interior_dofs);
  ls.a_ig = a.submatrix(sub.interior_dofs, sub.interface_dofs);
  ls.a_gi = a.submatrix(sub.interface_dofs, sub.interior_dofs);
  std::vector<int> edge_to_local(mesh.n_edges(), -1);
  for (std::size_t j = 0; j < sub.interface_dofs.size(); ++j)
    edge_to_local[dofs.dof_to_edge[sub.interface_dofs[j]]] = static_cast<int>(j);
  ls.a_gg = assemble_matrix(mesh, coeffs, sub.omega_star, edge_to_local,
                            static_cast<int>(sub.interface_dofs.size()));
  ls.rhs_interior.resize(sub.interior_dofs.size());
  for (std::size_t i = 0; i < sub.interior_dofs.size(); ++i)
    ls.rhs_interior[i] = rhs[sub.interior_dofs[i]];
  const int n = static_cast<int>(sub.interior_dofs.size());
  Vector mx(n), my(n);
  for (int i = 0; i < n; ++i) {
    auto c = mesh.edge_midpoint(dofs.dof_to_edge[sub.interior_dofs[i]]);
    mx[i] = c[0];
    my[i] = c[1];
  }
  ls.factor = std::make_shared<SparseCholesky>(ls.a_ii, ordering_dissect(ls.a_ii, mx, my));
  return ls;
}

/// X = A_II^{-1} A_IG; the discrete harmonic extension of interface data g is
/// [g on the interface, -X g on the interior].
inline DenseMatrix extension_matrix(const LocalSystem& ls) {
  DenseMatrix x = densify(ls.a_ig);
  ls.factor->solve_block(x);
  return x;
}

/// Interface Schur complement S = A_GG - A_GI X; g^T S g is the omega_star
/// energy of the harmonic extension of g.
inline DenseMatrix schur_complement(const LocalSystem& ls, const DenseMatrix& x) {
  DenseMatrix s = densify(ls.a_gg);
  DenseMatrix corr = sp_mul_dense(ls.a_gi, x);
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) s.row(i)[j] -= corr.row(i)[j];
  symmetrize(s);
  return s;
}

/// Rows over omega dofs of the weighted extension operator: row k of the
/// returned matrix is pou_k times the value of the harmonic extension at
/// omega dof k.  Weighted dofs are always interior, so only -X rows appear.
inline DenseMatrix weighted_extension(const Subdomain& sub, const DenseMatrix& x) {
  DenseMatrix g(static_cast<int>(sub.omega_dofs.size()), x.cols());
  for (std::size_t k = 0; k < sub.omega_dofs.size(); ++k) {
    if (sub.pou[k] == 0.0) continue;
    MSGFEM_REQUIRE(sub.omega_to_interior[k] >= 0);
    const double* xr = x.row(sub.omega_to_interior[k]);
    double* gr = g.row(static_cast<int>(k));
    for (int j = 0; j < x.cols(); ++j) gr[j] = -sub.pou[k] * xr[j];
  }
  return g;
}

/// B = G^T A_omega G, the omega-energy Gram matrix of the weighted harmonic
/// extensions.  Rows of the global matrix may include couplings through
/// triangles outside omega, but those rows carry zero weight.
inline DenseMatrix pou_energy_gram(const SparseMatrix& a, const Subdomain& sub,
                                   const DenseMatrix& g) {
  SparseMatrix a_omega = a.submatrix(sub.omega_dofs, sub.omega_dofs);
  DenseMatrix ag = sp_mul_dense(a_omega, g);
  DenseMatrix b = at_b(g, ag);
  symmetrize(b);
  return b;
}

}  // namespace detail

/// @brief Spectral reduction of one subdomain.
///
/// Holds the retained generalized eigenpairs of the local problem
/// B g = lambda S g (lambda descending), the coarse block whose columns are
/// the weighted harmonic extensions of the eigenvectors (rows aligned with
/// omega_dofs), the raw local particular solution on the interior dofs, and
/// the cached interior factor shared with the preconditioner.
struct SubdomainReduction {
  Vector eigenvalues;
  DenseMatrix coarse;              ///< |omega_dofs| x p
  DenseMatrix interface_vectors;   ///< |interface| x p eigenvectors g_j
  Vector particular_interior;      ///< raw solution of A_II u = rhs_I
  std::shared_ptr<SparseCholesky> interior_factor;
  int interface_size = 0;
};

inline SubdomainReduction build_subdomain_reduction(const Mesh& mesh, const DofMap& dofs,
                                                    const Coefficients& coeffs,
                                                    const SparseMatrix& a, const Vector& rhs,
                                                    const Subdomain& sub, int n_eig) {
  MSGFEM_REQUIRE(n_eig >= 0);
  SubdomainReduction red;
  red.interface_size = static_cast<int>(sub.interface_dofs.size());
  detail::LocalSystem ls = detail::build_local_system(mesh, dofs, coeffs, a, rhs, sub);
  red.interior_factor = ls.factor;
  red.particular_interior = ls.factor->solve_copy(ls.rhs_interior);
  const int p = std::min(n_eig, red.interface_size);
  if (red.interface_size == 0) {
    red.coarse = DenseMatrix(static_cast<int>(sub.omega_dofs.size()), 0);
    return red;
  }
  DenseMatrix x = detail::extension_matrix(ls);
  DenseMatrix s = detail::schur_complement(ls, x);
  DenseMatrix g = detail::weighted_extension(sub, x);
  DenseMatrix b = detail::pou_energy_gram(a, sub, g);
  GenEig eig = gen_sym_eig(b, s, p);
  red.eigenvalues = std::move(eig.values);
  red.interface_vectors = std::move(eig.vectors);
  // coarse columns: weighted extensions of the eigenvectors
  red.coarse = DenseMatrix(g.rows(), p);
  for (int r = 0; r < g.rows(); ++r) {
    if (sub.pou[r] == 0.0) continue;
    const double* gr = g.row(r);
    double* cr = red.coarse.row(r);
    for (int c = 0; c < g.cols(); ++c) {
      const double gv = gr[c];
      const double* vr = red.interface_vectors.row(c);
      for (int j = 0; j < p; ++j) cr[j] += gv * vr[j];
    }
  }
  return red;
}

/// @brief Full spectral reduction: all subdomains plus the coarse Gram matrix
/// at the maximal eigenpair count, from which any smaller coarse space is a
/// principal subblock.
struct MsgfemReduction {
  std::vector<SubdomainReduction> locals;
  std::vector<int> full_offset;  ///< column offset per subdomain, plus total
  DenseMatrix a_h_full;
  int k0 = 1;
  int k0_star = 1;
};

inline MsgfemReduction build_reduction(const Mesh& mesh, const DofMap& dofs,
                                       const Coefficients& coeffs, const SparseMatrix& a,
                                       const Vector& rhs, const Decomposition& decomp,
                                       int n_eig, int workers = 1) {
  MSGFEM_REQUIRE(workers >= 1);
  MsgfemReduction red;
  red.k0 = decomp.k0;
  red.k0_star = decomp.k0_star;
  const int n_subs = static_cast<int>(decomp.subdomains.size());
  red.locals.resize(n_subs);
  red.full_offset.assign(n_subs + 1, 0);
  // Each subdomain reduction is a pure function of shared read-only inputs
  // merged by index, so the result does not depend on the worker count.
  auto run_range = [&](int first, int stride) {
    for (int i = first; i < n_subs; i += stride)
      red.locals[i] =
          build_subdomain_reduction(mesh, dofs, coeffs, a, rhs, decomp.subdomains[i], n_eig);
  };
  if (workers == 1 || n_subs <= 1) {
    run_range(0, 1);
  } else {
    const int pool_size = std::min(workers, n_subs);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> failures(pool_size);
    for (int w = 0; w < pool_size; ++w)
      pool.emplace_back([&, w] {
        try {
          run_range(w, pool_size);
        } catch (...) {
          failures[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);
  }
  for (int i = 0; i < n_subs; ++i)
    red.full_offset[i + 1] =
        red.full_offset[i] + static_cast<int>(red.locals[i].eigenvalues.size());

  // coarse Gram matrix, one block per pair of overlapping subdomains
  const int dim = red.full_offset[n_subs];
  red.a_h_full = DenseMatrix(dim, dim);
  std::vector<char> mark(a.rows(), 0);
  for (int i = 0; i < n_subs; ++i) {
    const auto& si = decomp.subdomains[i];
    const int pi = static_cast<int>(red.locals[i].eigenvalues.size());
    if (pi == 0) continue;
    for (int d : si.omega_dofs) mark[d] = 1;
    for (int j = i; j < n_subs; ++j) {
      const auto& sj = decomp.subdomains[j];
      const int pj = static_cast<int>(red.locals[j].eigenvalues.size());
      if (pj == 0) continue;
      bool overlaps = false;
      for (int d : sj.omega_dofs)
        if (mark[d]) {
          overlaps = true;
          break;
        }
      if (!overlaps) continue;
      SparseMatrix a_ij = a.submatrix(si.omega_dofs, sj.omega_dofs);
      DenseMatrix y = detail::sp_mul_dense(a_ij, red.locals[j].coarse);
      DenseMatrix block = at_b(red.locals[i].coarse, y);
      for (int r = 0; r < pi; ++r)
        for (int c = 0; c < pj; ++c) {
          red.a_h_full.row(red.full_offset[i] + r)[red.full_offset[j] + c] = block.row(r)[c];
          red.a_h_full.row(red.full_offset[j] + c)[red.full_offset[i] + r] = block.row(r)[c];
        }
    }
    for (int d : si.omega_dofs) mark[d] = 0;
  }
  symmetrize(red.a_h_full);
  return red;
}

/// @brief A selected coarse space: per-subdomain retained counts, the
/// factorized coarse matrix, and the contraction number Lambda.
struct CoarseSpace {
  std::vector<int> n_loc;    ///< retained eigenvectors per subdomain
  std::vector<int> offset;   ///< column offsets in the selected basis, plus total
  std::vector<int> columns;  ///< selected column indices into a_h_full
  int dim = 0;
  std::shared_ptr<PivotedCholesky> factor;
  int dropped = 0;
  double max_lambda_next = 0.0;
  double lambda_bound = 0.0;  ///< sqrt(k0 k0* max lambda_{n+1})
};

namespace detail {

inline CoarseSpace finish_selection(const MsgfemReduction& red, std::vector<int> n_loc) {
  const int n_subs = static_cast<int>(red.locals.size());
  CoarseSpace cs;
  cs.n_loc = std::move(n_loc);
  cs.offset.assign(n_subs + 1, 0);
  for (int i = 0; i < n_subs; ++i) {
    const auto& loc = red.locals[i];
    const int p = static_cast<int>(loc.eigenvalues.size());
    MSGFEM_REQUIRE(cs.n_loc[i] <= p);
    if (cs.n_loc[i] < p)
      cs.max_lambda_next = std::max(cs.max_lambda_next, loc.eigenvalues[cs.n_loc[i]]);
    else if (p < loc.interface_size)
      throw ConfigError("coarse space: n_loc needs one spare eigenpair to bound Lambda");
    // n_loc = interface size: the local space is complete and the next
    // eigenvalue is zero, no contribution
    cs.offset[i + 1] = cs.offset[i] + cs.n_loc[i];
    for (int j = 0; j < cs.n_loc[i]; ++j) cs.columns.push_back(red.full_offset[i] + j);
  }
  cs.dim = cs.offset[n_subs];
  cs.max_lambda_next = std::max(cs.max_lambda_next, 0.0);
  cs.lambda_bound = std::sqrt(red.k0 * red.k0_star * cs.max_lambda_next);
  DenseMatrix a_h(cs.dim, cs.dim);
  for (int r = 0; r < cs.dim; ++r)
    for (int c = 0; c < cs.dim; ++c)
      a_h.row(r)[c] = red.a_h_full.row(cs.columns[r])[cs.columns[c]];
  cs.factor = std::make_shared<PivotedCholesky>(a_h, 1e-12);
  cs.dropped = cs.factor->dropped();
  return cs;
}

}  // namespace detail

/// Fixed-count selection: keep n_loc eigenvectors per subdomain (clamped to
/// the interface size).
inline CoarseSpace select_coarse_space(const MsgfemReduction& red, int n_loc) {
  MSGFEM_REQUIRE(n_loc >= 0);
  std::vector<int> counts(red.locals.size());
  for (std::size_t i = 0; i < red.locals.size(); ++i)
    counts[i] = std::min(n_loc, static_cast<int>(red.locals[i].eigenvalues.size()));
  return detail::finish_selection(red, std::move(counts));
}

/// Tolerance selection: keep eigenvectors with sqrt(lambda) >= tol.
inline CoarseSpace select_coarse_space_tol(const MsgfemReduction& red, double tol) {
  MSGFEM_REQUIRE(tol > 0.0);
  std::vector<int> counts(red.locals.size());
  for (std::size_t i = 0; i < red.locals.size(); ++i) {
    const Vector& ev = red.locals[i].eigenvalues;
    int n = 0;
    while (n < static_cast<int>(ev.size()) && std::sqrt(std::max(ev[n], 0.0)) >= tol) ++n;
    counts[i] = n;
  }
  return detail::finish_selection(red, std::move(counts));
}

/// Restriction R_H r: coefficients of r against the selected coarse columns.
inline Vector coarse_restrict(const Decomposition& decomp, const MsgfemReduction& red,
                              const CoarseSpace& cs, std::span<const double> r) {
  Vector y(cs.dim, 0.0);
  for (std::size_t i = 0; i < red.locals.size(); ++i) {
    const auto& sub = decomp.subdomains[i];
    const DenseMatrix& c = red.locals[i].coarse;
    const int n = cs.n_loc[i];
    if (n == 0) continue;
    double* yi = y.data() + cs.offset[i];
    for (std::size_t k = 0; k < sub.omega_dofs.size(); ++k) {
      const double rv = r[sub.omega_dofs[k]];
      if (rv == 0.0) continue;
      const double* cr = c.row(static_cast<int>(k));
      for (int j = 0; j < n; ++j) yi[j] += cr[j] * rv;
    }
  }
  return y;
}

/// Prolongation R_H^T c added into z.
inline void coarse_prolong(const Decomposition& decomp, const MsgfemReduction& red,
                           const CoarseSpace& cs, std::span<const double> c,
                           std::span<double> z) {
  for (std::size_t i = 0; i < red.locals.size(); ++i) {
    const auto& sub = decomp.subdomains[i];
    const DenseMatrix& cm = red.locals[i].coarse;
    const int n = cs.n_loc[i];
    if (n == 0) continue;
    const double* ci = c.data() + cs.offset[i];
    for (std::size_t k = 0; k < sub.omega_dofs.size(); ++k) {
      const double* cr = cm.row(static_cast<int>(k));
      double acc = 0.0;
      for (int j = 0; j < n; ++j) acc += cr[j] * ci[j];
      z[sub.omega_dofs[k]] += acc;
    }
  }
}

/// Global particular function: the weighted sum of local interior solves.
inline Vector particular_field(const Decomposition& decomp, const MsgfemReduction& red,
                               int n_free) {
  Vector u(n_free, 0.0);
  for (std::size_t i = 0; i < red.locals.size(); ++i) {
    const auto& sub = decomp.subdomains[i];
    const Vector& up = red.locals[i].particular_interior;
    for (std::size_t k = 0; k < sub.omega_dofs.size(); ++k) {
      if (sub.pou[k] == 0.0) continue;
      u[sub.omega_dofs[k]] += sub.pou[k] * up[sub.omega_to_interior[k]];
    }
  }
  return u;
}

/// @brief One-shot multiscale approximation u^G = u^p + u^s.
///
/// u^p is the weighted sum of local particular solutions; u^s solves the
/// Galerkin problem on the coarse space with right side rhs - A u^p, making
/// u^G the energy projection of the fine solution onto the affine space.
inline Vector msgfem_approximate(const Decomposition& decomp, const MsgfemReduction& red,
                                 const CoarseSpace& cs, const SparseMatrix& a,
                                 const Vector& rhs) {
  Vector u = particular_field(decomp, red, a.rows());
  Vector r = a.multiply(u);
  for (int i = 0; i < a.rows(); ++i) r[i] = rhs[i] - r[i];
  if (cs.dim > 0) {
    Vector y = coarse_restrict(decomp, red, cs, r);
    Vector c = cs.factor->solve_copy(y);
    coarse_prolong(decomp, red, cs, c, u);
  }
  return u;
}

/// Length of the near-flat leading plateau of a descending eigenvalue list:
/// the first split point p in [1, 8] where lambda_p / lambda_{p+1} reaches the
/// drop ratio marks the end of the plateau ("decay begins"); 0 when no such
/// drop occurs.  A factor-2 drop is the default boundary between "near-flat"
/// and "decaying": consecutive plateau values sit well inside it, while the
/// onset of the exponential tail exceeds it.
inline int flat_prefix_length(const Vector& ev, double min_ratio = 2.0) {
  const int limit = std::min<int>(8, static_cast<int>(ev.size()) - 1);
  for (int p = 1; p <= limit; ++p) {
    const double hi = ev[p - 1], lo = ev[p];
    if (hi <= 0.0) break;
    const double ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (ratio >= min_ratio) return p;
  }
  return 0;
}

}  // namespace msgfem
