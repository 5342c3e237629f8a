#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "msgfem/cholesky.hpp"
#include "msgfem/errors.hpp"
#include "msgfem/msgfem.hpp"

namespace msgfem {

/// Direct sparse solve with geometric nested-dissection ordering; the
/// coordinate pair locates each unknown (edge midpoints for the curl system).
inline Vector direct_solve(const SparseMatrix& a, const Vector& rhs, const Vector& x,
                           const Vector& y) {
  SparseCholesky chol(a, ordering_dissect(a, x, y));
  return chol.solve_copy(rhs);
}

/// @brief Two-level restricted additive Schwarz preconditioner.
///
/// One-level part: weighted local interior solves,
/// z1 = sum_j R_j^T Xi_j Atilde_j^{-1} Rtilde_j r, reusing the interior
/// factors cached in the reduction.  Two-level part (adapted deflation):
/// z = z1 + R_H^T A_H^{-1} R_H (r - A z1) over the spectral coarse space.
/// With an empty coarse space the two parts coincide.
struct Preconditioner {
  const SparseMatrix* a = nullptr;
  const Decomposition* decomp = nullptr;
  const MsgfemReduction* red = nullptr;
  const CoarseSpace* coarse = nullptr;  ///< null or dim 0: one-level mode

  bool two_level() const { return coarse != nullptr && coarse->dim > 0; }

  Vector apply(std::span<const double> r) const {
    MSGFEM_REQUIRE(static_cast<int>(r.size()) == a->rows());
    Vector z(a->rows(), 0.0);
    Vector local, solved;
    for (std::size_t j = 0; j < red->locals.size(); ++j) {
      const Subdomain& sub = decomp->subdomains[j];
      local.resize(sub.interior_dofs.size());
      for (std::size_t i = 0; i < sub.interior_dofs.size(); ++i)
        local[i] = r[sub.interior_dofs[i]];
      solved = red->locals[j].interior_factor->solve_copy(local);
      for (std::size_t k = 0; k < sub.omega_dofs.size(); ++k) {
        if (sub.pou[k] == 0.0) continue;
        z[sub.omega_dofs[k]] += sub.pou[k] * solved[sub.omega_to_interior[k]];
      }
    }
    if (two_level()) {
      Vector d = a->multiply(z);
      for (int i = 0; i < a->rows(); ++i) d[i] = r[i] - d[i];
      Vector y = coarse_restrict(*decomp, *red, *coarse, d);
      Vector c = coarse->factor->solve_copy(y);
      coarse_prolong(*decomp, *red, *coarse, c, z);
    }
    return z;
  }
};

/// @brief Convergence history of an iterative solve.
///
/// residual_norms holds the preconditioned residual norm per iteration
/// (entry 0 is the initial residual, so the length is iterations + 1);
/// iter_seconds parallels it with the cumulative wall time at each entry,
/// and energy_errors parallels it when a reference solution was supplied.
struct IterationLog {
  std::vector<double> residual_norms;
  std::vector<double> energy_errors;
  std::vector<double> iter_seconds;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
};

/// Divergence signal that keeps the history collected so far, so a driver
/// can persist the log before reporting the failure.
struct RichardsonDivergence : DivergenceError {
  IterationLog log;
  RichardsonDivergence(const std::string& what, IterationLog l)
      : DivergenceError(what), log(std::move(l)) {}
};

enum class InnerProduct { l2, energy };

namespace detail {

class StopWatch {
 public:
  StopWatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline double energy_error(const SparseMatrix& a, std::span<const double> u,
                           std::span<const double> ref) {
  Vector e(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) e[i] = u[i] - ref[i];
  return std::sqrt(std::max(0.0, dot(e, a.multiply(e))));
}

}  // namespace detail

/// @brief Preconditioned Richardson iteration u <- u + B(f - A u).
///
/// Stops when the energy norm of the preconditioned residual has dropped by
/// the relative tolerance; aborts with DivergenceError after five consecutive
/// growth steps (the contraction theory needs Lambda < 1, so sustained growth
/// means the configuration is outside it).  When a reference solution is
/// given the energy error per iterate is logged.
inline std::pair<Vector, IterationLog> richardson(const Preconditioner& pre, const Vector& rhs,
                                                  const Vector& u0, int max_iter, double tol,
                                                  const Vector* reference = nullptr) {
  detail::StopWatch watch;
  const SparseMatrix& a = *pre.a;
  IterationLog log;
  Vector u = u0;
  auto residual = [&] {
    Vector r = a.multiply(u);
    for (int i = 0; i < a.rows(); ++i) r[i] = rhs[i] - r[i];
    return r;
  };
  Vector z = pre.apply(residual());
  double norm = std::sqrt(std::max(0.0, dot(z, a.multiply(z))));
  const double norm0 = norm;
  log.residual_norms.push_back(norm);
  log.iter_seconds.push_back(watch.seconds());
  if (reference) log.energy_errors.push_back(detail::energy_error(a, u, *reference));
  int growth_run = 0;
  while (norm > tol * norm0 && log.iterations < max_iter) {
    for (int i = 0; i < a.rows(); ++i) u[i] += z[i];
    ++log.iterations;
    z = pre.apply(residual());
    const double next = std::sqrt(std::max(0.0, dot(z, a.multiply(z))));
    log.residual_norms.push_back(next);
    log.iter_seconds.push_back(watch.seconds());
    if (reference) log.energy_errors.push_back(detail::energy_error(a, u, *reference));
    growth_run = next > norm ? growth_run + 1 : 0;
    if (growth_run >= 5) {
      log.seconds = watch.seconds();
      throw RichardsonDivergence(
          "richardson: residual grew for five consecutive steps at iteration " +
              std::to_string(log.iterations),
          std::move(log));
    }
    norm = next;
  }
  log.converged = norm <= tol * norm0;
  log.seconds = watch.seconds();
  return {std::move(u), std::move(log)};
}

/// @brief Full GMRES on the left-preconditioned system BAu = Bf.
///
/// Modified Gram-Schmidt with one reorthogonalization pass; inner product
/// either Euclidean or the energy product <v,w> = v^T A w (in which case the
/// A-images of the basis are cached so each iteration costs one operator
/// apply and one matrix-vector product).  The logged residuals are the
/// Givens-recurrence values of |B(f - A u_j)| in the chosen inner product.
inline std::pair<Vector, IterationLog> gmres(const Preconditioner& pre, const Vector& rhs,
                                             double tol = 1e-6, int max_iter = 200,
                                             InnerProduct inner = InnerProduct::energy,
                                             const Vector* reference = nullptr) {
  detail::StopWatch watch;
  const SparseMatrix& a = *pre.a;
  const int n = a.rows();
  max_iter = std::min(max_iter, n);
  IterationLog log;

  auto ip = [&](const Vector& av, const Vector& v, const Vector& w) {
    return inner == InnerProduct::energy ? dot(av, w) : dot(v, w);
  };

  std::vector<Vector> v, av;  // Krylov basis and its A-images
  Vector b = pre.apply(rhs);
  Vector ab = a.multiply(b);
  const double beta = std::sqrt(std::max(0.0, ip(ab, b, b)));
  log.residual_norms.push_back(beta);
  log.iter_seconds.push_back(watch.seconds());
  if (beta == 0.0) {
    log.converged = true;
    log.seconds = watch.seconds();
    return {Vector(n, 0.0), std::move(log)};
  }
  v.push_back(b);
  av.push_back(ab);
  for (double& x : v[0]) x /= beta;
  for (double& x : av[0]) x /= beta;

  std::vector<Vector> h_cols;     // Hessenberg columns, length j+2 each
  std::vector<double> cs, sn, g;  // Givens rotations and rotated rhs
  g.push_back(beta);

  auto reconstruct = [&](int k) {
    // least-squares solution from the first k columns
    Vector y(g.begin(), g.begin() + k);
    for (int i = k - 1; i >= 0; --i) {
      for (int j = i + 1; j < k; ++j) y[i] -= h_cols[j][i] * y[j];
      y[i] /= h_cols[i][i];
    }
    Vector u(n, 0.0);
    for (int j = 0; j < k; ++j) axpy(y[j], v[j], u);
    return u;
  };

  bool done = false;
  for (int j = 0; j < max_iter && !done; ++j) {
    Vector w = pre.apply(av[j]);
    Vector aw = a.multiply(w);
    const double wscale = std::sqrt(std::max(0.0, ip(aw, w, w)));
    Vector h(j + 2, 0.0);
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i <= j; ++i) {
        const double c = ip(av[i], v[i], w);
        axpy(-c, v[i], w);
        axpy(-c, av[i], aw);
        h[i] += c;
      }
    double hj1 = std::sqrt(std::max(0.0, ip(aw, w, w)));
    const bool breakdown = hj1 <= 1e-13 * wscale || j + 1 == n;
    h[j + 1] = hj1;
    if (!breakdown) {
      v.push_back(w);
      av.push_back(aw);
      for (double& x : v.back()) x /= hj1;
      for (double& x : av.back()) x /= hj1;
    }
    // apply previous rotations, then the new one
    for (int i = 0; i < j; ++i) {
      const double t = cs[i] * h[i] + sn[i] * h[i + 1];
      h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
      h[i] = t;
    }
    const double denom = std::hypot(h[j], h[j + 1]);
    MSGFEM_REQUIRE(denom > 0.0);
    cs.push_back(h[j] / denom);
    sn.push_back(h[j + 1] / denom);
    h[j] = denom;
    h[j + 1] = 0.0;
    g.push_back(-sn[j] * g[j]);
    g[j] *= cs[j];
    h_cols.push_back(std::move(h));
    ++log.iterations;
    const double res = std::abs(g[j + 1]);
    log.residual_norms.push_back(res);
    log.iter_seconds.push_back(watch.seconds());
    if (reference) {
      Vector u = reconstruct(j + 1);
      if (log.energy_errors.empty())
        log.energy_errors.push_back(detail::energy_error(a, Vector(n, 0.0), *reference));
      log.energy_errors.push_back(detail::energy_error(a, u, *reference));
    }
    if (res <= tol * beta || breakdown) {
      log.converged = res <= tol * beta || breakdown;
      done = true;
    }
  }
  Vector u = reconstruct(log.iterations);
  log.seconds = watch.seconds();
  return {std::move(u), std::move(log)};
}

}  // namespace msgfem
