#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "msgfem/cholesky.hpp"
#include "msgfem/mesh.hpp"
#include "msgfem/sparse.hpp"

namespace msgfem {

/// Piecewise-constant material data per triangle: nu weights the curl-curl
/// term, kappa the mass term. Both must stay strictly positive.
struct Coefficients {
  Vector nu, kappa;
};

/// Per-triangle constant source vector (fx, fy).
struct Source {
  Vector fx, fy;
};

using VectorField = std::function<std::array<double, 2>(double, double)>;

/// Free/constrained split of edge unknowns: boundary edges carry prescribed
/// tangential data, all other edges are degrees of freedom.
struct DofMap {
  std::vector<int> edge_to_dof;  // -1 when constrained
  std::vector<int> dof_to_edge;
  int n_free = 0;
};

/// Free unknowns are the edges not carrying an essential tangential
/// constraint; the caller chooses the constrained set.
inline DofMap make_dofmap(const Mesh& m, const std::vector<char>& essential_edge) {
  MSGFEM_REQUIRE(static_cast<int>(essential_edge.size()) == m.n_edges());
  DofMap d;
  d.edge_to_dof.assign(m.n_edges(), -1);
  for (int e = 0; e < m.n_edges(); ++e)
    if (!essential_edge[e]) {
      d.edge_to_dof[e] = d.n_free++;
      d.dof_to_edge.push_back(e);
    }
  return d;
}

inline DofMap make_dofmap(const Mesh& m) { return make_dofmap(m, m.edge_on_boundary); }

/// Flags for edges on the outer bounding rectangle of a structured mesh.
/// Hole perimeters stay unflagged, so a dofmap built from this set leaves
/// them as free unknowns (natural condition on interior hole walls).
inline std::vector<char> outer_boundary_edges(const Mesh& m) {
  const double x1 = m.x0 + m.nx * m.hx;
  const double y1 = m.y0 + m.ny * m.hy;
  std::vector<char> outer(m.n_edges(), 0);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (!m.edge_on_boundary[e]) continue;
    const auto [a, b] = m.edge[e];
    const bool vert = m.vx[a] == m.vx[b] && (m.vx[a] == m.x0 || m.vx[a] == x1);
    const bool horz = m.vy[a] == m.vy[b] && (m.vy[a] == m.y0 || m.vy[a] == y1);
    if (vert || horz) outer[e] = 1;
  }
  return outer;
}

namespace detail {

/// Lowest-order edge-element matrix on one triangle, rows/cols following the
/// triangle's three sides with their global orientation signs baked in. The
/// curl part is exact (elementwise-constant curls); the mass part uses the
/// 3-point edge-midpoint rule, exact for the quadratic integrand.
inline std::array<std::array<double, 3>, 3> element_matrix(const Mesh& m,
                                                           const Coefficients& c, int t) {
  const double a = m.area(t);
  const auto gl = m.grad_lambda(t);
  const auto& sg = m.tri_sign[t];

  std::array<std::array<double, 3>, 3> k{};
  // curl φ_k = sign_k / area for CCW triangles.
  const double cfac = c.nu[t] / a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) k[i][j] = cfac * sg[i] * sg[j];

  // Edge-midpoint quadrature: midpoint of side k has barycentric value 1/2 at
  // its endpoints and 0 opposite.
  static constexpr double lam[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  const double w = c.kappa[t] * a / 3.0;
  for (int q = 0; q < 3; ++q) {
    std::array<std::array<double, 2>, 3> phi;
    for (int e = 0; e < 3; ++e) {
      const int va = e, vb = (e + 1) % 3;
      for (int d = 0; d < 2; ++d)
        phi[e][d] = sg[e] * (lam[q][va] * gl[vb][d] - lam[q][vb] * gl[va][d]);
    }
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        k[i][j] += w * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
  }
  return k;
}

/// Element load for a constant source: edge functions integrate to
/// area·(∇λ_b − ∇λ_a)/3 with the orientation sign.
inline std::array<double, 3> element_load(const Mesh& m, double fx, double fy, int t) {
  const double a = m.area(t);
  const auto gl = m.grad_lambda(t);
  const auto& sg = m.tri_sign[t];
  std::array<double, 3> r{};
  for (int e = 0; e < 3; ++e) {
    const int va = e, vb = (e + 1) % 3;
    const double px = (gl[vb][0] - gl[va][0]) * a / 3.0;
    const double py = (gl[vb][1] - gl[va][1]) * a / 3.0;
    r[e] = sg[e] * (fx * px + fy * py);
  }
  return r;
}

}  // namespace detail

/**
 * @brief Assemble the edge-element matrix of ∫ ν curl·curl + ∫ κ u·v over a
 *        triangle subset, on a caller-chosen edge numbering.
 *
 * `edge_to_local` maps global edge ids to local indices (−1 drops the edge —
 * used for constrained edges in zero-trace subspaces). Deterministic: the
 * triplet stream follows the given triangle order.
 */
inline SparseMatrix assemble_matrix(const Mesh& m, const Coefficients& c,
                                    std::span<const int> tris,
                                    std::span<const int> edge_to_local, int n_local) {
  std::vector<Triplet> trip;
  trip.reserve(tris.size() * 9);
  for (int t : tris) {
    const auto k = detail::element_matrix(m, c, t);
    const auto& te = m.tri_edge[t];
    for (int i = 0; i < 3; ++i) {
      const int li = edge_to_local[te[i]];
      if (li < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int lj = edge_to_local[te[j]];
        if (lj >= 0) trip.push_back({li, lj, k[i][j]});
      }
    }
  }
  return SparseMatrix::from_triplets(n_local, n_local, std::move(trip));
}

/// Tangential boundary data: the prescribed line integral per boundary edge,
/// with respect to the edge's global (low→high) orientation.
using BoundaryValues = Vector;  // size n_edges, zero on free edges

/// Boundary data for a constant tangential trace g along the induced boundary
/// orientation (domain on the left): the incident triangle traverses its
/// boundary edges exactly in that orientation.
inline BoundaryValues boundary_constant_tangential(const Mesh& m, double g) {
  BoundaryValues b(m.n_edges(), 0.0);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (!m.edge_on_boundary[e]) continue;
    const int t = m.edge_tri[e][0];
    int s = 0;
    for (int k = 0; k < 3; ++k)
      if (m.tri_edge[t][k] == e) s = m.tri_sign[t][k];
    MSGFEM_REQUIRE(s != 0);
    b[e] = s * g * m.edge_length(e);
  }
  return b;
}

/// Boundary data interpolated from an exact field: 4-point Gauss line
/// quadrature of u·t along each boundary edge (global orientation).
inline BoundaryValues boundary_from_field(const Mesh& m, const VectorField& u) {
  static constexpr double gp[4] = {-0.8611363115940526, -0.3399810435848563,
                                   0.3399810435848563, 0.8611363115940526};
  static constexpr double gw[4] = {0.3478548451374538, 0.6521451548625461,
                                   0.6521451548625461, 0.3478548451374538};
  BoundaryValues b(m.n_edges(), 0.0);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (!m.edge_on_boundary[e]) continue;
    const int v0 = m.edge[e][0], v1 = m.edge[e][1];
    const double tx = m.vx[v1] - m.vx[v0], ty = m.vy[v1] - m.vy[v0];
    double s = 0.0;
    for (int q = 0; q < 4; ++q) {
      const double a = 0.5 * (1.0 + gp[q]);
      const auto val = u(m.vx[v0] + a * tx, m.vy[v0] + a * ty);
      s += 0.5 * gw[q] * (val[0] * tx + val[1] * ty);
    }
    b[e] = s;
  }
  return b;
}

/// Fully assembled constrained system: A on free unknowns, right-hand side
/// with the inhomogeneous tangential data lifted onto it.
struct System {
  SparseMatrix A;
  Vector rhs;
  DofMap dofs;
  BoundaryValues bc;  // per-edge prescribed values (zero on free edges)
};

inline System assemble_system(const Mesh& m, const Coefficients& c, const Source& f,
                              const BoundaryValues& bc,
                              const std::vector<char>& essential_edge) {
  MSGFEM_REQUIRE(static_cast<int>(bc.size()) == m.n_edges());
  System sys;
  sys.dofs = make_dofmap(m, essential_edge);
  sys.bc = bc;
  sys.rhs.assign(sys.dofs.n_free, 0.0);
  std::vector<Triplet> trip;
  trip.reserve(m.n_triangles() * 9);
  std::vector<int> all(m.n_triangles());
  for (int t = 0; t < m.n_triangles(); ++t) all[t] = t;
  for (int t : all) {
    const auto k = detail::element_matrix(m, c, t);
    const auto load = detail::element_load(m, f.fx[t], f.fy[t], t);
    const auto& te = m.tri_edge[t];
    for (int i = 0; i < 3; ++i) {
      const int di = sys.dofs.edge_to_dof[te[i]];
      if (di < 0) continue;
      sys.rhs[di] += load[i];
      for (int j = 0; j < 3; ++j) {
        const int dj = sys.dofs.edge_to_dof[te[j]];
        if (dj >= 0)
          trip.push_back({di, dj, k[i][j]});
        else
          sys.rhs[di] -= k[i][j] * bc[te[j]];  // lifting of inhomogeneous data
      }
    }
  }
  sys.A = SparseMatrix::from_triplets(sys.dofs.n_free, sys.dofs.n_free, std::move(trip));
  return sys;
}

inline System assemble_system(const Mesh& m, const Coefficients& c, const Source& f,
                              const BoundaryValues& bc) {
  return assemble_system(m, c, f, bc, m.edge_on_boundary);
}

/// Load vector only (used by local particular solves on subsets).
inline Vector assemble_load(const Mesh& m, const Source& f, const DofMap& dofs) {
  Vector rhs(dofs.n_free, 0.0);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto load = detail::element_load(m, f.fx[t], f.fy[t], t);
    for (int i = 0; i < 3; ++i) {
      const int di = dofs.edge_to_dof[m.tri_edge[t][i]];
      if (di >= 0) rhs[di] += load[i];
    }
  }
  return rhs;
}

/// Signed triangle×edge incidence (entries ±1, three per row). The discrete
/// curl on a triangle is the signed sum of its edge values over its area, so
/// the curl part of the system matrix is Cᵀ diag(ν/area) C.
inline SparseMatrix curl_incidence(const Mesh& m) {
  std::vector<Triplet> t;
  t.reserve(m.n_triangles() * 3);
  for (int k = 0; k < m.n_triangles(); ++k)
    for (int s = 0; s < 3; ++s)
      t.push_back({k, m.tri_edge[k][s], static_cast<double>(m.tri_sign[k][s])});
  return SparseMatrix::from_triplets(m.n_triangles(), m.n_edges(), std::move(t));
}

/// Edge×vertex incidence of the discrete gradient: +1 at the high vertex, −1
/// at the low vertex. curl_incidence × grad_incidence vanishes identically.
inline SparseMatrix grad_incidence(const Mesh& m) {
  std::vector<Triplet> t;
  t.reserve(m.n_edges() * 2);
  for (int e = 0; e < m.n_edges(); ++e) {
    t.push_back({e, m.edge[e][0], -1.0});
    t.push_back({e, m.edge[e][1], 1.0});
  }
  return SparseMatrix::from_triplets(m.n_edges(), m.n_vertices(), std::move(t));
}

inline double energy_norm(const SparseMatrix& a, std::span<const double> v) {
  Vector av(a.rows());
  a.multiply(v, av);
  const double q = dot(v, av);
  return q > 0.0 ? std::sqrt(q) : 0.0;
}

/// Combine free unknowns and boundary data into per-edge coefficients.
inline Vector edge_values(const DofMap& d, std::span<const double> u_free,
                          const BoundaryValues& bc) {
  Vector v(bc);
  for (int k = 0; k < d.n_free; ++k) v[d.dof_to_edge[k]] = u_free[k];
  return v;
}

/// Energy-norm error ‖u − u_h‖ against a smooth exact field, by 7-point
/// (degree-5) triangle quadrature of ν|curl u − curl u_h|² + κ|u − u_h|².
inline double energy_error_vs_exact(const Mesh& m, const Coefficients& c,
                                    std::span<const double> edge_vals, const VectorField& u,
                                    const std::function<double(double, double)>& curl_u) {
  const double s15 = std::sqrt(15.0);
  const double w0 = 9.0 / 40.0, w1 = (155.0 + s15) / 1200.0, w2 = (155.0 - s15) / 1200.0;
  const double a1 = (6.0 + s15) / 21.0, a2 = (6.0 - s15) / 21.0;
  const double pts[7][4] = {
      {1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
      {a1, a1, 1 - 2 * a1, w1}, {a1, 1 - 2 * a1, a1, w1}, {1 - 2 * a1, a1, a1, w1},
      {a2, a2, 1 - 2 * a2, w2}, {a2, 1 - 2 * a2, a2, w2}, {1 - 2 * a2, a2, a2, w2}};
  double err2 = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double area = m.area(t);
    const auto gl = m.grad_lambda(t);
    const auto& v = m.tri[t];
    const auto& te = m.tri_edge[t];
    const auto& sg = m.tri_sign[t];
    double curl_h = 0.0;
    for (int e = 0; e < 3; ++e) curl_h += sg[e] * edge_vals[te[e]];
    curl_h /= area;
    for (const auto& p : pts) {
      const double lam[3] = {p[0], p[1], p[2]};
      double x = 0.0, y = 0.0, uhx = 0.0, uhy = 0.0;
      for (int k = 0; k < 3; ++k) {
        x += lam[k] * m.vx[v[k]];
        y += lam[k] * m.vy[v[k]];
      }
      for (int e = 0; e < 3; ++e) {
        const int va = e, vb = (e + 1) % 3;
        const double coef = sg[e] * edge_vals[te[e]];
        uhx += coef * (lam[va] * gl[vb][0] - lam[vb] * gl[va][0]);
        uhy += coef * (lam[va] * gl[vb][1] - lam[vb] * gl[va][1]);
      }
      const auto ue = u(x, y);
      const double dc = curl_u(x, y) - curl_h;
      const double dx = ue[0] - uhx, dy = ue[1] - uhy;
      err2 += p[3] * area * (c.nu[t] * dc * dc + c.kappa[t] * (dx * dx + dy * dy));
    }
  }
  return std::sqrt(err2);
}

}  // namespace msgfem
