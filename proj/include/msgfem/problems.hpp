#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "msgfem/errors.hpp"
#include "msgfem/fem.hpp"

namespace msgfem {

/// @brief A fully specified discretization input: mesh, materials, source,
/// essential tangential data, and the essential edge set the dof map uses.
struct ProblemSpec {
  Mesh mesh;
  Coefficients coeffs;
  Source source;
  BoundaryValues bc;
  std::vector<char> essential;
  std::string name;
};

inline System assemble(const ProblemSpec& p) {
  return assemble_system(p.mesh, p.coeffs, p.source, p.bc, p.essential);
}

/// @brief Eddy-current benchmark on [-0.25, 1.25]^2: an n-by-n array of unit
/// cells fills [0,1]^2, each holding a centered square conductor of relative
/// side `fill`; an air frame surrounds the array.
///
/// Materials: mu = 50, sigma = 100 in the conductors; mu = 1, sigma =
/// sigma_air outside (nu = 1/mu, kappa = sigma).  The tangential trace is 1
/// on the whole outer boundary and the source vanishes, so the drive enters
/// through the boundary lifting.  cells_per_unit fixes the fine grid (h =
/// 1/cells_per_unit); every geometric feature must land on grid lines.
inline ProblemSpec smc_problem(int n_cells, double fill, double sigma_air,
                               int cells_per_unit) {
  if (n_cells < 1) throw ConfigError("smc: n_cells must be at least 1");
  if (!(fill > 0.0 && fill <= 1.0)) throw ConfigError("smc: fill must lie in (0, 1]");
  if (!(sigma_air > 0.0)) throw ConfigError("smc: sigma_air must be positive");
  if (cells_per_unit < 4 || cells_per_unit % 4 != 0)
    throw ConfigError("smc: cells_per_unit must be a positive multiple of 4 (air frame 1/4)");
  if (cells_per_unit % n_cells != 0)
    throw ConfigError("smc: cells_per_unit must be divisible by n_cells");
  const int cell = cells_per_unit / n_cells;  // fine cells per unit cell
  const double f_exact = fill * cell;
  const int f_cells = static_cast<int>(std::lround(f_exact));
  if (std::abs(f_exact - f_cells) > 1e-9 || f_cells < 1)
    throw ConfigError("smc: fill is not resolvable on the mesh");
  if ((cell - f_cells) % 2 != 0)
    throw ConfigError("smc: fill leaves a fractional air gap; adjust fill or the mesh");
  const int margin = (cell - f_cells) / 2;

  ProblemSpec p;
  p.name = "smc";
  const double h = 1.0 / cells_per_unit;
  const int frame = cells_per_unit / 4;           // fine cells in the air frame
  const int nx = cells_per_unit + 2 * frame;      // 1.5 units across
  p.mesh = build_structured_mesh(-0.25, -0.25, h, h, nx, nx);

  const int nt = p.mesh.n_triangles();
  p.coeffs = {Vector(nt), Vector(nt)};
  auto conductor_axis = [&](double c) {
    const int fine = static_cast<int>(std::floor((c + 0.25) / h)) - frame;
    if (fine < 0 || fine >= cells_per_unit) return false;
    const int in_cell = fine % cell;
    return in_cell >= margin && in_cell < margin + f_cells;
  };
  for (int t = 0; t < nt; ++t) {
    const auto c = p.mesh.centroid(t);
    const bool smc = conductor_axis(c[0]) && conductor_axis(c[1]);
    p.coeffs.nu[t] = smc ? 1.0 / 50.0 : 1.0;
    p.coeffs.kappa[t] = smc ? 100.0 : sigma_air;
  }
  p.source = {Vector(nt, 0.0), Vector(nt, 0.0)};
  p.bc = boundary_constant_tangential(p.mesh, 1.0);
  p.essential = p.mesh.edge_on_boundary;
  return p;
}

/// Exact solution of the smooth benchmark and its scalar curl.
inline std::array<double, 2> manufactured_exact(double x, double y) {
  return {std::sin(M_PI * y), std::sin(M_PI * x)};
}
inline double manufactured_curl(double x, double y) {
  return M_PI * (std::cos(M_PI * x) - std::cos(M_PI * y));
}

/// @brief Smooth benchmark with known solution u = (sin pi y, sin pi x) on
/// the unit square [0.25, 1.25]^2, unit coefficients.
///
/// The square is placed away from the origin so the exact tangential trace
/// is nonzero on all four sides and the boundary lifting is genuinely
/// exercised.  The matching source is f = (1 + pi^2) (sin pi y, sin pi x);
/// it is sampled at centroids, a second-order-accurate reduction that leaves
/// the first-order energy convergence untouched.
inline ProblemSpec manufactured_problem(int cells) {
  if (cells < 1) throw ConfigError("manufactured: cells must be at least 1");
  ProblemSpec p;
  p.name = "manufactured";
  const double h = 1.0 / cells;
  p.mesh = build_structured_mesh(0.25, 0.25, h, h, cells, cells);
  const int nt = p.mesh.n_triangles();
  p.coeffs = {Vector(nt, 1.0), Vector(nt, 1.0)};
  p.source = {Vector(nt), Vector(nt)};
  const double amp = 1.0 + M_PI * M_PI;
  for (int t = 0; t < nt; ++t) {
    const auto c = p.mesh.centroid(t);
    p.source.fx[t] = amp * std::sin(M_PI * c[1]);
    p.source.fy[t] = amp * std::sin(M_PI * c[0]);
  }
  p.bc = boundary_from_field(p.mesh, [](double x, double y) { return manufactured_exact(x, y); });
  p.essential = p.mesh.edge_on_boundary;
  return p;
}

namespace detail {

/// The hole layouts of the topology fixtures, in cells of the 24-grid.
inline std::vector<HoleRect> hole_layout(int n_holes) {
  switch (n_holes) {
    case 0:
      return {};
    case 1:
      return {{11, 13, 11, 13}};
    case 3:
      return {{9, 11, 9, 11}, {13, 15, 9, 11}, {11, 13, 13, 15}};
    default:
      throw ConfigError("holed: supported hole counts are 0, 1 and 3");
  }
}

}  // namespace detail

/// @brief Topology fixture: the unit square with square holes inside the
/// center block, unit coefficients, source (1, 1), zero tangential data.
///
/// The essential condition sits on the outer square only; hole walls stay
/// natural.  A constrained hole wall would kill the circulation class around
/// the hole and with it every topological signature, so the natural wall is
/// what makes hole counting and the near-flat leading eigenvalues visible.
/// Hole layouts are fixed (0, 1 or 3 holes in the center block of a 3x3
/// decomposition) and scale with the resolution, which must be a multiple of
/// the reference 24-cell grid.
inline ProblemSpec holed_domain(std::vector<HoleRect> holes, int cells) {
  for (std::size_t a = 0; a < holes.size(); ++a)
    for (std::size_t b = a + 1; b < holes.size(); ++b) {
      const bool apart = holes[a].i1 <= holes[b].i0 || holes[b].i1 <= holes[a].i0 ||
                         holes[a].j1 <= holes[b].j0 || holes[b].j1 <= holes[a].j0;
      if (!apart) throw ConfigError("holed: holes overlap");
    }

  ProblemSpec p;
  p.name = "holed";
  const double h = 1.0 / cells;
  p.mesh = build_structured_mesh(0.0, 0.0, h, h, cells, cells, std::move(holes));
  const int nt = p.mesh.n_triangles();
  p.coeffs = {Vector(nt, 1.0), Vector(nt, 1.0)};
  p.source = {Vector(nt, 1.0), Vector(nt, 1.0)};
  p.bc = BoundaryValues(p.mesh.n_edges(), 0.0);
  p.essential = outer_boundary_edges(p.mesh);
  return p;
}

/// Fixed-layout variant: 0, 1 or 3 holes inside the center block, scaled
/// with the resolution (a multiple of the reference 24-cell grid).
inline ProblemSpec holed_domain(int n_holes, int cells = 24) {
  if (cells < 24 || cells % 24 != 0)
    throw ConfigError("holed: cells must be a positive multiple of 24");
  const int scale = cells / 24;
  std::vector<HoleRect> holes = detail::hole_layout(n_holes);
  for (HoleRect& h : holes) {
    h.i0 *= scale;
    h.i1 *= scale;
    h.j0 *= scale;
    h.j1 *= scale;
  }
  return holed_domain(std::move(holes), cells);
}

/// Per-edge coefficient vector of a solved system: free values from the
/// solution, constrained values from the prescribed data.
inline Vector expand_edge_values(const System& sys, const Mesh& m, const Vector& u_free) {
  MSGFEM_REQUIRE(static_cast<int>(u_free.size()) == sys.dofs.n_free);
  Vector full(m.n_edges());
  for (int e = 0; e < m.n_edges(); ++e) {
    const int d = sys.dofs.edge_to_dof[e];
    full[e] = d >= 0 ? u_free[d] : sys.bc[e];
  }
  return full;
}

/// @brief Energy-norm distance between an edge-element field and an analytic
/// field: sqrt of  ∫ nu (curl u_ex − curl u_h)² + kappa |u_ex − u_h|².
///
/// Six-point fourth-order triangle quadrature: exact for the discrete part,
/// and the analytic part converges two orders faster than the energy error
/// it measures.  A zero edge vector turns this into a quadrature of the
/// analytic field's energy norm.
template <class FieldFn, class CurlFn>
double energy_error_vs_field(const Mesh& m, const Coefficients& c, const Vector& edge_vals,
                             FieldFn&& u_exact, CurlFn&& curl_exact) {
  MSGFEM_REQUIRE(static_cast<int>(edge_vals.size()) == m.n_edges());
  static constexpr double qw[2] = {0.223381589678011, 0.109951743655322};
  static constexpr double qa[2] = {0.108103018168070, 0.816847572980459};
  static constexpr double qb[2] = {0.445948490915965, 0.091576213509771};
  double total = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) {
    const double area = m.area(t);
    const auto gl = m.grad_lambda(t);
    const auto& vids = m.tri[t];
    const auto& sg = m.tri_sign[t];
    double coef[3];
    double curl_h = 0.0;
    for (int e = 0; e < 3; ++e) {
      coef[e] = edge_vals[m.tri_edge[t][e]];
      curl_h += coef[e] * sg[e];
    }
    curl_h /= area;
    for (int grp = 0; grp < 2; ++grp)
      for (int rot = 0; rot < 3; ++rot) {
        double lam[3];
        lam[rot] = qa[grp];
        lam[(rot + 1) % 3] = qb[grp];
        lam[(rot + 2) % 3] = qb[grp];
        double px = 0.0, py = 0.0;
        for (int i = 0; i < 3; ++i) {
          px += lam[i] * m.vx[vids[i]];
          py += lam[i] * m.vy[vids[i]];
        }
        double uhx = 0.0, uhy = 0.0;
        for (int e = 0; e < 3; ++e) {
          const int va = e, vb = (e + 1) % 3;
          uhx += coef[e] * sg[e] * (lam[va] * gl[vb][0] - lam[vb] * gl[va][0]);
          uhy += coef[e] * sg[e] * (lam[va] * gl[vb][1] - lam[vb] * gl[va][1]);
        }
        const auto ue = u_exact(px, py);
        const double dc = curl_exact(px, py) - curl_h;
        const double dx = ue[0] - uhx, dy = ue[1] - uhy;
        total += qw[grp] * area * (c.nu[t] * dc * dc + c.kappa[t] * (dx * dx + dy * dy));
      }
  }
  return std::sqrt(total);
}

}  // namespace msgfem
