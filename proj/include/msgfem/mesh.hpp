#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "msgfem/errors.hpp"

namespace msgfem {

/// Half-open block of removed cells, in cell indices of the structured grid.
struct HoleRect {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
};

/**
 * @brief Conforming triangulation of an axis-aligned rectangle with optional
 *        rectangular holes.
 *
 * Every grid cell is split by its lower-left to upper-right diagonal into two
 * counterclockwise triangles. Vertices are numbered lexicographically by
 * coordinate (y major), edges lexicographically by their (low, high) vertex
 * pair; each edge's global orientation runs low vertex to high vertex.
 * Edges flagged `edge_on_boundary` lie on the domain boundary, hole
 * perimeters included.
 */
struct Mesh {
  std::vector<double> vx, vy;
  std::vector<std::array<int, 3>> tri;         // CCW vertex triples
  std::vector<std::array<int, 2>> edge;        // (low, high) vertex ids
  std::vector<std::array<int, 3>> tri_edge;    // edge ids per triangle side k=(v_k,v_{k+1})
  std::vector<std::array<int, 3>> tri_sign;    // +1 if side k runs low->high
  std::vector<std::array<int, 2>> edge_tri;    // incident triangles, -1 when absent
  std::vector<char> edge_on_boundary;
  std::vector<char> vertex_on_boundary;

  // Construction provenance for structured meshes: grid geometry and holes.
  double x0 = 0.0, y0 = 0.0, hx = 0.0, hy = 0.0;
  int nx = 0, ny = 0;
  std::vector<HoleRect> holes;

  int n_vertices() const { return static_cast<int>(vx.size()); }
  int n_triangles() const { return static_cast<int>(tri.size()); }
  int n_edges() const { return static_cast<int>(edge.size()); }

  double area(int t) const {
    const auto& v = tri[t];
    return 0.5 * ((vx[v[1]] - vx[v[0]]) * (vy[v[2]] - vy[v[0]]) -
                  (vx[v[2]] - vx[v[0]]) * (vy[v[1]] - vy[v[0]]));
  }

  std::array<double, 2> centroid(int t) const {
    const auto& v = tri[t];
    return {(vx[v[0]] + vx[v[1]] + vx[v[2]]) / 3.0,
            (vy[v[0]] + vy[v[1]] + vy[v[2]]) / 3.0};
  }

  std::array<double, 2> edge_midpoint(int e) const {
    return {0.5 * (vx[edge[e][0]] + vx[edge[e][1]]),
            0.5 * (vy[edge[e][0]] + vy[edge[e][1]])};
  }

  double edge_length(int e) const {
    return std::hypot(vx[edge[e][1]] - vx[edge[e][0]], vy[edge[e][1]] - vy[edge[e][0]]);
  }

  /// Barycentric gradients (constant per triangle), one per vertex.
  std::array<std::array<double, 2>, 3> grad_lambda(int t) const {
    const auto& v = tri[t];
    const double inv2a = 1.0 / (2.0 * area(t));
    std::array<std::array<double, 2>, 3> g;
    for (int k = 0; k < 3; ++k) {
      const int a = v[(k + 1) % 3], b = v[(k + 2) % 3];
      g[k] = {(vy[a] - vy[b]) * inv2a, -(vx[a] - vx[b]) * inv2a};
    }
    return g;
  }

  double circumdiameter(int t) const {
    const auto& v = tri[t];
    const double a = std::hypot(vx[v[1]] - vx[v[0]], vy[v[1]] - vy[v[0]]);
    const double b = std::hypot(vx[v[2]] - vx[v[1]], vy[v[2]] - vy[v[1]]);
    const double c = std::hypot(vx[v[0]] - vx[v[2]], vy[v[0]] - vy[v[2]]);
    return a * b * c / (2.0 * area(t));
  }
};

/// Largest circumscribed-circle diameter over the triangles.
inline double mesh_size(const Mesh& m) {
  double h = 0.0;
  for (int t = 0; t < m.n_triangles(); ++t) h = std::max(h, m.circumdiameter(t));
  return h;
}

/**
 * @brief Build the structured triangulation of [x0, x0+nx·hx] × [y0, y0+ny·hy]
 *        minus the given cell-blocks.
 *
 * Deterministic numbering as documented on Mesh. Holes must lie inside the
 * grid; cells covered by any hole are removed together with vertices that end
 * up unused.
 */
inline Mesh build_structured_mesh(double x0, double y0, double hx, double hy, int nx,
                                  int ny, std::vector<HoleRect> holes = {}) {
  MSGFEM_REQUIRE(nx >= 1 && ny >= 1 && hx > 0.0 && hy > 0.0);
  for (const HoleRect& h : holes) {
    if (!(0 <= h.i0 && h.i0 < h.i1 && h.i1 <= nx && 0 <= h.j0 && h.j0 < h.j1 && h.j1 <= ny))
      throw ConfigError("mesh hole outside grid or empty");
  }
  auto in_hole = [&](int i, int j) {
    for (const HoleRect& h : holes)
      if (h.i0 <= i && i < h.i1 && h.j0 <= j && j < h.j1) return true;
    return false;
  };

  Mesh m;
  m.x0 = x0;
  m.y0 = y0;
  m.hx = hx;
  m.hy = hy;
  m.nx = nx;
  m.ny = ny;
  m.holes = holes;

  // Grid vertices that survive, numbered lexicographically (y major, then x):
  // identical to scanning j ascending then i ascending.
  std::vector<int> vid(static_cast<std::size_t>(nx + 1) * (ny + 1), -1);
  auto gidx = [&](int i, int j) { return static_cast<std::size_t>(j) * (nx + 1) + i; };
  std::vector<char> used(vid.size(), 0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      if (!in_hole(i, j))
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) used[gidx(i + di, j + dj)] = 1;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      if (used[gidx(i, j)]) {
        vid[gidx(i, j)] = m.n_vertices();
        m.vx.push_back(x0 + i * hx);
        m.vy.push_back(y0 + j * hy);
      }
  if (m.vx.empty()) throw ConfigError("mesh has no cells left after hole removal");

  // Two CCW triangles per kept cell, split along lower-left -> upper-right.
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      if (in_hole(i, j)) continue;
      const int a = vid[gidx(i, j)], b = vid[gidx(i + 1, j)];
      const int c = vid[gidx(i + 1, j + 1)], d = vid[gidx(i, j + 1)];
      m.tri.push_back({a, b, c});
      m.tri.push_back({a, c, d});
    }

  // Edge table: (low, high) pairs in lexicographic order.
  std::map<std::array<int, 2>, int> eid;
  for (const auto& t : m.tri)
    for (int k = 0; k < 3; ++k) {
      int u = t[k], v = t[(k + 1) % 3];
      eid.emplace(std::array<int, 2>{std::min(u, v), std::max(u, v)}, 0);
    }
  for (auto& [key, id] : eid) {
    id = m.n_edges();
    m.edge.push_back(key);
  }

  m.tri_edge.resize(m.n_triangles());
  m.tri_sign.resize(m.n_triangles());
  m.edge_tri.assign(m.n_edges(), {-1, -1});
  for (int t = 0; t < m.n_triangles(); ++t)
    for (int k = 0; k < 3; ++k) {
      int u = m.tri[t][k], v = m.tri[t][(k + 1) % 3];
      int e = eid.at({std::min(u, v), std::max(u, v)});
      m.tri_edge[t][k] = e;
      m.tri_sign[t][k] = u < v ? 1 : -1;
      if (m.edge_tri[e][0] < 0)
        m.edge_tri[e][0] = t;
      else {
        MSGFEM_REQUIRE(m.edge_tri[e][1] < 0);
        m.edge_tri[e][1] = t;
      }
    }

  m.edge_on_boundary.assign(m.n_edges(), 0);
  m.vertex_on_boundary.assign(m.n_vertices(), 0);
  for (int e = 0; e < m.n_edges(); ++e)
    if (m.edge_tri[e][1] < 0) {
      m.edge_on_boundary[e] = 1;
      m.vertex_on_boundary[m.edge[e][0]] = 1;
      m.vertex_on_boundary[m.edge[e][1]] = 1;
    }

  for (int t = 0; t < m.n_triangles(); ++t) MSGFEM_REQUIRE(m.area(t) > 0.0);
  return m;
}

}  // namespace msgfem
