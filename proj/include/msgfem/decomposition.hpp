#pragma once

#include <algorithm>
#include <cstdint>
#include <queue>
#include <vector>

#include "msgfem/errors.hpp"
#include "msgfem/fem.hpp"
#include "msgfem/mesh.hpp"

namespace msgfem {

/// @brief One overlapping subdomain of a rectangular block decomposition.
///
/// Triangle sets are nested: core (nonoverlapping block) within omega
/// (overlap region carrying the partition of unity) within omega_star
/// (oversampled region carrying the local solves).  Dof sets hold free-edge
/// ids: interior_dofs are edges of omega_star all of whose incident triangles
/// lie inside it, interface_dofs are the remaining omega_star edges, and
/// omega_dofs are the edges of omega.  pou is the diagonal partition-of-unity
/// weight per omega dof, and omega_to_interior maps each omega dof to its
/// position in interior_dofs (every dof with a nonzero weight is interior).
struct Subdomain {
  int bx = 0;
  int by = 0;
  std::vector<int> core;
  std::vector<int> omega;
  std::vector<int> omega_star;
  std::vector<int> interior_dofs;
  std::vector<int> interface_dofs;
  std::vector<int> omega_dofs;
  std::vector<double> pou;
  std::vector<int> omega_to_interior;
};

struct Decomposition {
  int mx = 0;
  int my = 0;
  int overlap = 0;
  int oversample = 0;
  std::vector<Subdomain> subdomains;
  int k0 = 0;       ///< max number of omega regions sharing a triangle
  int k0_star = 0;  ///< max number of omega_star regions sharing a triangle
};

namespace detail {

/// Vertex-to-triangle adjacency in compressed form.
struct VertexTris {
  std::vector<int> ptr;
  std::vector<int> tri;
  explicit VertexTris(const Mesh& m) : ptr(m.n_vertices() + 1, 0) {
    for (const auto& t : m.tri)
      for (int v : t) ++ptr[v + 1];
    for (int v = 0; v < m.n_vertices(); ++v) ptr[v + 1] += ptr[v];
    tri.resize(ptr.back());
    std::vector<int> fill = ptr;
    for (int t = 0; t < m.n_triangles(); ++t)
      for (int v : m.tri[t]) tri[fill[v]++] = t;
  }
};

/// Grows a triangle set by the given number of vertex layers: each layer adds
/// every triangle sharing a vertex with the current set.
inline std::vector<int> grow_by_vertex_layers(const Mesh& m, const VertexTris& vt,
                                              const std::vector<int>& tris, int layers) {
  std::vector<char> in_set(m.n_triangles(), 0);
  std::vector<char> vertex_seen(m.n_vertices(), 0);
  std::vector<int> frontier_verts;
  for (int t : tris) {
    in_set[t] = 1;
    for (int v : m.tri[t])
      if (!vertex_seen[v]) {
        vertex_seen[v] = 1;
        frontier_verts.push_back(v);
      }
  }
  for (int layer = 0; layer < layers; ++layer) {
    std::vector<int> next_verts;
    std::sort(frontier_verts.begin(), frontier_verts.end());
    for (int v : frontier_verts)
      for (int p = vt.ptr[v]; p < vt.ptr[v + 1]; ++p) {
        const int t = vt.tri[p];
        if (in_set[t]) continue;
        in_set[t] = 1;
        for (int w : m.tri[t])
          if (!vertex_seen[w]) {
            vertex_seen[w] = 1;
            next_verts.push_back(w);
          }
      }
    frontier_verts = std::move(next_verts);
    if (frontier_verts.empty()) break;
  }
  std::vector<int> out;
  for (int t = 0; t < m.n_triangles(); ++t)
    if (in_set[t]) out.push_back(t);
  return out;
}

}  // namespace detail

/// @brief Builds an mx-by-my block decomposition of the mesh.
///
/// Triangles are assigned to blocks by centroid.  Each block is grown by
/// `overlap` vertex layers into omega and by `oversample` further layers into
/// omega_star.  The partition of unity is piecewise linear: chi_i at a vertex
/// is its hop distance (within omega_i) from the internal boundary of
/// omega_i, normalised so the chi_i sum to one, and an edge weight is the
/// mean of its endpoint values.  A vertex counts as internal boundary when
/// one of its incident triangles lies outside omega_i, so every dof with a
/// nonzero weight has all incident triangles inside omega_i.
inline Decomposition build_decomposition(const Mesh& mesh, const DofMap& dofs, int mx, int my,
                                         int overlap, int oversample) {
  if (mx < 1 || my < 1) throw ConfigError("decomposition: need at least one block per direction");
  if (overlap < 0 || oversample < 0)
    throw ConfigError("decomposition: overlap and oversample must be nonnegative");
  const int n_subs = mx * my;
  detail::VertexTris vt(mesh);

  Decomposition d;
  d.mx = mx;
  d.my = my;
  d.overlap = overlap;
  d.oversample = oversample;
  d.subdomains.resize(n_subs);
  for (int s = 0; s < n_subs; ++s) {
    d.subdomains[s].bx = s % mx;
    d.subdomains[s].by = s / mx;
  }

  const double wx = mesh.hx * mesh.nx / mx;
  const double wy = mesh.hy * mesh.ny / my;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    auto c = mesh.centroid(t);
    const int bx = std::clamp(static_cast<int>((c[0] - mesh.x0) / wx), 0, mx - 1);
    const int by = std::clamp(static_cast<int>((c[1] - mesh.y0) / wy), 0, my - 1);
    d.subdomains[by * mx + bx].core.push_back(t);
  }
  for (int s = 0; s < n_subs; ++s)
    if (d.subdomains[s].core.empty())
      throw ConfigError("decomposition: block " + std::to_string(s) + " contains no triangles");

  // overlap growth and cover multiplicities
  std::vector<int> omega_count(mesh.n_triangles(), 0);
  std::vector<int> star_count(mesh.n_triangles(), 0);
  for (auto& sd : d.subdomains) {
    sd.omega = detail::grow_by_vertex_layers(mesh, vt, sd.core, overlap);
    sd.omega_star = detail::grow_by_vertex_layers(mesh, vt, sd.omega, oversample);
    for (int t : sd.omega) ++omega_count[t];
    for (int t : sd.omega_star) ++star_count[t];
  }
  d.k0 = *std::max_element(omega_count.begin(), omega_count.end());
  d.k0_star = *std::max_element(star_count.begin(), star_count.end());

  // per-subdomain hop distances from the internal boundary of omega
  std::vector<std::vector<int>> dist(n_subs);
  std::vector<double> total(mesh.n_vertices(), 0.0);
  std::vector<char> in_omega(mesh.n_triangles(), 0);
  for (int s = 0; s < n_subs; ++s) {
    auto& sd = d.subdomains[s];
    for (int t : sd.omega) in_omega[t] = 1;
    std::vector<int>& dv = dist[s];
    dv.assign(mesh.n_vertices(), -1);  // -1: not an omega vertex
    std::vector<int> zero_set;
    for (int t : sd.omega)
      for (int v : mesh.tri[t]) {
        if (dv[v] != -1) continue;
        bool internal_boundary = false;
        for (int p = vt.ptr[v]; p < vt.ptr[v + 1]; ++p)
          if (!in_omega[vt.tri[p]]) {
            internal_boundary = true;
            break;
          }
        dv[v] = internal_boundary ? 0 : -2;  // -2: pending BFS
        if (internal_boundary) zero_set.push_back(v);
      }
    if (zero_set.empty()) {
      for (int t : sd.omega)
        for (int v : mesh.tri[t]) dv[v] = 1;
    } else {
      std::sort(zero_set.begin(), zero_set.end());
      std::queue<int> q;
      for (int v : zero_set) q.push(v);
      // adjacency restricted to edges of omega triangles
      while (!q.empty()) {
        const int v = q.front();
        q.pop();
        for (int p = vt.ptr[v]; p < vt.ptr[v + 1]; ++p) {
          const int t = vt.tri[p];
          if (!in_omega[t]) continue;
          for (int k = 0; k < 3; ++k) {
            const int e = mesh.tri_edge[t][k];
            int a = mesh.edge[e][0], b = mesh.edge[e][1];
            if (a != v && b != v) continue;
            const int w = (a == v) ? b : a;
            if (dv[w] == -2) {
              dv[w] = dv[v] + 1;
              q.push(w);
            }
          }
        }
      }
      for (int t : sd.omega)  // isolated components without internal boundary
        for (int v : mesh.tri[t])
          if (dv[v] == -2) dv[v] = 1;
    }
    for (int t : sd.omega)
      for (int v : mesh.tri[t])
        if (dv[v] > 0) {
          total[v] += dv[v];
          dv[v] = -dv[v] - 10;  // mark accumulated, restore below
        }
    for (int t : sd.omega)
      for (int v : mesh.tri[t])
        if (dv[v] < -2) dv[v] = -dv[v] - 10;
    for (int t : sd.omega) in_omega[t] = 0;
  }

  // dof sets and partition-of-unity weights
  std::vector<char> in_star(mesh.n_triangles(), 0);
  std::vector<char> edge_seen(mesh.n_edges(), 0);
  for (int s = 0; s < n_subs; ++s) {
    auto& sd = d.subdomains[s];
    for (int t : sd.omega_star) in_star[t] = 1;
    std::vector<int> star_edges;
    for (int t : sd.omega_star)
      for (int e : mesh.tri_edge[t])
        if (!edge_seen[e]) {
          edge_seen[e] = 1;
          star_edges.push_back(e);
        }
    std::sort(star_edges.begin(), star_edges.end());
    for (int e : star_edges) {
      edge_seen[e] = 0;
      if (dofs.edge_to_dof[e] < 0) continue;
      const bool interior =
          in_star[mesh.edge_tri[e][0]] && (mesh.edge_tri[e][1] < 0 || in_star[mesh.edge_tri[e][1]]);
      (interior ? sd.interior_dofs : sd.interface_dofs).push_back(dofs.edge_to_dof[e]);
    }
    for (int t : sd.omega_star) in_star[t] = 0;

    std::vector<int> omega_edges;
    for (int t : sd.omega)
      for (int e : mesh.tri_edge[t])
        if (!edge_seen[e]) {
          edge_seen[e] = 1;
          omega_edges.push_back(e);
        }
    std::sort(omega_edges.begin(), omega_edges.end());
    std::vector<int> pos_in_interior(dofs.n_free, 0);
    for (std::size_t k = 0; k < sd.interior_dofs.size(); ++k)
      pos_in_interior[sd.interior_dofs[k]] = static_cast<int>(k) + 1;
    for (int e : omega_edges) {
      edge_seen[e] = 0;
      if (dofs.edge_to_dof[e] < 0) continue;
      const int a = mesh.edge[e][0], b = mesh.edge[e][1];
      const double chi_a = dist[s][a] > 0 ? dist[s][a] / total[a] : 0.0;
      const double chi_b = dist[s][b] > 0 ? dist[s][b] / total[b] : 0.0;
      sd.omega_dofs.push_back(dofs.edge_to_dof[e]);
      sd.pou.push_back(0.5 * (chi_a + chi_b));
      sd.omega_to_interior.push_back(pos_in_interior[dofs.edge_to_dof[e]] - 1);
    }
  }

  // every free edge must be fully weighted somewhere, or the overlap is too
  // small to form a partition of unity
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (dofs.edge_to_dof[e] < 0) continue;
    if (total[mesh.edge[e][0]] == 0.0 || total[mesh.edge[e][1]] == 0.0)
      throw ConfigError("decomposition: overlap too small for a partition of unity");
  }
  return d;
}

/// Index of the subdomain whose block sits deepest inside the block grid
/// (smallest index on ties).
inline int most_interior_subdomain(const Decomposition& d) {
  int best = 0, best_score = -1;
  for (std::size_t s = 0; s < d.subdomains.size(); ++s) {
    const auto& sd = d.subdomains[s];
    const int score =
        std::min(std::min(sd.bx, d.mx - 1 - sd.bx), std::min(sd.by, d.my - 1 - sd.by));
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(s);
    }
  }
  return best;
}

}  // namespace msgfem
