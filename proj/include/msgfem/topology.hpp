#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

#include "msgfem/exact_rank.hpp"
#include "msgfem/mesh.hpp"

namespace msgfem {

/// @brief Dimension of the discrete harmonic-form space on a triangle subset.
///
/// D is the union of the given triangles; gamma_edge flags the boundary-
/// contact edges (tangentially constrained).  The dimension is
/// [E_free - rank(C_D)] - [V_free - c0]: curl-kernel dimension minus the
/// dimension of the constrained gradient space, where E_free counts edges of
/// D not flagged, C_D is the signed triangle-edge incidence with flagged
/// columns removed, V_free counts vertices of D not touching a flagged edge
/// of D, and c0 counts connected components of D without any such contact
/// (their constant potentials are gradient-kernel elements).  Ranks are exact
/// integer computations, so the result is tolerance-free, and it does not
/// depend on the coefficients.  For an interior annular region it equals the
/// number of holes.
inline int harmonic_forms_dim(const Mesh& mesh, std::span<const int> tris,
                              const std::vector<char>& gamma_edge) {
  MSGFEM_REQUIRE(static_cast<int>(gamma_edge.size()) == mesh.n_edges());
  // edges and vertices of D
  std::vector<int> edge_local(mesh.n_edges(), -1);
  std::vector<int> edges;
  std::vector<char> vertex_in(mesh.n_vertices(), 0);
  for (int t : tris) {
    for (int e : mesh.tri_edge[t])
      if (edge_local[e] == -1) {
        edge_local[e] = 0;  // present; free edges renumbered below
        edges.push_back(e);
      }
    for (int v : mesh.tri[t]) vertex_in[v] = 1;
  }
  std::sort(edges.begin(), edges.end());
  int e_free = 0;
  for (int e : edges) edge_local[e] = gamma_edge[e] ? -1 : e_free++;

  // signed incidence on free edges, exact integer rank
  std::vector<std::int64_t> c(static_cast<std::size_t>(tris.size()) * e_free, 0);
  for (std::size_t r = 0; r < tris.size(); ++r)
    for (int k = 0; k < 3; ++k) {
      const int le = edge_local[mesh.tri_edge[tris[r]][k]];
      if (le >= 0) c[r * e_free + le] = mesh.tri_sign[tris[r]][k];
    }
  const int rank_c = integer_rank(static_cast<int>(tris.size()), e_free, c);

  // vertices touching a flagged edge of D are constrained
  std::vector<char> vertex_gamma(mesh.n_vertices(), 0);
  for (int e : edges)
    if (gamma_edge[e]) {
      vertex_gamma[mesh.edge[e][0]] = 1;
      vertex_gamma[mesh.edge[e][1]] = 1;
    }
  int v_free = 0;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (vertex_in[v] && !vertex_gamma[v]) ++v_free;

  // connected components of D via its edges; count those with no contact
  std::vector<int> parent(mesh.n_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (int e : edges) {
    const int a = find(mesh.edge[e][0]), b = find(mesh.edge[e][1]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<char> root_has_gamma(mesh.n_vertices(), 0);
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (vertex_in[v] && vertex_gamma[v]) root_has_gamma[find(v)] = 1;
  int c0 = 0;
  for (int v = 0; v < mesh.n_vertices(); ++v)
    if (vertex_in[v] && find(v) == v && !root_has_gamma[v]) ++c0;

  return (e_free - rank_c) - (v_free - c0);
}

/// Convenience overload: boundary contact = edges on the domain boundary.
inline int harmonic_forms_dim(const Mesh& mesh, std::span<const int> tris) {
  return harmonic_forms_dim(mesh, tris, mesh.edge_on_boundary);
}

}  // namespace msgfem
