#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "msgfem/decomposition.hpp"

using namespace msgfem;

namespace {

struct Setup {
  Mesh mesh;
  DofMap dofs;
  Decomposition decomp;
};

Setup make(int n, int mx, int my, int ovl, int ovsp, std::vector<HoleRect> holes = {}) {
  Setup s{build_structured_mesh(0.0, 0.0, 1.0 / n, 1.0 / n, n, n, holes), {}, {}};
  s.dofs = make_dofmap(s.mesh);
  s.decomp = build_decomposition(s.mesh, s.dofs, mx, my, ovl, ovsp);
  return s;
}

}  // namespace

TEST_CASE("cores partition the triangles") {
  for (auto holes : {std::vector<HoleRect>{}, std::vector<HoleRect>{{3, 5, 3, 5}}}) {
    auto s = make(8, 2, 2, 1, 1, holes);
    std::vector<int> owner(s.mesh.n_triangles(), -1);
    for (std::size_t i = 0; i < s.decomp.subdomains.size(); ++i)
      for (int t : s.decomp.subdomains[i].core) {
        CHECK(owner[t] == -1);
        owner[t] = static_cast<int>(i);
      }
    for (int t = 0; t < s.mesh.n_triangles(); ++t) CHECK(owner[t] >= 0);
    // block assignment by centroid
    for (std::size_t i = 0; i < s.decomp.subdomains.size(); ++i)
      for (int t : s.decomp.subdomains[i].core) {
        auto c = s.mesh.centroid(t);
        CHECK(static_cast<int>(c[0] * 2) == s.decomp.subdomains[i].bx);
        CHECK(static_cast<int>(c[1] * 2) == s.decomp.subdomains[i].by);
      }
  }
}

TEST_CASE("overlap growth is nested and adds one cell ring per layer") {
  auto s = make(8, 2, 2, 1, 1);
  for (const auto& sd : s.decomp.subdomains) {
    std::set<int> core(sd.core.begin(), sd.core.end());
    std::set<int> omega(sd.omega.begin(), sd.omega.end());
    std::set<int> star(sd.omega_star.begin(), sd.omega_star.end());
    for (int t : core) CHECK(omega.count(t) == 1);
    for (int t : omega) CHECK(star.count(t) == 1);
  }
  // block (0,0) covers cells [0,4)^2; one vertex layer reaches [0,5)^2
  CHECK(s.decomp.subdomains[0].core.size() == 2 * 16);
  CHECK(s.decomp.subdomains[0].omega.size() == 2 * 25);
  CHECK(s.decomp.subdomains[0].omega_star.size() == 2 * 36);
}

TEST_CASE("cover multiplicities are pinned on the two-by-two split") {
  auto s = make(8, 2, 2, 1, 0);
  CHECK(s.decomp.k0 == 4);
  CHECK(s.decomp.k0_star == 4);
  auto s2 = make(8, 2, 2, 1, 1);
  CHECK(s2.decomp.k0 == 4);
  CHECK(s2.decomp.k0_star == 4);
  auto s3 = make(8, 1, 1, 0, 0);
  CHECK(s3.decomp.k0 == 1);
  CHECK(s3.decomp.k0_star == 1);
}

TEST_CASE("interior and interface dofs split the free edges of omega_star") {
  auto s = make(8, 2, 2, 1, 1);
  for (const auto& sd : s.decomp.subdomains) {
    std::vector<char> in_star(s.mesh.n_triangles(), 0);
    for (int t : sd.omega_star) in_star[t] = 1;
    std::set<int> star_free;
    for (int t : sd.omega_star)
      for (int e : s.mesh.tri_edge[t])
        if (s.dofs.edge_to_dof[e] >= 0) star_free.insert(s.dofs.edge_to_dof[e]);
    CHECK(sd.interior_dofs.size() + sd.interface_dofs.size() == star_free.size());
    CHECK(!sd.interface_dofs.empty());
    CHECK(std::is_sorted(sd.interior_dofs.begin(), sd.interior_dofs.end()));
    CHECK(std::is_sorted(sd.interface_dofs.begin(), sd.interface_dofs.end()));
    for (int dof : sd.interior_dofs) {
      const int e = s.dofs.dof_to_edge[dof];
      CHECK(in_star[s.mesh.edge_tri[e][0]] == 1);
      if (s.mesh.edge_tri[e][1] >= 0) CHECK(in_star[s.mesh.edge_tri[e][1]] == 1);
    }
    for (int dof : sd.interface_dofs) {
      const int e = s.dofs.dof_to_edge[dof];
      const bool outside = !in_star[s.mesh.edge_tri[e][0]] ||
                           (s.mesh.edge_tri[e][1] >= 0 && !in_star[s.mesh.edge_tri[e][1]]);
      CHECK(outside);
    }
  }
}

TEST_CASE("partition of unity sums to one on every free dof") {
  for (auto [n, mx, my, ovl, ovsp] :
       {std::tuple{8, 2, 2, 1, 0}, {8, 2, 2, 2, 1}, {12, 3, 2, 1, 2}, {6, 1, 1, 0, 0}}) {
    auto s = make(n, mx, my, ovl, ovsp);
    Vector sum(s.dofs.n_free, 0.0);
    for (const auto& sd : s.decomp.subdomains)
      for (std::size_t k = 0; k < sd.omega_dofs.size(); ++k) sum[sd.omega_dofs[k]] += sd.pou[k];
    for (double v : sum) CHECK(v == Catch::Approx(1.0).epsilon(1e-13));
  }
  // holed mesh
  auto s = make(12, 2, 2, 2, 0, {{5, 7, 5, 7}});
  Vector sum(s.dofs.n_free, 0.0);
  for (const auto& sd : s.decomp.subdomains)
    for (std::size_t k = 0; k < sd.omega_dofs.size(); ++k) sum[sd.omega_dofs[k]] += sd.pou[k];
  for (double v : sum) CHECK(v == Catch::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("partition of unity reconstructs any free vector") {
  auto s = make(10, 2, 2, 2, 1);
  std::mt19937 rng(404);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(s.dofs.n_free);
  for (double& x : v) x = u(rng);
  Vector rec(s.dofs.n_free, 0.0);
  for (const auto& sd : s.decomp.subdomains)
    for (std::size_t k = 0; k < sd.omega_dofs.size(); ++k)
      rec[sd.omega_dofs[k]] += sd.pou[k] * v[sd.omega_dofs[k]];
  for (int i = 0; i < s.dofs.n_free; ++i) CHECK(rec[i] == Catch::Approx(v[i]).margin(1e-13));
}

TEST_CASE("weights vanish on the internal boundary ring") {
  auto s = make(8, 2, 2, 2, 0);
  for (const auto& sd : s.decomp.subdomains) {
    std::vector<char> in_omega(s.mesh.n_triangles(), 0);
    for (int t : sd.omega) in_omega[t] = 1;
    for (std::size_t k = 0; k < sd.omega_dofs.size(); ++k) {
      const int e = s.dofs.dof_to_edge[sd.omega_dofs[k]];
      const bool ring = !in_omega[s.mesh.edge_tri[e][0]] ||
                        (s.mesh.edge_tri[e][1] >= 0 && !in_omega[s.mesh.edge_tri[e][1]]);
      if (ring) CHECK(sd.pou[k] == 0.0);
      if (sd.pou[k] > 0.0) {
        // nonzero weight forces the dof into the interior of omega_star
        CHECK(sd.omega_to_interior[k] >= 0);
        CHECK(sd.interior_dofs[sd.omega_to_interior[k]] == sd.omega_dofs[k]);
      }
    }
  }
}

TEST_CASE("single subdomain carries unit weights") {
  auto s = make(6, 1, 1, 0, 0);
  REQUIRE(s.decomp.subdomains.size() == 1);
  const auto& sd = s.decomp.subdomains[0];
  CHECK(sd.omega_dofs.size() == static_cast<std::size_t>(s.dofs.n_free));
  for (double w : sd.pou) CHECK(w == 1.0);
  CHECK(sd.interface_dofs.empty());
  CHECK(sd.interior_dofs.size() == static_cast<std::size_t>(s.dofs.n_free));
}

TEST_CASE("zero overlap with several blocks is rejected") {
  CHECK_THROWS_AS(make(8, 2, 2, 0, 0), ConfigError);
  CHECK_THROWS_AS(make(8, 2, 1, 0, 2), ConfigError);
}

TEST_CASE("a block swallowed by a hole is rejected") {
  // 24 cells, three blocks per side: hole covering cells [0,8)^2 leaves
  // block (0,0) without triangles
  CHECK_THROWS_AS(make(24, 3, 3, 1, 0, {{0, 8, 0, 8}}), ConfigError);
}

TEST_CASE("most interior subdomain is deterministic") {
  CHECK(most_interior_subdomain(make(8, 2, 2, 1, 0).decomp) == 0);
  CHECK(most_interior_subdomain(make(12, 3, 3, 1, 0).decomp) == 4);
  CHECK(most_interior_subdomain(make(16, 4, 4, 1, 0).decomp) == 5);
}

TEST_CASE("construction is bitwise deterministic") {
  auto a = make(10, 2, 2, 2, 1);
  auto b = make(10, 2, 2, 2, 1);
  REQUIRE(a.decomp.subdomains.size() == b.decomp.subdomains.size());
  for (std::size_t i = 0; i < a.decomp.subdomains.size(); ++i) {
    CHECK(a.decomp.subdomains[i].omega_star == b.decomp.subdomains[i].omega_star);
    CHECK(a.decomp.subdomains[i].interior_dofs == b.decomp.subdomains[i].interior_dofs);
    CHECK(a.decomp.subdomains[i].pou == b.decomp.subdomains[i].pou);
  }
}
