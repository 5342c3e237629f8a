#pragma once

#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "msgfem/config.hpp"
#include "msgfem/csv.hpp"
#include "msgfem/problems.hpp"
#include "msgfem/solvers.hpp"
#include "msgfem/topology.hpp"

namespace msgfem {

/// @brief Validated experiment parameters: problem selection, decomposition,
/// coarse-space policy, solver choice, and run environment.
struct RunConfig {
  std::string problem;  // smc | manufactured | holed
  int smc_cells = 6;
  int cells_per_unit = 192;
  double fill = 0.8125;
  double sigma_air = 0.001;
  int man_cells = 32;
  int holes = 1;
  int holed_cells = 24;

  int mx = 4, my = 4;
  int overlap = 2;
  int oversample = 8;

  int n_eig = 0;  // 0: let the command pick a sufficient count
  int n_loc = 10;
  std::optional<double> n_loc_tol;  // set: keep sqrt(lambda) >= tol instead
  std::vector<int> n_loc_sweep{5, 10, 20, 40};

  std::string solver = "gmres";  // direct | msgfem | richardson | gmres
  InnerProduct inner = InnerProduct::energy;
  double tol = 1e-6;
  int max_iter = 200;
  bool reference = true;  // track energy errors against a direct solve

  std::string subdomain = "interior";  // interior | all | <index>
  std::string out_dir = "out";
  int workers = 1;
  bool timing = false;  // measured wall times in CSV (breaks bitwise reruns)
  std::string hash;
};

/// Reads the key union of all subcommands, validates every value, and
/// rejects keys nothing consumed (typos surface as ConfigError).
inline RunConfig parse_run_config(const Config& cfg) {
  RunConfig rc;
  rc.problem = cfg.get_string("problem", "smc");
  if (rc.problem != "smc" && rc.problem != "manufactured" && rc.problem != "holed")
    throw ConfigError("config field 'problem' must be smc, manufactured or holed");
  rc.smc_cells = cfg.get_int("smc_cells", rc.smc_cells);
  rc.cells_per_unit = cfg.get_int("cells_per_unit", rc.cells_per_unit);
  rc.fill = cfg.get_double("fill", rc.fill);
  rc.sigma_air = cfg.get_double("sigma_air", rc.sigma_air);
  rc.man_cells = cfg.get_int("man_cells", rc.man_cells);
  rc.holes = cfg.get_int("holes", rc.holes);
  rc.holed_cells = cfg.get_int("holed_cells", rc.holed_cells);

  rc.mx = cfg.get_int("mx", cfg.get_int("m", rc.mx));
  rc.my = cfg.get_int("my", cfg.get_int("m", rc.my));
  if (rc.mx < 1 || rc.my < 1) throw ConfigError("config field 'm': need at least 1 block");
  rc.overlap = cfg.get_int("overlap", rc.overlap);
  if (rc.overlap < 1) throw ConfigError("config field 'overlap' must be positive");
  rc.oversample = cfg.get_int("oversample", rc.oversample);
  if (rc.oversample < 0) throw ConfigError("config field 'oversample' must be nonnegative");

  rc.n_eig = cfg.get_int("n_eig", rc.n_eig);
  if (rc.n_eig < 0) throw ConfigError("config field 'n_eig' must be nonnegative");
  rc.n_loc = cfg.get_int("n_loc", rc.n_loc);
  if (rc.n_loc < 0) throw ConfigError("config field 'n_loc' must be nonnegative");
  if (cfg.has("n_loc_tol")) {
    rc.n_loc_tol = cfg.get_double("n_loc_tol", 0.0);
    if (!(*rc.n_loc_tol > 0.0)) throw ConfigError("config field 'n_loc_tol' must be positive");
  }
  rc.n_loc_sweep = cfg.get_int_list("n_loc_sweep", rc.n_loc_sweep);
  for (int v : rc.n_loc_sweep)
    if (v < 0) throw ConfigError("config field 'n_loc_sweep' must be nonnegative");

  rc.solver = cfg.get_string("solver", rc.solver);
  if (rc.solver != "direct" && rc.solver != "msgfem" && rc.solver != "richardson" &&
      rc.solver != "gmres")
    throw ConfigError("config field 'solver' must be direct, msgfem, richardson or gmres");
  const std::string inner = cfg.get_string("inner", "energy");
  if (inner == "energy")
    rc.inner = InnerProduct::energy;
  else if (inner == "l2")
    rc.inner = InnerProduct::l2;
  else
    throw ConfigError("config field 'inner' must be energy or l2");
  rc.tol = cfg.get_double("tol", rc.tol);
  if (!(rc.tol > 0.0)) throw ConfigError("config field 'tol' must be positive");
  rc.max_iter = cfg.get_int("max_iter", rc.max_iter);
  if (rc.max_iter < 1) throw ConfigError("config field 'max_iter' must be positive");
  rc.reference = cfg.get_bool("reference", rc.reference);

  rc.subdomain = cfg.get_string("subdomain", rc.subdomain);
  if (rc.subdomain != "interior" && rc.subdomain != "all") {
    std::size_t pos = 0;
    int v = -1;
    try {
      v = std::stoi(rc.subdomain, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != rc.subdomain.size() || v < 0)
      throw ConfigError("config field 'subdomain' must be interior, all or an index");
  }
  rc.out_dir = cfg.get_string("out", rc.out_dir);
  rc.workers = cfg.get_int("workers", rc.workers);
  if (rc.workers < 1) throw ConfigError("config field 'workers' must be positive");
  rc.timing = cfg.get_bool("timing", rc.timing);

  cfg.reject_unused();
  // provenance identifies the experiment, not where or how wide it ran
  rc.hash = cfg.hash({"out", "workers"});
  return rc;
}

inline ProblemSpec build_problem(const RunConfig& rc) {
  if (rc.problem == "smc")
    return smc_problem(rc.smc_cells, rc.fill, rc.sigma_air, rc.cells_per_unit);
  if (rc.problem == "manufactured") return manufactured_problem(rc.man_cells);
  return holed_domain(rc.holes, rc.holed_cells);
}

/// Assembled problem plus decomposition, the part every command shares.
struct Pipeline {
  ProblemSpec prob;
  System sys;
  Decomposition decomp;
};

inline Pipeline build_pipeline(const RunConfig& rc) {
  Pipeline p;
  p.prob = build_problem(rc);
  p.sys = assemble(p.prob);
  p.decomp = build_decomposition(p.prob.mesh, p.sys.dofs, rc.mx, rc.my, rc.overlap,
                                 rc.oversample);
  return p;
}

inline MsgfemReduction build_reduction(const Pipeline& p, const RunConfig& rc, int n_eig) {
  return build_reduction(p.prob.mesh, p.sys.dofs, p.prob.coeffs, p.sys.A, p.sys.rhs, p.decomp,
                         n_eig, rc.workers);
}

inline CoarseSpace select_space(const MsgfemReduction& red, const RunConfig& rc) {
  return rc.n_loc_tol ? select_coarse_space_tol(red, *rc.n_loc_tol)
                      : select_coarse_space(red, rc.n_loc);
}

inline Vector direct_reference(const Pipeline& p) {
  const int n = p.sys.dofs.n_free;
  Vector mx(n), my(n);
  for (int i = 0; i < n; ++i) {
    auto c = p.prob.mesh.edge_midpoint(p.sys.dofs.dof_to_edge[i]);
    mx[i] = c[0];
    my[i] = c[1];
  }
  return direct_solve(p.sys.A, p.sys.rhs, mx, my);
}

inline std::vector<int> selected_subdomains(const RunConfig& rc, const Decomposition& d) {
  if (rc.subdomain == "all") {
    std::vector<int> all(d.subdomains.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    return all;
  }
  if (rc.subdomain == "interior") return {most_interior_subdomain(d)};
  const int idx = std::stoi(rc.subdomain);
  if (idx >= static_cast<int>(d.subdomains.size()))
    throw ConfigError("config field 'subdomain': index " + rc.subdomain + " out of range");
  return {idx};
}

/// Per-subdomain eigenvalue dump, Fig.-style decay curves.
inline void cmd_eigdecay(const RunConfig& rc) {
  Pipeline p = build_pipeline(rc);
  const int n_eig = rc.n_eig > 0 ? rc.n_eig : 45;
  MsgfemReduction red = build_reduction(p, rc, n_eig);
  CsvWriter csv(rc.out_dir, "eigenvalues.csv", rc.hash,
                {"subdomain_id", "k", "lambda_k", "ovsp"});
  for (int i : selected_subdomains(rc, p.decomp)) {
    const Vector& ev = red.locals[i].eigenvalues;
    for (std::size_t k = 0; k < ev.size(); ++k)
      csv.row() << i << static_cast<int>(k + 1) << ev[k] << rc.oversample;
  }
}

/// One-shot reduction error against the direct solve over an n_loc sweep.
inline void cmd_approx(const RunConfig& rc) {
  Pipeline p = build_pipeline(rc);
  int max_loc = 1;
  for (int v : rc.n_loc_sweep) max_loc = std::max(max_loc, v);
  const int n_eig = rc.n_eig > 0 ? rc.n_eig : max_loc + 1;
  MsgfemReduction red = build_reduction(p, rc, n_eig);
  Vector ref = direct_reference(p);
  const double ref_norm = std::sqrt(std::max(0.0, dot(ref, p.sys.A.multiply(ref))));
  CsvWriter csv(rc.out_dir, "errors.csv", rc.hash,
                {"n_loc", "coarse_dim", "rel_error", "lambda", "within_bound"});
  for (int n_loc : rc.n_loc_sweep) {
    CoarseSpace cs = select_coarse_space(red, n_loc);
    Vector ug = msgfem_approximate(p.decomp, red, cs, p.sys.A, p.sys.rhs);
    const double err = detail::energy_error(p.sys.A, ug, ref);
    const double rel = ref_norm > 0.0 ? err / ref_norm : 0.0;
    const int ok = err <= cs.lambda_bound * ref_norm * (1.0 + 1e-10) + 1e-12 ? 1 : 0;
    csv.row() << n_loc << cs.dim << rel << cs.lambda_bound << ok;
  }
}

/// Fine solve by the configured solver; iteration history to CSV.
inline void cmd_solve(const RunConfig& rc) {
  Pipeline p = build_pipeline(rc);
  CsvWriter csv(rc.out_dir, "iterations.csv", rc.hash,
                {"iteration", "residual_norm", "energy_error", "seconds"});
  auto write_log = [&](const IterationLog& log) {
    for (std::size_t k = 0; k < log.residual_norms.size(); ++k) {
      auto r = csv.row();
      r << static_cast<int>(k) << log.residual_norms[k];
      if (k < log.energy_errors.size())
        r << log.energy_errors[k];
      else
        r << std::string();
      // wall times only on request: the default artifact is bitwise
      // reproducible, and the summary line reports the total regardless
      if (rc.timing)
        r << log.iter_seconds[k];
      else
        r << std::string();
    }
  };

  if (rc.solver == "direct") {
    detail::StopWatch watch;
    Vector u = direct_reference(p);
    const double norm = std::sqrt(std::max(0.0, dot(u, p.sys.A.multiply(u))));
    std::printf("solver=direct n=%d iterations=0 converged=1 energy_norm=%.10e seconds=%.3f\n",
                p.sys.dofs.n_free, norm, watch.seconds());
    return;
  }

  const int n_eig =
      rc.n_eig > 0 ? rc.n_eig : (rc.n_loc_tol ? 40 : std::max(1, rc.n_loc + 1));
  MsgfemReduction red = build_reduction(p, rc, n_eig);
  CoarseSpace cs = select_space(red, rc);

  if (rc.solver == "msgfem") {
    detail::StopWatch watch;
    Vector u = msgfem_approximate(p.decomp, red, cs, p.sys.A, p.sys.rhs);
    const double norm = std::sqrt(std::max(0.0, dot(u, p.sys.A.multiply(u))));
    std::printf(
        "solver=msgfem n=%d coarse_dim=%d lambda=%.3e energy_norm=%.10e seconds=%.3f\n",
        p.sys.dofs.n_free, cs.dim, cs.lambda_bound, norm, watch.seconds());
    return;
  }

  Preconditioner pre{&p.sys.A, &p.decomp, &red, &cs};
  Vector ref;
  const Vector* refp = nullptr;
  if (rc.reference) {
    ref = direct_reference(p);
    refp = &ref;
  }
  IterationLog log;
  Vector u;
  try {
    if (rc.solver == "richardson") {
      auto [uu, ll] =
          richardson(pre, p.sys.rhs, Vector(p.sys.A.rows(), 0.0), rc.max_iter, rc.tol, refp);
      u = std::move(uu);
      log = std::move(ll);
    } else {
      auto [uu, ll] = gmres(pre, p.sys.rhs, rc.tol, rc.max_iter, rc.inner, refp);
      u = std::move(uu);
      log = std::move(ll);
    }
  } catch (const RichardsonDivergence& e) {
    write_log(e.log);  // keep the partial history on disk
    throw;
  }
  write_log(log);
  if (!log.converged)
    throw DivergenceError(rc.solver + ": no convergence within " +
                          std::to_string(rc.max_iter) + " iterations");
  const double norm = std::sqrt(std::max(0.0, dot(u, p.sys.A.multiply(u))));
  std::printf(
      "solver=%s n=%d coarse_dim=%d lambda=%.3e iterations=%d converged=%d "
      "energy_norm=%.10e seconds=%.3f\n",
      rc.solver.c_str(), p.sys.dofs.n_free, cs.dim, cs.lambda_bound, log.iterations,
      int(log.converged), norm, log.seconds);
}

namespace detail {

/// Hole components of the structured grid: cells inside the bounding box
/// that carry no triangles, grouped by 4-connectivity.
inline std::vector<std::vector<std::pair<int, int>>> hole_components(const Mesh& m) {
  std::vector<char> occupied(static_cast<std::size_t>(m.nx) * m.ny, 0);
  for (int t = 0; t < m.n_triangles(); ++t) {
    const auto c = m.centroid(t);
    const int i = static_cast<int>(std::floor((c[0] - m.x0) / m.hx));
    const int j = static_cast<int>(std::floor((c[1] - m.y0) / m.hy));
    occupied[static_cast<std::size_t>(j) * m.nx + i] = 1;
  }
  std::vector<char> seen = occupied;  // visited-or-occupied
  std::vector<std::vector<std::pair<int, int>>> comps;
  for (int j = 0; j < m.ny; ++j)
    for (int i = 0; i < m.nx; ++i) {
      if (seen[static_cast<std::size_t>(j) * m.nx + i]) continue;
      comps.emplace_back();
      std::vector<std::pair<int, int>> stack{{i, j}};
      seen[static_cast<std::size_t>(j) * m.nx + i] = 1;
      while (!stack.empty()) {
        auto [ci, cj] = stack.back();
        stack.pop_back();
        comps.back().push_back({ci, cj});
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int ni = ci + di[d], nj = cj + dj[d];
          if (ni < 0 || ni >= m.nx || nj < 0 || nj >= m.ny) continue;
          if (seen[static_cast<std::size_t>(nj) * m.nx + ni]) continue;
          seen[static_cast<std::size_t>(nj) * m.nx + ni] = 1;
          stack.push_back({ni, nj});
        }
      }
    }
  return comps;
}

}  // namespace detail

/// Topology diagnostic: harmonic-space dimension, leading eigenvalue plateau
/// and geometric hole count per subdomain.
inline void cmd_topo(const RunConfig& rc) {
  Pipeline p = build_pipeline(rc);
  const int n_eig = rc.n_eig > 0 ? rc.n_eig : 12;
  MsgfemReduction red = build_reduction(p, rc, n_eig);
  const Mesh& m = p.prob.mesh;

  // a hole is enclosed by a subdomain when the one-cell ring around it lies
  // in the subdomain's core block
  const auto holes = detail::hole_components(m);
  std::vector<std::set<std::pair<int, int>>> rings(holes.size());
  for (std::size_t h = 0; h < holes.size(); ++h) {
    std::set<std::pair<int, int>> cells(holes[h].begin(), holes[h].end());
    for (const auto& [i, j] : holes[h]) {
      const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        const std::pair<int, int> nb{i + di[d], j + dj[d]};
        if (!cells.count(nb)) rings[h].insert(nb);
      }
    }
  }

  CsvWriter csv(rc.out_dir, "topology.csv", rc.hash,
                {"subdomain_id", "dim_harmonic_forms", "flat_prefix", "hole_count"});
  for (std::size_t s = 0; s < p.decomp.subdomains.size(); ++s) {
    const Subdomain& sub = p.decomp.subdomains[s];
    std::set<std::pair<int, int>> core_cells;
    for (int t : sub.core) {
      const auto c = m.centroid(t);
      core_cells.insert({static_cast<int>(std::floor((c[0] - m.x0) / m.hx)),
                         static_cast<int>(std::floor((c[1] - m.y0) / m.hy))});
    }
    int enclosed = 0;
    for (const auto& ring : rings) {
      bool inside = true;
      for (const auto& cell : ring)
        if (!core_cells.count(cell)) {
          inside = false;
          break;
        }
      enclosed += inside;
    }
    const int dim = harmonic_forms_dim(m, sub.omega, p.prob.essential);
    const int flat = flat_prefix_length(red.locals[s].eigenvalues);
    csv.row() << static_cast<int>(s) << dim << flat << enclosed;
  }
}

/// Mesh geometry dump for external visualization.
inline void cmd_mesh_dump(const RunConfig& rc) {
  Pipeline p{build_problem(rc), {}, {}};
  const Mesh& m = p.prob.mesh;
  {
    CsvWriter csv(rc.out_dir, "vertices.csv", rc.hash, {"id", "x", "y"});
    for (int v = 0; v < m.n_vertices(); ++v) csv.row() << v << m.vx[v] << m.vy[v];
  }
  {
    CsvWriter csv(rc.out_dir, "triangles.csv", rc.hash, {"id", "v0", "v1", "v2"});
    for (int t = 0; t < m.n_triangles(); ++t)
      csv.row() << t << m.tri[t][0] << m.tri[t][1] << m.tri[t][2];
  }
  {
    CsvWriter csv(rc.out_dir, "edges.csv", rc.hash, {"id", "v0", "v1", "boundary"});
    for (int e = 0; e < m.n_edges(); ++e)
      csv.row() << e << m.edge[e][0] << m.edge[e][1] << int(m.edge_on_boundary[e]);
  }
}

}  // namespace msgfem
