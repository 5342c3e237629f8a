// Configuration, CSV output and command-line surface: flat key=value files
// with overrides and typed access, provenance comments on every artifact,
// deterministic outputs, and the documented exit codes.

#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "msgfem/experiments.hpp"

using namespace msgfem;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::current_path() / "cli_test_scratch";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

// Runs the installed CLI binary; returns its exit code.
int run_cli(const std::string& args) {
  const char* bin = std::getenv("MSGFEM_CLI");
  const std::string cmd =
      std::string(bin && *bin ? bin : "./msgfem") + " " + args + " >cli_stdout.txt 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

// Tiny well-posed run: one unit cell, coarse grid, fast at any solver.
const char* kTinySmc =
    "problem = smc\n"
    "smc_cells = 1\n"
    "cells_per_unit = 16\n"
    "fill = 0.75\n"
    "sigma_air = 0.01\n"
    "m = 2\n"
    "overlap = 1\n"
    "oversample = 2\n";

}  // namespace

TEST_CASE("config parses files, comments and overrides") {
  const fs::path p = write_file("basic.cfg",
                                "# leading comment\n"
                                "alpha = 3\n"
                                "\n"
                                "beta= 2.5 \n"
                                "name =  left right \n"
                                "flag = true\n"
                                "list = 1, 2,3\n");
  Config cfg = Config::from_file(p.string());
  CHECK(cfg.get_int("alpha", 0) == 3);
  CHECK(cfg.get_double("beta", 0.0) == 2.5);
  CHECK(cfg.get_string("name", "") == "left right");
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_int_list("list", {}) == std::vector<int>{1, 2, 3});
  CHECK(cfg.get_int("absent", 7) == 7);
  CHECK_FALSE(cfg.has("absent"));

  cfg.set_override("alpha=10");
  CHECK(cfg.get_int("alpha", 0) == 10);
  CHECK_THROWS_AS(cfg.set_override("no_equals_sign"), ConfigError);
  CHECK_THROWS_AS(cfg.set_override("=value"), ConfigError);

  CHECK_THROWS_AS(Config::from_file((scratch_dir() / "missing.cfg").string()), ConfigError);
  const fs::path bad = write_file("bad.cfg", "key_without_value\n");
  CHECK_THROWS_AS(Config::from_file(bad.string()), ConfigError);
}

TEST_CASE("config typed getters validate values") {
  Config cfg;
  cfg.set("i", "12x");
  cfg.set("d", "nope");
  cfg.set("b", "maybe");
  cfg.set("l", "1,,2");
  CHECK_THROWS_AS(cfg.get_int("i", 0), ConfigError);
  CHECK_THROWS_AS(cfg.get_double("d", 0.0), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("b", false), ConfigError);
  CHECK_THROWS_AS(cfg.get_int_list("l", {}), ConfigError);
  CHECK_THROWS_WITH(cfg.get_int("i", 0), Catch::Matchers::ContainsSubstring("i"));

  Config ok;
  ok.set("b0", "false");
  ok.set("b1", "1");
  ok.set("neg", "-4");
  CHECK_FALSE(ok.get_bool("b0", true));
  CHECK(ok.get_bool("b1", false));
  CHECK(ok.get_int("neg", 0) == -4);
}

TEST_CASE("config rejects unknown keys after use") {
  Config cfg;
  cfg.set("used", "1");
  cfg.set("stale", "2");
  (void)cfg.get_int("used", 0);
  CHECK_THROWS_WITH(cfg.reject_unused(), Catch::Matchers::ContainsSubstring("stale"));
  (void)cfg.get_int("stale", 0);
  CHECK_NOTHROW(cfg.reject_unused());
}

TEST_CASE("config hash ignores declaration order and tracks values") {
  const fs::path a = write_file("ha.cfg", "x = 1\ny = 2\n");
  const fs::path b = write_file("hb.cfg", "y = 2\nx = 1\n");
  const fs::path c = write_file("hc.cfg", "x = 1\ny = 3\n");
  const std::string hash_a = Config::from_file(a.string()).hash();
  CHECK(hash_a == Config::from_file(b.string()).hash());
  CHECK(hash_a != Config::from_file(c.string()).hash());
  CHECK(hash_a.size() == 16);
  CHECK(hash_a.find_first_not_of("0123456789abcdef") == std::string::npos);

  Config cfg = Config::from_file(a.string());
  cfg.set_override("x=9");
  CHECK(cfg.hash() != hash_a);
  CHECK(cfg.canonical() == "x=9\ny=2\n");
}

TEST_CASE("csv writer emits provenance comments and exact doubles") {
  const fs::path dir = scratch_dir() / "csv";
  {
    CsvWriter csv(dir.string(), "t.csv", "feedc0defeedc0de", {"a", "b", "c"});
    csv.row() << 1 << 1.0 / 3.0 << std::string("txt");
    csv.row() << -2 << 0.1 << std::string();
  }
  const auto lines = lines_of(slurp(dir / "t.csv"));
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "# config feedc0defeedc0de");
  CHECK(lines[1] == std::string("# artifact ") + kArtifactVersion);
  CHECK(lines[2] == "a,b,c");
  CHECK(lines[4] == "-2,0.10000000000000001,");
  // %.17g rows survive a text round trip bit-for-bit
  const std::string third = lines[3].substr(2, lines[3].size() - 6);
  CHECK(std::strtod(third.c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("run config validates every field before compute") {
  auto parse = [](const std::string& text) {
    Config cfg;
    std::stringstream ss(text);
    std::string kv;
    while (std::getline(ss, kv, ';'))
      if (!kv.empty()) cfg.set_override(kv);
    return parse_run_config(cfg);
  };
  RunConfig rc = parse("");
  CHECK(rc.problem == "smc");
  CHECK(rc.solver == "gmres");
  CHECK(rc.inner == InnerProduct::energy);
  CHECK(rc.out_dir == "out");
  CHECK(rc.workers == 1);
  CHECK_FALSE(rc.n_loc_tol.has_value());

  CHECK(parse("m=3").mx == 3);
  CHECK(parse("m=3;mx=5").mx == 5);
  CHECK(parse("m=3;mx=5").my == 3);
  CHECK(parse("inner=l2").inner == InnerProduct::l2);
  CHECK(parse("n_loc_tol=0.5").n_loc_tol.value() == 0.5);
  CHECK(parse("subdomain=3").subdomain == "3");

  CHECK_THROWS_AS(parse("problem=poisson"), ConfigError);
  CHECK_THROWS_AS(parse("solver=banana"), ConfigError);
  CHECK_THROWS_AS(parse("inner=h1"), ConfigError);
  CHECK_THROWS_AS(parse("tol=0"), ConfigError);
  CHECK_THROWS_AS(parse("tol=-1"), ConfigError);
  CHECK_THROWS_AS(parse("max_iter=0"), ConfigError);
  CHECK_THROWS_AS(parse("overlap=0"), ConfigError);
  CHECK_THROWS_AS(parse("oversample=-1"), ConfigError);
  CHECK_THROWS_AS(parse("m=0"), ConfigError);
  CHECK_THROWS_AS(parse("workers=0"), ConfigError);
  CHECK_THROWS_AS(parse("n_loc=-1"), ConfigError);
  CHECK_THROWS_AS(parse("n_loc_tol=0"), ConfigError);
  CHECK_THROWS_AS(parse("n_loc_sweep=5,-1"), ConfigError);
  CHECK_THROWS_AS(parse("subdomain=center"), ConfigError);
  CHECK_THROWS_AS(parse("subdomain=-2"), ConfigError);
  CHECK_THROWS_AS(parse("totally_unknown=1"), ConfigError);
}

TEST_CASE("subdomain selection honors interior, all and index") {
  Config cfg;
  cfg.set_override("problem=manufactured");
  cfg.set_override("man_cells=8");
  cfg.set_override("m=2");
  cfg.set_override("overlap=1");
  cfg.set_override("oversample=1");
  RunConfig rc = parse_run_config(cfg);
  Pipeline p = build_pipeline(rc);
  REQUIRE(p.decomp.subdomains.size() == 4);

  rc.subdomain = "all";
  CHECK(selected_subdomains(rc, p.decomp) == std::vector<int>{0, 1, 2, 3});
  rc.subdomain = "2";
  CHECK(selected_subdomains(rc, p.decomp) == std::vector<int>{2});
  rc.subdomain = "interior";
  const auto sel = selected_subdomains(rc, p.decomp);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0] == most_interior_subdomain(p.decomp));
  rc.subdomain = "9";
  CHECK_THROWS_AS(selected_subdomains(rc, p.decomp), ConfigError);
}

TEST_CASE("single-subdomain eigdecay writes a header-only csv") {
  Config cfg;
  cfg.set_override("problem=manufactured");
  cfg.set_override("man_cells=8");
  cfg.set_override("m=1");
  const fs::path dir = scratch_dir() / "empty_iface";
  cfg.set_override("out=" + dir.string());
  RunConfig rc = parse_run_config(cfg);
  Pipeline p = build_pipeline(rc);
  REQUIRE(p.decomp.subdomains.size() == 1);
  REQUIRE(p.decomp.subdomains[0].interface_dofs.empty());
  cmd_eigdecay(rc);
  const auto lines = lines_of(slurp(dir / "eigenvalues.csv"));
  REQUIRE(lines.size() == 3);
  CHECK(lines[2] == "subdomain_id,k,lambda_k,ovsp");
}

TEST_CASE("eigdecay row count matches the computed spectra") {
  Config cfg;
  cfg.set_override("problem=manufactured");
  cfg.set_override("man_cells=8");
  cfg.set_override("m=2");
  cfg.set_override("overlap=1");
  cfg.set_override("oversample=1");
  cfg.set_override("n_eig=6");
  cfg.set_override("subdomain=all");
  const fs::path dir = scratch_dir() / "eig_rows";
  cfg.set_override("out=" + dir.string());
  RunConfig rc = parse_run_config(cfg);
  cmd_eigdecay(rc);

  Pipeline p = build_pipeline(rc);
  MsgfemReduction red = build_reduction(p, rc, 6);
  std::size_t expect = 0;
  for (const auto& loc : red.locals) expect += loc.eigenvalues.size();
  const auto lines = lines_of(slurp(dir / "eigenvalues.csv"));
  REQUIRE(lines.size() == 3 + expect);
  // every row tags its subdomain and the oversample width used
  for (std::size_t k = 3; k < lines.size(); ++k) {
    CHECK(lines[k].back() == '1');
    CHECK(lines[k].find(',') != std::string::npos);
  }
}

TEST_CASE("cli runs every subcommand with exit code 0") {
  const fs::path cfg = write_file("tiny.cfg", kTinySmc);
  const fs::path out = scratch_dir() / "cli_ok";
  const std::string base = cfg.string() + " out=" + out.string();
  CHECK(run_cli("mesh-dump " + base) == 0);
  CHECK(run_cli("topo " + base + " n_eig=6") == 0);
  CHECK(run_cli("eigdecay " + base + " n_eig=6") == 0);
  CHECK(run_cli("approx " + base + " n_loc_sweep=2,4") == 0);
  CHECK(run_cli("solve " + base + " solver=gmres n_loc=6") == 0);
  for (const char* f :
       {"vertices.csv", "triangles.csv", "edges.csv", "topology.csv", "eigenvalues.csv",
        "errors.csv", "iterations.csv"}) {
    CAPTURE(f);
    const auto lines = lines_of(slurp(out / f));
    REQUIRE(lines.size() >= 3);
    CHECK(lines[0].rfind("# config ", 0) == 0);
    CHECK(lines[1] == std::string("# artifact ") + kArtifactVersion);
  }
}

TEST_CASE("cli maps failures to the documented exit codes") {
  const fs::path cfg = write_file("tiny.cfg", kTinySmc);
  const fs::path out = scratch_dir() / "cli_fail";
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate " + cfg.string()) == 2);
  CHECK(run_cli("solve " + (scratch_dir() / "no_such.cfg").string()) == 2);
  CHECK(run_cli("solve " + cfg.string() + " nonsense_key=1") == 2);
  CHECK(run_cli("solve " + cfg.string() + " fill=0.77") == 2);  // unresolvable fill

  // starved iteration budget: partial history still lands on disk
  const int rc = run_cli("solve " + cfg.string() + " out=" + out.string() +
                         " solver=richardson n_loc=0 max_iter=4 tol=1e-12");
  CHECK(rc == 3);
  const auto lines = lines_of(slurp(out / "iterations.csv"));
  CHECK(lines.size() == 3 + 5);  // initial residual plus four iterations
}

TEST_CASE("cli outputs are bitwise deterministic") {
  const fs::path cfg = write_file("tiny.cfg", kTinySmc);
  const fs::path o1 = scratch_dir() / "det1";
  const fs::path o2 = scratch_dir() / "det2";
  const std::string args = cfg.string() + " solver=gmres n_loc=6 n_loc_sweep=2,4";
  REQUIRE(run_cli("solve " + args + " out=" + o1.string()) == 0);
  REQUIRE(run_cli("solve " + args + " out=" + o2.string()) == 0);
  REQUIRE(run_cli("approx " + args + " out=" + o1.string()) == 0);
  REQUIRE(run_cli("approx " + args + " out=" + o2.string()) == 0);
  REQUIRE(run_cli("eigdecay " + args + " out=" + o1.string() + " n_eig=8") == 0);
  REQUIRE(run_cli("eigdecay " + args + " out=" + o2.string() + " n_eig=8") == 0);
  // the provenance hash identifies the experiment, not the output directory
  // or worker count, so the artifacts match byte for byte
  CHECK(slurp(o1 / "iterations.csv") == slurp(o2 / "iterations.csv"));
  CHECK(slurp(o1 / "errors.csv") == slurp(o2 / "errors.csv"));
  CHECK(slurp(o1 / "eigenvalues.csv") == slurp(o2 / "eigenvalues.csv"));

  const fs::path w2 = scratch_dir() / "det_w2";
  REQUIRE(run_cli("approx " + args + " out=" + w2.string() + " workers=2") == 0);
  CHECK(slurp(o1 / "errors.csv") == slurp(w2 / "errors.csv"));
}

TEST_CASE("environment variable overrides the configured output directory") {
  const fs::path cfg = write_file("tiny.cfg", kTinySmc);
  const fs::path envdir = scratch_dir() / "env_out";
  const fs::path cfgdir = scratch_dir() / "cfg_out";
  fs::remove_all(envdir);
  fs::remove_all(cfgdir);
  const char* bin = std::getenv("MSGFEM_CLI");
  const std::string cmd = "MSGFEM_OUT_DIR=" + envdir.string() + " " +
                          std::string(bin && *bin ? bin : "./msgfem") + " mesh-dump " +
                          cfg.string() + " out=" + cfgdir.string() + " >/dev/null 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(envdir / "vertices.csv"));
  CHECK_FALSE(fs::exists(cfgdir));
}

TEST_CASE("solve csv fills optional columns only when asked") {
  const fs::path cfg = write_file("tiny.cfg", kTinySmc);
  const fs::path with = scratch_dir() / "ref_on";
  const fs::path without = scratch_dir() / "ref_off";
  const std::string args = cfg.string() + " solver=gmres n_loc=6";
  REQUIRE(run_cli("solve " + args + " out=" + with.string() + " timing=true") == 0);
  REQUIRE(run_cli("solve " + args + " out=" + without.string() + " reference=false") == 0);
  const auto rows_on = lines_of(slurp(with / "iterations.csv"));
  const auto rows_off = lines_of(slurp(without / "iterations.csv"));
  REQUIRE(rows_on.size() == rows_off.size());
  REQUIRE(rows_on.size() > 3);
  auto field = [](const std::string& line, int idx) {
    std::stringstream ss(line);
    std::string part;
    for (int i = 0; i <= idx; ++i) std::getline(ss, part, ',');
    return part;
  };
  // column 2 (energy_error) tracks the direct reference unless disabled
  CHECK_FALSE(field(rows_on[3], 2).empty());
  CHECK(field(rows_off[3], 2).empty());
  // timing=true: cumulative wall time per iteration, nondecreasing;
  // default: blank, keeping the artifact reproducible
  CHECK(field(rows_off[3], 3).empty());
  double prev = 0.0;
  for (std::size_t k = 3; k < rows_on.size(); ++k) {
    const double s = std::stod(field(rows_on[k], 3));
    CHECK(s >= prev);
    prev = s;
  }
}
