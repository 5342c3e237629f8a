// msgfem — structured H(curl) multiscale experiments.
//
// Usage:  msgfem <subcommand> <config-file> [key=value ...]
//
// Subcommands: eigdecay | approx | solve | topo | mesh-dump.  Command-line
// key=value pairs override config-file entries; the MSGFEM_OUT_DIR
// environment variable overrides the output directory last of all.
//
// Exit codes: 0 success, 2 configuration error, 3 solver divergence,
// 4 internal assertion failure.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "msgfem/experiments.hpp"

namespace {

int usage(const char* argv0) {
  std::fprintf(stderr,
               "usage: %s <eigdecay|approx|solve|topo|mesh-dump> <config-file> "
               "[key=value ...]\n",
               argv0);
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) return usage(argv[0]);
  const std::string cmd = argv[1];
  if (cmd != "eigdecay" && cmd != "approx" && cmd != "solve" && cmd != "topo" &&
      cmd != "mesh-dump")
    return usage(argv[0]);

  try {
    msgfem::Config cfg = msgfem::Config::from_file(argv[2]);
    for (int i = 3; i < argc; ++i) cfg.set_override(argv[i]);
    if (const char* env = std::getenv("MSGFEM_OUT_DIR"); env && *env) cfg.set("out", env);

    msgfem::RunConfig rc = msgfem::parse_run_config(cfg);
    if (cmd == "eigdecay")
      msgfem::cmd_eigdecay(rc);
    else if (cmd == "approx")
      msgfem::cmd_approx(rc);
    else if (cmd == "solve")
      msgfem::cmd_solve(rc);
    else if (cmd == "topo")
      msgfem::cmd_topo(rc);
    else
      msgfem::cmd_mesh_dump(rc);
    return 0;
  } catch (const msgfem::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const msgfem::DivergenceError& e) {
    std::fprintf(stderr, "solver divergence: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
}
