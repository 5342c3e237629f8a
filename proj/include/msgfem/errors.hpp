#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace msgfem {

/// Invalid user-facing configuration (bad key, unresolvable geometry, ...).
/// The CLI maps this to its "configuration error" exit code.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative solve failed to converge (divergence or iteration cap).
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// A matrix handed to a Cholesky factorization was not positive definite.
/// Carries the offending pivot index in the caller's numbering.
struct NotSpdError : std::runtime_error {
  NotSpdError(const std::string& where, int pivot)
      : std::runtime_error(where + ": matrix not SPD at pivot " + std::to_string(pivot)),
        pivot_index(pivot) {}
  int pivot_index;
};

/// Broken internal invariant; the CLI maps this to its "internal error" code.
struct InternalError : std::logic_error {
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {
[[noreturn]] inline void require_fail(const char* expr, const char* file, int line) {
  std::ostringstream os;
  os << "internal invariant violated: " << expr << " (" << file << ":" << line << ")";
  throw InternalError(os.str());
}
}  // namespace detail

// Always-on invariant check (unit and acceptance builds both keep these).
#define MSGFEM_REQUIRE(expr) \
  ((expr) ? (void)0 : ::msgfem::detail::require_fail(#expr, __FILE__, __LINE__))

}  // namespace msgfem
