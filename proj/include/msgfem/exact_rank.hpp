#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "msgfem/errors.hpp"

namespace msgfem {

/**
 * @brief Exact rank of an integer matrix over the rationals.
 *
 * Fraction-free (Bareiss) elimination with deterministic first-nonzero
 * pivoting; every division is exact, so the result is the true rank, not a
 * floating-point estimate. Intermediate values are minors of the input;
 * throws if one leaves the 64-bit range (incidence matrices stay at ±1).
 */
inline int integer_rank(int rows, int cols, std::span<const std::int64_t> entries) {
  MSGFEM_REQUIRE(rows >= 0 && cols >= 0);
  MSGFEM_REQUIRE(entries.size() == static_cast<std::size_t>(rows) * cols);
  std::vector<std::int64_t> m(entries.begin(), entries.end());
  auto at = [&](int r, int c) -> std::int64_t& {
    return m[static_cast<std::size_t>(r) * cols + c];
  };
  constexpr std::int64_t kMax = INT64_MAX;
  int rank = 0;
  __int128 prev = 1;
  for (int col = 0; col < cols && rank < rows; ++col) {
    int piv = -1;
    for (int r = rank; r < rows; ++r)
      if (at(r, col) != 0) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    if (piv != rank)
      for (int c = 0; c < cols; ++c) std::swap(at(piv, c), at(rank, c));
    const __int128 p = at(rank, col);
    for (int r = rank + 1; r < rows; ++r) {
      const __int128 mr = at(r, col);
      for (int c = col + 1; c < cols; ++c) {
        __int128 t = (p * at(r, c) - mr * at(rank, c)) / prev;
        if (t > kMax || t < -static_cast<__int128>(kMax) - 1)
          throw InternalError("integer_rank: 64-bit overflow in fraction-free elimination");
        at(r, c) = static_cast<std::int64_t>(t);
      }
      at(r, col) = 0;
    }
    prev = p;
    ++rank;
  }
  return rank;
}

}  // namespace msgfem
