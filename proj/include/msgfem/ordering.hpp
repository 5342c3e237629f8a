#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "msgfem/sparse.hpp"

namespace msgfem {

/**
 * @brief Reverse Cuthill–McKee ordering of a symmetric sparsity pattern.
 *
 * Deterministic: BFS ties break by (degree, index), the start vertex of each
 * component is pseudo-peripheral (two level-set sweeps). Returns perm with
 * perm[k] = original index eliminated k-th.
 */
inline std::vector<int> ordering_rcm(const SparseMatrix& a) {
  MSGFEM_REQUIRE(a.rows() == a.cols());
  const int n = a.rows();
  std::vector<int> degree(n);
  for (int i = 0; i < n; ++i) degree[i] = static_cast<int>(a.row_cols(i).size());
  std::vector<int> order;
  order.reserve(n);
  std::vector<char> placed(n, 0);
  std::vector<int> level(n, -1), queue;
  queue.reserve(n);

  auto bfs_levels = [&](int root, int stamp) {
    // Returns the queue of the BFS tree from root; level[] stamped by depth.
    queue.clear();
    queue.push_back(root);
    level[root] = stamp;
    std::vector<int> depth(1, 0);
    std::size_t head = 0;
    std::vector<int> d(n, 0);
    d[root] = 0;
    while (head < queue.size()) {
      int v = queue[head++];
      std::vector<int> nb;
      for (int w : a.row_cols(v))
        if (w != v && level[w] != stamp && !placed[w]) nb.push_back(w);
      std::sort(nb.begin(), nb.end(), [&](int p, int q) {
        return degree[p] != degree[q] ? degree[p] < degree[q] : p < q;
      });
      for (int w : nb) {
        level[w] = stamp;
        d[w] = d[v] + 1;
        queue.push_back(w);
      }
    }
    int maxd = 0;
    for (int v : queue) maxd = std::max(maxd, d[v]);
    int far = queue.back();
    for (int v : queue)
      if (d[v] == maxd && (degree[v] < degree[far] || (degree[v] == degree[far] && v < far)))
        far = v;
    return std::pair<std::vector<int>, int>(queue, far);
  };

  int stamp = 0;
  for (int seed = 0; seed < n; ++seed) {
    if (placed[seed]) continue;
    int root = seed;
    for (int sweep = 0; sweep < 2; ++sweep) root = bfs_levels(root, ++stamp).second;
    auto [component, far] = bfs_levels(root, ++stamp);
    (void)far;
    for (int v : component) {
      placed[v] = 1;
      order.push_back(v);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

/**
 * @brief Geometric nested-dissection ordering for meshes with coordinates.
 *
 * Recursive coordinate bisection along the wider bounding-box axis; the
 * separator (second-half vertices adjacent to the first half) is numbered
 * last. Deterministic (median split with index tie-breaks). Cuts fill and
 * factor work far below profile orderings on structured 2D problems.
 */
inline std::vector<int> ordering_dissect(const SparseMatrix& a, std::span<const double> x,
                                         std::span<const double> y) {
  MSGFEM_REQUIRE(a.rows() == a.cols());
  const int n = a.rows();
  MSGFEM_REQUIRE(static_cast<int>(x.size()) == n && static_cast<int>(y.size()) == n);
  std::vector<int> order;
  order.reserve(n);
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  std::vector<int> mark(n, -1);
  int epoch = 0;

  auto rec = [&](auto&& self, std::vector<int> sub) -> void {
    if (static_cast<int>(sub.size()) <= 40) {
      std::sort(sub.begin(), sub.end());
      order.insert(order.end(), sub.begin(), sub.end());
      return;
    }
    double xmin = x[sub[0]], xmax = xmin, ymin = y[sub[0]], ymax = ymin;
    for (int v : sub) {
      xmin = std::min(xmin, x[v]);
      xmax = std::max(xmax, x[v]);
      ymin = std::min(ymin, y[v]);
      ymax = std::max(ymax, y[v]);
    }
    const bool use_x = (xmax - xmin) >= (ymax - ymin);
    std::sort(sub.begin(), sub.end(), [&](int p, int q) {
      double cp = use_x ? x[p] : y[p];
      double cq = use_x ? x[q] : y[q];
      return cp != cq ? cp < cq : p < q;
    });
    const std::size_t half = sub.size() / 2;
    std::vector<int> first(sub.begin(), sub.begin() + half);
    std::vector<int> second(sub.begin() + half, sub.end());
    ++epoch;
    for (int v : first) mark[v] = epoch;
    std::vector<int> keep, sep;
    for (int v : second) {
      bool touches = false;
      for (int w : a.row_cols(v))
        if (mark[w] == epoch) {
          touches = true;
          break;
        }
      (touches ? sep : keep).push_back(v);
    }
    self(self, std::move(first));
    self(self, std::move(keep));
    std::sort(sep.begin(), sep.end());
    order.insert(order.end(), sep.begin(), sep.end());
  };
  rec(rec, std::move(all));
  MSGFEM_REQUIRE(static_cast<int>(order.size()) == n);
  return order;
}

}  // namespace msgfem
