#pragma once

// Small fixtures and brute-force oracles shared by the unit suites. The
// oracles deliberately avoid the library's matrix machinery: they count edges
// and degrees directly.

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "seqcd/seqcd.hpp"

namespace seqcd::testing {

// Two triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
inline AdjacencyMatrix barbell() {
  const std::vector<std::pair<std::size_t, std::size_t>> e{{0, 1}, {0, 2}, {1, 2}, {2, 3}, {3, 4}, {3, 5}, {4, 5}};
  return AdjacencyMatrix::from_edges(6, e);
}

inline AdjacencyMatrix complete_graph(std::size_t n) {
  AdjacencyMatrix a(n);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v) a.add_edge(u, v);
  return a;
}

// G(n, p) with its own engine; retries until at least one edge exists.
inline AdjacencyMatrix random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    AdjacencyMatrix a(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (u(eng) < p) a.add_edge(i, j);
    if (a.edge_count() > 0) return a;
  }
}

// Q = sum_c [ L_c / m - (d_c / 2m)^2 ] from edge and degree counts.
inline double naive_modularity(const AdjacencyMatrix& a, const std::vector<int>& labels) {
  const std::size_t n = a.size();
  int k = 0;
  for (int l : labels) k = std::max(k, l + 1);
  std::vector<double> inside(static_cast<std::size_t>(k), 0.0), degree(static_cast<std::size_t>(k), 0.0);
  double m = 0.0;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) {
      if (!a(u, v)) continue;
      degree[static_cast<std::size_t>(labels[u])] += 1.0;
      if (u < v) {
        m += 1.0;
        if (labels[u] == labels[v]) inside[static_cast<std::size_t>(labels[u])] += 1.0;
      }
    }
  double q = 0.0;
  for (std::size_t c = 0; c < inside.size(); ++c) q += inside[c] / m - (degree[c] / (2.0 * m)) * (degree[c] / (2.0 * m));
  return q;
}

// Best two-way modularity over every subset containing vertex 0 (plain
// enumeration, no Gray code, no matrices).
inline double exhaustive_best_bisection(const AdjacencyMatrix& a) {
  const std::size_t n = a.size();
  double best = naive_modularity(a, std::vector<int>(n, 0));
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    std::vector<int> labels(n, 0);
    for (std::size_t v = 1; v < n; ++v) labels[v] = (mask >> (v - 1)) & 1U ? 1 : 0;
    best = std::max(best, naive_modularity(a, labels));
  }
  return best;
}

inline std::vector<int> labels_from_signs(const SignVector& s) {
  std::vector<int> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] > 0 ? 0 : 1;
  return out;
}

}  // namespace seqcd::testing
