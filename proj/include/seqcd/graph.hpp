#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seqcd/error.hpp"

namespace seqcd {

using SignVector = std::vector<int>;

/// Symmetric 0/1 adjacency matrix of an undirected simple graph, stored
/// densely (row-major bytes).
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  explicit AdjacencyMatrix(std::size_t n) : n_(n), entries_(n * n, 0) {}

  static AdjacencyMatrix from_edges(std::size_t n,
                                    std::span<const std::pair<std::size_t, std::size_t>> edges) {
    AdjacencyMatrix a(n);
    for (auto [u, v] : edges) a.add_edge(u, v);
    return a;
  }

  std::size_t size() const noexcept { return n_; }

  bool operator()(std::size_t u, std::size_t v) const noexcept { return entries_[u * n_ + v] != 0; }

  /// Idempotent; rejects self-loops and out-of-range ids.
  void add_edge(std::size_t u, std::size_t v) {
    if (u >= n_ || v >= n_)
      throw Error(ErrorCode::IdOutOfRange, "edge (" + std::to_string(u) + ", " +
                                               std::to_string(v) + ") with n = " + std::to_string(n_));
    if (u == v) throw Error(ErrorCode::SelfLoop, "vertex " + std::to_string(u));
    if (!entries_[u * n_ + v]) ++edges_;
    entries_[u * n_ + v] = 1;
    entries_[v * n_ + u] = 1;
  }

  std::size_t edge_count() const noexcept { return edges_; }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    out.reserve(edges_);
    for (std::size_t u = 0; u < n_; ++u)
      for (std::size_t v = u + 1; v < n_; ++v)
        if ((*this)(u, v)) out.emplace_back(u, v);
    return out;
  }

  bool operator==(const AdjacencyMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::size_t edges_ = 0;
  std::vector<std::uint8_t> entries_;
};

/// Community assignment. Labels are 0-based: 0 .. count()-1, each used at
/// least once.
class Partition {
 public:
  Partition() = default;

  explicit Partition(std::vector<int> labels) : labels_(std::move(labels)) {
    int k = 0;
    for (int l : labels_) {
      if (l < 0) throw Error(ErrorCode::InvalidArgument, "negative community label");
      k = std::max(k, l + 1);
    }
    std::vector<char> seen(static_cast<std::size_t>(k), 0);
    for (int l : labels_) seen[static_cast<std::size_t>(l)] = 1;
    for (int c = 0; c < k; ++c)
      if (!seen[static_cast<std::size_t>(c)])
        throw Error(ErrorCode::DegeneratePartition, "community " + std::to_string(c) + " is empty");
    count_ = k;
  }

  static Partition single(std::size_t n) { return Partition(std::vector<int>(n, 0)); }

  std::size_t size() const noexcept { return labels_.size(); }
  int count() const noexcept { return count_; }
  int operator[](std::size_t v) const noexcept { return labels_[v]; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  std::vector<std::size_t> members(int community) const {
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < labels_.size(); ++v)
      if (labels_[v] == community) out.push_back(v);
    return out;
  }

  std::vector<std::size_t> community_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(count_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  /// Moves the vertices of `community` with s = -1 into a new community
  /// labelled count(). `s` is indexed like members(community).
  Partition split(int community, std::span<const int> s) const {
    std::vector<int> next = labels_;
    std::size_t i = 0;
    for (std::size_t v = 0; v < next.size(); ++v) {
      if (next[v] != community) continue;
      if (s[i++] < 0) next[v] = count_;
    }
    return Partition(std::move(next));
  }

  bool operator==(const Partition&) const = default;

 private:
  std::vector<int> labels_;
  int count_ = 0;
};

/// B_uv = A_uv - k_u k_v / 2m, or its restriction to one community with the
/// diagonal correction. `two_m` always refers to the whole graph.
struct ModularityMatrix {
  Eigen::MatrixXd values;
  double two_m = 0.0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

inline std::vector<std::size_t> degrees(const AdjacencyMatrix& a) {
  const std::size_t n = a.size();
  std::vector<std::size_t> k(n, 0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v) k[u] += a(u, v) ? 1 : 0;
  return k;
}

inline ModularityMatrix modularity_matrix(const AdjacencyMatrix& a) {
  if (a.edge_count() == 0) throw Error(ErrorCode::EmptyGraph, "modularity is undefined for m = 0");
  const auto n = static_cast<Eigen::Index>(a.size());
  const auto k = degrees(a);
  Eigen::VectorXd kv(n);
  for (Eigen::Index i = 0; i < n; ++i) kv(i) = static_cast<double>(k[static_cast<std::size_t>(i)]);
  const double two_m = 2.0 * static_cast<double>(a.edge_count());

  ModularityMatrix b;
  b.two_m = two_m;
  b.values = -(kv * kv.transpose()) / two_m;
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index v = 0; v < n; ++v)
      if (a(static_cast<std::size_t>(u), static_cast<std::size_t>(v))) b.values(u, v) += 1.0;
  return b;
}

namespace detail {

inline void check_signs(std::size_t n, std::span<const int> s) {
  if (s.size() != n)
    throw Error(ErrorCode::DimensionMismatch,
                "sign vector length " + std::to_string(s.size()) + " vs matrix order " + std::to_string(n));
  for (int x : s)
    if (x != 1 && x != -1) throw Error(ErrorCode::InvalidArgument, "sign vector entries must be +1 or -1");
}

inline double quadratic_form(const Eigen::MatrixXd& m, std::span<const int> s) {
  const auto n = m.rows();
  Eigen::VectorXd sv(n);
  for (Eigen::Index i = 0; i < n; ++i) sv(i) = s[static_cast<std::size_t>(i)];
  return sv.dot(m * sv);
}

}  // namespace detail

/// Q = s^T B s / 4m for a two-way split.
inline double bisection_modularity(const ModularityMatrix& b, std::span<const int> s) {
  detail::check_signs(b.size(), s);
  return detail::quadratic_form(b.values, s) / (2.0 * b.two_m);
}

/// Total modularity (1/2m) sum_{uv} (A_uv - k_u k_v/2m) [c_u == c_v] for any
/// number of communities. Reduces to bisection_modularity for two parts.
inline double partition_modularity(const AdjacencyMatrix& a, const Partition& p) {
  if (a.edge_count() == 0) throw Error(ErrorCode::EmptyGraph, "modularity is undefined for m = 0");
  if (p.size() != a.size())
    throw Error(ErrorCode::DimensionMismatch, "partition size does not match the graph");
  const std::size_t n = a.size();
  const auto k = degrees(a);
  const double two_m = 2.0 * static_cast<double>(a.edge_count());

  // sum over communities of (internal ordered pairs) - (degree total)^2 / 2m
  std::vector<double> internal(static_cast<std::size_t>(p.count()), 0.0);
  std::vector<double> total(static_cast<std::size_t>(p.count()), 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    const auto c = static_cast<std::size_t>(p[u]);
    total[c] += static_cast<double>(k[u]);
    for (std::size_t v = 0; v < n; ++v)
      if (a(u, v) && p[v] == p[u]) internal[c] += 1.0;
  }
  double q = 0.0;
  for (std::size_t c = 0; c < internal.size(); ++c) q += internal[c] - total[c] * total[c] / two_m;
  return q / two_m;
}

/// B^(g)_uv = B_uv - delta_uv sum_{l in g} B_ul restricted to the members of
/// community g (members given in increasing order by convention).
inline ModularityMatrix generalized_modularity_matrix(const ModularityMatrix& b,
                                                      std::span<const std::size_t> members) {
  if (members.empty()) throw Error(ErrorCode::EmptySubset, "community has no members");
  const auto nj = static_cast<Eigen::Index>(members.size());
  ModularityMatrix g;
  g.two_m = b.two_m;
  g.values.resize(nj, nj);
  for (Eigen::Index i = 0; i < nj; ++i) {
    const auto u = static_cast<Eigen::Index>(members[static_cast<std::size_t>(i)]);
    if (u >= b.values.rows())
      throw Error(ErrorCode::IdOutOfRange, "member " + std::to_string(u) + " outside the matrix");
    double row = 0.0;
    for (Eigen::Index j = 0; j < nj; ++j) {
      const double x = b.values(u, static_cast<Eigen::Index>(members[static_cast<std::size_t>(j)]));
      g.values(i, j) = x;
      row += x;
    }
    g.values(i, i) -= row;
  }
  return g;
}

/// delta Q_g = s^T B^(g) s / 4m.
inline double additional_modularity(const ModularityMatrix& bg, std::span<const int> s) {
  return bisection_modularity(bg, s);
}

}  // namespace seqcd
