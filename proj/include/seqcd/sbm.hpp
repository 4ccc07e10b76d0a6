#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "seqcd/error.hpp"
#include "seqcd/graph.hpp"
#include "seqcd/random.hpp"

namespace seqcd {

/// Stochastic block model: contiguous blocks of the given sizes and a
/// symmetric K x K edge-probability matrix.
struct SbmParams {
  std::vector<std::size_t> block_sizes;
  Eigen::MatrixXd probabilities;

  std::size_t blocks() const noexcept { return block_sizes.size(); }

  std::size_t vertices() const noexcept {
    std::size_t n = 0;
    for (auto s : block_sizes) n += s;
    return n;
  }

  void validate() const {
    const auto k = static_cast<Eigen::Index>(block_sizes.size());
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "SBM needs at least one block");
    if (probabilities.rows() != k || probabilities.cols() != k)
      throw Error(ErrorCode::DimensionMismatch, "probability matrix must be K x K");
    for (auto s : block_sizes)
      if (s == 0) throw Error(ErrorCode::DegeneratePartition, "SBM block of size 0");
    for (Eigen::Index a = 0; a < k; ++a)
      for (Eigen::Index b = 0; b < k; ++b) {
        const double p = probabilities(a, b);
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "edge probability outside [0, 1]");
        if (p != probabilities(b, a)) throw Error(ErrorCode::NotSymmetric, "probability matrix is not symmetric");
      }
  }

  /// Vertex labels of the planted partition (contiguous blocks).
  Partition planted_partition() const {
    std::vector<int> labels;
    labels.reserve(vertices());
    for (std::size_t b = 0; b < block_sizes.size(); ++b)
      labels.insert(labels.end(), block_sizes[b], static_cast<int>(b));
    return Partition(std::move(labels));
  }
};

/// Sizes of K blocks over n vertices differing by at most one; the first
/// n mod K blocks get the extra vertex.
inline std::vector<std::size_t> balanced_sizes(std::size_t k, std::size_t n) {
  if (k == 0 || k > n)
    throw Error(ErrorCode::InvalidArgument,
                "need 1 <= K <= n, got K = " + std::to_string(k) + ", n = " + std::to_string(n));
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

/// P = 2 eps I + (0.5 - eps) 1 1^T: within-block 0.5 + eps, between 0.5 - eps.
inline SbmParams planted_params(std::size_t k, std::size_t n, double eps) {
  if (!(eps >= 0.0 && eps <= 0.5))
    throw Error(ErrorCode::InvalidEps, "eps must lie in [0, 0.5], got " + std::to_string(eps));
  SbmParams p;
  p.block_sizes = balanced_sizes(k, n);
  const auto kk = static_cast<Eigen::Index>(k);
  p.probabilities = Eigen::MatrixXd::Constant(kk, kk, 0.5 - eps);
  p.probabilities.diagonal().setConstant(0.5 + eps);
  return p;
}

struct SbmSample {
  AdjacencyMatrix adjacency;
  Partition planted;
};

/// One SBM draw. Pairs u < v are visited row-major, one uniform draw each,
/// from a single engine seeded with `seed`.
inline SbmSample generate(const SbmParams& params, std::uint64_t seed) {
  params.validate();
  SbmSample out{AdjacencyMatrix(params.vertices()), params.planted_partition()};
  const std::size_t n = params.vertices();
  const auto& labels = out.planted.labels();
  Engine eng(seed);
  for (std::size_t u = 0; u < n; ++u) {
    const auto bu = static_cast<Eigen::Index>(labels[u]);
    for (std::size_t v = u + 1; v < n; ++v) {
      const double p = params.probabilities(bu, static_cast<Eigen::Index>(labels[v]));
      if (uniform01(eng) < p) out.adjacency.add_edge(u, v);
    }
  }
  return out;
}

/// Observed edge and pair counts between (and within) communities.
struct BlockCounts {
  Eigen::MatrixXd edges;
  Eigen::MatrixXd pairs;
};

inline BlockCounts block_counts(const AdjacencyMatrix& a, const Partition& p) {
  if (p.size() != a.size()) throw Error(ErrorCode::DimensionMismatch, "partition size does not match the graph");
  const auto k = static_cast<Eigen::Index>(p.count());
  BlockCounts c{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k)};
  const auto sizes = p.community_sizes();
  for (Eigen::Index x = 0; x < k; ++x)
    for (Eigen::Index y = 0; y < k; ++y) {
      const auto sx = static_cast<double>(sizes[static_cast<std::size_t>(x)]);
      const auto sy = static_cast<double>(sizes[static_cast<std::size_t>(y)]);
      c.pairs(x, y) = x == y ? sx * (sx - 1.0) / 2.0 : sx * sy;
    }
  for (auto [u, v] : a.edges()) {
    const auto x = static_cast<Eigen::Index>(p[u]);
    const auto y = static_cast<Eigen::Index>(p[v]);
    c.edges(x, y) += 1.0;
    if (x != y) c.edges(y, x) += 1.0;
  }
  return c;
}

/// Block parameters from an observed partition with Laplace smoothing:
/// P_ab = (E_ab + 1) / (N_ab + 2). Block order follows the community labels,
/// so the fitted model generates vertices in label-sorted order.
inline SbmParams fit_from_partition(const AdjacencyMatrix& a, const Partition& p) {
  if (p.count() == 0) throw Error(ErrorCode::DegeneratePartition, "partition has no communities");
  const BlockCounts c = block_counts(a, p);
  SbmParams out;
  out.block_sizes = p.community_sizes();
  out.probabilities = (c.edges.array() + 1.0) / (c.pairs.array() + 2.0);
  return out;
}

}  // namespace seqcd
