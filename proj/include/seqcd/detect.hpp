#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqcd/error.hpp"
#include "seqcd/graph.hpp"
#include "seqcd/parallel.hpp"
#include "seqcd/random.hpp"
#include "seqcd/sbm.hpp"
#include "seqcd/spectral.hpp"

namespace seqcd {

/// How a community structure is subdivided.
struct DivisionOptions {
  SpectralOptions spectral{};
  /// After every split, greedily move single vertices between communities
  /// while total modularity increases.
  bool refine_moves = true;
  /// When no community has a positive split, still apply the best proper
  /// split of a community with lambda_1 > tol (its gain is then <= 0).
  /// Only communities with lambda_1 <= tol everywhere make the graph indivisible.
  bool split_nonpositive = true;
  /// Split and refine every candidate community, keep the highest Q.
  bool compare_candidates = true;
};

struct DetectOptions {
  int k_max = 20;
  std::size_t bootstrap = 200;  // null replicates per stage
  unsigned workers = 0;         // 0: hardware concurrency
  DivisionOptions division{};
  bool keep_samples = true;     // retain null samples and partitions in the trace
  /// End the trace after the first stage whose p-value exceeds this. K-hat is
  /// unaffected for every alpha below it; the step function above it is not.
  double stop_above = 1.0;
};

namespace detail {

/// Greedy vertex moves between communities of `labels`. Each move relocates
/// the vertex whose move raises Q the most; communities never become empty.
/// Returns the total modularity gained and marks every touched community.
inline double refine_partition(const ModularityMatrix& b, std::vector<int>& labels, int count,
                               std::vector<char>& touched) {
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto k = static_cast<Eigen::Index>(count);
  // s(u, c) = sum_{v in c} B_uv
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, k);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count), 0);
  for (Eigen::Index v = 0; v < n; ++v) {
    const int c = labels[static_cast<std::size_t>(v)];
    s.col(c) += b.values.col(v);
    ++sizes[static_cast<std::size_t>(c)];
  }
  const double scale = std::max(1.0, b.values.cwiseAbs().maxCoeff());
  double gained = 0.0;
  const auto limit = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) + 1;
  for (std::size_t moves = 0; moves < limit; ++moves) {
    Eigen::Index best_u = -1;
    int best_to = -1;
    double best = 1e-12 * scale;
    for (Eigen::Index u = 0; u < n; ++u) {
      const int from = labels[static_cast<std::size_t>(u)];
      if (sizes[static_cast<std::size_t>(from)] < 2) continue;
      const double stay = s(u, from) - b.values(u, u);
      for (int to = 0; to < count; ++to) {
        if (to == from) continue;
        const double delta = s(u, to) - stay;  // in units of 2 / 2m
        if (delta > best) {
          best = delta;
          best_u = u;
          best_to = to;
        }
      }
    }
    if (best_u < 0) break;
    const int from = labels[static_cast<std::size_t>(best_u)];
    s.col(from) -= b.values.col(best_u);
    s.col(best_to) += b.values.col(best_u);
    --sizes[static_cast<std::size_t>(from)];
    ++sizes[static_cast<std::size_t>(best_to)];
    labels[static_cast<std::size_t>(best_u)] = best_to;
    touched[static_cast<std::size_t>(from)] = 1;
    touched[static_cast<std::size_t>(best_to)] = 1;
    gained += 2.0 * best / b.two_m;
  }
  return gained;
}

}  // namespace detail

/// Hierarchical modularity subdivision. Holds the current partition and a
/// cache of the best bisection of every community, so each step only
/// re-bisects communities changed by the previous step.
class Divider {
 public:
  Divider(const AdjacencyMatrix& a, Partition start, DivisionOptions opt = {})
      : b_(modularity_matrix(a)), partition_(std::move(start)), opt_(opt) {
    if (partition_.size() != a.size())
      throw Error(ErrorCode::DimensionMismatch, "partition size does not match the graph");
    cache_.resize(static_cast<std::size_t>(partition_.count()));
  }

  explicit Divider(const AdjacencyMatrix& a, DivisionOptions opt = {})
      : Divider(a, Partition::single(a.size()), opt) {}

  const Partition& partition() const noexcept { return partition_; }
  const ModularityMatrix& modularity() const noexcept { return b_; }

  /// Best bisection of one community (cached).
  const Bisection& best_split(int community) {
    auto& slot = cache_[static_cast<std::size_t>(community)];
    if (!slot) {
      const auto members = partition_.members(community);
      slot = bisect(generalized_modularity_matrix(b_, members), opt_.spectral);
    }
    return *slot;
  }

  /// Applies one split (then the vertex-move refinement, if enabled) and
  /// returns Q(after) - Q(before); nullopt when the partition is indivisible.
  /// Candidates are the communities with a positive split or, failing that,
  /// those with a proper split. Without `compare_candidates` the candidate
  /// with the largest delta Q is taken; with it, each candidate is split and
  /// refined and the one reaching the highest Q wins. Ties go to the lowest id.
  std::optional<double> step() {
    std::vector<int> candidates;
    for (int c = 0; c < partition_.count(); ++c)
      if (best_split(c).divisible) candidates.push_back(c);
    const bool positive = !candidates.empty();
    if (!positive && opt_.split_nonpositive)
      for (int c = 0; c < partition_.count(); ++c)
        if (!cache_[static_cast<std::size_t>(c)]->proper_signs.empty()) candidates.push_back(c);
    if (candidates.empty()) return std::nullopt;

    auto split_of = [&](int c) -> const Bisection& { return *cache_[static_cast<std::size_t>(c)]; };
    auto score_of = [&](int c) { return positive ? split_of(c).score : split_of(c).proper_score; };
    if (!opt_.compare_candidates) {
      int best = candidates.front();
      for (int c : candidates)
        if (score_of(c) > score_of(best)) best = c;
      candidates = {best};
    }

    std::optional<Outcome> best;
    for (int c : candidates) {
      Outcome o = try_split(c, positive ? split_of(c).signs : split_of(c).proper_signs, score_of(c));
      if (!best || o.gain > best->gain + 1e-15) best = std::move(o);
    }

    cache_.emplace_back();
    partition_ = Partition(std::move(best->labels));
    cache_[static_cast<std::size_t>(best->split)].reset();
    for (std::size_t c = 0; c < best->touched.size(); ++c)
      if (best->touched[c]) cache_[c].reset();
    return best->gain;
  }

 private:
  struct Outcome {
    int split = 0;
    std::vector<int> labels;
    std::vector<char> touched;
    double gain = 0.0;
  };

  Outcome try_split(int c, const SignVector& signs, double score) const {
    Outcome o;
    o.split = c;
    o.labels = partition_.split(c, signs).labels();
    o.touched.assign(static_cast<std::size_t>(partition_.count()) + 1, 0);
    o.gain = score;
    if (opt_.refine_moves) o.gain += detail::refine_partition(b_, o.labels, partition_.count() + 1, o.touched);
    return o;
  }

  ModularityMatrix b_;
  Partition partition_;
  DivisionOptions opt_;
  std::vector<std::optional<Bisection>> cache_;
};

struct Division {
  Partition next;
  double gain = 0.0;  // Q(next) - Q(current)
};

/// One subdivision step from `current`; nullopt when indivisible.
inline std::optional<Division> divide_next(const AdjacencyMatrix& a, const Partition& current,
                                           const DivisionOptions& opt = {}) {
  Divider d(a, current, opt);
  auto gain = d.step();
  if (!gain) return std::nullopt;
  return Division{d.partition(), *gain};
}

/// Modularity gain of the (k -> k+1) split after dividing a fresh graph from
/// one community up to k. Zero whenever the graph becomes indivisible first
/// or has no edges.
inline double gain_at_stage(const AdjacencyMatrix& a, int k, const DivisionOptions& opt) {
  if (a.edge_count() == 0) return 0.0;
  Divider d(a, opt);
  for (int j = 1; j < k; ++j)
    if (!d.step()) return 0.0;
  return d.step().value_or(0.0);
}

/// B parametric-bootstrap draws of the stage-k statistic, k = fitted.blocks().
/// Replicate b uses the substream derive_seed(seed, {b}).
inline std::vector<double> null_gain_samples(const SbmParams& fitted, std::size_t count, std::uint64_t seed,
                                             unsigned workers = 1, const DivisionOptions& opt = {}) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "bootstrap count must be at least 1");
  fitted.validate();
  const int k = static_cast<int>(fitted.blocks());
  std::vector<double> out(count, 0.0);
  parallel_for(count, workers, [&](std::size_t b) {
    const SbmSample sample = generate(fitted, derive_seed(seed, {static_cast<std::uint64_t>(b)}));
    out[b] = gain_at_stage(sample.adjacency, k, opt);
  });
  return out;
}

/// (1 + #{null >= observed}) / (B + 1).
inline double p_value(double observed, std::span<const double> null_samples) {
  if (null_samples.empty()) throw Error(ErrorCode::InvalidArgument, "null sample is empty");
  const auto hits = std::count_if(null_samples.begin(), null_samples.end(),
                                  [observed](double x) { return x >= observed; });
  return static_cast<double>(1 + hits) / static_cast<double>(null_samples.size() + 1);
}

struct Stage {
  int j = 0;
  Partition partition;          // j communities (empty when samples are not kept)
  double observed_gain = 0.0;   // Delta Q^(j)
  std::vector<double> null_samples;
  double p_value = 1.0;
  bool indivisible = false;     // sentinel stage: no admissible split, p = 1
};

struct DetectionTrace {
  std::size_t n = 0;
  int k_max = 0;
  std::size_t bootstrap = 0;
  std::vector<Stage> stages;

  std::vector<double> p_values() const {
    std::vector<double> p;
    p.reserve(stages.size());
    for (const auto& s : stages) p.push_back(s.p_value);
    return p;
  }

  /// Value of K-hat once every computed p-value is <= alpha.
  int sentinel_value() const noexcept { return static_cast<int>(stages.size()) + 1; }
};

/// Trace from bare p-values (no partitions), used for step-function work and tests.
inline DetectionTrace trace_from_p_values(std::span<const double> p, int k_max = 0) {
  DetectionTrace t;
  t.k_max = k_max > 0 ? k_max : static_cast<int>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    Stage s;
    s.j = static_cast<int>(i) + 1;
    s.p_value = p[i];
    t.stages.push_back(std::move(s));
  }
  return t;
}

/// Sequential test trace: at stage j the observed gain of the j -> j+1 split
/// is compared against nulls drawn from the SBM fitted at the j-community
/// partition. Stops at k_max or at the first indivisible stage (p = 1).
inline DetectionTrace detect(const AdjacencyMatrix& a, const DetectOptions& opt, std::uint64_t seed) {
  if (a.edge_count() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
  if (opt.k_max < 1) throw Error(ErrorCode::InvalidArgument, "k_max must be at least 1");
  if (opt.bootstrap < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap count must be at least 1");

  DetectionTrace trace;
  trace.n = a.size();
  trace.k_max = opt.k_max;
  trace.bootstrap = opt.bootstrap;

  Divider divider(a, opt.division);
  for (int j = 1; j <= opt.k_max; ++j) {
    Stage stage;
    stage.j = j;
    Partition current = divider.partition();
    const auto gain = divider.step();
    if (!gain) {
      stage.indivisible = true;
      stage.p_value = 1.0;
      if (opt.keep_samples) stage.partition = std::move(current);
      trace.stages.push_back(std::move(stage));
      break;
    }
    stage.observed_gain = *gain;
    const SbmParams fitted = fit_from_partition(a, current);
    auto nulls = null_gain_samples(fitted, opt.bootstrap,
                                   derive_seed(seed, Phase::NullSample, {static_cast<std::uint64_t>(j)}),
                                   opt.workers, opt.division);
    stage.p_value = p_value(*gain, nulls);
    if (opt.keep_samples) {
      stage.partition = std::move(current);
      stage.null_samples = std::move(nulls);
    }
    const bool done = stage.p_value > opt.stop_above;
    trace.stages.push_back(std::move(stage));
    if (done) break;
  }
  return trace;
}

/// K-hat(alpha) = min { j : p(j) > alpha }, with p = 1 past the last stage.
inline int k_hat(const DetectionTrace& trace, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1), got " + std::to_string(alpha));
  for (const auto& s : trace.stages)
    if (s.p_value > alpha) return s.j;
  return trace.sentinel_value();
}

struct StepPiece {
  double lo = 0.0;
  double hi = 1.0;  // half-open [lo, hi)
  int k_hat = 1;

  double length() const noexcept { return hi - lo; }
};

/// Exact step function alpha -> K-hat(alpha) on [0, 1).
struct AlphaStepFunction {
  std::vector<double> breakpoints;  // sorted distinct p-values
  std::vector<StepPiece> pieces;
  int k_star = 1;
  double longest_interval_length = 0.0;

  int value_at(double alpha) const {
    for (const auto& p : pieces)
      if (alpha >= p.lo && alpha < p.hi) return p.k_hat;
    throw Error(ErrorCode::InvalidArgument, "alpha outside [0, 1)");
  }
};

/// Lengths closer than this count as a tie for the longest step.
inline constexpr double kLengthTieTolerance = 1e-12;

/// Pieces K-hat = j on [max_{i<j} p(i), p(j)) when non-empty, plus the
/// sentinel value on [max p, 1). K* is the value of the longest piece, the
/// smaller value winning ties.
inline AlphaStepFunction step_function(const DetectionTrace& trace) {
  AlphaStepFunction f;
  double running = 0.0;
  for (const auto& s : trace.stages) {
    if (s.p_value > running) {
      f.pieces.push_back({running, s.p_value, s.j});
      running = s.p_value;
    }
  }
  if (running < 1.0) f.pieces.push_back({running, 1.0, trace.sentinel_value()});

  auto p = trace.p_values();
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  f.breakpoints = std::move(p);

  f.longest_interval_length = -1.0;
  for (const auto& piece : f.pieces) {
    if (piece.length() > f.longest_interval_length + kLengthTieTolerance) {
      f.longest_interval_length = piece.length();
      f.k_star = piece.k_hat;
    }
  }
  return f;
}

}  // namespace seqcd
