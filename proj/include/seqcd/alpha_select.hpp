#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqcd/detect.hpp"
#include "seqcd/error.hpp"
#include "seqcd/graph.hpp"
#include "seqcd/parallel.hpp"
#include "seqcd/random.hpp"
#include "seqcd/sbm.hpp"

namespace seqcd {

/// Partition reached by dividing `a` from one community up to k communities
/// (fewer if it becomes indivisible first).
inline Partition partition_at(const AdjacencyMatrix& a, int k, const DivisionOptions& opt = {}) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  Divider d(a, opt);
  for (int j = 1; j < k; ++j)
    if (!d.step()) break;
  return d.partition();
}

/// Parametric bootstrap of whole detections: fit the SBM at the k_ref
/// partition of `a`, draw B networks, run detect on each. Replicate b draws
/// its network from derive_seed(seed, Bootstrap, {b}) and its nulls from
/// derive_seed(seed, Observed, {b}); replicates run in parallel, each
/// detection single-threaded.
inline std::vector<DetectionTrace> bootstrap_traces(const AdjacencyMatrix& a, int k_ref, std::size_t count,
                                                    const DetectOptions& opt, std::uint64_t seed) {
  if (k_ref < 1) throw Error(ErrorCode::InvalidArgument, "k_ref must be at least 1");
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "bootstrap count must be at least 1");
  if (a.edge_count() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
  const SbmParams fitted = fit_from_partition(a, partition_at(a, k_ref, opt.division));

  DetectOptions inner = opt;
  inner.workers = 1;
  inner.keep_samples = false;

  std::vector<DetectionTrace> traces(count);
  parallel_for(count, opt.workers, [&](std::size_t b) {
    const auto key = static_cast<std::uint64_t>(b);
    const SbmSample sample = generate(fitted, derive_seed(seed, Phase::Bootstrap, {key}));
    if (sample.adjacency.edge_count() == 0) {
      // No edges: nothing to split, K-hat = 1 at every alpha.
      DetectionTrace t;
      t.n = sample.adjacency.size();
      t.k_max = inner.k_max;
      t.bootstrap = inner.bootstrap;
      Stage s;
      s.j = 1;
      s.indivisible = true;
      t.stages.push_back(std::move(s));
      traces[b] = std::move(t);
      return;
    }
    traces[b] = detect(sample.adjacency, inner, derive_seed(seed, Phase::Observed, {key}));
  });
  return traces;
}

struct FitCounts {
  std::size_t under = 0;
  std::size_t over = 0;
  std::size_t equal = 0;
};

inline FitCounts fit_counts(std::span<const DetectionTrace> traces, int k_ref, double alpha) {
  FitCounts c;
  for (const auto& t : traces) {
    const int k = k_hat(t, alpha);
    if (k < k_ref) ++c.under;
    else if (k > k_ref) ++c.over;
    else ++c.equal;
  }
  return c;
}

/// under / over; +inf when only underfits occur, 0 when neither occurs.
inline double tolerance_ratio(const FitCounts& c) {
  if (c.over > 0) return static_cast<double>(c.under) / static_cast<double>(c.over);
  return c.under > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

inline double gamma_hat(std::span<const DetectionTrace> traces, int k_ref, double alpha) {
  if (traces.empty()) throw Error(ErrorCode::InvalidArgument, "no bootstrap traces");
  return tolerance_ratio(fit_counts(traces, k_ref, alpha));
}

struct GammaPiece {
  double lo = 0.0;
  double hi = 1.0;
  FitCounts counts;
  double gamma = 0.0;

  double representative() const noexcept { return 0.5 * (lo + hi); }
};

/// gamma-hat as an exact step function of alpha over [0, 1). Breakpoints are
/// the pooled p-values of all traces.
struct GammaCurve {
  int k_ref = 1;
  std::size_t trace_count = 0;
  std::vector<GammaPiece> pieces;

  const GammaPiece& piece_at(double alpha) const {
    if (!(alpha >= 0.0 && alpha < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha outside [0, 1)");
    auto it = std::upper_bound(pieces.begin(), pieces.end(), alpha,
                               [](double a, const GammaPiece& p) { return a < p.lo; });
    return *std::prev(it);
  }

  double operator()(double alpha) const { return piece_at(alpha).gamma; }
};

inline GammaCurve gamma_curve(std::span<const DetectionTrace> traces, int k_ref) {
  if (traces.empty()) throw Error(ErrorCode::InvalidArgument, "no bootstrap traces");
  std::vector<double> cuts{0.0};
  for (const auto& t : traces)
    for (const auto& s : t.stages)
      if (s.p_value < 1.0) cuts.push_back(s.p_value);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  GammaCurve curve;
  curve.k_ref = k_ref;
  curve.trace_count = traces.size();
  curve.pieces.reserve(cuts.size());
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    GammaPiece p;
    p.lo = cuts[i];
    p.hi = i + 1 < cuts.size() ? cuts[i + 1] : 1.0;
    p.counts = fit_counts(traces, k_ref, p.lo);
    p.gamma = tolerance_ratio(p.counts);
    curve.pieces.push_back(p);
  }
  return curve;
}

struct AlphaChoice {
  double alpha = 0.0;
  double achieved = 0.0;
  std::size_t piece = 0;
};

/// Distances closer than this count as ties.
inline constexpr double kGammaTieTolerance = 1e-12;

/// Piece midpoint minimizing |gamma-hat - target|. Infinite pieces never beat
/// a finite one; ties go to the larger alpha.
inline AlphaChoice select_alpha(const GammaCurve& curve, double target_gamma) {
  if (!(target_gamma >= 0.0) || std::isinf(target_gamma))
    throw Error(ErrorCode::InvalidArgument, "target gamma must be finite and non-negative");
  std::optional<std::size_t> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < curve.pieces.size(); ++i) {
    const double g = curve.pieces[i].gamma;
    if (std::isinf(g)) continue;
    const double d = std::abs(g - target_gamma);
    if (!best || d <= best_distance + kGammaTieTolerance) {
      best = i;
      best_distance = std::min(best_distance, d);
    }
  }
  if (!best) throw Error(ErrorCode::NoFinitePiece, "every piece of the tolerance curve is infinite");
  const GammaPiece& p = curve.pieces[*best];
  return {p.representative(), p.gamma, *best};
}

struct CalibrateOptions {
  double eps_alpha = 0.005;
  int max_rounds = 10;
  double alpha0 = 0.05;
  std::size_t outer_bootstrap = 0;  // traces per round; 0: same as detect.bootstrap
  DetectOptions detect{};
};

struct ToleranceReport {
  double target_gamma = 0.0;
  double selected_alpha = 0.0;
  double achieved_gamma = 0.0;
  int k_star = 1;
  int k_hat_at_alpha = 1;
  std::size_t underfit_count = 0;
  std::size_t overfit_count = 0;
  std::size_t equal_count = 0;
  std::size_t bootstrap_count = 0;  // pooled traces behind the counts
  int iterations = 0;
  double alpha_precision = 0.0;
  std::vector<double> alpha_history;  // alpha0 followed by one entry per round
};

struct Calibration {
  std::vector<ToleranceReport> reports;  // one per target, input order
  DetectionTrace observed;               // final round
  AlphaStepFunction steps;               // of `observed`
  GammaCurve curve;                      // final pooled curve
  int rounds = 0;
};

/// Iterated alpha selection for several targets on one shared set of rounds.
/// Round r re-runs detection on `a` with a fresh substream, takes K* from its
/// step function, adds B bootstrap detections drawn at the K* partition to the
/// pool (the pool restarts whenever K* changes), and selects alpha for every
/// target from the pooled curve. Stops once every target's alpha moved by
/// less than eps_alpha since the previous round.
inline Calibration calibrate_grid(const AdjacencyMatrix& a, std::span<const double> targets,
                                  const CalibrateOptions& opt, std::uint64_t seed) {
  if (targets.empty()) throw Error(ErrorCode::InvalidArgument, "no target gamma given");
  if (!(opt.eps_alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps_alpha must be positive");
  if (opt.max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "max_rounds must be at least 1");
  if (a.edge_count() == 0) throw Error(ErrorCode::EmptyGraph, "graph has no edges");
  for (double g : targets)
    if (!(g >= 0.0) || std::isinf(g)) throw Error(ErrorCode::InvalidArgument, "target gamma must be finite and >= 0");

  const std::size_t per_round = opt.outer_bootstrap != 0 ? opt.outer_bootstrap : opt.detect.bootstrap;
  std::vector<std::vector<double>> history(targets.size(), std::vector<double>{opt.alpha0});
  std::vector<DetectionTrace> pool;
  int pool_k = 0;

  Calibration out;
  std::vector<AlphaChoice> choices(targets.size());
  for (int round = 0; round < opt.max_rounds; ++round) {
    const auto key = static_cast<std::uint64_t>(round);
    out.observed = detect(a, opt.detect, derive_seed(seed, Phase::Calibrate, {key, 0}));
    out.steps = step_function(out.observed);
    const int k_star = out.steps.k_star;
    if (k_star != pool_k) {
      pool.clear();
      pool_k = k_star;
    }
    auto fresh = bootstrap_traces(a, k_star, per_round, opt.detect, derive_seed(seed, Phase::Calibrate, {key, 1}));
    for (auto& t : fresh) pool.push_back(std::move(t));
    out.curve = gamma_curve(pool, k_star);
    out.rounds = round + 1;

    bool settled = true;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      choices[i] = select_alpha(out.curve, targets[i]);
      settled = settled && std::abs(choices[i].alpha - history[i].back()) < opt.eps_alpha;
      history[i].push_back(choices[i].alpha);
    }
    if (settled) break;
    if (round + 1 == opt.max_rounds)
      throw AlphaNonConvergence("alpha did not settle within " + std::to_string(opt.max_rounds) + " rounds",
                                history);
  }

  for (std::size_t i = 0; i < targets.size(); ++i) {
    const GammaPiece& piece = out.curve.pieces[choices[i].piece];
    ToleranceReport r;
    r.target_gamma = targets[i];
    r.selected_alpha = choices[i].alpha;
    r.achieved_gamma = choices[i].achieved;
    r.k_star = out.steps.k_star;
    r.k_hat_at_alpha = k_hat(out.observed, choices[i].alpha);
    r.underfit_count = piece.counts.under;
    r.overfit_count = piece.counts.over;
    r.equal_count = piece.counts.equal;
    r.bootstrap_count = pool.size();
    r.iterations = out.rounds;
    r.alpha_precision = opt.eps_alpha;
    r.alpha_history = history[i];
    out.reports.push_back(std::move(r));
  }
  return out;
}

inline ToleranceReport calibrate(const AdjacencyMatrix& a, double target_gamma, const CalibrateOptions& opt,
                                 std::uint64_t seed) {
  const double targets[] = {target_gamma};
  return calibrate_grid(a, targets, opt, seed).reports.front();
}

}  // namespace seqcd
