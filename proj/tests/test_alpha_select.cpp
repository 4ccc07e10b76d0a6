#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "helpers.hpp"
#include "seqcd/alpha_select.hpp"

using namespace seqcd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<DetectionTrace> traces_from(const std::vector<std::vector<double>>& ps) {
  std::vector<DetectionTrace> out;
  for (const auto& p : ps) out.push_back(trace_from_p_values(p));
  return out;
}

// Curve with the given gamma values on equal-width pieces, built directly.
GammaCurve synthetic_curve(const std::vector<double>& gammas) {
  GammaCurve c;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    GammaPiece p;
    p.lo = static_cast<double>(i) / static_cast<double>(gammas.size());
    p.hi = static_cast<double>(i + 1) / static_cast<double>(gammas.size());
    p.gamma = gammas[i];
    c.pieces.push_back(p);
  }
  return c;
}

}  // namespace

TEST(ToleranceRatio, Arithmetic) {
  EXPECT_DOUBLE_EQ(tolerance_ratio({10, 5, 0}), 2.0);
  EXPECT_EQ(tolerance_ratio({3, 0, 7}), kInf);
  EXPECT_EQ(tolerance_ratio({0, 0, 7}), 0.0);
}

TEST(GammaHat, AllCorrectIsZero) {
  const auto t = traces_from({{0.001, 0.9}, {0.002, 0.8}});
  EXPECT_EQ(gamma_hat(t, 2, 0.05), 0.0);
  EXPECT_THROW(gamma_hat(std::vector<DetectionTrace>{}, 2, 0.05), Error);
}

TEST(GammaCurve, SingleTraceHandEvaluation) {
  const auto t = traces_from({{0.1, 0.4, 0.9}});
  const auto c = gamma_curve(t, 2);
  EXPECT_EQ(c(0.05), kInf);   // K-hat 1 < 2
  EXPECT_EQ(c(0.2), 0.0);     // K-hat 2
  EXPECT_EQ(c(0.5), 0.0);     // K-hat 3: 0 / 1
  EXPECT_EQ(c.piece_at(0.5).counts.over, 1u);
  EXPECT_EQ(c(0.95), 0.0);
}

TEST(GammaCurve, PropertyNonIncreasingAndPointwiseExact) {
  std::mt19937_64 eng(99);
  std::uniform_int_distribution<int> len(1, 7), count(1, 30), kref(1, 5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::vector<double>> ps(static_cast<std::size_t>(count(eng)));
    for (auto& p : ps) {
      p.resize(static_cast<std::size_t>(len(eng)));
      for (auto& x : p) x = std::ceil(u(eng) * 100.0) / 101.0;
    }
    const auto traces = traces_from(ps);
    const int k = kref(eng);
    const auto c = gamma_curve(traces, k);
    double prev = kInf;
    for (const auto& piece : c.pieces) {
      EXPECT_LE(piece.gamma, prev);
      EXPECT_EQ(piece.counts.under + piece.counts.over + piece.counts.equal, traces.size());
      prev = piece.gamma;
    }
    for (int i = 0; i < 50; ++i) {
      const double a = u(eng);
      EXPECT_EQ(c(a), gamma_hat(traces, k, a));
    }
  }
}

TEST(SelectAlpha, PicksMatchingPiece) {
  const auto c = synthetic_curve({4, 2, 1, 0.5, 0});
  const auto r = select_alpha(c, 1.0);
  EXPECT_EQ(r.piece, 2u);
  EXPECT_DOUBLE_EQ(r.alpha, 0.5);
  EXPECT_EQ(r.achieved, 1.0);
}

TEST(SelectAlpha, TargetZeroTakesRightmostZeroPiece) {
  const auto c = synthetic_curve({kInf, 3, 0, 0});
  EXPECT_EQ(select_alpha(c, 0.0).piece, 3u);
  EXPECT_DOUBLE_EQ(select_alpha(c, 0.0).alpha, 0.875);
}

TEST(SelectAlpha, InfinityNeverBeatsAFinitePiece) {
  const auto c = synthetic_curve({kInf, 50, 10});
  EXPECT_EQ(select_alpha(c, 1000.0).piece, 1u);
}

TEST(SelectAlpha, AllInfiniteIsAnError) {
  try {
    select_alpha(synthetic_curve({kInf, kInf}), 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoFinitePiece);
  }
  EXPECT_THROW(select_alpha(synthetic_curve({1.0}), -1.0), Error);
}

TEST(SelectAlpha, PropertyLargerTargetNeverLargerAlpha) {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<std::vector<double>> ps(20);
    for (auto& p : ps) {
      p.resize(6);
      for (auto& x : p) x = std::ceil(u(eng) * 50.0) / 51.0;
    }
    const auto c = gamma_curve(traces_from(ps), 3);
    bool any_finite = false;
    for (const auto& piece : c.pieces) any_finite = any_finite || std::isfinite(piece.gamma);
    if (!any_finite) continue;
    double prev = 1.0;
    for (double g : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
      const double a = select_alpha(c, g).alpha;
      EXPECT_LE(a, prev + 1e-15);
      prev = a;
    }
  }
}

TEST(BootstrapTraces, ShapeAndDeterminism) {
  const auto a = generate(planted_params(2, 24, 0.3), 4).adjacency;
  DetectOptions o;
  o.bootstrap = 20;
  o.k_max = 4;
  o.workers = 1;
  const auto x = bootstrap_traces(a, 2, 3, o, 77);
  ASSERT_EQ(x.size(), 3u);
  o.workers = 3;
  const auto y = bootstrap_traces(a, 2, 3, o, 77);
  for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(x[b].p_values(), y[b].p_values());
}

TEST(Calibrate, BarbellKStarIsTwo) {
  CalibrateOptions opt;
  opt.detect.bootstrap = 50;
  opt.detect.k_max = 4;
  opt.detect.workers = 1;
  for (double g : {0.5, 1.0, 2.0}) {
    const auto r = calibrate(seqcd::testing::barbell(), g, opt, 3);
    EXPECT_EQ(r.k_star, 2);
    EXPECT_EQ(r.underfit_count + r.overfit_count + r.equal_count, r.bootstrap_count);
    EXPECT_GE(r.selected_alpha, 0.0);
    EXPECT_LT(r.selected_alpha, 1.0);
    EXPECT_EQ(r.alpha_history.front(), 0.05);
    EXPECT_EQ(static_cast<int>(r.alpha_history.size()), r.iterations + 1);
  }
}

TEST(Calibrate, GridMatchesSingleTargetRuns) {
  CalibrateOptions opt;
  opt.detect.bootstrap = 30;
  opt.detect.k_max = 4;
  opt.detect.workers = 1;
  const auto a = seqcd::testing::barbell();
  const std::vector<double> targets{0.5, 2.0};
  const auto grid = calibrate_grid(a, targets, opt, 9);
  ASSERT_EQ(grid.reports.size(), 2u);
  EXPECT_GE(grid.reports[0].selected_alpha, grid.reports[1].selected_alpha);
  EXPECT_EQ(grid.reports[0].k_star, grid.steps.k_star);
}

TEST(Calibrate, RejectsBadOptions) {
  CalibrateOptions opt;
  opt.eps_alpha = 0.0;
  EXPECT_THROW(calibrate(seqcd::testing::barbell(), 1.0, opt, 1), Error);
  opt.eps_alpha = 0.005;
  EXPECT_THROW(calibrate(AdjacencyMatrix(4), 1.0, opt, 1), Error);
}

TEST(Calibrate, NonConvergenceCarriesHistories) {
  CalibrateOptions opt;
  opt.detect.bootstrap = 20;
  opt.detect.k_max = 6;
  opt.detect.workers = 1;
  opt.max_rounds = 1;
  opt.eps_alpha = 1e-9;
  const auto a = generate(planted_params(3, 30, 0.2), 6).adjacency;
  try {
    calibrate(a, 1.0, opt, 2);
    FAIL() << "expected non-convergence";
  } catch (const AlphaNonConvergence& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonConvergence);
    ASSERT_EQ(e.alpha_histories().size(), 1u);
    EXPECT_EQ(e.alpha_histories()[0].size(), 2u);
  } catch (const Error& e) {
    // A curve with no finite piece is the other legitimate outcome here.
    EXPECT_EQ(e.code(), ErrorCode::NoFinitePiece);
  }
}
