// Acceptance runner. Prints one [PASS]/[FAIL] line per criterion and exits
// non-zero when any selected criterion fails.
//
//   acceptance                 run all seven
//   acceptance --criterion 3   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqcd/seqcd.hpp"

using namespace seqcd;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

AdjacencyMatrix barbell() {
  AdjacencyMatrix a(6);
  for (auto [u, v] : {std::pair<std::size_t, std::size_t>{0, 1}, {0, 2}, {1, 2}, {3, 4}, {3, 5}, {4, 5}, {2, 3}})
    a.add_edge(u, v);
  return a;
}

AdjacencyMatrix random_graph(std::size_t n, double p, std::uint64_t seed) {
  Engine eng(seed);
  for (;;) {
    AdjacencyMatrix a(n);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = u + 1; v < n; ++v)
        if (uniform01(eng) < p) a.add_edge(u, v);
    if (a.edge_count() > 0) return a;
  }
}

// Exhaustive maximum of Q over all bisections, counted from edges directly.
double exhaustive_bisection(const AdjacencyMatrix& a) {
  const std::size_t n = a.size();
  const auto k = degrees(a);
  const double two_m = 2.0 * static_cast<double>(a.edge_count());
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (n - 1)); ++mask) {
    double q = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        const bool same = ((mask >> u) & 1U) == ((mask >> v) & 1U);
        if (same) q += (a(u, v) ? 1.0 : 0.0) - static_cast<double>(k[u] * k[v]) / two_m;
      }
    best = std::max(best, q / two_m);
  }
  return best;
}

// ---------------------------------------------------------------------------

Outcome barbell_exactness() {
  Outcome o;
  const auto a = barbell();
  const auto r = bisect(modularity_matrix(a));
  const double oracle = exhaustive_bisection(a);
  o.detail << "Q = " << r.score << ", exhaustive = " << oracle;
  o.require(std::abs(r.score - 5.0 / 14.0) < 1e-9, "Q = 5/14");
  o.require(std::abs(oracle - 5.0 / 14.0) < 1e-9, "exhaustive optimum = 5/14");
  o.require(r.signs == SignVector{1, 1, 1, -1, -1, -1}, "triangle bisection");

  DetectOptions opt;
  opt.bootstrap = 200;
  opt.workers = 1;
  const auto trace = detect(a, opt, 1);
  const auto steps = step_function(trace);
  o.detail << ", K* = " << steps.k_star << ", p(1) = " << trace.stages.front().p_value;
  o.require(steps.k_star == 2, "K* = 2");
  return o;
}

Outcome brute_force_equivalence() {
  Outcome o;
  int exact = 0;
  double worst = 1.0;
  const int graphs = 30;
  for (int i = 0; i < graphs; ++i) {
    const auto a = random_graph(4 + static_cast<std::size_t>(i) % 7, 0.5, 1000 + static_cast<std::uint64_t>(i));
    const auto b = modularity_matrix(a);
    const double best = brute_force_bisect(b).score;
    const double got = bisect(b).score;
    if (std::abs(got - best) < 1e-9) ++exact;
    if (best > 1e-12) worst = std::min(worst, got / best);
  }
  o.detail << exact << "/" << graphs << " exact, worst ratio " << worst;
  o.require(exact >= 24, ">= 80% exact");
  o.require(worst >= 0.95, ">= 95% of optimum");
  return o;
}

Outcome table_strong() {
  Outcome o;
  SimulateConfig c;
  c.k0 = 5;
  c.n = 100;
  c.eps = 0.195;
  c.alphas = {0.01, 0.05, 0.1};
  c.replications = 50;
  c.bootstrap = 200;
  c.k_max = 10;
  c.seed = 1;
  const auto r = cmd_simulate(c);
  for (const auto& row : r.rows) {
    o.detail << "alpha " << row.alpha << ": mode " << row.mode << ", correct " << row.proportion_correct << "; ";
    std::ostringstream tag;
    tag << "alpha " << row.alpha;
    o.require(row.mode == 5, tag.str() + " mode = 5");
    o.require(row.proportion_correct >= 0.6, tag.str() + " correct >= 0.6");
  }
  return o;
}

Outcome table_weak() {
  Outcome o;
  SimulateConfig c;
  c.k0 = 5;
  c.n = 100;
  c.eps = 0.01;
  c.alphas = {0.05};
  c.replications = 50;
  c.bootstrap = 200;
  c.k_max = 10;
  c.seed = 1;
  const auto r = cmd_simulate(c);
  const auto& row = r.rows.front();
  o.detail << "alpha 0.05: mode " << row.mode << ", correct " << row.proportion_correct;
  o.require(row.mode <= 4, "mode <= 4");
  return o;
}

Outcome calibration_monotone() {
  Outcome o;
  const auto g = generate(planted_params(5, 100, 0.195), derive_seed(1, Phase::Generate)).adjacency;
  CalibrateOptions opt;
  opt.detect.bootstrap = 100;
  opt.detect.k_max = 10;
  opt.outer_bootstrap = 100;
  opt.max_rounds = 10;
  const std::vector<double> gammas{0.5, 1.0, 2.0};
  std::vector<double> alphas;
  try {
    const auto cal = calibrate_grid(g, gammas, opt, 1);
    for (const auto& r : cal.reports) alphas.push_back(r.selected_alpha);
    o.detail << "K* = " << cal.steps.k_star << ", rounds " << cal.rounds << ", pooled " << cal.reports[0].bootstrap_count
             << "; ";
  } catch (const AlphaNonConvergence& e) {
    for (const auto& h : e.alpha_histories()) alphas.push_back(h.back());
    o.require(false, "converged within max_rounds");
    o.detail << "last-round ";
  }
  for (std::size_t i = 0; i < gammas.size(); ++i) o.detail << "alpha(" << gammas[i] << ") = " << alphas[i] << " ";
  o.require(alphas[1] >= 0.005 && alphas[1] <= 0.05, "alpha(1) in [0.005, 0.05]");
  o.require(alphas[0] >= alphas[1] && alphas[1] >= alphas[2], "non-increasing in gamma");
  return o;
}

Outcome property_suite() {
  Outcome o;
  std::mt19937_64 eng(424242);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  double worst_row = 0.0, worst_q = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto a = random_graph(5 + s % 40, 0.05 + 0.9 * u(eng), 50 + s);
    const auto b = modularity_matrix(a);
    worst_row = std::max(worst_row, b.values.rowwise().sum().cwiseAbs().maxCoeff());
    worst_q = std::max(worst_q, std::abs(bisection_modularity(b, SignVector(a.size(), 1))));
  }
  o.require(worst_row < 1e-10, "zero row sums");
  o.require(worst_q < 1e-10, "Q(all-ones) = 0");
  o.detail << "row sums " << worst_row << ", Q(1) " << worst_q;

  bool khat_ok = true;
  for (int rep = 0; rep < 1000 && khat_ok; ++rep) {
    std::vector<double> p(1 + eng() % 8);
    for (auto& x : p) x = static_cast<double>(1 + eng() % 201) / 201.0;
    const auto t = trace_from_p_values(p);
    const auto f = step_function(t);
    for (double br : f.breakpoints) {
      if (br < 1.0) khat_ok = khat_ok && k_hat(t, br) == f.value_at(br);
      const double below = std::nextafter(br, 0.0);
      khat_ok = khat_ok && k_hat(t, below) == f.value_at(below);
    }
    int prev = 0;
    std::vector<double> alphas(50);
    for (auto& a : alphas) a = u(eng);
    std::sort(alphas.begin(), alphas.end());
    for (double a : alphas) {
      const int k = k_hat(t, a);
      khat_ok = khat_ok && k >= prev && k == f.value_at(a);
      prev = k;
    }
  }
  o.require(khat_ok, "K-hat monotone with exact breakpoints");

  bool gamma_ok = true;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<DetectionTrace> traces(1 + eng() % 30);
    for (auto& t : traces) {
      std::vector<double> p(1 + eng() % 7);
      for (auto& x : p) x = static_cast<double>(1 + eng() % 100) / 101.0;
      t = trace_from_p_values(p);
    }
    const int k = 1 + static_cast<int>(eng() % 5);
    const auto c = gamma_curve(traces, k);
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& piece : c.pieces) {
      if (std::isfinite(piece.gamma)) {
        gamma_ok = gamma_ok && piece.gamma <= prev;
        prev = piece.gamma;
      }
    }
    for (int i = 0; i < 20; ++i) {
      const double a = u(eng);
      gamma_ok = gamma_ok && c(a) == gamma_hat(traces, k, a);
    }
  }
  o.require(gamma_ok, "gamma curve non-increasing where finite");

  // SBM: symmetry, empty diagonal, and edge frequencies within 3 sigma.
  const auto params = planted_params(5, 200, 0.195);
  double in = 0.0, out = 0.0, in_pairs = 0.0, out_pairs = 0.0;
  bool sbm_ok = true;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto g = generate(params, derive_seed(7, Phase::Generate, {s}));
    const auto& lab = g.planted.labels();
    for (std::size_t x = 0; x < g.adjacency.size(); ++x) {
      sbm_ok = sbm_ok && !g.adjacency(x, x);
      for (std::size_t y = x + 1; y < g.adjacency.size(); ++y) {
        sbm_ok = sbm_ok && g.adjacency(x, y) == g.adjacency(y, x);
        const double e = g.adjacency(x, y) ? 1.0 : 0.0;
        if (lab[x] == lab[y]) {
          in += e;
          in_pairs += 1.0;
        } else {
          out += e;
          out_pairs += 1.0;
        }
      }
    }
  }
  const double p_in = params.probabilities(0, 0), p_out = params.probabilities(0, 1);
  const double z_in = (in - in_pairs * p_in) / std::sqrt(in_pairs * p_in * (1 - p_in));
  const double z_out = (out - out_pairs * p_out) / std::sqrt(out_pairs * p_out * (1 - p_out));
  o.require(sbm_ok, "SBM symmetric without self-loops");
  o.require(std::abs(z_in) < 3.0 && std::abs(z_out) < 3.0, "SBM frequencies within 3 sigma");
  o.detail << ", sbm z " << z_in << "/" << z_out;

  SimulateConfig sc;
  sc.k0 = 3;
  sc.n = 30;
  sc.eps = 0.2;
  sc.alphas = {0.05, 0.1};
  sc.replications = 6;
  sc.bootstrap = 30;
  sc.k_max = 5;
  std::string first;
  bool bytes_ok = true;
  for (unsigned w : {1U, 2U, 8U}) {
    sc.workers = w;
    const std::string body = to_json(cmd_simulate(sc)).dump(2);
    if (first.empty()) first = body;
    bytes_ok = bytes_ok && body == first;
  }
  o.require(bytes_ok, "byte-identical output for 1, 2, 8 workers");

  bool tau_ok = true;
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::MatrixXd x(40, 20);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(eng);
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered;
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
    corr.diagonal().setOnes();
    const CorrelationMatrix c(0.5 * (corr + corr.transpose()));
    AdjacencyMatrix prev = threshold_correlation(c, 0.01);
    for (int step = 2; step <= 100; ++step) {
      const auto next = threshold_correlation(c, step / 100.0);
      for (auto [a, b] : next.edges()) tau_ok = tau_ok && prev(a, b);
      prev = next;
    }
  }
  o.require(tau_ok, "threshold monotone in tau");
  return o;
}

// Five blocks of correlated Gaussian variables: x = f_block + noise, with a
// shared unit-variance factor per block, sampled `d` times.
Eigen::MatrixXd block_correlation(std::size_t blocks, std::size_t per_block, std::size_t d, double noise_sd,
                                  std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> z;
  const auto n = static_cast<Eigen::Index>(blocks * per_block);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d), n);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    std::vector<double> f(blocks);
    for (auto& v : f) v = z(eng);
    for (Eigen::Index j = 0; j < n; ++j) x(i, j) = f[static_cast<std::size_t>(j) / per_block] + noise_sd * z(eng);
  }
  Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
  Eigen::MatrixXd corr = cov.array() / (sd * sd.transpose()).array();
  corr = 0.5 * (corr + corr.transpose());
  corr.diagonal().setOnes();
  return corr;
}

Outcome synthetic_correlation() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "seqcd_acceptance";
  std::filesystem::create_directories(dir);
  const auto path = dir / "blocks.csv";
  {
    std::ofstream out(path);
    write_correlation_csv(out, CorrelationMatrix(block_correlation(5, 12, 100, 0.75, 2024)));
  }
  SelectConfig c;
  c.input.path = path;
  c.input.format = InputFormat::Correlation;
  c.taus = {0.5, 0.6};
  c.gammas = {0.5, 1.0, 2.0};
  c.bootstrap = 50;
  c.k_max = 10;
  c.max_rounds = 10;
  c.seed = 1;
  try {
    const auto r = cmd_select_alpha(c);
    std::map<double, std::vector<int>> k;
    for (const auto& row : r.rows) {
      o.detail << "tau " << *row.tau << " (m = " << row.m << "): K-hat";
      for (const auto& t : row.calibration.reports) {
        k[*row.tau].push_back(t.k_hat_at_alpha);
        o.detail << " " << t.k_hat_at_alpha << "@" << t.selected_alpha;
      }
      o.detail << "; ";
    }
    for (int v : k[0.5]) o.require(v >= 4 && v <= 6, "K-hat in {4,5,6} at tau 0.5");
    for (std::size_t i = 0; i < c.gammas.size(); ++i)
      o.require(k[0.6][i] >= k[0.5][i] - 2, "larger tau drops K-hat by at most 2");
  } catch (const Error& e) {
    o.require(false, std::string("select-alpha raised ") + e.what());
  }
  std::filesystem::remove_all(dir);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"seqcd acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "barbell exactness", barbell_exactness},
      {2, "brute-force equivalence", brute_force_equivalence},
      {3, "strong-signal simulation", table_strong},
      {4, "weak-signal simulation", table_weak},
      {5, "alpha calibration across gamma", calibration_monotone},
      {6, "property suite", property_suite},
      {7, "synthetic correlation select-alpha", synthetic_correlation},
  };

  int failed = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = c.run();
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << " (" << dt.count() << " s): "
              << o.detail.str() << std::endl;
    failed += o.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
