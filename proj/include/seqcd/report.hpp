#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seqcd/alpha_select.hpp"
#include "seqcd/detect.hpp"
#include "seqcd/error.hpp"
#include "seqcd/io.hpp"
#include "seqcd/sbm.hpp"

// Command drivers behind the CLI and their JSON / console / CSV renderings.
// Field names of the JSON documents are part of the external interface; see
// README.md before renaming anything here.

namespace seqcd {

using json = nlohmann::ordered_json;

enum class InputFormat { EdgeList, Adjacency, Correlation };

inline InputFormat parse_format(const std::string& s) {
  if (s == "edge") return InputFormat::EdgeList;
  if (s == "adj") return InputFormat::Adjacency;
  if (s == "corr") return InputFormat::Correlation;
  throw Error(ErrorCode::InvalidArgument, "unknown format '" + s + "' (expected edge, adj or corr)");
}

inline std::string to_string(InputFormat f) {
  switch (f) {
    case InputFormat::EdgeList: return "edge";
    case InputFormat::Adjacency: return "adj";
    case InputFormat::Correlation: return "corr";
  }
  return "edge";
}

/// Wall-clock seconds per named phase, in insertion order.
class PhaseTimer {
 public:
  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    auto finish = [&] {
      const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start;
      phases_.emplace_back(name, d.count());
    };
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  }

  const std::vector<std::pair<std::string, double>>& phases() const noexcept { return phases_; }

  json to_json() const {
    json j = json::object();
    for (const auto& [name, secs] : phases_) j[name] = secs;
    return j;
  }

 private:
  std::vector<std::pair<std::string, double>> phases_;
};

/// Most frequent value; ties go to the smaller value.
inline int mode_of(const std::vector<int>& values) {
  if (values.empty()) throw Error(ErrorCode::InvalidArgument, "mode of an empty sample");
  std::map<int, std::size_t> freq;
  for (int v : values) ++freq[v];
  int best = values.front();
  std::size_t best_count = 0;
  for (const auto& [v, c] : freq)
    if (c > best_count) {
      best = v;
      best_count = c;
    }
  return best;
}

inline json number_or_inf(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline json to_json(const AlphaStepFunction& f) {
  json pieces = json::array();
  for (const auto& p : f.pieces) pieces.push_back({{"lo", p.lo}, {"hi", p.hi}, {"k_hat", p.k_hat}});
  return {{"breakpoints", f.breakpoints},
          {"pieces", pieces},
          {"k_star", f.k_star},
          {"longest_interval_length", f.longest_interval_length}};
}

inline json to_json(const DetectionTrace& t) {
  json stages = json::array();
  for (const auto& s : t.stages) {
    json js = {{"j", s.j},
               {"observed_gain", s.observed_gain},
               {"p_value", s.p_value},
               {"indivisible", s.indivisible}};
    if (!s.null_samples.empty()) {
      const double sum = std::accumulate(s.null_samples.begin(), s.null_samples.end(), 0.0);
      js["null_mean"] = sum / static_cast<double>(s.null_samples.size());
      js["null_max"] = *std::max_element(s.null_samples.begin(), s.null_samples.end());
    }
    if (s.partition.size() > 0) js["community_sizes"] = s.partition.community_sizes();
    stages.push_back(std::move(js));
  }
  return {{"n", t.n}, {"k_max", t.k_max}, {"bootstrap", t.bootstrap}, {"stages", stages}};
}

inline json to_json(const ToleranceReport& r) {
  return {{"target_gamma", r.target_gamma},
          {"selected_alpha", r.selected_alpha},
          {"achieved_gamma", number_or_inf(r.achieved_gamma)},
          {"k_star", r.k_star},
          {"k_hat_at_alpha", r.k_hat_at_alpha},
          {"underfit_count", r.underfit_count},
          {"overfit_count", r.overfit_count},
          {"equal_count", r.equal_count},
          {"bootstrap_count", r.bootstrap_count},
          {"iterations", r.iterations},
          {"alpha_precision", r.alpha_precision},
          {"alpha_history", r.alpha_history}};
}

// ---------------------------------------------------------------------------
// Input loading

struct GraphInput {
  std::filesystem::path path;
  InputFormat format = InputFormat::EdgeList;
  bool absolute = false;  // |C| >= tau instead of C >= tau
};

/// Loads a graph directly, or a correlation matrix that the caller thresholds.
struct LoadedInput {
  std::optional<AdjacencyMatrix> graph;
  std::optional<CorrelationMatrix> correlation;

  AdjacencyMatrix at(std::optional<double> tau, bool absolute) const {
    if (graph) return *graph;
    if (!tau) throw Error(ErrorCode::InvalidArgument, "correlation input needs --tau");
    return threshold_correlation(*correlation, *tau, absolute);
  }
};

inline LoadedInput load_input(const GraphInput& in) {
  if (!std::filesystem::exists(in.path)) throw Error(ErrorCode::Io, "no such file: " + in.path.string());
  LoadedInput out;
  switch (in.format) {
    case InputFormat::EdgeList: out.graph = load_edge_list(in.path); break;
    case InputFormat::Adjacency: out.graph = load_adjacency_csv(in.path); break;
    case InputFormat::Correlation: out.correlation = load_correlation_csv(in.path); break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
  std::size_t k0 = 5;
  std::size_t n = 100;
  double eps = 0.195;
  std::vector<double> alphas{0.01, 0.05, 0.1, 0.2};
  std::size_t replications = 100;
  std::size_t bootstrap = 200;
  int k_max = 20;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct SimulateRow {
  double alpha = 0.0;
  int mode = 0;
  double proportion_correct = 0.0;
  std::vector<int> k_hats;  // one per replication
};

struct SimulateReport {
  SimulateConfig config;
  std::vector<SimulateRow> rows;
  PhaseTimer timer;
};

/// Replication r draws its planted network from derive_seed(seed, Simulate,
/// {r, 0}) and runs detection with derive_seed(seed, Simulate, {r, 1}).
/// Replications run in parallel; each detection uses one worker.
inline SimulateReport cmd_simulate(const SimulateConfig& cfg) {
  if (cfg.replications < 1) throw Error(ErrorCode::InvalidArgument, "replications must be at least 1");
  if (cfg.alphas.empty()) throw Error(ErrorCode::InvalidArgument, "no alpha given");
  for (double a : cfg.alphas)
    if (!(a >= 0.0 && a < 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1)");
  const SbmParams params = planted_params(cfg.k0, cfg.n, cfg.eps);

  DetectOptions opt;
  opt.k_max = cfg.k_max;
  opt.bootstrap = cfg.bootstrap;
  opt.workers = 1;
  opt.keep_samples = false;
  opt.stop_above = *std::max_element(cfg.alphas.begin(), cfg.alphas.end());

  SimulateReport rep;
  rep.config = cfg;
  std::vector<DetectionTrace> traces(cfg.replications);
  rep.timer.run("replications", [&] {
    parallel_for(cfg.replications, cfg.workers, [&](std::size_t r) {
      const auto key = static_cast<std::uint64_t>(r);
      SbmSample sample = generate(params, derive_seed(cfg.seed, Phase::Simulate, {key, 0}));
      if (sample.adjacency.edge_count() == 0) {
        traces[r] = trace_from_p_values(std::vector<double>{1.0}, cfg.k_max);
        traces[r].stages[0].indivisible = true;
        return;
      }
      traces[r] = detect(sample.adjacency, opt, derive_seed(cfg.seed, Phase::Simulate, {key, 1}));
    });
  });
  for (double alpha : cfg.alphas) {
    SimulateRow row;
    row.alpha = alpha;
    std::size_t correct = 0;
    for (const auto& t : traces) {
      row.k_hats.push_back(k_hat(t, alpha));
      if (row.k_hats.back() == static_cast<int>(cfg.k0)) ++correct;
    }
    row.mode = mode_of(row.k_hats);
    row.proportion_correct = static_cast<double>(correct) / static_cast<double>(cfg.replications);
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline json to_json(const SimulateReport& r, bool timings = false) {
  const auto& c = r.config;
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"alpha", row.alpha},
                    {"mode", row.mode},
                    {"proportion_correct", row.proportion_correct},
                    {"k_hat", row.k_hats}});
  json j = {{"command", "simulate"},
            {"parameters",
             {{"k0", c.k0},
              {"n", c.n},
              {"eps", c.eps},
              {"alphas", c.alphas},
              {"replications", c.replications},
              {"bootstrap", c.bootstrap},
              {"k_max", c.k_max},
              {"seed", c.seed}}},
            {"rows", rows}};
  if (timings) j["timing_seconds"] = r.timer.to_json();
  return j;
}

inline std::string render_table(const SimulateReport& r) {
  std::ostringstream os;
  os << "K0 = " << r.config.k0 << ", n = " << r.config.n << ", eps = " << r.config.eps
     << ", replications = " << r.config.replications << ", B = " << r.config.bootstrap << "\n";
  os << std::left << std::setw(10) << "alpha" << std::setw(8) << "mode" << "pr(K_hat = K0)\n";
  for (const auto& row : r.rows) {
    os << std::left << std::setw(10) << row.alpha << std::setw(8) << row.mode << std::fixed << std::setprecision(2)
       << row.proportion_correct << std::defaultfloat << std::setprecision(6) << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// detect

struct DetectConfig {
  GraphInput input;
  std::optional<double> tau;
  int k_max = 20;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 1;
  std::optional<double> alpha;
  unsigned workers = 0;
};

struct DetectReport {
  DetectConfig config;
  std::size_t n = 0;
  std::size_t m = 0;
  DetectionTrace trace;
  AlphaStepFunction steps;
  std::vector<int> k_star_labels;
  std::optional<int> k_hat_at_alpha;
  PhaseTimer timer;
};

inline DetectReport cmd_detect(const DetectConfig& cfg) {
  DetectReport rep;
  rep.config = cfg;
  const LoadedInput in = rep.timer.run("load", [&] { return load_input(cfg.input); });
  const AdjacencyMatrix a = in.at(cfg.tau, cfg.input.absolute);
  rep.n = a.size();
  rep.m = a.edge_count();

  DetectOptions opt;
  opt.k_max = cfg.k_max;
  opt.bootstrap = cfg.bootstrap;
  opt.workers = cfg.workers;
  rep.trace = rep.timer.run("detect", [&] { return detect(a, opt, derive_seed(cfg.seed, Phase::Observed, {0})); });
  rep.steps = step_function(rep.trace);
  const int k_star = rep.steps.k_star;
  if (k_star <= static_cast<int>(rep.trace.stages.size()))
    rep.k_star_labels = rep.trace.stages[static_cast<std::size_t>(k_star - 1)].partition.labels();
  else
    rep.k_star_labels = partition_at(a, k_star, opt.division).labels();
  if (cfg.alpha) rep.k_hat_at_alpha = k_hat(rep.trace, *cfg.alpha);
  return rep;
}

inline json to_json(const DetectReport& r, bool timings = false) {
  const auto& c = r.config;
  json j = {{"command", "detect"},
            {"parameters",
             {{"input", c.input.path.string()},
              {"format", to_string(c.input.format)},
              {"tau", c.tau ? json(*c.tau) : json(nullptr)},
              {"absolute", c.input.absolute},
              {"k_max", c.k_max},
              {"bootstrap", c.bootstrap},
              {"seed", c.seed},
              {"alpha", c.alpha ? json(*c.alpha) : json(nullptr)}}},
            {"graph", {{"n", r.n}, {"m", r.m}}},
            {"trace", to_json(r.trace)},
            {"step_function", to_json(r.steps)},
            {"k_star_labels", r.k_star_labels},
            {"k_hat_at_alpha", r.k_hat_at_alpha ? json(*r.k_hat_at_alpha) : json(nullptr)}};
  if (timings) j["timing_seconds"] = r.timer.to_json();
  return j;
}

inline std::string render_table(const DetectReport& r) {
  std::ostringstream os;
  os << "n = " << r.n << ", m = " << r.m << ", B = " << r.config.bootstrap << "\n";
  os << std::left << std::setw(6) << "j" << std::setw(16) << "gain" << "p-value\n";
  for (const auto& s : r.trace.stages) {
    os << std::left << std::setw(6) << s.j << std::setw(16) << s.observed_gain << s.p_value
       << (s.indivisible ? "  (indivisible)" : "") << "\n";
  }
  os << "\nalpha interval            K_hat\n";
  for (const auto& p : r.steps.pieces) {
    std::ostringstream iv;
    iv << "[" << p.lo << ", " << p.hi << ")";
    os << std::left << std::setw(26) << iv.str() << p.k_hat << "\n";
  }
  os << "\nK* = " << r.steps.k_star << " (longest step " << r.steps.longest_interval_length << ")\n";
  if (r.k_hat_at_alpha) os << "K_hat(" << *r.config.alpha << ") = " << *r.k_hat_at_alpha << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// select-alpha

struct SelectConfig {
  GraphInput input;
  std::vector<double> taus;  // correlation input only
  std::vector<double> gammas{1.0};
  double eps_alpha = 0.005;
  std::size_t bootstrap = 200;
  std::size_t outer_bootstrap = 0;  // 0: same as bootstrap
  int k_max = 20;
  int max_rounds = 10;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct SelectRow {
  std::optional<double> tau;
  std::size_t n = 0;
  std::size_t m = 0;
  Calibration calibration;
};

struct SelectReport {
  SelectConfig config;
  std::vector<SelectRow> rows;
  PhaseTimer timer;
};

/// Every tau (or the single graph) is calibrated with the same master seed,
/// so rows differ only through the thresholded graph.
inline SelectReport cmd_select_alpha(const SelectConfig& cfg) {
  SelectReport rep;
  rep.config = cfg;
  const LoadedInput in = rep.timer.run("load", [&] { return load_input(cfg.input); });

  std::vector<std::optional<double>> taus;
  if (in.correlation) {
    if (cfg.taus.empty()) throw Error(ErrorCode::InvalidArgument, "correlation input needs --tau");
    for (double t : cfg.taus) taus.emplace_back(t);
  } else {
    taus.emplace_back(std::nullopt);
  }

  CalibrateOptions opt;
  opt.eps_alpha = cfg.eps_alpha;
  opt.max_rounds = cfg.max_rounds;
  opt.outer_bootstrap = cfg.outer_bootstrap;
  opt.detect.k_max = cfg.k_max;
  opt.detect.bootstrap = cfg.bootstrap;
  opt.detect.workers = cfg.workers;

  for (const auto& tau : taus) {
    SelectRow row;
    row.tau = tau;
    const AdjacencyMatrix a = in.at(tau, cfg.input.absolute);
    row.n = a.size();
    row.m = a.edge_count();
    std::ostringstream phase;
    phase << "calibrate";
    if (tau) phase << " tau=" << *tau;
    row.calibration = rep.timer.run(phase.str(), [&] { return calibrate_grid(a, cfg.gammas, opt, cfg.seed); });
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

inline json to_json(const SelectReport& r, bool timings = false) {
  const auto& c = r.config;
  json results = json::array();
  for (const auto& row : r.rows) {
    json tol = json::array();
    for (const auto& t : row.calibration.reports) tol.push_back(to_json(t));
    results.push_back({{"tau", row.tau ? json(*row.tau) : json(nullptr)},
                       {"graph", {{"n", row.n}, {"m", row.m}}},
                       {"k_star", row.calibration.steps.k_star},
                       {"rounds", row.calibration.rounds},
                       {"p_values", row.calibration.observed.p_values()},
                       {"step_function", to_json(row.calibration.steps)},
                       {"tolerance", tol}});
  }
  json j = {{"command", "select-alpha"},
            {"parameters",
             {{"input", c.input.path.string()},
              {"format", to_string(c.input.format)},
              {"taus", c.taus},
              {"absolute", c.input.absolute},
              {"gammas", c.gammas},
              {"eps_alpha", c.eps_alpha},
              {"bootstrap", c.bootstrap},
              {"outer_bootstrap", c.outer_bootstrap != 0 ? c.outer_bootstrap : c.bootstrap},
              {"k_max", c.k_max},
              {"max_rounds", c.max_rounds},
              {"seed", c.seed}}},
            {"results", results}};
  if (timings) j["timing_seconds"] = r.timer.to_json();
  return j;
}

/// tau x gamma grid: one line per (tau, gamma) with the selected alpha and
/// K-hat at that alpha.
inline std::string render_table(const SelectReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "tau" << std::setw(8) << "gamma" << std::setw(12) << "alpha" << std::setw(8)
     << "K_hat" << std::setw(6) << "K*" << "achieved\n";
  for (const auto& row : r.rows)
    for (const auto& t : row.calibration.reports) {
      std::ostringstream tau;
      if (row.tau) tau << *row.tau;
      else tau << "-";
      os << std::left << std::setw(8) << tau.str() << std::setw(8) << t.target_gamma << std::setw(12)
         << t.selected_alpha << std::setw(8) << t.k_hat_at_alpha << std::setw(6) << t.k_star << t.achieved_gamma
         << "\n";
    }
  return os.str();
}

inline std::string render_csv(const SelectReport& r) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "tau,gamma,alpha,k_hat,k_star,achieved_gamma,iterations\n";
  for (const auto& row : r.rows)
    for (const auto& t : row.calibration.reports) {
      if (row.tau) os << *row.tau;
      os << "," << t.target_gamma << "," << t.selected_alpha << "," << t.k_hat_at_alpha << "," << t.k_star << ","
         << t.achieved_gamma << "," << t.iterations << "\n";
    }
  return os.str();
}

}  // namespace seqcd
