// seqcd: command-line front end.
//
//   seqcd simulate     --k0 5 --n 100 --eps 0.195 --alphas 0.01 0.05 --reps 50 --bootstrap 200
//   seqcd detect       --input g.txt --format edge --kmax 20 --bootstrap 200 [--alpha 0.05]
//   seqcd select-alpha --input c.csv --format corr --tau 0.3 0.5 --gammas 0.5 1 2
//
// Exit codes: 0 success, 2 invalid input or arguments, 3 alpha did not converge.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "seqcd/seqcd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitNonConvergence = 3;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SEQCD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "warning: ignoring unparsable SEQCD_SEED='" << env << "'\n";
    }
  }
  return 1;
}

struct Common {
  std::uint64_t seed = default_seed();
  unsigned workers = 0;
  std::string out;
  bool timings = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master seed (default: $SEQCD_SEED or 1)");
  cmd->add_option("--workers", c.workers, "Worker threads (0: all cores); does not change results");
  cmd->add_option("--out", c.out, "Write the JSON report to this path");
  cmd->add_flag("--timings", c.timings, "Include wall-clock seconds per phase in the JSON report");
  cmd->add_flag("--quiet", c.quiet, "Do not print the console table");
}

void emit(const Common& c, const seqcd::json& j, const std::string& table) {
  if (!c.quiet) std::cout << table;
  if (!c.out.empty()) {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) throw seqcd::Error(seqcd::ErrorCode::Io, "cannot write " + c.out);
    f << j.dump(2) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential community detection with tolerance-ratio significance selection"};
  app.require_subcommand(1);

  // simulate
  Common sim_common;
  seqcd::SimulateConfig sim;
  auto* simulate = app.add_subcommand("simulate", "Planted-SBM simulation: K-hat mode and accuracy per alpha");
  simulate->add_option("--k0", sim.k0, "Planted number of communities")->required();
  simulate->add_option("--n", sim.n, "Vertices")->required();
  simulate->add_option("--eps", sim.eps, "Signal strength: within 0.5+eps, between 0.5-eps")->required();
  simulate->add_option("--alphas", sim.alphas, "Significance levels")->expected(1, -1);
  simulate->add_option("--reps", sim.replications, "Replications");
  simulate->add_option("--bootstrap", sim.bootstrap, "Null replicates per stage");
  simulate->add_option("--kmax", sim.k_max, "Stage cap");
  add_common(simulate, sim_common);

  // detect
  Common det_common;
  seqcd::DetectConfig det;
  std::string det_format = "edge";
  std::optional<double> det_tau;
  std::optional<double> det_alpha;
  auto* detect = app.add_subcommand("detect", "Sequential test trace, alpha step function and K*");
  detect->add_option("--input", det.input.path, "Input file")->required();
  detect->add_option("--format", det_format, "edge | adj | corr")->check(CLI::IsMember({"edge", "adj", "corr"}));
  detect->add_option("--tau", det_tau, "Correlation threshold (corr input)");
  detect->add_flag("--abs", det.input.absolute, "Threshold |correlation| instead of correlation");
  detect->add_option("--kmax", det.k_max, "Stage cap");
  detect->add_option("--bootstrap", det.bootstrap, "Null replicates per stage");
  detect->add_option("--alpha", det_alpha, "Also report K-hat at this alpha");
  add_common(detect, det_common);

  // select-alpha
  Common sel_common;
  seqcd::SelectConfig sel;
  std::string sel_format = "edge";
  std::optional<double> sel_gamma;
  std::vector<double> sel_gammas;
  auto* select = app.add_subcommand("select-alpha", "Calibrate alpha to target tolerance ratios");
  select->add_option("--input", sel.input.path, "Input file")->required();
  select->add_option("--format", sel_format, "edge | adj | corr")->check(CLI::IsMember({"edge", "adj", "corr"}));
  select->add_option("--tau", sel.taus, "Correlation thresholds (corr input)")->expected(1, -1);
  select->add_flag("--abs", sel.input.absolute, "Threshold |correlation| instead of correlation");
  select->add_option("--gamma", sel_gamma, "Target tolerance ratio");
  select->add_option("--gammas", sel_gammas, "Several target tolerance ratios")->expected(1, -1);
  select->add_option("--eps-alpha", sel.eps_alpha, "Convergence precision for alpha");
  select->add_option("--bootstrap", sel.bootstrap, "Null replicates per stage");
  select->add_option("--outer-bootstrap", sel.outer_bootstrap, "Bootstrap detections per round (default: --bootstrap)");
  select->add_option("--kmax", sel.k_max, "Stage cap");
  select->add_option("--max-rounds", sel.max_rounds, "Round budget");
  std::string csv_path;
  select->add_option("--csv", csv_path, "Write the tau x gamma grid as CSV");
  add_common(select, sel_common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*simulate) {
      sim.seed = sim_common.seed;
      sim.workers = sim_common.workers;
      const auto rep = seqcd::cmd_simulate(sim);
      emit(sim_common, seqcd::to_json(rep, sim_common.timings), seqcd::render_table(rep));
    } else if (*detect) {
      det.input.format = seqcd::parse_format(det_format);
      det.tau = det_tau;
      det.alpha = det_alpha;
      det.seed = det_common.seed;
      det.workers = det_common.workers;
      const auto rep = seqcd::cmd_detect(det);
      emit(det_common, seqcd::to_json(rep, det_common.timings), seqcd::render_table(rep));
    } else if (*select) {
      sel.input.format = seqcd::parse_format(sel_format);
      if (!sel_gammas.empty()) sel.gammas = sel_gammas;
      else if (sel_gamma) sel.gammas = {*sel_gamma};
      sel.seed = sel_common.seed;
      sel.workers = sel_common.workers;
      const auto rep = seqcd::cmd_select_alpha(sel);
      emit(sel_common, seqcd::to_json(rep, sel_common.timings), seqcd::render_table(rep));
      if (!csv_path.empty()) {
        std::ofstream f(csv_path, std::ios::binary);
        if (!f) throw seqcd::Error(seqcd::ErrorCode::Io, "cannot write " + csv_path);
        f << seqcd::render_csv(rep);
      }
    }
  } catch (const seqcd::AlphaNonConvergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& h : e.alpha_histories()) {
      std::cerr << "  alpha history:";
      for (double a : h) std::cerr << ' ' << a;
      std::cerr << '\n';
    }
    return kExitNonConvergence;
  } catch (const seqcd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == seqcd::ErrorCode::NoConvergence ? kExitNonConvergence : kExitInvalid;
  }
  return kExitOk;
}
