// Library walkthrough: draw a planted 5-block SBM, run the sequential test,
// and pick alpha for a tolerance ratio of 1.

#include <iostream>

#include "seqcd/seqcd.hpp"

int main() {
  using namespace seqcd;

  const SbmParams params = planted_params(5, 100, 0.195);
  const SbmSample sample = generate(params, derive_seed(2024, Phase::Generate));

  DetectOptions opt;
  opt.k_max = 8;
  opt.bootstrap = 100;
  const DetectionTrace trace = detect(sample.adjacency, opt, 7);
  const AlphaStepFunction steps = step_function(trace);

  std::cout << "p-values:";
  for (double p : trace.p_values()) std::cout << ' ' << p;
  std::cout << "\nK* = " << steps.k_star << ", K_hat(0.05) = " << k_hat(trace, 0.05) << "\n";

  CalibrateOptions cal;
  cal.detect = opt;
  cal.outer_bootstrap = 50;
  const ToleranceReport rep = calibrate(sample.adjacency, 1.0, cal, 7);
  std::cout << "gamma = 1: alpha = " << rep.selected_alpha << ", K_hat = " << rep.k_hat_at_alpha
            << " after " << rep.iterations << " rounds\n";
}
