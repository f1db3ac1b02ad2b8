#pragma once

// Adam over a DesignVector with the epoch schedule: learning rate halved per
// epoch, each epoch resuming from the best design found so far, stopping once
// an epoch brings no improvement while hard constraints hold.

#include <functional>
#include <string>
#include <vector>

#include "cbs/grad.hpp"

namespace cbs {

struct OptimizerConfig {
  double lr = 1e-3;            // initial step size, halved every epoch
  int epoch_iters = 1000;      // iterations per epoch
  double beta1 = 0.9;          // first-moment decay
  double beta2 = 0.999;        // second-moment decay
  double eps = 1e-8;
  int max_epochs = 8;
  int convergence_window = 1;  // non-improving epochs required to stop
  double gamma_tol = 1e-3;     // hard-constraint sum considered satisfied below this
};

void validate_config(const OptimizerConfig& cfg);

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
  void init(int n);
};

// One bias-corrected Adam update in place. Frozen entries are untouched.
void adam_step(std::vector<double>& x, AdamState& st, const std::vector<double>& g,
               const std::vector<std::uint8_t>& frozen, const OptimizerConfig& cfg, double lr);

struct TraceRow {
  int epoch = 0;
  int iteration = 0;  // global, 0-based
  double lr = 0;
  double total = 0;
  double co = 0, cp = 0, ca = 0, fl = 0, sq = 0;  // summed over regions
  std::vector<double> gamma;                      // hard-constraint sum per region
};

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

struct OptimizeOutcome {
  DesignVector best;
  LossReport best_report;
  std::vector<TraceRow> trace;           // one row per iteration, all epochs
  std::vector<DesignVector> checkpoints; // best snapshot after each epoch
  int epochs_run = 0;
  bool converged = false;                // termination rule met before the epoch cap
};

using LossFn = std::function<GradResult(const DesignVector&)>;

// Runs the epoch schedule from x0. A NumericError (or non-finite value) from
// the very first evaluation propagates; later ones roll the iterate back to
// the best design and halve the learning rate.
OptimizeOutcome run_epochs(const LossFn& f, const DesignVector& x0, const OptimizerConfig& cfg);

}  // namespace cbs
