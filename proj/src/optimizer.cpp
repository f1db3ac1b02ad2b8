#include "cbs/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cbs/error.hpp"

namespace cbs {

namespace {

bool finite_result(const GradResult& gr) {
  if (!std::isfinite(gr.report.total)) return false;
  for (double g : gr.grad)
    if (!std::isfinite(g)) return false;
  return true;
}

TraceRow make_row(int epoch, int iteration, double lr, const LossReport& rep) {
  TraceRow row;
  row.epoch = epoch;
  row.iteration = iteration;
  row.lr = lr;
  row.total = rep.total;
  for (const RegionLosses& r : rep.regions) {
    row.co += r.co;
    row.cp += r.cp;
    row.ca += r.ca;
    row.fl += r.fl;
    row.sq += r.sq;
    row.gamma.push_back(r.gamma());
  }
  return row;
}

}  // namespace

void validate_config(const OptimizerConfig& cfg) {
  require_input(cfg.lr > 0.0, "learning rate must be positive");
  require_input(cfg.epoch_iters >= 1, "epoch length must be at least 1");
  require_input(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0, "beta1 must lie in [0,1)");
  require_input(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0, "beta2 must lie in [0,1)");
  require_input(cfg.eps > 0.0, "adam epsilon must be positive");
  require_input(cfg.max_epochs >= 1, "max epochs must be at least 1");
  require_input(cfg.convergence_window >= 1, "convergence window must be at least 1");
  require_input(cfg.gamma_tol >= 0.0, "hard-constraint tolerance must be non-negative");
}

void AdamState::init(int n) {
  m.assign(static_cast<size_t>(n), 0.0);
  v.assign(static_cast<size_t>(n), 0.0);
  t = 0;
}

void adam_step(std::vector<double>& x, AdamState& st, const std::vector<double>& g,
               const std::vector<std::uint8_t>& frozen, const OptimizerConfig& cfg, double lr) {
  require_input(st.m.size() == x.size() && st.v.size() == x.size(),
                "adam moment state dimension mismatch");
  require_input(g.size() == x.size() && frozen.size() == x.size(),
                "gradient/mask dimension mismatch");
  st.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(st.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(st.t));
  for (size_t i = 0; i < x.size(); ++i) {
    if (frozen[i]) continue;
    st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * g[i];
    st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    x[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

OptimizeOutcome run_epochs(const LossFn& f, const DesignVector& x0, const OptimizerConfig& cfg) {
  validate_config(cfg);
  require_input(x0.frozen.size() == static_cast<size_t>(x0.size()),
                "frozen mask length mismatch");

  OptimizeOutcome out;
  DesignVector x = x0;
  x.project();

  const GradResult first = f(x);
  require_numeric(finite_result(first), "non-finite loss at the starting design");
  out.best = x;
  out.best_report = first.report;
  double best_total = first.report.total;

  const int n = x.size();
  double lr = cfg.lr;
  int global_iter = 0;
  int stale_epochs = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    x = out.best;  // resume from the best design found so far
    AdamState st;
    st.init(n);
    std::vector<double> v = x.pack();
    const double epoch_start_best = best_total;

    for (int it = 0; it < cfg.epoch_iters; ++it, ++global_iter) {
      GradResult gr;
      bool ok = true;
      try {
        gr = f(x);
        ok = finite_result(gr);
      } catch (const NumericError&) {
        ok = false;
      }
      if (!ok) {
        // Roll back to the best design and halve the step; the iteration
        // still occupies one trace row so bookkeeping stays exact.
        lr *= 0.5;
        x = out.best;
        st.init(n);
        v = x.pack();
        out.trace.push_back(make_row(epoch, global_iter, lr, out.best_report));
        continue;
      }
      out.trace.push_back(make_row(epoch, global_iter, lr, gr.report));
      if (gr.report.total < best_total) {
        best_total = gr.report.total;
        out.best = x;
        out.best_report = gr.report;
      }
      adam_step(v, st, gr.grad, x.frozen, cfg, lr);
      x.unpack(v);
      x.project();
      v = x.pack();  // projection may have clamped the launch height
    }

    out.checkpoints.push_back(out.best);
    out.epochs_run = epoch + 1;
    lr *= 0.5;

    const bool improved = best_total < epoch_start_best;
    stale_epochs = improved ? 0 : stale_epochs + 1;
    if (stale_epochs >= cfg.convergence_window && out.best_report.gamma_sum() < cfg.gamma_tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream os(path);
  require_input(bool(os), "cannot open trace file for writing: " + path);
  const size_t regions = trace.empty() ? 0 : trace.front().gamma.size();
  os << "epoch,iteration,lr,total,co,cp,ca,fl,sq";
  for (size_t j = 0; j < regions; ++j) os << ",gamma_" << j;
  os << "\n";
  char buf[32];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << ',' << buf;
  };
  for (const TraceRow& row : trace) {
    os << row.epoch << ',' << row.iteration;
    num(row.lr);
    num(row.total);
    num(row.co);
    num(row.cp);
    num(row.ca);
    num(row.fl);
    num(row.sq);
    for (double g : row.gamma) num(g);
    os << "\n";
  }
  require_input(bool(os), "failed writing trace file: " + path);
}

}  // namespace cbs
