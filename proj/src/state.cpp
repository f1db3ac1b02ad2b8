#include "cbs/state.hpp"

#include <algorithm>
#include <cmath>

#include "cbs/error.hpp"

namespace cbs {

namespace {

double smooth_abs(double x, double eps) { return std::sqrt(x * x + eps); }

}  // namespace

double sigmoid(double x, double beta) {
  const double z = beta * x;
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double sigmoid_dot(double x, double beta) {
  const double s = sigmoid(x, beta);
  return beta * s * (1.0 - s);
}

double lse_max(const double* v, int n, double alpha) {
  require_input(n > 0, "lse_max: empty input");
  require_input(alpha > 0, "lse_max: alpha must be positive");
  double m = v[0];
  for (int i = 1; i < n; ++i) m = std::fmax(m, v[i]);
  if (n == 1) return m;
  double sum = 0;
  for (int i = 0; i < n; ++i) sum += std::exp(alpha * (v[i] - m));
  return m + std::log(sum) / alpha;
}

double lse_max(const std::vector<double>& v, double alpha) {
  return lse_max(v.data(), int(v.size()), alpha);
}

TimeGrid uniform_time_grid(int nodes) {
  require_input(nodes >= 2, "uniform_time_grid: need at least two nodes");
  TimeGrid g;
  g.t.resize(size_t(nodes));
  for (int i = 0; i < nodes; ++i) g.t[size_t(i)] = double(i) / (nodes - 1);
  g.t.front() = 0.0;
  g.t.back() = 1.0;
  g.weights = trapezoid_weights(g.t);
  return g;
}

double contact_smooth(const Vec3& q, const FrameSample& f, const StateParams& sp) {
  const Vec3 v = q - f.c;
  const double r = sigmoid(sp.rx - smooth_abs(dot(v, f.n), sp.eps_abs), sp.beta) *
                   sigmoid(sp.ry - smooth_abs(dot(v, f.b), sp.eps_abs), sp.beta);
  return sigmoid_dot(dot(v, f.tangent), sp.beta) * r;
}

namespace {

// Shared sweep recursion: crossing mass per interval, prefix-summed.
template <class Visit>
void sweep_prefix(const Vec3& q, const CurveFrames& f, double tmax, const StateParams& sp,
                  Visit&& visit) {
  double uprev = 0, rprev = 0;
  Vec3 tprev;
  for (int i = 0; i < f.nodes; ++i) {
    if (f.t[size_t(i)] > tmax + 1e-15) break;
    const Vec3 v = q - f.c(i);
    const Vec3 tangent = f.tangent(i);
    const double u = sigmoid(dot(v, tangent), sp.beta);
    const double r = sigmoid(sp.rx - smooth_abs(dot(v, f.n(i)), sp.eps_abs), sp.beta) *
                     sigmoid(sp.ry - smooth_abs(dot(v, f.b(i)), sp.eps_abs), sp.beta);
    if (i > 0) {
      const double kappa = std::fmax(uprev - u, 0.0) * 0.5 * (rprev + r);
      visit(kappa, (tprev + tangent) * 0.5);
    }
    uprev = u;
    rprev = r;
    tprev = tangent;
  }
}

}  // namespace

double printed_state(const Vec3& q, const CurveFrames& f, double t, const StateParams& sp) {
  double S = 0;
  sweep_prefix(q, f, t, sp, [&](double kappa, const Vec3&) { S += kappa; });
  return std::fmin(S, 1.0);
}

Vec3 local_print_dir(const Vec3& q, const CurveFrames& f, const StateParams& sp) {
  Vec3 d{0, 0, 0};
  sweep_prefix(q, f, 1.0, sp, [&](double kappa, const Vec3& tavg) { d += tavg * kappa; });
  return d;
}

bool swept(const Vec3& d) { return norm(d) > 1e-6; }

Vec3 normalized_dir(const Vec3& d) { return d * (1.0 / std::fmax(norm(d), 1e-6)); }

}  // namespace cbs
