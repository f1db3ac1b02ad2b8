#include "cbs/curve.hpp"

#include <algorithm>
#include <cmath>

#include "cbs/error.hpp"

namespace cbs {

bool Curve::valid() const {
  if (p.size() < 2) return false;
  double best = 0;
  for (size_t i = 0; i < p.size(); ++i)
    for (size_t j = i + 1; j < p.size(); ++j)
      best = std::max(best, norm(p[i].xyz() - p[j].xyz()));
  return best > 1e-6;
}

namespace {

// Degree 5 is the default; 16 covers anything a config could reasonably ask.
constexpr int kMaxStackDegree = 15;

template <class F>
Vec4 with_scratch(const Curve& c, F&& f) {
  const int n = c.degree();
  if (n <= kMaxStackDegree) {
    Vec4 buf[kMaxStackDegree + 1];
    std::copy(c.p.begin(), c.p.end(), buf);
    return f(buf, n);
  }
  std::vector<Vec4> buf(c.p);
  return f(buf.data(), n);
}

}  // namespace

Vec4 curve_eval(const Curve& c, double t) {
  require_input(t >= 0.0 && t <= 1.0, "curve parameter out of [0,1]");
  require_input(c.p.size() >= 2, "curve needs at least 2 control points");
  return with_scratch(c, [t](Vec4* b, int n) {
    for (int r = 1; r <= n; ++r)
      for (int k = 0; k <= n - r; ++k) b[k] = b[k] * (1.0 - t) + b[k + 1] * t;
    return b[0];
  });
}

Vec4 curve_derivative(const Curve& c, double t) {
  require_input(t >= 0.0 && t <= 1.0, "curve parameter out of [0,1]");
  require_input(c.p.size() >= 2, "curve needs at least 2 control points");
  return with_scratch(c, [t](Vec4* b, int n) {
    for (int k = 0; k < n; ++k) b[k] = (b[k + 1] - b[k]) * double(n);
    for (int r = 1; r <= n - 1; ++r)
      for (int k = 0; k <= n - 1 - r; ++k) b[k] = b[k] * (1.0 - t) + b[k + 1] * t;
    return b[0];
  });
}

std::pair<Curve, Curve> curve_subdivide(const Curve& c, double t) {
  require_input(t > 0.0 && t < 1.0, "split parameter must lie strictly inside (0,1)");
  require_input(c.p.size() >= 2, "curve needs at least 2 control points");
  const int n = c.degree();
  std::vector<Vec4> b(c.p);
  Curve left, right;
  left.p.resize(n + 1);
  right.p.resize(n + 1);
  left.p[0] = b[0];
  right.p[n] = b[n];
  for (int r = 1; r <= n; ++r) {
    for (int k = 0; k <= n - r; ++k) b[k] = b[k] * (1.0 - t) + b[k + 1] * t;
    left.p[r] = b[0];
    right.p[n - r] = b[n - r];
  }
  return {std::move(left), std::move(right)};
}

void bernstein_row(int degree, double t, double* B) {
  B[0] = 1.0;
  for (int r = 1; r <= degree; ++r) {
    B[r] = B[r - 1] * t;
    for (int k = r - 1; k >= 1; --k) B[k] = B[k] * (1.0 - t) + B[k - 1] * t;
    B[0] *= (1.0 - t);
  }
}

void bernstein_deriv_row(int degree, double t, double* dB) {
  const int n = degree;
  if (n == 0) {
    dB[0] = 0.0;
    return;
  }
  double stack[kMaxStackDegree + 1];
  std::vector<double> heap;
  double* Bm1 = stack;
  if (n - 1 > kMaxStackDegree) {
    heap.resize(n);
    Bm1 = heap.data();
  }
  bernstein_row(n - 1, t, Bm1);
  for (int k = 0; k <= n; ++k) {
    const double lo = (k >= 1) ? Bm1[k - 1] : 0.0;
    const double hi = (k <= n - 1) ? Bm1[k] : 0.0;
    dB[k] = double(n) * (lo - hi);
  }
}

Curve vertical_curve(double z_top, int degree) {
  Curve c;
  c.p.resize(degree + 1);
  for (int k = 0; k <= degree; ++k)
    c.p[k] = Vec4(0.0, 0.0, z_top * double(k) / double(degree), 0.0);
  return c;
}

}  // namespace cbs
