#pragma once

#include <cmath>

#include "cbs/curve.hpp"
#include "cbs/frames.hpp"
#include "cbs/rng.hpp"

namespace cbs::testutil {

inline double rel_err(double got, double want) {
  const double scale = std::fmax(std::fabs(want), 1.0);
  return std::fabs(got - want) / scale;
}

// Random degree-n curve inside a box, rejecting grids with near-degenerate
// tangents so frame propagation is well defined.
inline Curve random_curve(Rng& rng, double extent = 20.0, int degree = 5,
                          double min_speed = 0.5) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Curve c;
    c.p.resize(degree + 1);
    for (auto& p : c.p)
      p = Vec4(rng.uniform(0.0, extent), rng.uniform(0.0, extent), rng.uniform(0.0, extent),
               rng.uniform(-3.14, 3.14));
    bool ok = true;
    for (int i = 0; i <= 64 && ok; ++i) {
      const Vec4 d = curve_derivative(c, double(i) / 64.0);
      if (norm(d.xyz()) < min_speed) ok = false;
    }
    if (ok) return c;
  }
  // Deterministic fallback: a gentle helix-like arc.
  Curve c;
  c.p.resize(degree + 1);
  for (int k = 0; k <= degree; ++k)
    c.p[k] = Vec4(3.0 * k, double(k % 2), 4.0 * k, 0.3 * k);
  return c;
}

// Trajectory-shaped random curve: rising in z with moderate lateral drift,
// the regime actual sweep curves live in (bounded per-step tangent turning).
inline Curve random_traj_curve(Rng& rng, double height = 30.0, int degree = 5) {
  Curve c;
  c.p.resize(degree + 1);
  for (int k = 0; k <= degree; ++k)
    c.p[k] = Vec4(rng.uniform(-0.15, 0.15) * height, rng.uniform(-0.15, 0.15) * height,
                  height * k / degree + rng.uniform(-0.05, 0.05) * height,
                  rng.uniform(-1.5, 1.5));
  return c;
}

inline double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

}  // namespace cbs::testutil
