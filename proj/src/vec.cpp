#include "cbs/vec.hpp"

namespace cbs {

Mat3 rotation_from_axis_angle(const Vec3& phi) {
  const double th2 = norm2(phi);
  double a, b;  // sinθ/θ, (1-cosθ)/θ²
  if (th2 < 1e-16) {
    a = 1.0 - th2 / 6.0;
    b = 0.5 - th2 / 24.0;
  } else {
    const double th = std::sqrt(th2);
    a = std::sin(th) / th;
    b = (1.0 - std::cos(th)) / th2;
  }
  const Mat3 K = skew(phi);
  return Mat3::identity() + K * a + (K * K) * b;
}

std::array<Mat3, 3> rotation_jacobian(const Vec3& phi) {
  // Gallego & Yezzi: dR/dφ_i = ((φ_i [φ]× + [φ × (I-R) e_i]×) / ‖φ‖²) R.
  const double th2 = norm2(phi);
  std::array<Mat3, 3> J;
  if (th2 < 1e-16) {
    for (int i = 0; i < 3; ++i) {
      Vec3 e{0, 0, 0};
      e[i] = 1.0;
      J[i] = skew(e);
    }
    return J;
  }
  const Mat3 R = rotation_from_axis_angle(phi);
  for (int i = 0; i < 3; ++i) {
    Vec3 e{0, 0, 0};
    e[i] = 1.0;
    const Vec3 w = cross(phi, e - R * e);
    J[i] = ((skew(phi) * phi[i] + skew(w)) * (1.0 / th2)) * R;
  }
  return J;
}

}  // namespace cbs
