#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>

namespace cbs {

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator*(double s, const Vec3& v) { return v * s; }
  friend std::ostream& operator<<(std::ostream& os, const Vec3& v) {
    return os << "(" << v.x << ", " << v.y << ", " << v.z << ")";
  }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm2(v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }

// Component-wise min/max, used for bounding boxes.
inline Vec3 cmin(const Vec3& a, const Vec3& b) {
  return {std::fmin(a.x, b.x), std::fmin(a.y, b.y), std::fmin(a.z, b.z)};
}
inline Vec3 cmax(const Vec3& a, const Vec3& b) {
  return {std::fmax(a.x, b.x), std::fmax(a.y, b.y), std::fmax(a.z, b.z)};
}

// Position + roll angle: one trajectory-curve control point.
struct Vec4 {
  double x = 0, y = 0, z = 0, w = 0;

  constexpr Vec4() = default;
  constexpr Vec4(double x_, double y_, double z_, double w_) : x(x_), y(y_), z(z_), w(w_) {}
  Vec4(const Vec3& p, double w_) : x(p.x), y(p.y), z(p.z), w(w_) {}

  Vec3 xyz() const { return {x, y, z}; }

  double& operator[](int i) { return (&x)[i]; }
  double operator[](int i) const { return (&x)[i]; }

  Vec4 operator+(const Vec4& o) const { return {x + o.x, y + o.y, z + o.z, w + o.w}; }
  Vec4 operator-(const Vec4& o) const { return {x - o.x, y - o.y, z - o.z, w - o.w}; }
  Vec4 operator*(double s) const { return {x * s, y * s, z * s, w * s}; }
  Vec4& operator+=(const Vec4& o) { x += o.x; y += o.y; z += o.z; w += o.w; return *this; }
  friend Vec4 operator*(double s, const Vec4& v) { return v * s; }
};

// Column-major-free 3x3: rows stored, m.r[i] is row i.
struct Mat3 {
  Vec3 r0, r1, r2;

  static Mat3 identity() { return {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }
  static Mat3 from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return {{c0.x, c1.x, c2.x}, {c0.y, c1.y, c2.y}, {c0.z, c1.z, c2.z}};
  }

  Vec3 col(int j) const { return {r0[j], r1[j], r2[j]}; }
  Vec3 operator*(const Vec3& v) const { return {dot(r0, v), dot(r1, v), dot(r2, v)}; }
  Mat3 operator*(const Mat3& o) const {
    return Mat3::from_cols((*this) * o.col(0), (*this) * o.col(1), (*this) * o.col(2));
  }
  Mat3 operator+(const Mat3& o) const { return {r0 + o.r0, r1 + o.r1, r2 + o.r2}; }
  Mat3 operator*(double s) const { return {r0 * s, r1 * s, r2 * s}; }
  Mat3 transposed() const { return Mat3::from_cols(r0, r1, r2); }

  // Apply transpose without materializing it: R^T v.
  Vec3 tmul(const Vec3& v) const { return {dot(col(0), v), dot(col(1), v), dot(col(2), v)}; }
};

inline Mat3 skew(const Vec3& v) {
  return {{0, -v.z, v.y}, {v.z, 0, -v.x}, {-v.y, v.x, 0}};
}

inline Mat3 outer(const Vec3& a, const Vec3& b) {
  return {b * a.x, b * a.y, b * a.z};
}

// Rodrigues. Safe at phi -> 0 (Taylor).
Mat3 rotation_from_axis_angle(const Vec3& phi);

// d(R phi)/d(phi_i) as three matrices (Gallego & Yezzi closed form).
std::array<Mat3, 3> rotation_jacobian(const Vec3& phi);

}  // namespace cbs
