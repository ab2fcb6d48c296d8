#pragma once

#include <algorithm>
#include <cmath>

namespace shaped_pick {

// Point or displacement in workspace units (the unit cube).
struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int axis) const {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  constexpr double& operator[](int axis) {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend constexpr Vec3 operator*(double s, const Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm2(const Vec3& v) {
  return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

inline double distance(const Vec3& a, const Vec3& b) { return norm2(a - b); }

inline Vec3 clamp(const Vec3& v, double lo, double hi) {
  return {std::clamp(v.x, lo, hi), std::clamp(v.y, lo, hi),
          std::clamp(v.z, lo, hi)};
}

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

}  // namespace shaped_pick
