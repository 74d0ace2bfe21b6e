#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace mkvlab {

inline constexpr int kMaxDim = 3;

// Points and vectors in R^d, d <= 3. Unused trailing components stay zero.
using Vec = std::array<double, kMaxDim>;

inline Vec operator+(const Vec& a, const Vec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec operator-(const Vec& a, const Vec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec operator*(double s, const Vec& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec& operator+=(Vec& a, const Vec& b) {
  a[0] += b[0];
  a[1] += b[1];
  a[2] += b[2];
  return a;
}

inline double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline bool all_finite(const Vec& a) {
  return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

// Volume of the unit ball in R^d (omega_d) and area of the unit sphere S^{d-1}.
inline double unit_ball_volume(int d) {
  constexpr double pi = 3.14159265358979323846;
  switch (d) {
    case 1: return 2.0;
    case 2: return pi;
    default: return 4.0 * pi / 3.0;
  }
}

inline double unit_sphere_area(int d) { return d * unit_ball_volume(d); }

}  // namespace mkvlab
