#pragma once

// Reference computations that share no code with the library: the
// hyperboloid model, the explicit Poincare extension formula, geodesic ODE
// integration, law-of-cosines triangle areas and Simpson quadrature.

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

namespace oracle {

using C = std::complex<double>;
using V3 = std::array<double, 3>;
using V4 = std::array<double, 4>;

inline V4 hyperboloid(const V3& p) {
  const double s = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
  return {(1.0 + s) / (2.0 * p[2]), p[0] / p[2], p[1] / p[2], (1.0 - s) / (2.0 * p[2])};
}

inline double minkowski(const V4& a, const V4& b) { return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]; }

inline double dist(const V3& p, const V3& q) {
  const double c = -minkowski(hyperboloid(p), hyperboloid(q));
  return std::acosh(std::max(1.0, c));
}

// Scale-free separation |p - q| / sqrt(z_p z_q); close to dist for nearby
// points and free of the acosh cancellation near 1.
inline double gap(const V3& p, const V3& q) {
  const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz) / std::sqrt(p[2] * q[2]);
}

// (z, t) -> ((a z + b) conj(c z + d) + a conj(c) t^2, t) / (|c z + d|^2 + |c|^2 t^2), det 1.
inline V3 poincare_extension(C a, C b, C c, C d, const V3& p) {
  const C z(p[0], p[1]);
  const double t = p[2];
  const C czd = c * z + d;
  const double den = std::norm(czd) + std::norm(c) * t * t;
  const C w = ((a * z + b) * std::conj(czd) + a * std::conj(c) * t * t) / den;
  return {w.real(), w.imag(), t / den};
}

// Unit-speed geodesic from p with initial model velocity v (|v| = p.z), RK4
// on x'' = 2 x' z' / z, y'' = 2 y' z' / z, z'' = (z'^2 - x'^2 - y'^2) / z.
inline V3 geodesic_ode(const V3& p, const V3& v, double t, int steps = 20000) {
  using S = std::array<double, 6>;
  auto f = [](const S& s) {
    const double z = s[2];
    return S{s[3], s[4], s[5], 2 * s[3] * s[5] / z, 2 * s[4] * s[5] / z,
             (s[5] * s[5] - s[3] * s[3] - s[4] * s[4]) / z};
  };
  S s{p[0], p[1], p[2], v[0], v[1], v[2]};
  const double h = t / steps;
  for (int k = 0; k < steps; ++k) {
    auto add = [](const S& a, const S& b, double w) {
      S r;
      for (int i = 0; i < 6; ++i) r[i] = a[i] + w * b[i];
      return r;
    };
    const S k1 = f(s), k2 = f(add(s, k1, h / 2)), k3 = f(add(s, k2, h / 2)), k4 = f(add(s, k3, h));
    for (int i = 0; i < 6; ++i) s[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return {s[0], s[1], s[2]};
}

// Hyperbolic length of a parametrized path by Simpson's rule.
inline double path_length(const std::function<V3(double)>& path, double a, double b, int n = 4000) {
  auto speed = [&](double s) {
    const double e = 1e-6 * (b - a);
    const V3 p = path(s + e), q = path(s - e), c = path(s);
    const double dx = (p[0] - q[0]) / (2 * e), dy = (p[1] - q[1]) / (2 * e), dz = (p[2] - q[2]) / (2 * e);
    return std::sqrt(dx * dx + dy * dy + dz * dz) / c[2];
  };
  const double h = (b - a) / n;
  double acc = speed(a) + speed(b);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * speed(a + k * h);
  return acc * h / 3.0;
}

// Angle-defect area of the geodesic triangle via the hyperbolic law of cosines.
inline double triangle_area(const V3& p, const V3& q, const V3& r) {
  const double a = dist(q, r), b = dist(p, r), c = dist(p, q);
  auto angle = [](double opp, double s1, double s2) {
    const double v = (std::cosh(s1) * std::cosh(s2) - std::cosh(opp)) / (std::sinh(s1) * std::sinh(s2));
    return std::acos(std::clamp(v, -1.0, 1.0));
  };
  return std::numbers::pi - angle(a, b, c) - angle(b, a, c) - angle(c, a, b);
}

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return acc * h / 3.0;
}

// Half-separation of the catenoid with neck r0: t(r) = int c / (cosh r sqrt(sinh^2 r cosh^2 r - c^2)) dr
// from r0 to infinity, with r = r0 + w^2 near the neck and r = r0 + 1 + y / (1 - y) beyond.
inline double catenoid_half_separation(double r0) {
  const double c = std::sinh(r0) * std::cosh(r0);
  auto dtdr = [&](double r) {
    const double s = std::sinh(r) * std::cosh(r);
    return c / (std::cosh(r) * std::sqrt((s - c) * (s + c)));
  };
  auto near = [&](double w) {
    if (w == 0.0) {
      // limit of 2 w dt/dr as w -> 0
      const double dsdr = std::cosh(2 * r0);
      return 2.0 * c / (std::cosh(r0) * std::sqrt(dsdr * 2 * c));
    }
    return 2.0 * w * dtdr(r0 + w * w);
  };
  auto far = [&](double y) {
    if (y >= 1.0) return 0.0;
    const double r = r0 + 1.0 + y / (1.0 - y);
    if (r > 200) return 0.0;
    return dtdr(r) / ((1.0 - y) * (1.0 - y));
  };
  return simpson(near, 0.0, 1.0, 20000) + simpson(far, 0.0, 1.0, 20000);
}

inline std::mt19937_64 rng(unsigned long long seed) { return std::mt19937_64(seed); }

}  // namespace oracle
