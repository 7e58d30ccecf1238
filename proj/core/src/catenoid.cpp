#include "hyperplateau/catenoid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "hyperplateau/errors.hpp"

namespace hyperplateau {

namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr double kPi = std::numbers::pi;

// dt/du with r = r0 + u^2; finite at u = 0.
double slope_u(double u, double r0) {
  const double c = std::sinh(r0) * std::cosh(r0);
  if (u == 0.0) return 2.0 * c / (std::cosh(r0) * std::sqrt(2.0 * c * std::cosh(2.0 * r0)));
  const double r = r0 + u * u;
  if (r > 300.0) return 0.0;
  // sinh r cosh r - c = cosh(r + r0) sinh(r - r0), without cancellation
  const double minus = std::cosh(r + r0) * std::sinh(u * u);
  const double plus = 0.5 * std::sinh(2.0 * r) + c;
  return 2.0 * u * c / (std::cosh(r) * std::sqrt(minus * plus));
}

double tail_integral(double r_from, double r0, double tol) {
  auto f = [r0](double r) { return profile_slope(r, r0); };
  double err = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, r_from, std::numeric_limits<double>::infinity(), 15,
                                              tol, &err);
}

double effective_r_max(double r0, double r_max) { return std::max(r_max, r0 + 1.0); }

}  // namespace

double profile_slope(double r, double r0) {
  if (!(r > r0)) throw DomainError("profile_slope: r must exceed r0");
  if (r > 300.0) return 0.0;
  const double c = std::sinh(r0) * std::cosh(r0);
  const double minus = std::cosh(r + r0) * std::sinh(r - r0);
  const double plus = 0.5 * std::sinh(2.0 * r) + c;
  return c / (std::cosh(r) * std::sqrt(minus * plus));
}

double half_separation(double r0, double tol) {
  if (!(r0 > 0.0)) throw DomainError("half_separation: r0 must be positive");
  const double r_max = effective_r_max(r0, kDefaultRMax);
  const double umax = std::sqrt(r_max - r0);
  auto g = [r0](double u) { return slope_u(u, r0); };
  double err = 0.0;
  const double body = gauss_kronrod<double, 31>::integrate(g, 0.0, umax, 20, tol, &err);
  if (err > 1e3 * tol * std::max(1.0, body)) {
    throw ConvergenceError(fmt::format("half_separation: quadrature bound {:.3g} not met", err), err);
  }
  return body + tail_integral(r_max, r0, tol);
}

double CatenoidProfile::dt_du(double uu) const { return slope_u(uu, r0); }

double CatenoidProfile::t_at(double uu) const {
  const double umax = u.back();
  if (uu <= 0.0) return 0.0;
  if (uu >= umax) return static_cast<double>(t.back());
  const double h = u[1] - u[0];
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(uu / h), u.size() - 2);
  const double s = (uu - u[k]) / h;
  const double t0 = static_cast<double>(t[k]);
  const double t1 = static_cast<double>(t[k + 1]);
  const double m0 = dt_du(u[k]) * h;
  const double m1 = dt_du(u[k + 1]) * h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * t0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * t1 + (s3 - s2) * m1;
}

double CatenoidProfile::radius_at(double tt) const {
  const double a = std::abs(tt);
  if (a >= T) return std::numeric_limits<double>::infinity();
  const double t_end = static_cast<double>(t.back());
  if (a > t_end) {
    // e^{-3r} tail calibrated to the computed remainder at r_max
    const double amp = tail * std::exp(3.0 * r_max);
    return -std::log((T - a) / amp) / 3.0;
  }
  // t(u) is increasing; bisection on the Hermite interpolant
  double lo = 0.0, hi = u.back();
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (t_at(mid) < a ? lo : hi) = mid;
  }
  const double uu = 0.5 * (lo + hi);
  return r0 + uu * uu;
}

CatenoidProfile profile(double r0, double r_max, double tol, int table_size) {
  if (!(r0 > 0.0)) throw DomainError("profile: r0 must be positive");
  if (!(r_max > r0)) throw DomainError("profile: r_max must exceed r0");
  if (table_size < 16) throw DomainError("profile: table too small");
  CatenoidProfile p;
  p.r0 = r0;
  p.c = std::sinh(r0) * std::cosh(r0);
  p.r_max = r_max;
  const double umax = std::sqrt(r_max - r0);
  const int n = table_size;
  p.u.resize(n);
  p.r.resize(n);
  p.t.resize(n);
  auto g = [r0](double u) { return slope_u(u, r0); };
  long double acc = 0.0L;
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    p.u[k] = umax * k / (n - 1);
    p.r[k] = r0 + p.u[k] * p.u[k];
    if (k > 0) {
      double err = 0.0;
      const double piece = gauss_kronrod<double, 15>::integrate(g, p.u[k - 1], p.u[k], 10, tol, &err);
      worst = std::max(worst, err);
      acc += piece;
    }
    p.t[k] = acc;
  }
  if (worst > 1e3 * tol) {
    throw ConvergenceError(fmt::format("profile: quadrature bound {:.3g} not met", worst), worst);
  }
  p.tail = tail_integral(r_max, r0, tol);
  p.tail_model = 8.0 * p.c / 3.0 * std::exp(-3.0 * r_max);
  p.T = static_cast<double>(acc) + p.tail;
  return p;
}

double first_integral_drift(const CatenoidProfile& p) {
  static constexpr double kCentral[7] = {-1.0 / 60, 9.0 / 60, -45.0 / 60, 0.0, 45.0 / 60, -9.0 / 60, 1.0 / 60};
  static constexpr double kForward[7] = {-49.0 / 20, 6.0, -15.0 / 2, 20.0 / 3, -15.0 / 4, 6.0 / 5, -1.0 / 6};
  const std::size_t n = p.u.size();
  const double h = p.u[1] - p.u[0];
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    // differences against t[k]: the rounded stencil weights do not sum to zero exactly
    long double d = 0.0L;
    if (k >= 3 && k + 3 < n) {
      for (int j = 0; j < 7; ++j) d += kCentral[j] * (p.t[k + j - 3] - p.t[k]);
    } else if (k < 3) {
      for (int j = 1; j < 7; ++j) d += kForward[j] * (p.t[k + j] - p.t[k]);
    } else {
      for (int j = 1; j < 7; ++j) d -= kForward[j] * (p.t[k - j] - p.t[k]);
    }
    const double dtdu = static_cast<double>(d / h);
    const double r = p.r[k];
    const double rp = 2.0 * p.u[k] / dtdu;  // dr/dt
    const double ch = std::cosh(r);
    const double val = std::sinh(r) * ch * ch / std::sqrt(ch * ch + rp * rp);
    worst = std::max(worst, std::abs(val - p.c));
  }
  return worst;
}

SeparationMax max_separation(double tol) {
  SeparationMax out{};
  for (int k = 0; k <= 40; ++k) {
    const double r0 = 0.02 * std::pow(400.0, k / 40.0);  // 0.02 .. 8
    out.samples.emplace_back(r0, 2.0 * half_separation(r0, tol));
  }
  std::size_t imax = 0;
  for (std::size_t k = 1; k < out.samples.size(); ++k) {
    if (out.samples[k].second > out.samples[imax].second) imax = k;
  }
  for (std::size_t k = 1; k < out.samples.size(); ++k) {
    const bool rising = out.samples[k].second > out.samples[k - 1].second;
    if ((k <= imax) != rising) {
      throw GeometryError(fmt::format("max_separation: separation curve not unimodal near r0 = {:.6g}",
                                      out.samples[k].first));
    }
  }
  if (imax == 0 || imax + 1 == out.samples.size()) {
    throw GeometryError("max_separation: maximum at the edge of the bracket");
  }
  double a = out.samples[imax - 1].first;
  double b = out.samples[imax + 1].first;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = 2.0 * half_separation(x1, tol), f2 = 2.0 * half_separation(x2, tol);
  while (b - a > 1e-8) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = 2.0 * half_separation(x2, tol);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = 2.0 * half_separation(x1, tol);
    }
  }
  out.r0_star = 0.5 * (a + b);
  out.d_max = 2.0 * half_separation(out.r0_star, tol);
  return out;
}

double neck_for_separation(double s, Branch branch, const SeparationMax& sep, double tol) {
  if (!(s > 0.0)) throw DomainError("catenoid: degenerate separation (planes coincide or touch)");
  if (s >= sep.d_max) {
    throw GeometryError(fmt::format("no catenoid barrier: separation {:.6g} >= d_max {:.6g}", s, sep.d_max));
  }
  double lo, hi;
  if (branch == Branch::Thin) {
    lo = 1e-9;
    hi = sep.r0_star;
  } else {
    lo = sep.r0_star;
    hi = 2.0 * sep.r0_star;
    while (2.0 * half_separation(hi, tol) > s) {
      hi *= 2.0;
      if (hi > 200.0) throw GeometryError("catenoid: thick branch bracket failed");
    }
  }
  const bool increasing = branch == Branch::Thin;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    const bool below = 2.0 * half_separation(mid, tol) < s;
    if (below == increasing) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

SolidCatenoid::SolidCatenoid(CatenoidProfile profile, const Mobius& placement)
    : profile_(std::move(profile)), placement_(placement), inverse_(placement.inverse()) {}

FermiCoords SolidCatenoid::standard_coordinates(const PointH3& p) const {
  return fermi_coordinates(inverse_.apply(p));
}

bool SolidCatenoid::contains(const PointH3& p) const {
  const FermiCoords f = standard_coordinates(p);
  if (std::abs(f.t) >= profile_.T) return false;
  return f.r < profile_.radius_at(f.t);
}

PointH3 SolidCatenoid::project_out(const PointH3& p, double margin) const {
  if (!(margin > 0.0)) throw DomainError("project_out: margin must be positive");
  const FermiCoords f = standard_coordinates(p);
  if (std::abs(f.t) >= profile_.T) return p;
  const double rt = profile_.radius_at(f.t);
  if (f.r >= rt) return p;
  return placement_.apply(fermi_chart(f.t, rt + margin, f.theta));
}

Vec3 SolidCatenoid::outward_direction(const PointH3& p) const {
  const PointH3 q = inverse_.apply(p);
  const FermiCoords f = fermi_coordinates(q);
  const double at = std::abs(f.t);
  double drdt = 0.0;
  if (at > 0.0 && at < profile_.T) {
    const double rt = profile_.radius_at(at);
    if (rt > profile_.r0) drdt = std::copysign(1.0 / profile_slope(rt, profile_.r0), f.t);
  }
  const double et = std::exp(f.t);
  const double ch = std::cosh(f.r);
  const double sech = 1.0 / ch;
  const double th = std::tanh(f.r);
  const Vec3 d_r = et * Vec3(sech * sech * std::cos(f.theta), sech * sech * std::sin(f.theta), -sech * th);
  const Vec3 d_t = q.vec();
  const Vec3 n = d_r - (drdt / (ch * ch)) * d_t;
  const TangentVec out = placement_.apply(TangentVec{q, n});
  return out.v.normalized();
}

std::vector<Vec3> SolidCatenoid::axis_probe(double extend, int samples) const {
  if (samples < 2) throw DomainError("axis_probe: need two samples");
  std::vector<Vec3> out;
  const double a = profile_.T + extend;
  for (int k = 0; k < samples; ++k) {
    const double t = -a + 2.0 * a * k / (samples - 1);
    out.push_back(placement_.apply(PointH3(0.0, 0.0, std::exp(t))).vec());
  }
  return out;
}

std::pair<Mobius, double> coaxial_placement(const GeodesicPlane& p1, const GeodesicPlane& p2) {
  if (!p1.is_circle() || !p2.is_circle()) throw DomainError("coaxial_placement: circle planes required");
  const PlaneDistance d = plane_plane_distance(p1, p2);
  if (d.asymptotic || !(d.value > 0.0)) throw DomainError("catenoid: degenerate separation");
  const Circle a = p1.as_circle();
  const Circle b = p2.as_circle();
  const double dist_c = std::abs(b.center - a.center);
  Mobius m0 = Mobius::identity();
  Complex dir(1.0, 0.0);
  if (dist_c <= 1e-14 * std::max(a.radius, b.radius)) {
    m0 = Mobius::translation(-a.center);
  } else {
    dir = (b.center - a.center) / dist_c;
    const double s = (a.radius * a.radius + dist_c * dist_c - b.radius * b.radius) / dist_c;
    const double disc = s * s - 4.0 * a.radius * a.radius;
    if (!(disc > 0.0)) throw GeometryError("coaxial_placement: circles are not disjoint");
    const double sq = std::sqrt(disc);
    // product of the roots is r_a^2; avoid cancellation in the smaller one
    const double l1 = s > 0 ? 0.5 * (s + sq) : 0.5 * (s - sq);
    const double l2 = a.radius * a.radius / l1;
    const Complex x1 = a.center + l1 * dir;
    const Complex x2 = a.center + l2 * dir;
    m0 = Mobius(1.0, -x1, 1.0, -x2);
  }
  auto radius_after = [&](const Mobius& m, const Circle& c) {
    return std::abs(m.apply(BoundaryPoint(c.center + c.radius * dir * Complex(0.0, 1.0))).value());
  };
  double ra = radius_after(m0, a);
  double rb = radius_after(m0, b);
  if (ra > rb) {
    m0 = Mobius(0.0, 1.0, 1.0, 0.0) * m0;
    ra = 1.0 / ra;
    rb = 1.0 / rb;
  }
  const Mobius normal = Mobius::scaling(1.0 / std::sqrt(ra * rb)) * m0;
  return {normal.inverse(), d.value};
}

DiskMesh catenoid_mesh(const CatenoidProfile& p, const Mobius& placement, int columns, double r_end) {
  if (columns < 6) throw DomainError("catenoid_mesh: need at least 6 columns");
  if (!(r_end > p.r0) || r_end > p.r_max + 1e-12) throw DomainError("catenoid_mesh: bad r_end");
  const double u_end = std::sqrt(r_end - p.r0);
  // conformal coordinate sigma(u) = int sqrt(dr^2 + cosh^2 r dt^2) / sinh r
  const int fine = 8192;
  std::vector<double> us(fine + 1), sig(fine + 1, 0.0);
  auto dsig = [&](double uu) {
    const double r = p.r0 + uu * uu;
    const double g = p.dt_du(uu);
    return std::sqrt(4.0 * uu * uu + std::cosh(r) * std::cosh(r) * g * g) / std::sinh(r);
  };
  for (int k = 0; k <= fine; ++k) {
    us[k] = u_end * k / fine;
    if (k > 0) sig[k] = sig[k - 1] + 0.5 * (dsig(us[k - 1]) + dsig(us[k])) * (us[k] - us[k - 1]);
  }
  const double dtheta = 2.0 * kPi / columns;
  const int half_rows = std::max(2, static_cast<int>(std::lround(sig.back() / dtheta)));
  std::vector<double> row_u(half_rows + 1);
  for (int j = 0; j <= half_rows; ++j) {
    const double target = sig.back() * j / half_rows;
    const auto it = std::lower_bound(sig.begin(), sig.end(), target);
    const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - sig.begin()));
    const double w = (target - sig[k - 1]) / (sig[k] - sig[k - 1]);
    row_u[j] = us[k - 1] + w * (us[k] - us[k - 1]);
  }
  row_u[0] = 0.0;
  row_u[half_rows] = u_end;

  DiskMesh mesh;
  const int rows = 2 * half_rows + 1;
  for (int row = 0; row < rows; ++row) {
    const int j = row - half_rows;
    const double uu = row_u[std::abs(j)];
    const double t = (j < 0 ? -1.0 : 1.0) * p.t_at(uu);
    const double r = p.r0 + uu * uu;
    const double shift = (row % 2) * 0.5 * dtheta;
    for (int col = 0; col < columns; ++col) {
      mesh.vertices.push_back(placement.apply(fermi_chart(t, r, col * dtheta + shift)));
    }
  }
  auto id = [&](int row, int col) { return row * columns + ((col % columns) + columns) % columns; };
  for (int row = 0; row + 1 < rows; ++row) {
    for (int col = 0; col < columns; ++col) {
      if (row % 2 == 0) {
        mesh.triangles.push_back({id(row, col), id(row, col + 1), id(row + 1, col)});
        mesh.triangles.push_back({id(row, col + 1), id(row + 1, col + 1), id(row + 1, col)});
      } else {
        mesh.triangles.push_back({id(row, col), id(row + 1, col + 1), id(row + 1, col)});
        mesh.triangles.push_back({id(row, col), id(row, col + 1), id(row + 1, col + 1)});
      }
    }
  }
  mesh.fixed_mask.assign(mesh.vertices.size(), 0);
  for (int col = 0; col < columns; ++col) {
    mesh.fixed_mask[id(0, col)] = 1;
    mesh.fixed_mask[id(rows - 1, col)] = 1;
    mesh.boundary_loop.push_back(id(0, col));
  }
  return mesh;
}

CatenoidBarrier catenoid_for_planes(const GeodesicPlane& p1, const GeodesicPlane& p2, Branch branch,
                                    const SeparationMax& sep, int columns) {
  auto [placement, s] = coaxial_placement(p1, p2);
  const double r0 = neck_for_separation(s, branch, sep);
  CatenoidProfile prof = profile(r0, std::max(kDefaultRMax, r0 + 1.0));
  // keep the hyperbolic column spacing at the neck near 2 pi / columns
  const int cols = std::clamp(static_cast<int>(std::ceil(columns * std::sinh(r0))), columns, 8 * columns);
  DiskMesh annulus = catenoid_mesh(prof, placement, cols, std::min(prof.r_max, r0 + kMeshREnd));
  return {SolidCatenoid(std::move(prof), placement), std::move(annulus), s};
}

std::string profile_csv(const CatenoidProfile& p) {
  std::string out = "r,t\n";
  for (std::size_t k = 0; k < p.r.size(); ++k) {
    out += fmt::format("{:.17g},{:.17g}\n", p.r[k], static_cast<double>(p.t[k]));
  }
  return out;
}

}  // namespace hyperplateau
