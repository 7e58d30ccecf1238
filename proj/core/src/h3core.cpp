#include "hyperplateau/h3core.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "hyperplateau/errors.hpp"

namespace hyperplateau {

namespace {

// Circle through three finite points, or nullopt when they are collinear.
std::optional<Circle> circumcircle(Complex p, Complex q, Complex r) {
  const Complex b = q - p;
  const Complex c = r - p;
  const double d = 2.0 * (b.real() * c.imag() - b.imag() * c.real());
  const double scale = std::max({std::norm(b), std::norm(c), 1e-300});
  if (std::abs(d) <= 1e-13 * scale) return std::nullopt;
  const double bb = std::norm(b);
  const double cc = std::norm(c);
  const Complex center(p.real() + (c.imag() * bb - b.imag() * cc) / d,
                       p.imag() + (b.real() * cc - c.real() * bb) / d);
  return Circle{center, std::abs(center - p)};
}

// Positive-side witness point for the raw (orientation +1) plane.
PointH3 positive_witness(const GeodesicPlane& plane) {
  if (plane.is_circle()) {
    const auto& c = plane.as_circle();
    const double h = plane.orientation() > 0 ? 2.0 * c.radius : 0.5 * c.radius;
    return {c.center.real(), c.center.imag(), h};
  }
  const auto& l = plane.as_line();
  const Complex off = l.point + Complex(0.0, static_cast<double>(plane.orientation())) * l.direction;
  return {off.real(), off.imag(), 1.0};
}

}  // namespace

PointH3::PointH3(double x, double y, double z) : x_(x), y_(y), z_(z) {
  if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw DomainError("PointH3: non-finite coordinate");
  }
  if (z <= kMinHeight) throw DomainError("PointH3: height must be > 1e-12");
}

TangentVec TangentVec::normalized() const {
  const double n = norm();
  if (n == 0.0) throw DomainError("TangentVec: cannot normalize zero vector");
  return {base, v / n};
}

Complex BoundaryPoint::value() const {
  if (!value_) throw DomainError("BoundaryPoint: point at infinity has no finite value");
  return *value_;
}

Mobius::Mobius(Complex a, Complex b, Complex c, Complex d) {
  const Complex det = a * d - b * c;
  if (std::abs(det) < 1e-300 || !std::isfinite(std::abs(det))) {
    throw DomainError("Mobius: singular matrix");
  }
  const Complex s = std::sqrt(det);
  a_ = a / s;
  b_ = b / s;
  c_ = c / s;
  d_ = d / s;
}

Mobius Mobius::scaling(double k) {
  if (!(k > 0.0)) throw DomainError("Mobius::scaling: factor must be positive");
  const double s = std::sqrt(k);
  return {s, 0.0, 0.0, 1.0 / s};
}

Mobius Mobius::rotation(double angle) {
  const Complex h = std::polar(1.0, 0.5 * angle);
  return {h, 0.0, 0.0, std::conj(h)};
}

Mobius Mobius::cross_ratio(Complex z1, Complex z2, Complex z3) {
  return {z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1)};
}

Mobius Mobius::operator*(const Mobius& r) const {
  return {a_ * r.a_ + b_ * r.c_, a_ * r.b_ + b_ * r.d_, c_ * r.a_ + d_ * r.c_,
          c_ * r.b_ + d_ * r.d_};
}

BoundaryPoint Mobius::apply(const BoundaryPoint& w) const {
  if (w.is_infinite()) {
    if (c_ == Complex(0.0)) return BoundaryPoint::infinity();
    return a_ / c_;
  }
  const Complex z = w.value();
  const Complex den = c_ * z + d_;
  // relative test: the pole is rarely hit exactly in floating point
  if (std::abs(den) <= 1e-14 * (std::abs(c_ * z) + std::abs(d_))) return BoundaryPoint::infinity();
  return (a_ * z + b_) / den;
}

PointH3 Mobius::apply(const PointH3& p) const {
  const Complex w = p.horizontal();
  const double z = p.z();
  const Complex cwd = c_ * w + d_;
  const double den = std::norm(cwd) + std::norm(c_) * z * z;
  const Complex num = (a_ * w + b_) * std::conj(cwd) + a_ * std::conj(c_) * z * z;
  const Complex wn = num / den;
  return {wn.real(), wn.imag(), z / den};
}

TangentVec Mobius::apply(const TangentVec& t) const {
  const Complex w = t.base.horizontal();
  const double z = t.base.z();
  const Complex dw(t.v.x(), t.v.y());
  const double dz = t.v.z();
  const Complex cwd = c_ * w + d_;
  const double den = std::norm(cwd) + std::norm(c_) * z * z;
  const Complex num = (a_ * w + b_) * std::conj(cwd) + a_ * std::conj(c_) * z * z;
  const Complex dnum = a_ * dw * std::conj(cwd) + (a_ * w + b_) * std::conj(c_ * dw) +
                       2.0 * a_ * std::conj(c_) * z * dz;
  const double dden = 2.0 * (std::conj(cwd) * c_ * dw).real() + 2.0 * std::norm(c_) * z * dz;
  const Complex dwn = (dnum * den - num * dden) / (den * den);
  const double dzn = (dz * den - z * dden) / (den * den);
  return {apply(t.base), Vec3(dwn.real(), dwn.imag(), dzn)};
}

GeodesicPlane GeodesicPlane::circle(Complex center, double radius, int orientation) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw DomainError("GeodesicPlane: circle radius must be positive");
  }
  return {Circle{center, radius}, orientation >= 0 ? 1 : -1};
}

GeodesicPlane GeodesicPlane::line(Complex point, Complex direction, int orientation) {
  const double m = std::abs(direction);
  if (!(m > 0.0)) throw DomainError("GeodesicPlane: line direction must be nonzero");
  return {Line{point, direction / m}, orientation >= 0 ? 1 : -1};
}

const Circle& GeodesicPlane::as_circle() const {
  if (!is_circle()) throw DomainError("GeodesicPlane: not a circle plane");
  return std::get<Circle>(shape_);
}

const Line& GeodesicPlane::as_line() const {
  if (is_circle()) throw DomainError("GeodesicPlane: not a line plane");
  return std::get<Line>(shape_);
}

GeodesicPlane GeodesicPlane::flipped() const { return {shape_, -orientation_}; }

double GeodesicPlane::ideal_side(Complex w) const {
  if (is_circle()) {
    const auto& c = as_circle();
    return orientation_ * (std::norm(w - c.center) - c.radius * c.radius);
  }
  const auto& l = as_line();
  return orientation_ * (std::conj(l.direction) * (w - l.point)).imag();
}

double dist(const PointH3& p, const PointH3& q) {
  const double e = (p.vec() - q.vec()).norm();
  return 2.0 * std::asinh(e / (2.0 * std::sqrt(p.z() * q.z())));
}

PointH3 exp_map(const PointH3& p, const TangentVec& v, double t) {
  const double n = v.v.norm();
  if (n == 0.0) throw DomainError("exp_map: zero tangent vector");
  const Vec3 u = v.v / n;
  const double z = p.z();
  const double sh = std::sinh(t);
  const double den = std::cosh(t) - u.z() * sh;
  return {p.x() + z * u.x() * sh / den, p.y() + z * u.y() * sh / den, z / den};
}

TangentVec geodesic_velocity(const PointH3& p, const TangentVec& v, double t) {
  const double n = v.v.norm();
  if (n == 0.0) throw DomainError("geodesic_velocity: zero tangent vector");
  const Vec3 u = v.v / n;
  const double z = p.z();
  const double sh = std::sinh(t);
  const double ch = std::cosh(t);
  const double den = ch - u.z() * sh;
  const double dden = sh - u.z() * ch;
  const double s = z / (den * den);
  return {exp_map(p, v, t), Vec3(s * u.x(), s * u.y(), -s * dden)};
}

LogResult log_map(const PointH3& p, const PointH3& q) {
  const double d = dist(p, q);
  if (d == 0.0) return {{p, Vec3::Zero()}, true};
  const double z = p.z();
  const Complex xq = (q.horizontal() - p.horizontal()) / z;
  const double zq = q.z() / z;
  const double sh = std::sinh(d);
  const double dz1 = zq - 1.0;
  const Complex uh = xq / (zq * sh);
  const double uz = (dz1 + 0.5 * (std::norm(xq) + dz1 * dz1)) / (zq * sh);
  return {{p, Vec3(uh.real(), uh.imag(), uz) * (z * d)}, false};
}

TangentVec direction_to_ideal(const PointH3& p, const BoundaryPoint& w) {
  const double z = p.z();
  if (w.is_infinite()) return {p, Vec3(0.0, 0.0, z)};
  const Complex wp = (w.value() - p.horizontal()) / z;
  const double m = std::norm(wp);
  const Complex uh = 2.0 * wp / (m + 1.0);
  return {p, Vec3(uh.real(), uh.imag(), (m - 1.0) / (m + 1.0)) * z};
}

double plane_signed_distance(const PointH3& p, const GeodesicPlane& plane) {
  double sh;
  if (plane.is_circle()) {
    const auto& c = plane.as_circle();
    const double rho2 = std::norm(p.horizontal() - c.center) + p.z() * p.z();
    sh = (rho2 - c.radius * c.radius) / (2.0 * c.radius * p.z());
  } else {
    const auto& l = plane.as_line();
    sh = (std::conj(l.direction) * (p.horizontal() - l.point)).imag() / p.z();
  }
  return plane.orientation() * std::asinh(sh);
}

PlaneDistance plane_plane_distance(const GeodesicPlane& p1, const GeodesicPlane& p2) {
  constexpr double kTangentTol = 1e-12;
  if (p1.is_circle() && p2.is_circle()) {
    const auto& a = p1.as_circle();
    const auto& b = p2.as_circle();
    const double d2 = std::norm(a.center - b.center);
    const double inv =
        std::abs(d2 - a.radius * a.radius - b.radius * b.radius) / (2.0 * a.radius * b.radius);
    if (inv < 1.0 - kTangentTol) throw GeometryError("plane_plane_distance: planes intersect");
    if (inv <= 1.0 + kTangentTol) return {0.0, true};
    return {std::acosh(inv), false};
  }
  if (!p1.is_circle() && !p2.is_circle()) {
    const auto& a = p1.as_line();
    const auto& b = p2.as_line();
    const double cross = (std::conj(a.direction) * b.direction).imag();
    if (std::abs(cross) > kTangentTol) throw GeometryError("plane_plane_distance: planes intersect");
    return {0.0, true};
  }
  const auto& c = p1.is_circle() ? p1.as_circle() : p2.as_circle();
  const auto& l = p1.is_circle() ? p2.as_line() : p1.as_line();
  const double h = std::abs((std::conj(l.direction) * (c.center - l.point)).imag());
  const double ratio = h / c.radius;
  if (ratio < 1.0 - kTangentTol) throw GeometryError("plane_plane_distance: planes intersect");
  if (ratio <= 1.0 + kTangentTol) return {0.0, true};
  return {std::acosh(ratio), false};
}

GeodesicPlane transport(const Mobius& m, const GeodesicPlane& plane) {
  std::array<Complex, 4> pts;
  if (plane.is_circle()) {
    const auto& c = plane.as_circle();
    for (int k = 0; k < 4; ++k) {
      pts[k] = c.center + std::polar(c.radius, 0.3 + k * std::numbers::pi / 2.0);
    }
  } else {
    const auto& l = plane.as_line();
    for (int k = 0; k < 4; ++k) pts[k] = l.point + (k - 1.5) * l.direction;
  }
  // Drop the sample closest to the pole of m; the other three determine the image.
  std::array<double, 4> weight;
  for (int k = 0; k < 4; ++k) weight[k] = std::abs(m.c() * pts[k] + m.d());
  int drop = 0;
  for (int k = 1; k < 4; ++k) {
    if (weight[k] < weight[drop]) drop = k;
  }
  std::array<Complex, 3> img;
  int n = 0;
  for (int k = 0; k < 4; ++k) {
    if (k != drop) img[n++] = m.apply(BoundaryPoint(pts[k])).value();
  }
  GeodesicPlane raw = [&] {
    if (auto circ = circumcircle(img[0], img[1], img[2])) {
      return GeodesicPlane::circle(circ->center, circ->radius, 1);
    }
    return GeodesicPlane::line(img[0], img[2] - img[0], 1);
  }();
  const PointH3 witness = m.apply(positive_witness(plane));
  return plane_signed_distance(witness, raw) >= 0.0 ? raw : raw.flipped();
}

PointH3 fermi_chart(double t, double r, double theta) {
  if (!(r >= 0.0)) throw DomainError("fermi_chart: r must be nonnegative");
  const double s = std::exp(t);
  const double th = std::tanh(r);
  return {s * th * std::cos(theta), s * th * std::sin(theta), s / std::cosh(r)};
}

FermiCoords fermi_coordinates(const PointH3& p) {
  const double rho = std::hypot(p.x(), p.y());
  return {0.5 * std::log(rho * rho + p.z() * p.z()), std::asinh(rho / p.z()),
          std::atan2(p.y(), p.x())};
}

Vec3 to_ball(const PointH3& p) {
  const double s = p.x() * p.x() + p.y() * p.y();
  const double den = s + (p.z() + 1.0) * (p.z() + 1.0);
  return {2.0 * p.x() / den, 2.0 * p.y() / den, (s + p.z() * p.z() - 1.0) / den};
}

}  // namespace hyperplateau
