#pragma once

// Upper half-space model of hyperbolic 3-space.
//
// A point (x, y, z) with z > 0 carries the metric (dx^2 + dy^2 + dz^2) / z^2.
// The ideal boundary is the plane z = 0 together with a point at infinity,
// identified with the Riemann sphere C u {inf}. Orientation-preserving
// isometries are Moebius maps acting on the boundary and, via the Poincare
// extension, on the interior.

#include <complex>
#include <optional>
#include <variant>

#include <Eigen/Core>

namespace hyperplateau {

using Complex = std::complex<double>;
using Vec3 = Eigen::Vector3d;

// Smallest admissible height. Heights below this are rejected, not clamped.
inline constexpr double kMinHeight = 1e-12;

class PointH3 {
 public:
  PointH3(double x, double y, double z);
  explicit PointH3(const Vec3& v) : PointH3(v.x(), v.y(), v.z()) {}

  double x() const noexcept { return x_; }
  double y() const noexcept { return y_; }
  double z() const noexcept { return z_; }
  Complex horizontal() const noexcept { return {x_, y_}; }
  Vec3 vec() const noexcept { return {x_, y_, z_}; }

  friend bool operator==(const PointH3&, const PointH3&) = default;

 private:
  double x_, y_, z_;
};

// Tangent vector in model components. Its hyperbolic length is |v| / base.z.
struct TangentVec {
  PointH3 base;
  Vec3 v;

  double norm() const { return v.norm() / base.z(); }
  TangentVec scaled(double s) const { return {base, v * s}; }
  TangentVec normalized() const;
};

class BoundaryPoint {
 public:
  BoundaryPoint(Complex w) : value_(w) {}  // NOLINT: implicit by design of the model
  static BoundaryPoint infinity() { return BoundaryPoint(); }

  bool is_infinite() const noexcept { return !value_.has_value(); }
  Complex value() const;  // throws DomainError at infinity

  friend bool operator==(const BoundaryPoint&, const BoundaryPoint&) = default;

 private:
  BoundaryPoint() = default;
  std::optional<Complex> value_;
};

// z -> (a z + b) / (c z + d), normalized to a d - b c = 1.
class Mobius {
 public:
  Mobius(Complex a, Complex b, Complex c, Complex d);

  static Mobius identity() { return {1.0, 0.0, 0.0, 1.0}; }
  // z -> k z for real k > 0 (k = 2 is the dyadic scaling of the quasicircle).
  static Mobius scaling(double k);
  static Mobius translation(Complex b) { return {1.0, b, 0.0, 1.0}; }
  static Mobius rotation(double angle);
  // z -> -1/z, the half-turn about the geodesic from -i to i.
  static Mobius negative_inverse() { return {0.0, -1.0, 1.0, 0.0}; }
  // The unique map sending z1, z2, z3 to 0, 1, infinity.
  static Mobius cross_ratio(Complex z1, Complex z2, Complex z3);

  Complex a() const noexcept { return a_; }
  Complex b() const noexcept { return b_; }
  Complex c() const noexcept { return c_; }
  Complex d() const noexcept { return d_; }
  Complex det() const noexcept { return a_ * d_ - b_ * c_; }

  BoundaryPoint apply(const BoundaryPoint& w) const;
  PointH3 apply(const PointH3& p) const;
  // Pushes a tangent vector forward through the Poincare extension.
  TangentVec apply(const TangentVec& t) const;

  Mobius inverse() const { return {d_, -b_, -c_, a_}; }
  Mobius operator*(const Mobius& rhs) const;  // (this o rhs)

 private:
  Complex a_, b_, c_, d_;
};

struct Circle {
  Complex center;
  double radius;
};

struct Line {
  Complex point;
  Complex direction;  // unit modulus
};

// Totally geodesic plane with ideal boundary a circle (hemisphere) or a line
// (vertical half-plane). `orientation` picks the side on which the signed
// distance is positive: for a circle +1 means outside the hemisphere, for a
// line +1 means to the left of `direction`.
class GeodesicPlane {
 public:
  static GeodesicPlane circle(Complex center, double radius, int orientation = 1);
  static GeodesicPlane line(Complex point, Complex direction, int orientation = 1);

  bool is_circle() const noexcept { return std::holds_alternative<Circle>(shape_); }
  const Circle& as_circle() const;
  const Line& as_line() const;
  int orientation() const noexcept { return orientation_; }
  GeodesicPlane flipped() const;

  // Signed position of an ideal point relative to the boundary circle/line,
  // using the same sign convention as plane_signed_distance.
  double ideal_side(Complex w) const;

 private:
  GeodesicPlane(std::variant<Circle, Line> shape, int orientation)
      : shape_(shape), orientation_(orientation) {}
  std::variant<Circle, Line> shape_;
  int orientation_;
};

double dist(const PointH3& p, const PointH3& q);

// Point at arclength t along the geodesic leaving p with unit velocity v.
PointH3 exp_map(const PointH3& p, const TangentVec& v, double t);

// Unit velocity of that geodesic at time t.
TangentVec geodesic_velocity(const PointH3& p, const TangentVec& v, double t);

struct LogResult {
  TangentVec vec;   // hyperbolic length equals dist(p, q)
  bool coincident;  // p == q: vec is zero
};
LogResult log_map(const PointH3& p, const PointH3& q);

// Unit tangent at p pointing along the geodesic ray that ends at w.
TangentVec direction_to_ideal(const PointH3& p, const BoundaryPoint& w);

double plane_signed_distance(const PointH3& p, const GeodesicPlane& plane);

struct PlaneDistance {
  double value;
  bool asymptotic;  // boundary circles tangent, planes meet at infinity
};
// Throws GeometryError("planes intersect") when the planes cross.
PlaneDistance plane_plane_distance(const GeodesicPlane& p1, const GeodesicPlane& p2);

// Image of a plane under a Moebius map; orientation is carried along.
GeodesicPlane transport(const Mobius& m, const GeodesicPlane& plane);

// Fermi coordinates about the vertical geodesic through the origin:
//   (t, r, theta) -> e^t (tanh r cos theta, tanh r sin theta, sech r)
// with metric dr^2 + cosh^2 r dt^2 + sinh^2 r dtheta^2.
PointH3 fermi_chart(double t, double r, double theta);

struct FermiCoords {
  double t, r, theta;
};
FermiCoords fermi_coordinates(const PointH3& p);

// Cayley transform to the unit ball model, for export only.
Vec3 to_ball(const PointH3& p);

}  // namespace hyperplateau
