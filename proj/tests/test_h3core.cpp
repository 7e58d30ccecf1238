#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "hyperplateau/errors.hpp"
#include "hyperplateau/h3core.hpp"
#include "oracles.hpp"

using namespace hyperplateau;

namespace {

oracle::V3 arr(const PointH3& p) { return {p.x(), p.y(), p.z()}; }

PointH3 random_point(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), lz(-2.0, 1.5);
  return {u(g), u(g), std::exp(lz(g))};
}

TangentVec random_unit(const PointH3& p, std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Vec3 v(n(g), n(g), n(g));
  return {p, v.normalized() * p.z()};
}

Mobius random_mobius(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (;;) {
    const Complex a(u(g), u(g)), b(u(g), u(g)), c(u(g), u(g)), d(u(g), u(g));
    if (std::abs(a * d - b * c) > 0.2) return {a, b, c, d};
  }
}

double golden(const std::function<double(double)>& f, double a, double b) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int k = 0; k < 200; ++k) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - r * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + r * (b - a), f2 = f(x2);
    }
  }
  return f(0.5 * (a + b));
}

}  // namespace

TEST_CASE("dist examples") {
  CHECK(dist({0, 0, 1}, {0, 0, 1}) == 0.0);
  CHECK(dist({0, 0, 1}, {0, 0, std::numbers::e}) == doctest::Approx(1.0).epsilon(1e-15));
  const double d = dist({0, 0, 1}, {1, 0, 1});
  CHECK(d == doctest::Approx(std::acosh(1.5)).epsilon(1e-14));
  // length along the connecting geodesic: centre (0.5, 0), radius sqrt(1.25)
  const double rr = std::sqrt(1.25);
  const double b0 = std::atan2(1.0, -0.5), b1 = std::atan2(1.0, 0.5);
  const double len = oracle::path_length(
      [&](double s) { return oracle::V3{0.5 + rr * std::cos(s), 0.0, rr * std::sin(s)}; }, b1, b0);
  CHECK(len == doctest::Approx(d).epsilon(1e-9));
  CHECK_THROWS_AS(PointH3(0, 0, 0), DomainError);
  CHECK_THROWS_AS(PointH3(0, 0, -1), DomainError);
}

TEST_CASE("dist agrees with the hyperboloid model and is a metric") {
  auto g = oracle::rng(1);
  for (int k = 0; k < 1000; ++k) {
    const PointH3 p = random_point(g), q = random_point(g), r = random_point(g);
    const double d = dist(p, q);
    CHECK(d == doctest::Approx(oracle::dist(arr(p), arr(q))).epsilon(1e-9));
    CHECK(d == dist(q, p));
    CHECK(d >= 0.0);
    CHECK(dist(p, r) <= dist(p, q) + dist(q, r) + 1e-12);
  }
}

TEST_CASE("exp_map examples and geodesic oracle") {
  const PointH3 o(0, 0, 1);
  const PointH3 up = exp_map(o, {o, Vec3(0, 0, 1)}, 1.0);
  CHECK(up.x() == 0.0);
  CHECK(up.z() == doctest::Approx(std::numbers::e).epsilon(1e-15));
  CHECK(exp_map(o, {o, Vec3(0.6, 0.8, 0)}, 0.0) == o);
  CHECK_THROWS_AS(exp_map(o, {o, Vec3::Zero()}, 1.0), DomainError);

  const double t = std::acosh(1.5);
  const PointH3 q = exp_map(o, {o, Vec3(1, 0, 0)}, t);
  CHECK(q.y() == 0.0);
  CHECK(dist(o, q) == doctest::Approx(t).epsilon(1e-12));
  CHECK(q.x() * q.x() + q.z() * q.z() == doctest::Approx(1.0).epsilon(1e-12));
  const auto ode = oracle::geodesic_ode({0, 0, 1}, {1, 0, 0}, t);
  CHECK(q.x() == doctest::Approx(ode[0]).epsilon(1e-9));
  CHECK(q.z() == doctest::Approx(ode[2]).epsilon(1e-9));

  auto g = oracle::rng(2);
  std::uniform_real_distribution<double> ts(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) {
    const PointH3 p = random_point(g);
    const TangentVec v = random_unit(p, g);
    const double tt = ts(g);
    const PointH3 e = exp_map(p, v, tt);
    const auto o2 = oracle::geodesic_ode(arr(p), {v.v.x(), v.v.y(), v.v.z()}, tt, 4000);
    CHECK(oracle::gap(arr(e), o2) < 1e-8);
  }
}

TEST_CASE("exp/log identities") {
  auto g = oracle::rng(3);
  std::uniform_real_distribution<double> ts(-3.0, 3.0);
  for (int k = 0; k < 1000; ++k) {
    const PointH3 p = random_point(g);
    const TangentVec v = random_unit(p, g);
    const double t = ts(g);
    const PointH3 q = exp_map(p, v, t);
    CHECK(dist(p, q) == doctest::Approx(std::abs(t)).epsilon(1e-10).scale(1.0));
    const TangentVec vel = geodesic_velocity(p, v, t);
    CHECK(vel.norm() == doctest::Approx(1.0).epsilon(1e-10));

    const PointH3 r = random_point(g);
    const LogResult l = log_map(p, r);
    REQUIRE_FALSE(l.coincident);
    CHECK(l.vec.norm() == doctest::Approx(dist(p, r)).epsilon(1e-10));
    const PointH3 back = exp_map(p, l.vec.normalized(), dist(p, r));
    CHECK(dist(back, r) < 1e-9 * std::max(1.0, dist(p, r)));
  }
  const PointH3 o(0, 0, 1);
  const LogResult up = log_map(o, {0, 0, std::numbers::e});
  CHECK(up.vec.v.z() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(up.vec.v.x()) < 1e-15);
  // the connecting geodesic is the circle of radius sqrt(1.25) about (0.5, 0),
  // so the initial direction is (1, 0, 0.5) / |.|, not horizontal
  const LogResult side = log_map(o, {1, 0, 1});
  const double d15 = std::acosh(1.5);
  CHECK(side.vec.v.x() == doctest::Approx(d15 * 2 / std::sqrt(5.0)).epsilon(1e-14));
  CHECK(side.vec.v.z() == doctest::Approx(d15 / std::sqrt(5.0)).epsilon(1e-14));
  CHECK(std::abs(side.vec.v.y()) < 1e-15);
  const LogResult same = log_map(o, o);
  CHECK(same.coincident);
  CHECK(same.vec.v.norm() == 0.0);
}

TEST_CASE("direction_to_ideal points at the endpoint") {
  auto g = oracle::rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 200; ++k) {
    const PointH3 p = random_point(g);
    const Complex w(u(g), u(g));
    const TangentVec v = direction_to_ideal(p, w);
    CHECK(v.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const PointH3 far = exp_map(p, v, 20.0);
    CHECK(std::abs(far.horizontal() - w) < 1e-7 * (1 + std::abs(w)));
  }
  const TangentVec inf = direction_to_ideal({1, 2, 3}, BoundaryPoint::infinity());
  CHECK(inf.v.z() == 3.0);
}

TEST_CASE("plane signed distance") {
  const auto unit = GeodesicPlane::circle(0.0, 1.0);
  CHECK(std::abs(plane_signed_distance({0.6, 0.0, 0.8}, unit)) < 1e-12);
  const double z = 1e-4;
  const PointH3 near{std::sqrt(1.0 - z * z), 0.0, z};
  CHECK(std::abs(plane_signed_distance(near, unit)) < 1e-12);
  CHECK(plane_signed_distance({0, 0, 2}, unit) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(plane_signed_distance({0, 0, 2}, unit.flipped()) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));

  const auto vert = GeodesicPlane::line(0.0, Complex(0, 1));
  const double s = plane_signed_distance({1, 0, 1}, vert);
  CHECK(std::abs(s) == doctest::Approx(std::asinh(1.0)).epsilon(1e-15));
  CHECK(std::abs(s) == doctest::Approx(std::log(1 + std::sqrt(2.0))).epsilon(1e-14));
  // foot of the perpendicular by direct minimization over the plane x = 0
  const double foot = golden([](double lz) { return oracle::dist({1, 0, 1}, {0, 0, std::exp(lz)}); }, -3, 3);
  CHECK(std::abs(s) == doctest::Approx(foot).epsilon(1e-8));

  auto g = oracle::rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 200; ++k) {
    const Complex c(u(g), u(g));
    const double r = 0.5 + std::abs(u(g));
    const PointH3 p = random_point(g);
    const auto pl = GeodesicPlane::circle(c, r);
    const double sd = plane_signed_distance(p, pl);
    // minimize over the hemisphere
    const Complex dir = p.horizontal() - c;
    const double ang = std::arg(dir);
    const double m = golden(
        [&](double a) {
          return oracle::dist(arr(p), {c.real() + r * std::cos(a) * std::cos(ang), c.imag() + r * std::cos(a) * std::sin(ang),
                                       r * std::sin(a)});
        },
        1e-9, std::numbers::pi - 1e-9);
    CHECK(std::abs(sd) == doctest::Approx(m).epsilon(1e-7));
  }
}

TEST_CASE("plane to plane distance") {
  const auto a = GeodesicPlane::circle(0.0, 1.0), b = GeodesicPlane::circle(0.0, 2.0);
  CHECK(plane_plane_distance(a, b).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  const auto t = plane_plane_distance(GeodesicPlane::circle(0.0, 1.0), GeodesicPlane::circle(2.0, 1.0));
  CHECK(t.value == 0.0);
  CHECK(t.asymptotic);
  const auto c = GeodesicPlane::circle(4.0, 1.0);
  const double d = plane_plane_distance(a, c).value;
  CHECK(d == doctest::Approx(std::acosh(7.0)).epsilon(1e-14));
  CHECK(plane_plane_distance(c, a).value == d);
  // common perpendicular search over the two semicircles over the real axis
  double best = 1e300;
  for (int i = 1; i < 200; ++i) {
    const double a1 = std::numbers::pi * i / 200;
    const double m = golden(
        [&](double a2) {
          return oracle::dist({std::cos(a1), 0, std::sin(a1)}, {4 + std::cos(a2), 0, std::sin(a2)});
        },
        1e-9, std::numbers::pi - 1e-9);
    best = std::min(best, m);
  }
  const double refined = golden(
      [&](double a1) {
        return golden(
            [&](double a2) {
              return oracle::dist({std::cos(a1), 0, std::sin(a1)}, {4 + std::cos(a2), 0, std::sin(a2)});
            },
            1e-9, std::numbers::pi - 1e-9);
      },
      1e-9, std::numbers::pi / 2);
  CHECK(best >= refined - 1e-12);
  CHECK(d == doctest::Approx(refined).epsilon(1e-8));
  CHECK_THROWS_AS(plane_plane_distance(a, GeodesicPlane::circle(1.0, 1.0)), GeometryError);
  CHECK_THROWS_AS(plane_plane_distance(GeodesicPlane::line(0.0, 1.0), GeodesicPlane::line(0.0, Complex(0, 1))),
                  GeometryError);
}

TEST_CASE("Mobius maps match the Poincare extension and are isometries") {
  const Mobius alpha = Mobius::scaling(2.0);
  CHECK(alpha.a() == Complex(std::sqrt(2.0)));
  const PointH3 img = alpha.apply(PointH3(0.3, -0.7, 0.9));
  CHECK(img.x() == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(img.y() == doctest::Approx(-1.4).epsilon(1e-15));
  CHECK(img.z() == doctest::Approx(1.8).epsilon(1e-15));
  CHECK(Mobius::identity().apply(PointH3(0.3, -0.7, 0.9)) == PointH3(0.3, -0.7, 0.9));

  const Mobius ni = Mobius::negative_inverse();
  const PointH3 fixed = ni.apply(PointH3(0, 0, 1));
  CHECK(dist(fixed, {0, 0, 1}) < 1e-15);
  auto g = oracle::rng(6);
  for (int k = 0; k < 20; ++k) {
    const PointH3 r = random_point(g);
    CHECK(dist(ni.apply(r), fixed) == doctest::Approx(dist(r, {0, 0, 1})).epsilon(1e-12));
  }

  for (int k = 0; k < 1000; ++k) {
    const Mobius m = random_mobius(g);
    CHECK(std::abs(m.det() - 1.0) < 1e-12);
    const PointH3 p = random_point(g), q = random_point(g);
    const auto ref = oracle::poincare_extension(m.a(), m.b(), m.c(), m.d(), arr(p));
    const PointH3 mp = m.apply(p);
    CHECK(oracle::gap(arr(mp), ref) < 1e-12);
    const double d0 = dist(p, q), d1 = dist(mp, m.apply(q));
    CHECK(d1 == doctest::Approx(d0).epsilon(1e-9));
    // composition and inverse
    const Mobius n = random_mobius(g);
    CHECK(dist((m * n).apply(p), m.apply(n.apply(p))) < 1e-8);
    CHECK(dist(m.inverse().apply(mp), p) < 1e-8);
  }
}

TEST_CASE("Mobius pushes tangent vectors isometrically") {
  auto g = oracle::rng(7);
  for (int k = 0; k < 200; ++k) {
    const Mobius m = random_mobius(g);
    const PointH3 p = random_point(g);
    const TangentVec v = random_unit(p, g);
    const TangentVec mv = m.apply(v);
    CHECK(mv.norm() == doctest::Approx(1.0).epsilon(1e-9));
    // the image of the geodesic is the geodesic of the image
    const PointH3 a = m.apply(exp_map(p, v, 0.7));
    const PointH3 b = exp_map(mv.base, mv, 0.7);
    CHECK(dist(a, b) < 1e-8);
  }
}

TEST_CASE("boundary action and cross ratio") {
  const Mobius m = Mobius::cross_ratio(Complex(1, 2), Complex(-1, 0.5), Complex(3, -1));
  CHECK(std::abs(m.apply(BoundaryPoint(Complex(1, 2))).value()) < 1e-12);
  CHECK(std::abs(m.apply(BoundaryPoint(Complex(-1, 0.5))).value() - 1.0) < 1e-12);
  CHECK(m.apply(BoundaryPoint(Complex(3, -1))).is_infinite());
  CHECK(Mobius::negative_inverse().apply(BoundaryPoint::infinity()).value() == Complex(0.0));
  CHECK_THROWS_AS(BoundaryPoint::infinity().value(), DomainError);
  CHECK_THROWS_AS(Mobius(1, 2, 2, 4), DomainError);
}

TEST_CASE("plane transport preserves distances and orientation") {
  auto g = oracle::rng(8);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 200; ++k) {
    const Mobius m = random_mobius(g);
    const auto pl = k % 2 ? GeodesicPlane::circle(Complex(u(g), u(g)), 0.5 + std::abs(u(g)), k % 4 ? 1 : -1)
                          : GeodesicPlane::line(Complex(u(g), u(g)), Complex(u(g), u(g) + 2.0), k % 3 ? 1 : -1);
    const auto img = transport(m, pl);
    const PointH3 p = random_point(g);
    CHECK(plane_signed_distance(m.apply(p), img) == doctest::Approx(plane_signed_distance(p, pl)).epsilon(1e-7).scale(1.0));
  }
}

TEST_CASE("Fermi chart") {
  const PointH3 axis = fermi_chart(0.4, 0.0, 1.0);
  CHECK(axis.x() == 0.0);
  CHECK(axis.z() == doctest::Approx(std::exp(0.4)).epsilon(1e-15));
  const double r = 0.8;
  const PointH3 p = fermi_chart(0.0, r, 0.0);
  CHECK(p.x() == doctest::Approx(std::tanh(r)).epsilon(1e-15));
  CHECK(p.z() == doctest::Approx(1.0 / std::cosh(r)).epsilon(1e-15));
  // distance to the axis: minimize over heights
  const double axis_d = golden([&](double lz) { return oracle::dist(arr(p), {0, 0, std::exp(lz)}); }, -3, 3);
  CHECK(axis_d == doctest::Approx(r).epsilon(1e-8));
  CHECK(std::sinh(axis_d) == doctest::Approx(std::hypot(p.x(), p.y()) / p.z()).epsilon(1e-8));

  // metric pullback by central differences
  auto g = oracle::rng(9);
  std::uniform_real_distribution<double> ut(-1, 1), ur(0.2, 2), uth(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const double t = ut(g), rr = ur(g), th = uth(g);
    const double e = 1e-6;
    auto col = [&](int i) {
      double dp[3] = {0, 0, 0};
      dp[i] = e;
      const PointH3 a = fermi_chart(t + dp[0], rr + dp[1], th + dp[2]);
      const PointH3 b = fermi_chart(t - dp[0], rr - dp[1], th - dp[2]);
      return Vec3((a.vec() - b.vec()) / (2 * e));
    };
    const double z = fermi_chart(t, rr, th).z();
    const Vec3 jt = col(0), jr = col(1), jth = col(2);
    CHECK(jt.squaredNorm() / (z * z) == doctest::Approx(std::cosh(rr) * std::cosh(rr)).epsilon(1e-7));
    CHECK(jr.squaredNorm() / (z * z) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(jth.squaredNorm() / (z * z) == doctest::Approx(std::sinh(rr) * std::sinh(rr)).epsilon(1e-7));
    CHECK(std::abs(jt.dot(jr)) / (z * z) < 1e-7);
    CHECK(std::abs(jt.dot(jth)) / (z * z) < 1e-7);
    CHECK(std::abs(jr.dot(jth)) / (z * z) < 1e-7);
    const FermiCoords fc = fermi_coordinates(fermi_chart(t, rr, th));
    CHECK(fc.t == doctest::Approx(t).epsilon(1e-12));
    CHECK(fc.r == doctest::Approx(rr).epsilon(1e-12));
    CHECK(fc.theta == doctest::Approx(th).epsilon(1e-12));
  }
  // a slice t = const is the hemisphere of radius e^t
  for (int k = 0; k < 20; ++k) {
    const PointH3 q = fermi_chart(0.3, ur(g), uth(g));
    CHECK(std::abs(plane_signed_distance(q, GeodesicPlane::circle(0.0, std::exp(0.3)))) < 1e-12);
  }
}

TEST_CASE("Cayley transform lands in the unit ball") {
  auto g = oracle::rng(10);
  for (int k = 0; k < 200; ++k) {
    const PointH3 p = random_point(g), q = random_point(g);
    const Vec3 a = to_ball(p), b = to_ball(q);
    CHECK(a.norm() < 1.0);
    // ball-model distance formula
    const double c = 1.0 + 2.0 * (a - b).squaredNorm() / ((1 - a.squaredNorm()) * (1 - b.squaredNorm()));
    CHECK(std::acosh(c) == doctest::Approx(dist(p, q)).epsilon(1e-7));
  }
  CHECK(to_ball({0, 0, 1}).norm() < 1e-15);
}
