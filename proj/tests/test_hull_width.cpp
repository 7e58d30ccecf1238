#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fixtures.hpp"
#include "hyperplateau/errors.hpp"
#include "hyperplateau/hull_width.hpp"
#include "oracles.hpp"

using namespace hyperplateau;

namespace {

constexpr double kPi = std::numbers::pi;

// Two circular arcs through +-1 meeting at interior angle theta; the inscribed
// disk centred at 0 has radius tan(theta / 4).
Polyline lens(double theta, int per_arc, Complex shift = 0.0) {
  const double b = theta / 2, r = 1 / std::sin(b), d = std::cos(b) * r;
  Polyline p;
  for (int k = 0; k < per_arc; ++k) p.points.push_back(shift + Complex(0, -d) + std::polar(r, kPi / 2 - b + 2 * b * k / per_arc));
  for (int k = 0; k < per_arc; ++k) p.points.push_back(shift + Complex(0, d) + std::polar(r, -kPi / 2 - b + 2 * b * k / per_arc));
  return p;
}

// Along the axis the hull lies between the unit hemisphere and the hemisphere
// over the inscribed disk, so the distance sum there is ln(1 / rho).
double lens_axis_width(double theta) { return std::log(1.0 / std::tan(theta / 4)); }

}  // namespace

TEST_CASE("small-curvature width bound") {
  CHECK(small_curvature_width_bound(1.0) == 0.0);
  CHECK(small_curvature_width_bound(0.5) == doctest::Approx(std::log(3.0)).epsilon(1e-15));
  CHECK(small_curvature_width_bound(0.1) > small_curvature_width_bound(0.2));
  CHECK_THROWS_AS(small_curvature_width_bound(0.0), DomainError);
  CHECK_THROWS_AS(small_curvature_width_bound(1.5), DomainError);
}

TEST_CASE("round circle has zero width") {
  const Polyline c = round_circle(Complex(0.2, -0.1), 0.7, 256);
  const SupportPlaneSet set = support_planes(c, 48);
  CHECK(set.count(HullSide::Plus) >= 1);
  CHECK(set.count(HullSide::Minus) >= 1);
  const WidthEstimate w = width_estimate(c, 256, 48);
  CHECK(w.best <= 1e-6);
  CHECK(w.spread <= 1e-6);
  CHECK(w.probes_accepted > 0);
}

TEST_CASE("lens widths") {
  double previous = std::numeric_limits<double>::infinity();
  for (double f : {0.5, 0.75, 0.95}) {
    const double theta = f * kPi;
    const WidthEstimate w = width_estimate(lens(theta, 128), 256, 48);
    const double ref = lens_axis_width(theta);
    MESSAGE("theta " << f << " pi: width " << w.best << " (spread " << w.spread << "), axis value " << ref);
    CHECK(std::abs(w.best - ref) <= 3e-3);
    CHECK(w.best < previous);
    previous = w.best;
    CHECK(w.best <= small_curvature_width_bound(0.01));
  }
}

TEST_CASE("hull boundary distances on a lens") {
  const double theta = 0.75 * kPi;
  const double rho = std::tan(theta / 4);
  const SupportPlaneSet set = support_planes(lens(theta, 128), 48);
  for (int s = 0; s < 2; ++s) CHECK(set.count(s ? HullSide::Plus : HullSide::Minus) <= 48);

  // the top of the unit hemisphere is on the hull boundary
  const PointH3 top(0, 0, 1);
  CHECK(std::abs(hull_margin(top, set)) <= 1e-9);
  const double up = hull_boundary_distance(top, set, HullSide::Plus);
  const double dn = hull_boundary_distance(top, set, HullSide::Minus);
  CHECK(std::min(up, dn) <= 1e-9);
  CHECK(std::abs(std::max(up, dn) - std::log(1 / rho)) <= 1e-3);

  // the two known support planes bound the distances from above
  const double outer_sign = up > dn ? 1.0 : -1.0;
  for (double z : {0.75, 0.8, 0.9, 0.95}) {
    const PointH3 p(0, 0, z);
    const double to_unit = outer_sign > 0 ? hull_boundary_distance(p, set, HullSide::Minus)
                                          : hull_boundary_distance(p, set, HullSide::Plus);
    const double to_roof = outer_sign > 0 ? hull_boundary_distance(p, set, HullSide::Plus)
                                          : hull_boundary_distance(p, set, HullSide::Minus);
    CHECK(to_unit <= std::log(1 / z) + 1e-12);
    CHECK(to_roof <= std::log(z / rho) + 1e-12);
    CHECK(hull_margin(p, set) > 0);
  }
  CHECK_THROWS_AS(hull_boundary_distance(PointH3(0, 0, 1.3), set, HullSide::Plus), GeometryError);
  CHECK(hull_margin(PointH3(0, 0, 1.3), set) < 0);

  // 1-Lipschitz in the hyperbolic metric
  auto g = oracle::rng(61);
  std::uniform_real_distribution<double> ux(-0.3, 0.3), uz(0.7, 0.95);
  int pairs = 0;
  for (int k = 0; k < 400; ++k) {
    const PointH3 p(ux(g), ux(g), uz(g)), q(ux(g), ux(g), uz(g));
    if (hull_margin(p, set) <= 0 || hull_margin(q, set) <= 0) continue;
    for (HullSide side : {HullSide::Plus, HullSide::Minus}) {
      const double dp = hull_boundary_distance(p, set, side), dq = hull_boundary_distance(q, set, side);
      CHECK(std::abs(dp - dq) <= dist(p, q) + 1e-9);
    }
    ++pairs;
  }
  CHECK(pairs > 50);
}

TEST_CASE("width is Moebius invariant within its spread") {
  const double theta = 0.6 * kPi;
  const Polyline base = lens(theta, 128);
  const WidthEstimate w0 = width_estimate(base, 256, 48);
  for (const Mobius& m : {Mobius::scaling(3.0), Mobius::rotation(0.7), Mobius::translation(Complex(2.0, -1.0))}) {
    Polyline moved = base;
    for (auto& p : moved.points) p = m.apply(BoundaryPoint(p)).value();
    const WidthEstimate w = width_estimate(moved, 256, 48);
    CHECK(std::abs(w.best - w0.best) <= w.spread + w0.spread + 2e-3);
  }
}

TEST_CASE("probe-to-surface check on solved disks") {
  SolveConfig c;
  c.rings = 24;
  const Polyline e = ellipse(0.0, 1.2, 1.0, boundary_samples(c.rings));
  SolveResult r = minimize(init_mesh(e, c.h, c.rings), c);
  REQUIRE(r.converged);
  certify_result(r);
  const WidthEstimate w = width_estimate(e, 256, 48);
  const SupportPlaneSet set = support_planes(e, 48);
  const ProbeCheck pc = probe_distance_check(w, set, r.mesh, r.curvature.normals);
  MESSAGE("probes " << pc.checked << ", max distance " << pc.max_distance << ", width " << w.best
                    << ", boundary excess " << pc.boundary_excess);
  CHECK(pc.checked > 0);
  CHECK(pc.pass);
  CHECK(pc.worst_margin <= 0.0);
  CHECK(pc.boundary_excess >= 0.0);
}

TEST_CASE("probe surface distance") {
  const DiskMesh h = fixture::hemisphere(16);
  const CurvatureReport cr = principal_curvatures(h);
  const auto dff = distance_from_fixed(h);
  const double radius = std::sqrt(1 + 0.05 * 0.05);
  for (double t : {0.0, 0.1, -0.2}) {
    const PointH3 x = exp_map(PointH3(0, 0, radius), TangentVec{PointH3(0, 0, radius), Vec3(0, 0, radius)}, t);
    CHECK(probe_surface_distance(x, h, cr.normals, dff) == doctest::Approx(std::abs(t)).epsilon(1e-3));
  }
  // next to the pinned ring
  CHECK(probe_surface_distance(h.vertices[h.boundary_loop[0]], h, cr.normals, dff) == -1.0);
  CHECK(probe_surface_distance(h.vertices[0], h, cr.normals, dff) == 0.0);
}
