#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "hyperplateau/catenoid.hpp"
#include "hyperplateau/errors.hpp"
#include "hyperplateau/normal_flow.hpp"
#include "oracles.hpp"

using namespace hyperplateau;

TEST_CASE("predicted curvature") {
  for (double t : {-2.0, -0.3, 0.0, 0.7, 4.0}) {
    CHECK(predicted_curvature(0.0, t) == doctest::Approx(-std::tanh(t)).epsilon(1e-15));
    CHECK(predicted_curvature(1.0, t) == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(predicted_curvature(0.5, 40.0) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(predicted_curvature(2.0, std::atanh(0.5)), DomainError);

  auto g = oracle::rng(31);
  std::uniform_real_distribution<double> ul(-1, 1), ut(-2, 2);
  for (int k = 0; k < 100; ++k) {
    const double l = ul(g), s = ut(g), t = ut(g);
    const double two = predicted_curvature(predicted_curvature(l, s), t);
    CHECK(std::abs(two - predicted_curvature(l, s + t)) <= 1e-12);
  }
}

TEST_CASE("flowing a hemisphere") {
  const DiskMesh h = fixture::hemisphere(24);
  const CurvatureReport base = principal_curvatures(h);
  const FlowedMesh zero = flow_mesh(h, base.normals, 0.0);
  CHECK(zero.mesh.vertices == h.vertices);

  // the same mesh placed exactly on the plane, with its exact unit normals
  const double radius = std::sqrt(1.0 + 0.05 * 0.05);
  const auto plane = GeodesicPlane::circle(0.0, radius);
  DiskMesh exact = h;
  std::vector<Vec3> exact_normals;
  for (auto& p : exact.vertices) {
    const Vec3 v = p.vec().normalized();
    p = PointH3(v * radius);
    exact_normals.push_back(v * p.z());
  }
  for (double t : {-1.0, -0.5, 0.5, 1.0}) {
    const FlowedMesh leaf = flow_mesh(exact, exact_normals, t);
    double worst = 0;
    for (const auto& p : leaf.mesh.vertices) worst = std::max(worst, std::abs(std::abs(plane_signed_distance(p, plane)) - std::abs(t)));
    CHECK(worst <= 1e-8);
    // the upward normal points outside the hemisphere
    CHECK(plane_signed_distance(leaf.mesh.vertices[0], plane) * t > 0);

    const FlowedMesh back = flow_mesh(leaf.mesh, leaf.normals, -t);
    double drift = 0;
    for (std::size_t i = 0; i < h.num_vertices(); ++i) drift = std::max(drift, dist(back.mesh.vertices[i], exact.vertices[i]));
    CHECK(drift <= 1e-6);

    // fitted normals of the discrete mesh
    const FlowedMesh fitted = flow_mesh(h, base.normals, t);
    double off = 0;
    for (const auto& p : fitted.mesh.vertices) off = std::max(off, std::abs(std::abs(plane_signed_distance(p, plane)) - std::abs(t)));
    CHECK(off <= 1e-3);
  }

  std::vector<Vec3> normals = base.normals;
  normals[5] = Vec3::Zero();
  const FlowedMesh fr = flow_mesh(h, normals, 0.4);
  CHECK(fr.frozen[5] == 1);
  CHECK(fr.mesh.vertices[5] == h.vertices[5]);
}

TEST_CASE("curvature law on a hemisphere") {
  const DiskMesh h = fixture::hemisphere(48);
  const CurvatureReport base = principal_curvatures(h);
  const std::vector<double> ts{-1.0, -0.5, 0.0, 0.5, 1.0};
  const CurvatureLawReport rep = curvature_law_check(h, base, ts);
  REQUIRE(rep.rows.size() == ts.size());
  for (const auto& row : rep.rows) {
    CHECK_FALSE(row.degenerate);
    CHECK(row.vertices > 0);
    if (row.t == 0.0) {
      CHECK(row.max_residual == 0.0);
    }
  }
  CHECK(rep.max_residual <= 3e-2);
  for (double t : {-1.0, -0.5, 0.5, 1.0}) {
    const CurvatureReport cur = leaf_curvatures(flow_mesh(h, base.normals, t));
    for (std::size_t i = 0; i < cur.k1.size(); ++i) {
      if (!base.interior[i] || !cur.valid[i]) continue;
      CHECK(std::abs(cur.k1[i] + std::tanh(t)) <= 3e-2);
      CHECK(std::abs(cur.k2[i] + std::tanh(t)) <= 3e-2);
    }
  }
}

TEST_CASE("curvature law on a catenoid") {
  const CatenoidProfile p = profile(0.8);
  const DiskMesh m = catenoid_mesh(p, Mobius::identity(), 64);
  const CurvatureReport base = principal_curvatures(m);
  const std::vector<double> ts{0.3};
  const CurvatureLawReport rep = curvature_law_check(m, base, ts);
  CHECK_FALSE(rep.rows[0].degenerate);
  CHECK(rep.max_residual <= 5e-2);
}

TEST_CASE("foliation and sign on a hemisphere") {
  const DiskMesh h = fixture::hemisphere(24);
  const CurvatureReport base = principal_curvatures(h);
  const std::vector<double> ts{-3.0, -1.0, 0.0, 1.0, 3.0};
  const FoliationReport rep = foliation_and_sign_check(h, base, ts);
  CHECK(rep.disjoint);
  CHECK(rep.pairs_checked.size() >= 4);
  CHECK(rep.min_sign_fraction == 1.0);
  for (const auto& row : rep.rows) {
    if (row.t == 0.0) CHECK(row.max_abs_mean <= 5e-2);
  }
  const CurvatureReport leaf = leaf_curvatures(flow_mesh(h, base.normals, 1.0));
  for (std::size_t i = 0; i < leaf.mean.size(); ++i) {
    if (base.interior[i] && leaf.valid[i]) CHECK(leaf.mean[i] < 0.0);
  }
}

TEST_CASE("intersection search") {
  const DiskMesh a = fixture::hemisphere(8);
  const DiskMesh b = transport(Mobius::translation(0.5), a);
  const auto hit = find_intersection(a, b);
  CHECK(hit.first >= 0);
  CHECK(hit.second >= 0);
  const DiskMesh c = transport(Mobius::scaling(2.0), a);
  CHECK(find_intersection(a, c).first == -1);
}
