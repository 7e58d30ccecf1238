#pragma once

// Mesh builders shared by the test suites.

#include <functional>
#include <random>

#include "hyperplateau/boundary_curves.hpp"
#include "hyperplateau/mesh_surface.hpp"
#include "hyperplateau/plateau.hpp"

namespace fixture {

using namespace hyperplateau;

// Graded disk mesh on the hemisphere over the unit circle, truncated at h.
inline DiskMesh hemisphere(int rings, double h = 0.05) {
  return init_mesh(round_circle(0.0, 1.0, boundary_samples(rings)), h, rings);
}

// (n+1) x (n+1) grid over [-1, 1]^2 mapped through `map`, boundary pinned,
// alternating diagonals.
inline DiskMesh grid(int n, const std::function<Vec3(double, double)>& map) {
  DiskMesh m;
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const Vec3 p = map(-1.0 + 2.0 * i / n, -1.0 + 2.0 * j / n);
      m.vertices.emplace_back(p);
      m.fixed_mask.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  }
  for (int i = 0; i < n; ++i) m.boundary_loop.push_back(id(i, 0));
  for (int j = 0; j < n; ++j) m.boundary_loop.push_back(id(n, j));
  for (int i = n; i > 0; --i) m.boundary_loop.push_back(id(i, n));
  for (int j = n; j > 0; --j) m.boundary_loop.push_back(id(0, j));
  return m;
}

// Random relative perturbation of the free vertices.
inline DiskMesh perturbed(DiskMesh m, double amount, unsigned long long seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    if (m.fixed_mask[i]) continue;
    const PointH3& p = m.vertices[i];
    const double s = amount * p.z();
    m.vertices[i] = PointH3(p.x() + s * u(g), p.y() + s * u(g), p.z() * (1.0 + amount * u(g)));
  }
  return m;
}

inline CurvatureOptions oriented(const DiskMesh& m, const Vec3& dir) {
  CurvatureOptions o;
  o.orientation_field = std::vector<Vec3>(m.num_vertices(), dir);
  return o;
}

}  // namespace fixture
