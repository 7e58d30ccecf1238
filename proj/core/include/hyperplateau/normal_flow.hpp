#pragma once

// Equidistant flow x -> exp_x(t N(x)) of a mesh with frozen connectivity.

#include <span>
#include <vector>

#include "hyperplateau/mesh_surface.hpp"

namespace hyperplateau {

struct FlowedMesh {
  DiskMesh mesh;
  std::vector<Vec3> normals;  // velocity of each normal geodesic at time t
  std::vector<std::uint8_t> frozen;
};

// Moves every vertex along its normal for time t. Vertices with a zero normal
// stay put and are reported frozen.
FlowedMesh flow_mesh(const DiskMesh& mesh, std::span<const Vec3> normals, double t);

// (lambda - tanh t) / (1 - lambda tanh t). Throws DomainError at the pole.
double predicted_curvature(double lambda, double t);

// Curvature of the leaf at time t, oriented by the flowed normals.
CurvatureReport leaf_curvatures(const FlowedMesh& leaf);

struct CurvatureLawRow {
  double t = 0.0;
  double max_residual = 0.0;
  double median_residual = 0.0;
  std::size_t vertices = 0;
  bool degenerate = false;
};

struct CurvatureLawReport {
  std::vector<CurvatureLawRow> rows;
  double max_residual = 0.0;
};

CurvatureLawReport curvature_law_check(const DiskMesh& mesh, const CurvatureReport& base,
                                       std::span<const double> t_grid);

struct FoliationRow {
  double t = 0.0;
  double sign_fraction = 1.0;  // share of interior vertices with sign(H) = -sign(t)
  double max_abs_mean = 0.0;
  std::size_t vertices = 0;
};

struct FoliationReport {
  bool disjoint = true;
  // witness of the first intersection found
  double witness_t1 = 0.0, witness_t2 = 0.0;
  int witness_face1 = -1, witness_face2 = -1;
  std::vector<std::pair<double, double>> pairs_checked;
  std::vector<FoliationRow> rows;
  double min_sign_fraction = 1.0;  // over |t| >= 0.1
};

FoliationReport foliation_and_sign_check(const DiskMesh& mesh, const CurvatureReport& base,
                                         std::span<const double> t_grid);

// First pair of intersecting triangles between two meshes, or {-1, -1}.
std::pair<int, int> find_intersection(const DiskMesh& a, const DiskMesh& b);

}  // namespace hyperplateau
