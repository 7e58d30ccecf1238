#pragma once

// Convex hull C(curve) approximated by support half-spaces, distances to its
// two boundary disks and the width sup_x d(x, dC+) + d(x, dC-).
//
// A disk of the ideal boundary that misses the curve spans a hemisphere whose
// far side contains the hull. Maximal empty disks are grown from seeds in
// each complementary region; the region containing infinity is handled in
// the frame w -> 1/(w - c) with c inside the curve, where it is bounded.

#include <span>
#include <string>
#include <vector>

#include "hyperplateau/boundary_curves.hpp"
#include "hyperplateau/h3core.hpp"
#include "hyperplateau/mesh_surface.hpp"

namespace hyperplateau {

enum class HullSide { Plus, Minus };

struct SupportPlane {
  GeodesicPlane plane;  // oriented so the hull lies on the positive side
  HullSide side;
};

struct SupportPlaneSet {
  std::vector<SupportPlane> planes;
  std::string curve_id;

  std::size_t count(HullSide side) const;
};

// Relative amount by which grown circles stay clear of the samples.
inline constexpr double kGrowthSlack = 1e-12;

// At most `budget` planes per side. Open polylines are closed through infinity.
SupportPlaneSet support_planes(const Polyline& curve, int budget, std::string curve_id = {});

// min over planes of every tag of the signed distance (negative: outside the hull).
double hull_margin(const PointH3& p, const SupportPlaneSet& set);

// Distance to the hull boundary on one side (an over-estimate of the true
// value). Throws GeometryError("not in hull") outside a half-space.
double hull_boundary_distance(const PointH3& p, const SupportPlaneSet& set, HullSide side);

struct WidthEstimate {
  double best = 0.0;
  double spread = 0.0;  // |full - half budgets|
  double coarse = 0.0;  // estimate at half the budgets
  PointH3 maximizer{0.0, 0.0, 1.0};
  std::size_t probes_accepted = 0;
  int probe_budget = 0;
  int plane_budget = 0;
  std::vector<PointH3> probes;  // accepted probes of the full level
};

// Probes are points of ideal tetrahedra spanned by curve samples (always in
// the hull) plus rejection samples of a bounding box, restricted to heights
// at least `z_min_rel` times the curve diameter, followed by three rounds of
// local refinement with radius shrinking by 4.
WidthEstimate width_estimate(const Polyline& curve, int probe_budget, int plane_budget,
                             double z_min_rel = 0.01);

// 2 artanh(1 - eps) for 0 < eps <= 1.
double small_curvature_width_bound(double eps);

// Normal offset of x from the mesh at its nearest vertex, or -1 when that
// vertex is within one ring of the boundary or x lies tangentially beyond
// the vertex's longest edge (outside the truncated surface).
double probe_surface_distance(const PointH3& x, const DiskMesh& mesh, std::span<const Vec3> normals,
                              std::span<const int> dist_from_fixed);

struct ProbeCheck {
  std::size_t checked = 0;
  double max_distance = 0.0;
  double boundary_excess = 0.0;  // largest distance of a boundary vertex outside the hull
  double worst_margin = 0.0;     // max over probes of distance - limit (pass when <= 0)
  bool pass = true;
};

// Checks d(x, mesh) <= best + spread + e * min(1, z_b / z(x)) for the accepted
// probes of `w`, where e is the boundary excess and z_b the highest boundary
// vertex: a mesh truncated at finite height spans its lifted boundary ring,
// which sits slightly outside the hull, and the offset decays like 1/z.
ProbeCheck probe_distance_check(const WidthEstimate& w, const SupportPlaneSet& set, const DiskMesh& mesh,
                                std::span<const Vec3> normals);

}  // namespace hyperplateau
