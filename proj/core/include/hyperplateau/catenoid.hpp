#pragma once

// Minimal catenoids of revolution about the vertical geodesic.
//
// In Fermi coordinates (t, r, theta) about the axis the area of a surface of
// revolution r = r(t) is 2 pi int sinh r sqrt(cosh^2 r + r'^2) dt, with first
// integral c = sinh r cosh^2 r / sqrt(cosh^2 r + r'^2). At the neck r = r0 this
// gives c = sinh r0 cosh r0 and
//   dt/dr = c / (cosh r sqrt(sinh^2 r cosh^2 r - c^2)).
// The profile is tabulated in u with r = r0 + u^2, which removes the
// square-root singularity at the neck. The two ends are asymptotic to the
// Fermi slices t = +-T, hemispheres of radius e^{+-T}.

#include <vector>

#include "hyperplateau/h3core.hpp"
#include "hyperplateau/mesh_surface.hpp"

namespace hyperplateau {

struct CatenoidProfile {
  double r0 = 0.0;
  double c = 0.0;
  double r_max = 0.0;
  double T = 0.0;         // half-separation of the asymptotic planes
  double tail = 0.0;      // contribution of r > r_max to T
  double tail_model = 0.0;  // (8c/3) e^{-3 r_max}, the leading-order tail
  std::vector<double> u;  // uniform grid on [0, sqrt(r_max - r0)]
  std::vector<double> r;  // r0 + u^2
  std::vector<long double> t;  // t(r), increasing from 0; extended precision keeps differences exact

  // dt/du at a grid parameter (closed form).
  double dt_du(double uu) const;
  // Profile radius at |t|; +inf for |t| >= T.
  double radius_at(double tt) const;
  // t at a parameter u in [0, u.back()] by cubic Hermite interpolation.
  double t_at(double uu) const;
};

inline constexpr double kDefaultRMax = 6.0;

// dt/dr integrand. r must exceed r0.
double profile_slope(double r, double r0);

// Half-separation T(r0) alone (no table).
double half_separation(double r0, double tol = 1e-12);

CatenoidProfile profile(double r0, double r_max = kDefaultRMax, double tol = 1e-12,
                        int table_size = 2049);

// Max over the table of |sinh r cosh^2 r / sqrt(cosh^2 r + r'^2) - c| with r'
// from sixth-order differencing of the tabulated t(u).
double first_integral_drift(const CatenoidProfile& p);

struct SeparationMax {
  double r0_star;
  double d_max;
  std::vector<std::pair<double, double>> samples;  // (r0, 2T) used for the bracket
};

// Golden-section maximization of 2T(r0) after a unimodality check on a grid.
SeparationMax max_separation(double tol = 1e-12);

enum class Branch { Thick, Thin };

// The neck radius with 2T(r0) = s on the requested flank. Throws
// GeometryError("no catenoid barrier") for s >= d_max.
double neck_for_separation(double s, Branch branch, const SeparationMax& sep, double tol = 1e-12);

class SolidCatenoid {
 public:
  SolidCatenoid(CatenoidProfile profile, const Mobius& placement);

  const CatenoidProfile& profile() const noexcept { return profile_; }
  // Standard configuration -> target.
  const Mobius& placement() const noexcept { return placement_; }

  FermiCoords standard_coordinates(const PointH3& p) const;
  // Inside iff |t| < T and r < r(t) in the standard configuration.
  bool contains(const PointH3& p) const;
  // Moves p radially (in the standard Fermi chart) to r(t) + margin when inside.
  PointH3 project_out(const PointH3& p, double margin) const;
  // Unit model direction of the outward normal of the catenoid surface
  // through the level t(p), evaluated at p.
  Vec3 outward_direction(const PointH3& p) const;

  // Axis segment between the asymptotic planes, extended by `extend` on each
  // side, as model-coordinate points.
  std::vector<Vec3> axis_probe(double extend, int samples) const;

 private:
  CatenoidProfile profile_;
  Mobius placement_;
  Mobius inverse_;
};

struct CatenoidBarrier {
  SolidCatenoid solid;
  DiskMesh annulus;  // Euler characteristic 0, both end circles pinned
  double separation;
};

// Moebius map sending the two concentric circles |w| = e^{-s/2}, e^{s/2} to the
// boundary circles of two disjoint circle planes (first to p1), and s.
std::pair<Mobius, double> coaxial_placement(const GeodesicPlane& p1, const GeodesicPlane& p2);

// Annulus mesh with `columns` angles and rows spaced uniformly in the
// conformal coordinate of the profile (nearly isotropic triangles), for
// Fermi radius up to r_end <= r_max.
inline constexpr double kMeshREnd = 3.0;
DiskMesh catenoid_mesh(const CatenoidProfile& p, const Mobius& placement, int columns,
                       double r_end = kMeshREnd);

// `columns` applies to necks with sinh r0 <= 1; thicker necks get up to 8x as
// many so the neck spacing stays near 2 pi / columns.
CatenoidBarrier catenoid_for_planes(const GeodesicPlane& p1, const GeodesicPlane& p2, Branch branch,
                                    const SeparationMax& sep, int columns = 64);

// CSV "r,t" of the tabulated profile.
std::string profile_csv(const CatenoidProfile& p);

}  // namespace hyperplateau
