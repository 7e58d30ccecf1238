#pragma once

// Discrete area minimization for truncated disks spanning an ideal-boundary
// curve, optionally outside solid catenoids, with height continuation and the
// barrier-assignment experiment.

#include <span>
#include <string>
#include <vector>

#include "hyperplateau/boundary_curves.hpp"
#include "hyperplateau/catenoid.hpp"
#include "hyperplateau/mesh_surface.hpp"

namespace hyperplateau {

struct SolveConfig {
  double h = 0.05;  // truncation height at curve scale 1
  int rings = 48;
  double tol_g = 1e-4;  // stop when the gradient norm (|H| proxy) drops below this
  int max_iters = 2000;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  double margin = 1e-3;  // clearance used when projecting out of barriers
  int window = 0;        // scale clamp [2^-window, 2^window] for boundary heights; 0 = none
  std::vector<double> h_schedule;
  std::vector<SolidCatenoid> barriers;

  void validate() const;  // throws ConfigError
};

struct TraceRow {
  int iter;
  double energy;
  double grad_norm;
  double step;
  int violations;
};

struct SolveResult {
  DiskMesh mesh;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double energy = 0.0;
  std::vector<TraceRow> trace;
  CurvatureReport curvature;
  StabilityReport stability;
  bool stability_ok = false;  // eigen solve finished
  std::string stability_error;
  int barrier_contacts = 0;    // vertices resting on a barrier at exit
  int barrier_violations = 0;  // vertices strictly inside a barrier at exit
  double max_energy_increase = 0.0;  // largest accepted increase (must stay <= 1e-10)
};

// Concentric-ring disk with the curve samples as boundary ring, lifted to
// height h * clamp(|w|). Interior positions come from a mean-value harmonic
// extension over a graded reference hemisphere.
// The ring grading follows from the sample count M: radii (k/R)^gamma with
// gamma = 2 pi R / M, so boundary_samples(rings) gives the default grading.
DiskMesh init_mesh(const Polyline& curve, double h, int rings, int window = 0);

inline constexpr double kRingGrading = 0.7;
int boundary_samples(int rings);

SolveResult minimize(DiskMesh mesh, const SolveConfig& config);

// Fills the curvature and stability fields of a result.
void certify_result(SolveResult& result);

// Appends a boundary ring at height h (same samples) joined to the current
// boundary ring, which becomes free.
DiskMesh extend_boundary(const DiskMesh& mesh, const Polyline& curve, double h, int window = 0);

struct ContinuationStage {
  double h;
  SolveResult result;
  double interior_drift;  // max displacement of previously free vertices
};

std::vector<ContinuationStage> continuation_solve(const Polyline& curve, const SolveConfig& config);

struct IotaAssignment {
  int window = 0;
  std::vector<int> values;  // iota(-window .. window)

  int at(int n) const { return values.at(static_cast<std::size_t>(n + window)); }
  // "0110..." of length 2N+1 lists iota(-N..N); shorter strings list iota(0), iota(1), ...
  static IotaAssignment parse(const std::string& digits, int window);
  std::string str() const;
};

struct MultiplicityRun {
  IotaAssignment iota;
  SolveResult result;
  std::vector<CatenoidBarrier> barriers;  // indexed by n + window
  bool clear_of_barriers = false;         // zero vertices inside any barrier
};

struct DistinctnessRow {
  std::size_t a, b;
  int level;  // first level where the assignments differ (or 0)
  double hausdorff;
  double neck_half_diameter;  // smallest neck radius among the two level catenoids
  int parity_a[2];            // parity of mesh a against the gate probes (level, j = 0, 1)
  int parity_b[2];
};

struct MultiplicityResult {
  QuasicircleParams params;
  SeparationMax separation;
  std::vector<MultiplicityRun> runs;
  std::vector<DistinctnessRow> rows;
};

MultiplicityResult multiplicity_experiment(const QuasicircleParams& q, int window,
                                           const std::vector<IotaAssignment>& assignments,
                                           const SolveConfig& config, int samples_per_piece = 16);

struct TwoSidedResult {
  SolveResult plus, minus;
  double gap_plus, gap_minus;  // surface distance of each sided solve to U
  bool uniqueness_consistent;
};

// Surface distance: max over vertices of a of the normal offset from the
// nearest vertex of b (whose unit normals are given) and vice versa.
double surface_gap(const DiskMesh& a, const DiskMesh& b, std::span<const Vec3> b_normals,
                   std::span<const Vec3> a_normals);

TwoSidedResult two_sided_solve(const DiskMesh& reference, const SolveConfig& config, double offset = 0.3);

}  // namespace hyperplateau
