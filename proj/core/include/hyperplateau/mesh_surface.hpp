#pragma once

// Triangulated surfaces in H^3 with a pinned boundary: hyperbolic area and
// its gradient, discrete principal curvatures, the Jacobi eigenproblem and
// parity of probe crossings.
//
// Normals and curvatures follow one convention throughout: lambda > 0 when
// the surface bends toward its unit normal N, so a horosphere with N pointing
// into the horoball has lambda = 1, and the equidistant surface at signed
// distance t from a plane, with N toward increasing t, has lambda = -tanh t.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperplateau/h3core.hpp"

namespace hyperplateau {

struct DiskMesh {
  std::vector<PointH3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_loop;
  std::vector<std::uint8_t> fixed_mask;  // 1 = pinned

  std::size_t num_vertices() const noexcept { return vertices.size(); }
};

// V - E + F.
int euler_characteristic(const DiskMesh& mesh);

// Checks index ranges, consistent orientation (each edge used at most once in
// each direction), the expected Euler characteristic, the height floor and
// edge lengths > 1e-9. Throws GeometryError naming the first offender.
void validate_mesh(const DiskMesh& mesh, int expected_euler = 1, double z_floor = kMinHeight);

DiskMesh transport(const Mobius& m, const DiskMesh& mesh);

// Vertex adjacency, sorted by index.
std::vector<std::vector<int>> vertex_neighbors(const DiskMesh& mesh);

// Graph distance from the nearest pinned vertex (large when none is pinned).
std::vector<int> distance_from_fixed(const DiskMesh& mesh);

// --- area -----------------------------------------------------------------

// Area of the geodesic triangle with the given vertices (l'Huilier form of
// the angle defect). Throws GeometryError when degenerate.
double geodesic_triangle_area(const PointH3& a, const PointH3& b, const PointH3& c);

// Interior angles opposite to the edges a, b, c of a geodesic triangle with
// those side lengths.
std::array<double, 3> geodesic_triangle_angles(double a, double b, double c);

double hyperbolic_area(const DiskMesh& mesh);

// Gradient of hyperbolic_area with respect to model coordinates; zero rows
// on pinned vertices. Optionally returns the area as well.
std::vector<Vec3> area_gradient(const DiskMesh& mesh, double* area = nullptr);

// One third of the incident triangle areas.
std::vector<double> lumped_mass(const DiskMesh& mesh);

// max over free vertices of z_i |g_i| / m_i: the discrete mean curvature
// magnitude implied by the area gradient.
double gradient_norm(const DiskMesh& mesh, std::span<const Vec3> gradient,
                     std::span<const double> mass);

// --- curvature ------------------------------------------------------------

struct CurvatureOptions {
  // When set, normals are oriented to agree (in sum) with this field of
  // model vectors; otherwise the triangle at boundary_loop[0] faces up.
  std::optional<std::vector<Vec3>> orientation_field;
  double tikhonov = 1e-10;
};

struct CurvatureReport {
  std::vector<double> k1, k2;  // k1 >= k2
  std::vector<double> norm_a;
  std::vector<double> mean;  // k1 + k2
  std::vector<Vec3> normals;  // unit hyperbolic normals (model length z)
  std::vector<std::uint8_t> valid;     // fit succeeded
  std::vector<std::uint8_t> interior;  // counted in the certificate
  double max_abs_lambda = 0.0;         // interior only
  double eps_hat = 1.0;                // 1 - max_abs_lambda
  double max_abs_mean = 0.0;
  double max_norm_a = 0.0;
  double boundary_max_abs_lambda = 0.0;  // vertices excluded from the certificate
  std::size_t interior_count = 0;
};

// Unit normals per vertex from the log-chart fan of incident triangles.
std::vector<Vec3> vertex_normals(const DiskMesh& mesh, const CurvatureOptions& opts = {});

CurvatureReport principal_curvatures(const DiskMesh& mesh, const CurvatureOptions& opts = {});

// --- stability ------------------------------------------------------------

struct StabilityReport {
  double lambda_min = 0.0;
  std::vector<double> q;  // |A|^2 - 2, per vertex
  std::size_t dofs = 0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<double> eigenvector;  // over free vertices, M-normalized
  std::vector<int> dof_vertex;      // vertex index of each dof
};

// Smallest eigenvalue of (K - diag(q) M) u = lambda M u with Dirichlet
// conditions on pinned vertices. K uses cotangents of hyperbolic angles, M is
// the lumped hyperbolic mass. Invalid fits get q = -2.
StabilityReport jacobi_min_eig(const DiskMesh& mesh, const CurvatureReport& report);

// Rayleigh quotient of the same pencil for a function on the free vertices.
double jacobi_rayleigh(const DiskMesh& mesh, const CurvatureReport& report,
                       std::span<const double> u);

// --- probes ---------------------------------------------------------------

// Parity of crossings between the mesh and a polyline in model coordinates.
int mod2_intersections(const DiskMesh& mesh, std::span<const Vec3> probe);

// Hausdorff distance over vertex sets (hyperbolic).
double vertex_hausdorff(const DiskMesh& a, const DiskMesh& b);

// --- I/O ------------------------------------------------------------------

std::string to_obj(const DiskMesh& mesh);
std::string to_ply(const DiskMesh& mesh);
// Reads vertices and faces; pinned vertices are recovered from "# fixed" lines.
DiskMesh from_obj(const std::string& text);

}  // namespace hyperplateau
