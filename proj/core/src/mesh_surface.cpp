#include "hyperplateau/mesh_surface.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <fmt/format.h>

#include "hyperplateau/errors.hpp"
#include "hyperplateau/parallel.hpp"

namespace hyperplateau {

namespace {

struct EdgeLengthGrad {
  double length;
  Vec3 dp, dq;
};

EdgeLengthGrad edge_length_grad(const PointH3& p, const PointH3& q) {
  const Vec3 e = p.vec() - q.vec();
  const double n = e.norm();
  const double w = 2.0 * std::sqrt(p.z() * q.z());
  const double u = n / w;
  const double dl = 2.0 / std::sqrt(1.0 + u * u);
  const Vec3 de = n > 0 ? Vec3(e / (n * w)) : Vec3::Zero();
  EdgeLengthGrad g;
  g.length = 2.0 * std::asinh(u);
  g.dp = dl * (de - Vec3(0, 0, u / (2.0 * p.z())));
  g.dq = dl * (-de - Vec3(0, 0, u / (2.0 * q.z())));
  return g;
}

bool degenerate_sides(double a, double b, double c) {
  const double s = 0.5 * (a + b + c);
  const double m = std::min({s - a, s - b, s - c});
  return !(m > 1e-12 * s) || std::min({a, b, c}) <= 1e-9;
}

// l'Huilier: tan(A/4)^2 = tanh(s/2) tanh((s-a)/2) tanh((s-b)/2) tanh((s-c)/2).
double lhuilier(double a, double b, double c) {
  const double s = 0.5 * (a + b + c);
  const double p = std::tanh(0.5 * s) * std::tanh(0.5 * (s - a)) * std::tanh(0.5 * (s - b)) *
                   std::tanh(0.5 * (s - c));
  return 4.0 * std::atan(std::sqrt(p));
}

std::array<double, 3> side_lengths(const DiskMesh& mesh, const std::array<int, 3>& t) {
  const auto& v = mesh.vertices;
  return {dist(v[t[1]], v[t[2]]), dist(v[t[2]], v[t[0]]), dist(v[t[0]], v[t[1]])};
}

void tangent_frame(const Vec3& n, Vec3& e1, Vec3& e2) {
  const Vec3 ref = std::abs(n.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
  e1 = (ref - ref.dot(n) * n).normalized();
  e2 = n.cross(e1);
}

}  // namespace

int euler_characteristic(const DiskMesh& mesh) {
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[k];
      const int b = t[(k + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  return static_cast<int>(mesh.vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(mesh.triangles.size());
}

void validate_mesh(const DiskMesh& mesh, int expected_euler, double z_floor) {
  const int n = static_cast<int>(mesh.vertices.size());
  if (mesh.fixed_mask.size() != mesh.vertices.size()) {
    throw GeometryError("mesh: fixed_mask size mismatch");
  }
  std::map<std::pair<int, int>, int> directed;
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    const auto& t = mesh.triangles[f];
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= n) throw GeometryError(fmt::format("mesh: face {} index out of range", f));
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw GeometryError(fmt::format("mesh: face {} repeats a vertex", f));
    }
    for (int k = 0; k < 3; ++k) {
      if (++directed[{t[k], t[(k + 1) % 3]}] > 1) {
        throw GeometryError(fmt::format("mesh: inconsistent orientation at face {}", f));
      }
    }
    const auto l = side_lengths(mesh, t);
    if (degenerate_sides(l[0], l[1], l[2])) {
      throw GeometryError(fmt::format("mesh: degenerate face {}", f));
    }
  }
  for (int i = 0; i < n; ++i) {
    if (mesh.vertices[i].z() <= z_floor) {
      throw GeometryError(fmt::format("mesh: vertex {} below height floor", i));
    }
  }
  const std::size_t m = mesh.boundary_loop.size();
  for (std::size_t k = 0; k < m; ++k) {
    const int a = mesh.boundary_loop[k];
    const int b = mesh.boundary_loop[(k + 1) % m];
    const int uses = (directed.count({a, b}) ? 1 : 0) + (directed.count({b, a}) ? 1 : 0);
    if (uses != 1) throw GeometryError(fmt::format("mesh: boundary loop edge {} is not a boundary edge", k));
  }
  const int chi = euler_characteristic(mesh);
  if (chi != expected_euler) {
    throw GeometryError(fmt::format("mesh: Euler characteristic {} (expected {})", chi, expected_euler));
  }
}

DiskMesh transport(const Mobius& m, const DiskMesh& mesh) {
  DiskMesh out = mesh;
  for (auto& v : out.vertices) v = m.apply(v);
  return out;
}

std::vector<std::vector<int>> vertex_neighbors(const DiskMesh& mesh) {
  std::vector<std::vector<int>> nb(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      nb[t[k]].push_back(t[(k + 1) % 3]);
      nb[t[k]].push_back(t[(k + 2) % 3]);
    }
  }
  for (auto& l : nb) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return nb;
}

std::vector<int> distance_from_fixed(const DiskMesh& mesh) {
  const auto nb = vertex_neighbors(mesh);
  std::vector<int> d(mesh.vertices.size(), std::numeric_limits<int>::max() / 2);
  std::deque<int> queue;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (mesh.fixed_mask[i]) {
      d[i] = 0;
      queue.push_back(static_cast<int>(i));
    }
  }
  while (!queue.empty()) {
    const int i = queue.front();
    queue.pop_front();
    for (int j : nb[i]) {
      if (d[j] > d[i] + 1) {
        d[j] = d[i] + 1;
        queue.push_back(j);
      }
    }
  }
  return d;
}

double geodesic_triangle_area(const PointH3& a, const PointH3& b, const PointH3& c) {
  const double la = dist(b, c);
  const double lb = dist(c, a);
  const double lc = dist(a, b);
  if (degenerate_sides(la, lb, lc)) throw GeometryError("degenerate geodesic triangle");
  return lhuilier(la, lb, lc);
}

std::array<double, 3> geodesic_triangle_angles(double a, double b, double c) {
  const double s = 0.5 * (a + b + c);
  const double ss = std::sinh(s);
  const double sa = std::sinh(s - a);
  const double sb = std::sinh(s - b);
  const double sc = std::sinh(s - c);
  return {2.0 * std::atan2(std::sqrt(sb * sc), std::sqrt(ss * sa)),
          2.0 * std::atan2(std::sqrt(sc * sa), std::sqrt(ss * sb)),
          2.0 * std::atan2(std::sqrt(sa * sb), std::sqrt(ss * sc))};
}

double hyperbolic_area(const DiskMesh& mesh) {
  std::vector<double> per(mesh.triangles.size());
  parallel_for(per.size(), [&](std::size_t f) {
    const auto l = side_lengths(mesh, mesh.triangles[f]);
    if (degenerate_sides(l[0], l[1], l[2])) throw GeometryError(fmt::format("degenerate face {}", f));
    per[f] = lhuilier(l[0], l[1], l[2]);
  });
  double total = 0.0;
  for (double a : per) total += a;
  return total;
}

std::vector<Vec3> area_gradient(const DiskMesh& mesh, double* area) {
  const std::size_t nf = mesh.triangles.size();
  std::vector<std::array<Vec3, 3>> per(nf);
  std::vector<double> per_area(nf);
  parallel_for(nf, [&](std::size_t f) {
    const auto& t = mesh.triangles[f];
    const auto& v = mesh.vertices;
    // side k is opposite vertex t[k]
    const EdgeLengthGrad ea = edge_length_grad(v[t[1]], v[t[2]]);
    const EdgeLengthGrad eb = edge_length_grad(v[t[2]], v[t[0]]);
    const EdgeLengthGrad ec = edge_length_grad(v[t[0]], v[t[1]]);
    const double a = ea.length, b = eb.length, c = ec.length;
    if (degenerate_sides(a, b, c)) throw GeometryError(fmt::format("degenerate face {}", f));
    const double s = 0.5 * (a + b + c);
    const double p = std::tanh(0.5 * s) * std::tanh(0.5 * (s - a)) * std::tanh(0.5 * (s - b)) *
                     std::tanh(0.5 * (s - c));
    per_area[f] = 4.0 * std::atan(std::sqrt(p));
    const double k = std::sqrt(p) / (1.0 + p);
    const double is = 1.0 / std::sinh(s);
    const double ia = 1.0 / std::sinh(s - a);
    const double ib = 1.0 / std::sinh(s - b);
    const double ic = 1.0 / std::sinh(s - c);
    const double da = k * (is - ia + ib + ic);
    const double db = k * (is + ia - ib + ic);
    const double dc = k * (is + ia + ib - ic);
    per[f][0] = db * eb.dq + dc * ec.dp;
    per[f][1] = da * ea.dp + dc * ec.dq;
    per[f][2] = da * ea.dq + db * eb.dp;
  });
  std::vector<Vec3> g(mesh.vertices.size(), Vec3::Zero());
  double total = 0.0;
  for (std::size_t f = 0; f < nf; ++f) {
    total += per_area[f];
    for (int k = 0; k < 3; ++k) g[mesh.triangles[f][k]] += per[f][k];
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mesh.fixed_mask[i]) g[i].setZero();
  }
  if (area) *area = total;
  return g;
}

std::vector<double> lumped_mass(const DiskMesh& mesh) {
  std::vector<double> m(mesh.vertices.size(), 0.0);
  for (const auto& t : mesh.triangles) {
    const auto l = side_lengths(mesh, t);
    const double a = lhuilier(l[0], l[1], l[2]) / 3.0;
    for (int k = 0; k < 3; ++k) m[t[k]] += a;
  }
  return m;
}

double gradient_norm(const DiskMesh& mesh, std::span<const Vec3> g, std::span<const double> mass) {
  double best = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (mesh.fixed_mask[i] || mass[i] <= 0.0) continue;
    best = std::max(best, mesh.vertices[i].z() * g[i].norm() / mass[i]);
  }
  return best;
}

std::vector<Vec3> vertex_normals(const DiskMesh& mesh, const CurvatureOptions& opts) {
  const std::size_t n = mesh.vertices.size();
  std::vector<std::vector<int>> faces_of(n);
  for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
    for (int k = 0; k < 3; ++k) faces_of[mesh.triangles[f][k]].push_back(static_cast<int>(f));
  }
  std::vector<Vec3> normals(n, Vec3::Zero());
  parallel_for(n, [&](std::size_t i) {
    const PointH3& p = mesh.vertices[i];
    Vec3 acc = Vec3::Zero();
    for (int f : faces_of[i]) {
      const auto& t = mesh.triangles[f];
      int k = 0;
      while (t[k] != static_cast<int>(i)) ++k;
      const Vec3 wj = log_map(p, mesh.vertices[t[(k + 1) % 3]]).vec.v;
      const Vec3 wk = log_map(p, mesh.vertices[t[(k + 2) % 3]]).vec.v;
      acc += wj.cross(wk);
    }
    if (acc.norm() > 0) normals[i] = acc.normalized() * p.z();
  });

  double sign = 1.0;
  if (opts.orientation_field) {
    const auto& field = *opts.orientation_field;
    double s = 0.0;
    for (std::size_t i = 0; i < n && i < field.size(); ++i) {
      s += normals[i].dot(field[i]) / (normals[i].norm() * field[i].norm() + 1e-300);
    }
    sign = s < 0 ? -1.0 : 1.0;
  } else if (!mesh.triangles.empty()) {
    const int anchor = mesh.boundary_loop.empty() ? 0 : mesh.boundary_loop[0];
    for (const auto& t : mesh.triangles) {
      if (t[0] != anchor && t[1] != anchor && t[2] != anchor) continue;
      const Vec3 a = mesh.vertices[t[0]].vec();
      const Vec3 fn = (mesh.vertices[t[1]].vec() - a).cross(mesh.vertices[t[2]].vec() - a);
      sign = fn.z() < 0 ? -1.0 : 1.0;
      break;
    }
  }
  for (auto& v : normals) v *= sign;
  return normals;
}

CurvatureReport principal_curvatures(const DiskMesh& mesh, const CurvatureOptions& opts) {
  const std::size_t n = mesh.vertices.size();
  const auto nb = vertex_neighbors(mesh);
  const auto dfix = distance_from_fixed(mesh);
  CurvatureReport rep;
  rep.normals = vertex_normals(mesh, opts);
  rep.k1.assign(n, 0.0);
  rep.k2.assign(n, 0.0);
  rep.norm_a.assign(n, 0.0);
  rep.mean.assign(n, 0.0);
  rep.valid.assign(n, 0);
  rep.interior.assign(n, 0);

  parallel_for(n, [&](std::size_t i) {
    if (mesh.fixed_mask[i]) return;
    const PointH3& p = mesh.vertices[i];
    std::vector<int> ring;
    for (int j : nb[i]) {
      ring.push_back(j);
      for (int k : nb[j]) ring.push_back(k);
    }
    std::sort(ring.begin(), ring.end());
    ring.erase(std::unique(ring.begin(), ring.end()), ring.end());
    ring.erase(std::remove(ring.begin(), ring.end(), static_cast<int>(i)), ring.end());
    if (ring.size() < 6 || rep.normals[i].norm() == 0.0) return;

    const Vec3 nrm = rep.normals[i] / p.z();
    Vec3 e1, e2;
    tangent_frame(nrm, e1, e2);
    const std::size_t m = ring.size();
    Eigen::MatrixXd uvh(m, 3);
    for (std::size_t r = 0; r < m; ++r) {
      const Vec3 w = log_map(p, mesh.vertices[ring[r]]).vec.v / p.z();
      uvh.row(r) << w.dot(e1), w.dot(e2), w.dot(nrm);
    }
    const double ell = std::sqrt((uvh.col(0).squaredNorm() + uvh.col(1).squaredNorm()) / m);
    if (!(ell > 0)) return;
    Eigen::MatrixXd a(m, 5);
    Eigen::VectorXd rhs(m);
    for (std::size_t r = 0; r < m; ++r) {
      const double u = uvh(r, 0) / ell;
      const double v = uvh(r, 1) / ell;
      a.row(r) << u, v, 0.5 * u * u, u * v, 0.5 * v * v;
      rhs(r) = uvh(r, 2) / ell;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    if (sv(4) <= 1e-8 * sv(0)) return;
    Eigen::MatrixXd ata = a.transpose() * a;
    ata.diagonal().array() += opts.tikhonov * ata.trace() / 5.0;
    const Eigen::VectorXd x = ata.ldlt().solve(a.transpose() * rhs);
    const double d = x(0), e = x(1);
    const double w = std::sqrt(1.0 + d * d + e * e);
    Eigen::Matrix2d g;
    g << 1.0 + d * d, d * e, d * e, 1.0 + e * e;
    Eigen::Matrix2d second;
    second << x(2), x(3), x(3), x(4);
    second /= (w * ell);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::Matrix2d> es(second, g, Eigen::EigenvaluesOnly);
    rep.k1[i] = es.eigenvalues()(1);
    rep.k2[i] = es.eigenvalues()(0);
    rep.norm_a[i] = std::hypot(rep.k1[i], rep.k2[i]);
    rep.mean[i] = rep.k1[i] + rep.k2[i];
    rep.normals[i] = ((nrm - d * e1 - e * e2) / w) * p.z();
    rep.valid[i] = 1;
    rep.interior[i] = dfix[i] >= 2 ? 1 : 0;
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (!rep.valid[i]) continue;
    const double lam = std::max(std::abs(rep.k1[i]), std::abs(rep.k2[i]));
    if (rep.interior[i]) {
      ++rep.interior_count;
      rep.max_abs_lambda = std::max(rep.max_abs_lambda, lam);
      rep.max_abs_mean = std::max(rep.max_abs_mean, std::abs(rep.mean[i]));
      rep.max_norm_a = std::max(rep.max_norm_a, rep.norm_a[i]);
    } else {
      rep.boundary_max_abs_lambda = std::max(rep.boundary_max_abs_lambda, lam);
    }
  }
  rep.eps_hat = 1.0 - rep.max_abs_lambda;
  return rep;
}

namespace {

struct JacobiSystem {
  Eigen::SparseMatrix<double> a;  // K - diag(q m)
  Eigen::VectorXd mass;
  std::vector<int> dof_vertex;
  std::vector<double> q;
};

JacobiSystem assemble_jacobi(const DiskMesh& mesh, const CurvatureReport& rep) {
  const std::size_t n = mesh.vertices.size();
  JacobiSystem sys;
  std::vector<int> dof(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!mesh.fixed_mask[i]) {
      dof[i] = static_cast<int>(sys.dof_vertex.size());
      sys.dof_vertex.push_back(static_cast<int>(i));
    }
  }
  const std::size_t nd = sys.dof_vertex.size();
  if (nd == 0) throw GeometryError("jacobi: no free vertices");

  // Vertices outside the certificate use |A|^2 capped at the certified maximum.
  double cap = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rep.valid[i] && rep.interior[i]) cap = std::max(cap, rep.norm_a[i] * rep.norm_a[i]);
  }
  sys.q.assign(n, -2.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!rep.valid[i]) continue;
    const double a2 = rep.norm_a[i] * rep.norm_a[i];
    sys.q[i] = (rep.interior[i] ? a2 : std::min(a2, cap)) - 2.0;
  }

  const auto mass = lumped_mass(mesh);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& t : mesh.triangles) {
    const auto l = side_lengths(mesh, t);
    const auto ang = geodesic_triangle_angles(l[0], l[1], l[2]);
    for (int k = 0; k < 3; ++k) {
      const int i = t[(k + 1) % 3];
      const int j = t[(k + 2) % 3];
      const double w = 0.5 / std::tan(ang[k]);
      if (dof[i] >= 0) trip.emplace_back(dof[i], dof[i], w);
      if (dof[j] >= 0) trip.emplace_back(dof[j], dof[j], w);
      if (dof[i] >= 0 && dof[j] >= 0) {
        trip.emplace_back(dof[i], dof[j], -w);
        trip.emplace_back(dof[j], dof[i], -w);
      }
    }
  }
  sys.mass.resize(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    const int v = sys.dof_vertex[d];
    sys.mass(d) = mass[v];
    trip.emplace_back(d, d, -sys.q[v] * mass[v]);
  }
  sys.a.resize(nd, nd);
  sys.a.setFromTriplets(trip.begin(), trip.end());
  return sys;
}

}  // namespace

StabilityReport jacobi_min_eig(const DiskMesh& mesh, const CurvatureReport& report) {
  JacobiSystem sys = assemble_jacobi(mesh, report);
  const auto nd = static_cast<Eigen::Index>(sys.dof_vertex.size());
  StabilityReport out;
  out.q = sys.q;
  out.dofs = static_cast<std::size_t>(nd);
  out.dof_vertex = sys.dof_vertex;

  Eigen::VectorXd u;
  double lambda = 0.0;
  if (nd <= 600) {
    const Eigen::MatrixXd a = Eigen::MatrixXd(sys.a);
    const Eigen::MatrixXd m = sys.mass.asDiagonal();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(a, m);
    if (es.info() != Eigen::Success) throw ConvergenceError("jacobi: dense eigensolver failed", 0.0);
    lambda = es.eigenvalues()(0);
    u = es.eigenvectors().col(0);
    out.iterations = 1;
  } else {
    // Shift-invert Lanczos in the M inner product; the shift lies below the spectrum.
    double qmax = -std::numeric_limits<double>::infinity();
    for (int v : sys.dof_vertex) qmax = std::max(qmax, sys.q[v]);
    const double sigma = -qmax - 1.0;
    Eigen::SparseMatrix<double> shifted = sys.a;
    for (Eigen::Index d = 0; d < nd; ++d) shifted.coeffRef(d, d) -= sigma * sys.mass(d);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
    if (solver.info() != Eigen::Success) throw ConvergenceError("jacobi: factorization failed", 0.0);

    const int kmax = static_cast<int>(std::min<Eigen::Index>(nd, 300));
    Eigen::MatrixXd basis(nd, kmax + 1);
    std::vector<double> alpha, beta;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(nd);
    for (Eigen::Index d = 0; d < nd; ++d) v(d) += 0.01 * std::sin(1.0 + 7.0 * d);
    auto mdot = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
      return (x.array() * sys.mass.array() * y.array()).sum();
    };
    v /= std::sqrt(mdot(v, v));
    basis.col(0) = v;
    double theta = 0.0, prev_theta = -1.0;
    Eigen::VectorXd ritz;
    int k = 0;
    for (; k < kmax; ++k) {
      Eigen::VectorXd w = solver.solve(Eigen::VectorXd(sys.mass.array() * basis.col(k).array()));
      alpha.push_back(mdot(basis.col(k), w));
      for (int pass = 0; pass < 2; ++pass) {
        for (int j = 0; j <= k; ++j) w -= mdot(basis.col(j), w) * basis.col(j);
      }
      const double b = std::sqrt(std::max(0.0, mdot(w, w)));
      const int dim = k + 1;
      Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(dim, dim);
      for (int j = 0; j < dim; ++j) tri(j, j) = alpha[j];
      for (int j = 0; j + 1 < dim; ++j) tri(j, j + 1) = tri(j + 1, j) = beta[j];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
      theta = es.eigenvalues()(dim - 1);
      ritz = es.eigenvectors().col(dim - 1);
      const double est = std::abs(b * ritz(dim - 1));
      if ((est <= 1e-11 * std::abs(theta) && k >= 2) || b <= 1e-14 ||
          (k >= 10 && std::abs(theta - prev_theta) <= 1e-14 * std::abs(theta) && est <= 1e-8 * std::abs(theta))) {
        ++k;
        break;
      }
      prev_theta = theta;
      beta.push_back(b);
      basis.col(k + 1) = w / b;
    }
    u = basis.leftCols(k) * ritz.head(k);
    out.iterations = k;
    lambda = sigma + 1.0 / theta;

    // Shift-invert residuals are amplified by the stiffness of K; a few
    // inverse-iteration steps with a shift just below the Ritz value fix that.
    Eigen::SparseMatrix<double> near = sys.a;
    const double mu = lambda - 1e-3 * std::max(1.0, std::abs(lambda));
    for (Eigen::Index d = 0; d < nd; ++d) near.coeffRef(d, d) -= mu * sys.mass(d);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> polish(near);
    if (polish.info() == Eigen::Success) {
      for (int it = 0; it < 3; ++it) {
        const Eigen::VectorXd next = polish.solve(Eigen::VectorXd(sys.mass.array() * u.array()));
        if (!next.allFinite()) break;
        u = next / std::sqrt(mdot(next, next));
        ++out.iterations;
      }
    }
  }

  const double mm = (u.array() * sys.mass.array() * u.array()).sum();
  u /= std::sqrt(mm);
  const Eigen::VectorXd au = sys.a * u;
  lambda = u.dot(au);
  const Eigen::VectorXd r = au - lambda * Eigen::VectorXd(sys.mass.array() * u.array());
  out.residual = std::sqrt((r.array().square() / sys.mass.array()).sum());
  out.lambda_min = lambda;
  out.eigenvector.assign(u.data(), u.data() + u.size());
  if (!(out.residual <= 1e-6 * std::max(1.0, std::abs(lambda)))) {
    throw ConvergenceError(fmt::format("jacobi: eigen iteration stagnated (residual {:.3g})", out.residual),
                           out.residual);
  }
  return out;
}

double jacobi_rayleigh(const DiskMesh& mesh, const CurvatureReport& report, std::span<const double> uvals) {
  JacobiSystem sys = assemble_jacobi(mesh, report);
  if (uvals.size() != sys.dof_vertex.size()) throw DomainError("jacobi_rayleigh: size mismatch");
  const Eigen::Map<const Eigen::VectorXd> u(uvals.data(), static_cast<Eigen::Index>(uvals.size()));
  const double den = (u.array() * sys.mass.array() * u.array()).sum();
  if (!(den > 0)) throw DomainError("jacobi_rayleigh: zero function");
  return u.dot(sys.a * u) / den;
}

namespace {

enum class Hit { None, Cross, Degenerate };

Hit segment_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b, const Vec3& c) {
  constexpr double kTol = 1e-9;
  const Vec3 dir = p1 - p0;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  const double scale = dir.norm() * e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) {
    // parallel: only a problem if the segment lies in the triangle's plane
    const Vec3 nrm = e1.cross(e2);
    if (std::abs(nrm.dot(p0 - a)) <= 1e-12 * nrm.norm() * (p0 - a).norm() + 1e-300) return Hit::Degenerate;
    return Hit::None;
  }
  const double inv = 1.0 / det;
  const Vec3 tv = p0 - a;
  const double u = tv.dot(pv) * inv;
  if (u < -kTol || u > 1.0 + kTol) return Hit::None;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < -kTol || u + v > 1.0 + kTol) return Hit::None;
  const double t = e2.dot(qv) * inv;
  if (t < -kTol || t > 1.0 + kTol) return Hit::None;
  if (u < kTol || v < kTol || u + v > 1.0 - kTol || t < kTol || t > 1.0 - kTol) return Hit::Degenerate;
  return Hit::Cross;
}

}  // namespace

int mod2_intersections(const DiskMesh& mesh, std::span<const Vec3> probe) {
  if (probe.size() < 2) throw DomainError("mod2_intersections: probe needs two points");
  double scale = 0.0;
  for (const auto& p : probe) scale = std::max(scale, p.norm());
  std::vector<Vec3> path(probe.begin(), probe.end());
  for (int attempt = 0; attempt < 4; ++attempt) {
    int count = 0;
    bool degenerate = false;
    for (std::size_t s = 0; s + 1 < path.size() && !degenerate; ++s) {
      const Vec3 lo = path[s].cwiseMin(path[s + 1]);
      const Vec3 hi = path[s].cwiseMax(path[s + 1]);
      for (const auto& t : mesh.triangles) {
        const Vec3 a = mesh.vertices[t[0]].vec();
        const Vec3 b = mesh.vertices[t[1]].vec();
        const Vec3 c = mesh.vertices[t[2]].vec();
        const Vec3 tlo = a.cwiseMin(b).cwiseMin(c);
        const Vec3 thi = a.cwiseMax(b).cwiseMax(c);
        if ((tlo.array() > hi.array()).any() || (thi.array() < lo.array()).any()) continue;
        const Hit h = segment_triangle(path[s], path[s + 1], a, b, c);
        if (h == Hit::Degenerate) {
          degenerate = true;
          break;
        }
        if (h == Hit::Cross) ++count;
      }
    }
    if (!degenerate) return count % 2;
    // deterministic perturbation of interior probe vertices and endpoints alike
    const double eps = 1e-7 * std::max(1.0, scale) * (attempt + 1);
    for (std::size_t k = 0; k < path.size(); ++k) {
      path[k] += eps * Vec3(std::sin(3.1 * k + attempt), std::cos(1.7 * k + 2.0 * attempt), 0.0);
    }
  }
  throw GeometryError("mod2_intersections: non-transverse crossing persists after perturbation");
}

double vertex_hausdorff(const DiskMesh& a, const DiskMesh& b) {
  auto one_sided = [](const DiskMesh& x, const DiskMesh& y) {
    std::vector<double> best(x.vertices.size());
    parallel_for(x.vertices.size(), [&](std::size_t i) {
      double m = std::numeric_limits<double>::infinity();
      for (const auto& q : y.vertices) m = std::min(m, dist(x.vertices[i], q));
      best[i] = m;
    });
    double out = 0.0;
    for (double v : best) out = std::max(out, v);
    return out;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

std::string to_obj(const DiskMesh& mesh) {
  std::string out = "# model halfspace\n";
  for (const auto& v : mesh.vertices) out += fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& t : mesh.triangles) out += fmt::format("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
  if (!mesh.boundary_loop.empty()) {
    out += "# boundary";
    for (int i : mesh.boundary_loop) out += fmt::format(" {}", i + 1);
    out += "\n";
  }
  out += "# fixed";
  for (std::size_t i = 0; i < mesh.fixed_mask.size(); ++i) {
    if (mesh.fixed_mask[i]) out += fmt::format(" {}", i + 1);
  }
  out += "\n";
  return out;
}

std::string to_ply(const DiskMesh& mesh) {
  std::string out = fmt::format(
      "ply\nformat ascii 1.0\ncomment model halfspace\nelement vertex {}\nproperty double x\n"
      "property double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\n"
      "end_header\n",
      mesh.vertices.size(), mesh.triangles.size());
  for (const auto& v : mesh.vertices) out += fmt::format("{:.17g} {:.17g} {:.17g}\n", v.x(), v.y(), v.z());
  for (const auto& t : mesh.triangles) out += fmt::format("3 {} {} {}\n", t[0], t[1], t[2]);
  return out;
}

DiskMesh from_obj(const std::string& text) {
  DiskMesh mesh;
  std::istringstream in(text);
  std::string line;
  std::vector<int> fixed;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) throw ConfigError("obj: malformed vertex line");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::array<int, 3> t{};
      for (auto& k : t) {
        std::string tok;
        if (!(ls >> tok)) throw ConfigError("obj: malformed face line");
        k = std::stoi(tok.substr(0, tok.find('/'))) - 1;
      }
      mesh.triangles.push_back(t);
    } else if (tag == "#") {
      std::string kind;
      ls >> kind;
      int idx;
      if (kind == "boundary") {
        while (ls >> idx) mesh.boundary_loop.push_back(idx - 1);
      } else if (kind == "fixed") {
        while (ls >> idx) fixed.push_back(idx - 1);
      }
    }
  }
  mesh.fixed_mask.assign(mesh.vertices.size(), 0);
  for (int i : fixed) {
    if (i < 0 || i >= static_cast<int>(mesh.vertices.size())) throw ConfigError("obj: fixed index out of range");
    mesh.fixed_mask[i] = 1;
  }
  return mesh;
}

}  // namespace hyperplateau
