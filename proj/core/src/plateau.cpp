#include "hyperplateau/plateau.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "hyperplateau/errors.hpp"
#include "hyperplateau/normal_flow.hpp"
#include "hyperplateau/parallel.hpp"

namespace hyperplateau {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoSidedTolerance = 2e-2;
// Allowed crossing of the reference in a sided solve: the discrete minimizer
// for another vertex layout sits off the reference's vertex tangent planes.
constexpr double kSideSlack = 1e-4;

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

double boundary_scale(Complex w, int window) {
  if (window <= 0) return 1.0;
  const double lo = std::ldexp(1.0, -window);
  const double hi = std::ldexp(1.0, window);
  return std::clamp(std::abs(w), lo, hi);
}

double signed_area(const Polyline& c) {
  double a = 0.0;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Complex p = c.points[i], q = c.points[(i + 1) % n];
    a += p.real() * q.imag() - q.real() * p.imag();
  }
  return 0.5 * a;
}

// Zipper triangulation between an inner ring and an outer ring of indices
// whose angles are uniform from 0.
void zip_rings(const std::vector<int>& inner, const std::vector<int>& outer,
               std::vector<std::array<int, 3>>& tris) {
  const std::size_t na = inner.size(), nb = outer.size();
  std::size_t i = 0, j = 0;
  while (i < na || j < nb) {
    const double next_a = static_cast<double>(i + 1) / na;
    const double next_b = static_cast<double>(j + 1) / nb;
    const int a = inner[i % na], b = outer[j % nb];
    if (j < nb && (i == na || next_b <= next_a)) {
      tris.push_back({a, b, outer[(j + 1) % nb]});
      ++j;
    } else {
      tris.push_back({a, b, inner[(i + 1) % na]});
      ++i;
    }
  }
}

struct Contact {
  int barrier = -1;  // -1 none, -2 side constraint
  Vec3 normal = Vec3::Zero();
};

struct SideConstraint {
  const DiskMesh* reference;
  std::vector<Vec3> normals;  // unit hyperbolic normals of the reference
  int side;
  std::vector<std::vector<int>> candidates;
};

class Projector {
 public:
  Projector(const SolveConfig& cfg, const SideConstraint* side) : cfg_(cfg), side_(side) {}

  // Moves p out of every barrier (and to the allowed side). Returns the
  // contact that moved it last.
  Contact apply(std::size_t i, PointH3& p) const {
    Contact c;
    for (int pass = 0; pass < 4; ++pass) {
      bool moved = false;
      for (std::size_t b = 0; b < cfg_.barriers.size(); ++b) {
        const SolidCatenoid& s = cfg_.barriers[b];
        if (!s.contains(p)) continue;
        p = s.project_out(p, cfg_.margin);
        c.barrier = static_cast<int>(b);
        c.normal = s.outward_direction(p);
        moved = true;
      }
      if (side_ != nullptr && side_violated(i, p, &c)) moved = true;
      if (!moved) break;
    }
    return c;
  }

  bool inside_any(const PointH3& p) const {
    for (const auto& s : cfg_.barriers) {
      if (s.contains(p)) return true;
    }
    return false;
  }

 private:
  bool side_violated(std::size_t i, PointH3& p, Contact* c) const {
    const DiskMesh& u = *side_->reference;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int k : side_->candidates[i]) {
      const double d = dist(u.vertices[k], p);
      if (d < bd) {
        bd = d;
        best = k;
      }
    }
    const PointH3& base = u.vertices[best];
    const LogResult lr = log_map(base, p);
    if (lr.coincident) return false;
    const double zb = base.z();
    const Vec3 nh = side_->normals[best] / zb;  // orthonormal-frame components
    const Vec3 wh = lr.vec.v / zb;
    const double s = side_->side * wh.dot(nh);
    if (s >= -kSideSlack) return false;
    const Vec3 v = wh - wh.dot(nh) * nh - side_->side * kSideSlack * nh;
    p = exp_map(base, TangentVec{base, v * zb}.normalized(), v.norm());
    c->barrier = -2;
    c->normal = (side_->side * side_->normals[best]).normalized();
    return true;
  }

  const SolveConfig& cfg_;
  const SideConstraint* side_;
};

// (K + M) over free vertices: K from Euclidean triangles with the hyperbolic
// edge lengths (always positive semidefinite), M lumped hyperbolic mass.
SpMat preconditioner(const DiskMesh& mesh, const std::vector<int>& dof, std::span<const double> mass) {
  std::vector<Triplet> trip;
  for (const auto& t : mesh.triangles) {
    const double la = dist(mesh.vertices[t[1]], mesh.vertices[t[2]]);
    const double lb = dist(mesh.vertices[t[2]], mesh.vertices[t[0]]);
    const double lc = dist(mesh.vertices[t[0]], mesh.vertices[t[1]]);
    const double s = 0.5 * (la + lb + lc);
    const double area = std::sqrt(std::max(s * (s - la) * (s - lb) * (s - lc), 1e-300));
    const double cot[3] = {(lb * lb + lc * lc - la * la) / (4.0 * area),
                           (lc * lc + la * la - lb * lb) / (4.0 * area),
                           (la * la + lb * lb - lc * lc) / (4.0 * area)};
    for (int k = 0; k < 3; ++k) {
      const int i = t[(k + 1) % 3], j = t[(k + 2) % 3];
      const double w = 0.5 * cot[k];
      const int di = dof[i], dj = dof[j];
      if (di >= 0) trip.emplace_back(di, di, w);
      if (dj >= 0) trip.emplace_back(dj, dj, w);
      if (di >= 0 && dj >= 0) {
        trip.emplace_back(di, dj, -w);
        trip.emplace_back(dj, di, -w);
      }
    }
  }
  for (std::size_t i = 0; i < dof.size(); ++i) {
    if (dof[i] >= 0) trip.emplace_back(dof[i], dof[i], mass[i]);
  }
  const int n = *std::max_element(dof.begin(), dof.end()) + 1;
  SpMat a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

// Removes the part of g that would push a contact vertex further in.
void project_gradient(std::vector<Vec3>& g, const std::vector<Contact>& contacts) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (contacts[i].barrier == -1) continue;
    const Vec3& n = contacts[i].normal;
    const double gn = g[i].dot(n);
    if (gn > 0.0) g[i] -= gn * n;
  }
}

SolveResult minimize_impl(DiskMesh mesh, const SolveConfig& cfg, const SideConstraint* side) {
  cfg.validate();
  validate_mesh(mesh);
  const std::size_t nv = mesh.vertices.size();

  double z_floor = std::numeric_limits<double>::infinity();
  for (int b : mesh.boundary_loop) z_floor = std::min(z_floor, mesh.vertices[b].z());
  z_floor /= 10.0;

  std::vector<int> dof(nv, -1);
  int ndof = 0;
  for (std::size_t i = 0; i < nv; ++i) {
    if (!mesh.fixed_mask[i]) dof[i] = ndof++;
  }
  if (ndof == 0) throw ConfigError("minimize: mesh has no free vertices");

  const Projector proj(cfg, side);
  std::vector<Contact> contacts(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    if (!mesh.fixed_mask[i]) contacts[i] = proj.apply(i, mesh.vertices[i]);
  }
  validate_mesh(mesh, 1, z_floor);

  SolveResult res;
  double alpha = 1.0;
  double energy = 0.0;
  // L-BFGS memory over the normal field of the free vertices.
  constexpr std::size_t kMemory = 8;
  std::vector<Eigen::VectorXd> mem_s, mem_y;
  Eigen::VectorXd s_prev, g_prev;
  for (int iter = 0;; ++iter) {
    std::vector<Vec3> g = area_gradient(mesh, &energy);
    std::vector<double> face_area(mesh.triangles.size());
    for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
      const auto& t = mesh.triangles[f];
      face_area[f] = geodesic_triangle_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    }
    const std::vector<double> mass = lumped_mass(mesh);
    project_gradient(g, contacts);
    // The stopping test uses the normal part (|H| proxy); tangential parts only
    // redistribute vertices.
    const std::vector<Vec3> normals = vertex_normals(mesh);
    std::vector<Vec3> gnorm(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const Vec3 n = normals[i].normalized();
      gnorm[i] = g[i].dot(n) * n;
    }
    const double gn = gradient_norm(mesh, gnorm, mass);
    int in_contact = 0;
    for (const auto& c : contacts) in_contact += c.barrier != -1;
    res.trace.push_back({iter, energy, gn, iter == 0 ? 0.0 : alpha, in_contact});
    res.iterations = iter;
    res.grad_norm = gn;
    res.energy = energy;
    if (gn <= cfg.tol_g) {
      res.converged = true;
      break;
    }
    if (iter >= cfg.max_iters) break;

    const SpMat a = preconditioner(mesh, dof, mass);
    Eigen::SimplicialLDLT<SpMat> ldlt(a);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("minimize: preconditioner factorization failed", 0.0);
    // Normal displacement field phi: d_i = phi_i n_i. H0 v = Z A^-1 Z v with Z
    // the vertex heights, the H^1 metric in model coordinates.
    auto apply_h0 = [&](const Eigen::VectorXd& v) {
      Eigen::VectorXd rhs(ndof);
      for (std::size_t i = 0; i < nv; ++i) {
        if (dof[i] >= 0) rhs(dof[i]) = mesh.vertices[i].z() * v(dof[i]);
      }
      Eigen::VectorXd out = ldlt.solve(rhs);
      for (std::size_t i = 0; i < nv; ++i) {
        if (dof[i] >= 0) out(dof[i]) *= mesh.vertices[i].z();
      }
      return out;
    };
    std::vector<Vec3> unit(nv, Vec3::Zero());
    Eigen::VectorXd gs(ndof);
    for (std::size_t i = 0; i < nv; ++i) {
      if (dof[i] < 0) continue;
      unit[i] = normals[i].normalized();
      gs(dof[i]) = g[i].dot(unit[i]);
    }
    if (iter > 0) {
      const Eigen::VectorXd yk = gs - g_prev;
      const double sy = s_prev.dot(yk);
      if (sy > 1e-12 * s_prev.norm() * yk.norm()) {
        if (mem_s.size() == kMemory) {
          mem_s.erase(mem_s.begin());
          mem_y.erase(mem_y.begin());
        }
        mem_s.push_back(s_prev);
        mem_y.push_back(yk);
      }
    }
    // Two-loop recursion.
    Eigen::VectorXd q = -gs;
    std::vector<double> coef(mem_s.size());
    for (std::size_t k = mem_s.size(); k-- > 0;) {
      coef[k] = mem_s[k].dot(q) / mem_y[k].dot(mem_s[k]);
      q -= coef[k] * mem_y[k];
    }
    Eigen::VectorXd dir = apply_h0(q);
    for (std::size_t k = 0; k < mem_s.size(); ++k) {
      const double b = mem_y[k].dot(dir) / mem_y[k].dot(mem_s[k]);
      dir += (coef[k] - b) * mem_s[k];
    }
    if (!mem_s.empty() && !(gs.dot(dir) < 0.0)) {
      mem_s.clear();
      mem_y.clear();
      dir = apply_h0(-gs);
    }
    // Full H^1 descent direction; its tangential part relaxes the vertex layout.
    Eigen::MatrixXd rhs(ndof, 3);
    for (std::size_t i = 0; i < nv; ++i) {
      if (dof[i] >= 0) rhs.row(dof[i]) = -mesh.vertices[i].z() * g[i].transpose();
    }
    const Eigen::MatrixXd yfull = ldlt.solve(rhs);
    std::vector<Vec3> full(nv, Vec3::Zero());
    for (std::size_t i = 0; i < nv; ++i) {
      if (dof[i] >= 0) full[i] = mesh.vertices[i].z() * yfull.row(dof[i]).transpose();
    }
    std::vector<Vec3> d(nv, Vec3::Zero());
    double slope = 0.0;
    for (std::size_t i = 0; i < nv; ++i) {
      if (dof[i] < 0) continue;
      d[i] = full[i] - full[i].dot(unit[i]) * unit[i] + dir(dof[i]) * unit[i];
      slope += g[i].dot(d[i]);
    }
    if (!(slope < 0.0)) {
      mem_s.clear();
      mem_y.clear();
      slope = 0.0;
      for (std::size_t i = 0; i < nv; ++i) {
        if (dof[i] < 0) continue;
        d[i] = full[i];
        dir(dof[i]) = full[i].dot(unit[i]);
        slope += g[i].dot(d[i]);
      }
    }
    if (!(slope < 0.0)) break;
    g_prev = gs;

    // Projected Armijo backtracking; quasi-Newton steps start at 1.
    alpha = mem_s.empty() ? std::min(2.0 * alpha, 2.0) : 1.0;
    bool accepted = false;
    std::vector<PointH3> trial_v;
    std::vector<Contact> trial_c;
    while (alpha > 1e-12) {
      trial_v = mesh.vertices;
      trial_c.assign(nv, Contact{});
      bool ok = true;
      double lin = 0.0;
      for (std::size_t i = 0; i < nv && ok; ++i) {
        if (dof[i] < 0) continue;
        const Vec3 x = mesh.vertices[i].vec() + alpha * d[i];
        if (!(x.z() > z_floor)) {
          ok = false;
          break;
        }
        PointH3 p(x);
        trial_c[i] = proj.apply(i, p);
        if (!(p.z() > z_floor)) ok = false;
        trial_v[i] = p;
        lin += g[i].dot(p.vec() - mesh.vertices[i].vec());
      }
      if (ok && lin < 0.0) {
        try {
          // Summed per-face differences keep the Armijo test meaningful near
          // convergence, where the total area changes below its rounding.
          double de = 0.0;
          for (std::size_t f = 0; f < mesh.triangles.size(); ++f) {
            const auto& t = mesh.triangles[f];
            if (dof[t[0]] < 0 && dof[t[1]] < 0 && dof[t[2]] < 0) continue;
            de += geodesic_triangle_area(trial_v[t[0]], trial_v[t[1]], trial_v[t[2]]) - face_area[f];
          }
          if (de <= cfg.armijo_c1 * lin) {
            accepted = true;
            res.max_energy_increase = std::max(res.max_energy_increase, de);
            break;
          }
        } catch (const GeometryError&) {
        }
      }
      alpha *= cfg.backtrack;
    }
    if (!accepted) break;
    bool contacts_changed = false;
    for (std::size_t i = 0; i < nv && !contacts_changed; ++i) contacts_changed = trial_c[i].barrier != contacts[i].barrier;
    if (contacts_changed) {
      mem_s.clear();
      mem_y.clear();
    }
    s_prev = alpha * dir;
    mesh.vertices = std::move(trial_v);
    contacts = std::move(trial_c);
  }

  for (std::size_t i = 0; i < nv; ++i) {
    if (contacts[i].barrier != -1) ++res.barrier_contacts;
    if (!mesh.fixed_mask[i] && proj.inside_any(mesh.vertices[i])) ++res.barrier_violations;
  }
  res.mesh = std::move(mesh);
  return res;
}

}  // namespace

void SolveConfig::validate() const {
  if (!(h > 0.0 && h < 1.0)) throw ConfigError("h must lie in (0, 1)");
  if (rings < 2) throw ConfigError("rings must be at least 2");
  if (!(tol_g > 0.0)) throw ConfigError("tol_g must be positive");
  if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw ConfigError("armijo_c1 must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack must lie in (0, 1)");
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (window < 0) throw ConfigError("window must be non-negative");
  for (std::size_t k = 0; k < h_schedule.size(); ++k) {
    if (!(h_schedule[k] > 0.0 && h_schedule[k] < 1.0)) throw ConfigError("h_schedule entries must lie in (0, 1)");
    if (k > 0 && !(h_schedule[k] < h_schedule[k - 1])) throw ConfigError("h_schedule must be strictly decreasing");
  }
}

DiskMesh init_mesh(const Polyline& curve, double h, int rings, int window) {
  if (!curve.closed) throw DomainError("init_mesh: closed curve required");
  const int m = static_cast<int>(curve.size());
  if (m < 6) throw DomainError("init_mesh: at least 6 boundary samples required");
  if (rings < 2) throw ConfigError("init_mesh: rings must be at least 2");
  if (!(h > 0.0)) throw ConfigError("init_mesh: h must be positive");

  const double area = signed_area(curve);
  const double r_eq = std::sqrt(std::abs(area) / kPi);
  if (!(r_eq > 0.0)) throw GeometryError("init_mesh: curve encloses no area");

  // Reference: hemisphere of radius a truncated at height h, parameterized
  // by a Poincare radius uniform in the ring index.
  std::vector<int> counts(rings + 1);
  counts[0] = 1;
  for (int k = 1; k < rings; ++k) {
    counts[k] = std::clamp(static_cast<int>(std::lround(static_cast<double>(m) * k / rings)), 6, m);
    counts[k] = std::max(counts[k], counts[k - 1]);
  }
  counts[rings] = m;

  // Ring radii rho_k = tp (k/R)^gamma with n_k ~ M k / R stay isotropic when
  // M = 2 pi R / gamma; gamma < 1 refines toward the boundary, where the
  // hyperbolic element size is largest.
  const double gamma = std::clamp(2.0 * kPi * rings / m, 0.3, 1.0);

  // Mean boundary scale: the reference hemisphere is built at height h * sbar
  // so a scaled windowed curve gives the scaled mesh.
  double sbar = 0.0;
  for (const Complex& p : curve.points) sbar += boundary_scale(p, window);
  sbar /= m;
  const double h_ref = h * sbar;

  for (double lift = 1.0; lift <= 2.0; lift *= 2.0) {
    const double a = std::sqrt(r_eq * r_eq + h_ref * h_ref);
    const double s_max = std::acosh(a / h_ref);
    const double tp = std::tanh(0.5 * s_max);

    DiskMesh mesh;
    std::vector<std::vector<int>> ring_ids(rings + 1);
    std::vector<Eigen::Vector2d> param;
    std::vector<double> zref, bump;
    for (int k = 0; k <= rings; ++k) {
      const double rho_p = tp * std::pow(static_cast<double>(k) / rings, gamma);
      const double s = 2.0 * std::atanh(rho_p);
      const double rho_e = a * std::tanh(s);
      for (int j = 0; j < counts[k]; ++j) {
        const double th = 2.0 * kPi * j / counts[k];
        ring_ids[k].push_back(static_cast<int>(param.size()));
        param.emplace_back(rho_e * std::cos(th), rho_e * std::sin(th));
        zref.push_back(a / std::cosh(s));
        bump.push_back(1.0 - static_cast<double>(k * k) / (rings * rings));
      }
    }
    const int nv = static_cast<int>(param.size());
    const int first_boundary = ring_ids[rings].front();

    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < counts[1]; ++j) tris.push_back({0, ring_ids[1][j], ring_ids[1][(j + 1) % counts[1]]});
    for (int k = 1; k < rings; ++k) zip_rings(ring_ids[k], ring_ids[k + 1], tris);

    // Mean-value weights on the reference projection.
    std::vector<std::vector<std::pair<int, double>>> w(nv);
    auto add = [&](int i, int j, double v) {
      for (auto& e : w[i]) {
        if (e.first == j) {
          e.second += v;
          return;
        }
      }
      w[i].emplace_back(j, v);
    };
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) {
        const int i = t[k], j = t[(k + 1) % 3], l = t[(k + 2) % 3];
        const Eigen::Vector2d u = param[j] - param[i], v = param[l] - param[i];
        const double ang = std::atan2(u.x() * v.y() - u.y() * v.x(), u.dot(v));
        const double tn = std::tan(0.5 * std::abs(ang));
        add(i, j, tn / u.norm());
        add(i, l, tn / v.norm());
      }
    }
    std::vector<Triplet> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nv, 3);
    for (int i = 0; i < nv; ++i) {
      trip.emplace_back(i, i, 1.0);
      if (i >= first_boundary) {
        const Complex p = curve.points[i - first_boundary];
        rhs(i, 0) = p.real();
        rhs(i, 1) = p.imag();
        rhs(i, 2) = boundary_scale(p, window);
        continue;
      }
      double sum = 0.0;
      for (const auto& e : w[i]) sum += e.second;
      for (const auto& e : w[i]) trip.emplace_back(i, e.first, -e.second / sum);
    }
    SpMat lap(nv, nv);
    lap.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu(lap);
    if (lu.info() != Eigen::Success) throw GeometryError("init_mesh: harmonic extension is singular");
    const Eigen::MatrixXd x = lu.solve(rhs);

    mesh.vertices.reserve(nv);
    for (int i = 0; i < nv; ++i) {
      double z = x(i, 2) / sbar * zref[i];
      if (i < first_boundary) z += (lift - 1.0) * a * bump[i] * x(i, 2) / sbar;
      if (i >= first_boundary) z = h * x(i, 2);
      mesh.vertices.emplace_back(x(i, 0), x(i, 1), z);
    }
    if (area < 0.0) {
      for (auto& t : tris) std::swap(t[1], t[2]);
    }
    mesh.triangles = std::move(tris);
    mesh.boundary_loop = ring_ids[rings];
    mesh.fixed_mask.assign(nv, 0);
    for (int b : mesh.boundary_loop) mesh.fixed_mask[b] = 1;
    try {
      validate_mesh(mesh);
      return mesh;
    } catch (const GeometryError&) {
      if (lift >= 2.0) throw;
    }
  }
  throw GeometryError("init_mesh: unreachable");
}

int boundary_samples(int rings) {
  return static_cast<int>(std::lround(2.0 * kPi * rings / kRingGrading));
}

SolveResult minimize(DiskMesh mesh, const SolveConfig& config) {
  return minimize_impl(std::move(mesh), config, nullptr);
}

void certify_result(SolveResult& result) {
  result.curvature = principal_curvatures(result.mesh);
  try {
    result.stability = jacobi_min_eig(result.mesh, result.curvature);
    result.stability_ok = true;
  } catch (const ConvergenceError& e) {
    result.stability_ok = false;
    result.stability_error = e.what();
    result.stability.residual = e.residual();
  }
}

DiskMesh extend_boundary(const DiskMesh& mesh, const Polyline& curve, double h, int window) {
  const std::size_t m = mesh.boundary_loop.size();
  if (curve.size() != m) throw DomainError("extend_boundary: curve and boundary loop differ in size");
  DiskMesh out = mesh;
  const int base = static_cast<int>(out.vertices.size());
  for (std::size_t j = 0; j < m; ++j) {
    const Complex p = curve.points[j];
    out.vertices.emplace_back(p.real(), p.imag(), h * boundary_scale(p, window));
  }
  for (int b : mesh.boundary_loop) out.fixed_mask[b] = 0;
  out.fixed_mask.resize(out.vertices.size(), 1);

  const int o0 = mesh.boundary_loop[0], o1 = mesh.boundary_loop[1];
  bool forward = false;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] == o0 && t[(k + 1) % 3] == o1) forward = true;
    }
  }
  std::vector<int> loop(m);
  for (std::size_t j = 0; j < m; ++j) {
    const int oj = mesh.boundary_loop[j], ok = mesh.boundary_loop[(j + 1) % m];
    const int nj = base + static_cast<int>(j), nk = base + static_cast<int>((j + 1) % m);
    if (forward) {
      out.triangles.push_back({ok, oj, nj});
      out.triangles.push_back({ok, nj, nk});
    } else {
      out.triangles.push_back({oj, ok, nk});
      out.triangles.push_back({oj, nk, nj});
    }
    loop[j] = nj;
  }
  out.boundary_loop = std::move(loop);
  return out;
}

std::vector<ContinuationStage> continuation_solve(const Polyline& curve, const SolveConfig& config) {
  config.validate();
  std::vector<double> schedule = config.h_schedule;
  if (schedule.empty()) schedule.push_back(config.h);
  std::vector<ContinuationStage> stages;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    SolveConfig cfg = config;
    cfg.h = schedule[k];
    DiskMesh start = k == 0 ? init_mesh(curve, cfg.h, cfg.rings, cfg.window)
                            : extend_boundary(stages.back().result.mesh, curve, cfg.h, cfg.window);
    ContinuationStage st{cfg.h, minimize(std::move(start), cfg), 0.0};
    if (k > 0) {
      const DiskMesh& prev = stages.back().result.mesh;
      for (std::size_t i = 0; i < prev.vertices.size(); ++i) {
        if (prev.fixed_mask[i]) continue;
        st.interior_drift = std::max(st.interior_drift, dist(prev.vertices[i], st.result.mesh.vertices[i]));
      }
    }
    stages.push_back(std::move(st));
  }
  return stages;
}

IotaAssignment IotaAssignment::parse(const std::string& digits, int window) {
  if (window < 0) throw ConfigError("iota: window must be non-negative");
  const std::size_t full = static_cast<std::size_t>(2 * window + 1);
  if (digits.empty() || digits.size() > full) throw ConfigError(fmt::format("iota '{}': expected 1..{} digits", digits, full));
  IotaAssignment out;
  out.window = window;
  out.values.assign(full, 0);
  for (std::size_t k = 0; k < digits.size(); ++k) {
    const char ch = digits[k];
    if (ch != '0' && ch != '1') throw ConfigError(fmt::format("iota '{}': digits must be 0 or 1", digits));
    const std::size_t slot = digits.size() == full ? k : static_cast<std::size_t>(window) + k;
    if (slot >= full) throw ConfigError(fmt::format("iota '{}': too many levels for window {}", digits, window));
    out.values[slot] = ch - '0';
  }
  return out;
}

std::string IotaAssignment::str() const {
  std::string s;
  for (int v : values) s.push_back(static_cast<char>('0' + v));
  return s;
}

MultiplicityResult multiplicity_experiment(const QuasicircleParams& q, int window,
                                           const std::vector<IotaAssignment>& assignments,
                                           const SolveConfig& config, int samples_per_piece) {
  q.validate();
  config.validate();
  if (window < 0) throw ConfigError("multiplicity: window must be non-negative");
  MultiplicityResult out;
  out.params = q;
  out.separation = max_separation();
  const Polyline curve = windowed_closure(q, window + 1, samples_per_piece);

  auto gate_barrier = [&](int n, int j) {
    const GatePair gp = gate_circles(n, j, q);
    return catenoid_for_planes(GeodesicPlane::circle(gp.c.center, gp.c.radius),
                               GeodesicPlane::circle(gp.c_prime.center, gp.c_prime.radius), Branch::Thick,
                               out.separation);
  };

  for (const auto& iota : assignments) {
    if (iota.window != window) throw ConfigError("multiplicity: assignment window mismatch");
    MultiplicityRun run;
    run.iota = iota;
    SolveConfig cfg = config;
    cfg.window = window + 1;
    cfg.barriers.clear();
    for (int n = -window; n <= window; ++n) {
      run.barriers.push_back(gate_barrier(n, iota.at(n)));
      cfg.barriers.push_back(run.barriers.back().solid);
    }
    run.result = minimize(init_mesh(curve, cfg.h, cfg.rings, cfg.window), cfg);
    run.clear_of_barriers = run.result.barrier_violations == 0;
    out.runs.push_back(std::move(run));
  }

  for (std::size_t a = 0; a < out.runs.size(); ++a) {
    for (std::size_t b = a + 1; b < out.runs.size(); ++b) {
      const auto& ra = out.runs[a];
      const auto& rb = out.runs[b];
      DistinctnessRow row{a, b, 0, 0.0, 0.0, {-1, -1}, {-1, -1}};
      for (int n = -window; n <= window; ++n) {
        if (ra.iota.at(n) != rb.iota.at(n)) {
          row.level = n;
          break;
        }
      }
      row.hausdorff = vertex_hausdorff(ra.result.mesh, rb.result.mesh);
      const std::size_t slot = static_cast<std::size_t>(row.level + window);
      row.neck_half_diameter = std::min(ra.barriers[slot].solid.profile().r0, rb.barriers[slot].solid.profile().r0);
      for (int j = 0; j < 2; ++j) {
        const CatenoidBarrier cb = gate_barrier(row.level, j);
        const std::vector<Vec3> probe = cb.solid.axis_probe(1.0, 513);
        try {
          row.parity_a[j] = mod2_intersections(ra.result.mesh, probe);
        } catch (const GeometryError&) {
        }
        try {
          row.parity_b[j] = mod2_intersections(rb.result.mesh, probe);
        } catch (const GeometryError&) {
        }
      }
      out.rows.push_back(row);
    }
  }
  return out;
}

double surface_gap(const DiskMesh& a, const DiskMesh& b, std::span<const Vec3> b_normals,
                   std::span<const Vec3> a_normals) {
  auto one_way = [](const DiskMesh& x, const DiskMesh& y, std::span<const Vec3> ny) {
    std::vector<double> gap(x.vertices.size(), 0.0);
    parallel_for(x.vertices.size(), [&](std::size_t i) {
      const PointH3& p = x.vertices[i];
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < y.vertices.size(); ++k) {
        const double d = dist(p, y.vertices[k]);
        if (d < bd) {
          bd = d;
          best = k;
        }
      }
      const LogResult lr = log_map(y.vertices[best], p);
      if (lr.coincident) return;
      const double zb = y.vertices[best].z();
      gap[i] = std::abs(lr.vec.v.dot(ny[best])) / (zb * zb);
    });
    return *std::max_element(gap.begin(), gap.end());
  };
  if (b_normals.size() != b.vertices.size() || a_normals.size() != a.vertices.size())
    throw DomainError("surface_gap: one normal per vertex required");
  return std::max(one_way(a, b, b_normals), one_way(b, a, a_normals));
}

TwoSidedResult two_sided_solve(const DiskMesh& reference, const SolveConfig& config, double offset) {
  config.validate();
  if (!(offset > 0.0)) throw ConfigError("two_sided_solve: offset must be positive");
  const CurvatureReport ref = principal_curvatures(reference);
  std::vector<Vec3> flow_normals = ref.normals;
  for (std::size_t i = 0; i < flow_normals.size(); ++i) {
    if (reference.fixed_mask[i]) flow_normals[i] = Vec3::Zero();
  }
  const auto nbrs = vertex_neighbors(reference);
  std::vector<std::vector<int>> cand(reference.vertices.size());
  for (std::size_t i = 0; i < cand.size(); ++i) {
    cand[i].push_back(static_cast<int>(i));
    for (int j : nbrs[i]) {
      cand[i].push_back(j);
      for (int k : nbrs[j]) cand[i].push_back(k);
    }
    std::sort(cand[i].begin(), cand[i].end());
    cand[i].erase(std::unique(cand[i].begin(), cand[i].end()), cand[i].end());
  }

  auto sided = [&](int side, double& gap) {
    SideConstraint sc{&reference, ref.normals, side, cand};
    const FlowedMesh start = flow_mesh(reference, flow_normals, side * offset);
    SolveResult r = minimize_impl(start.mesh, config, &sc);
    const std::vector<Vec3> rn = vertex_normals(r.mesh);
    gap = surface_gap(r.mesh, reference, ref.normals, rn);
    return r;
  };
  TwoSidedResult out;
  out.plus = sided(+1, out.gap_plus);
  out.minus = sided(-1, out.gap_minus);
  out.uniqueness_consistent = std::max(out.gap_plus, out.gap_minus) <= kTwoSidedTolerance;
  return out;
}

}  // namespace hyperplateau
