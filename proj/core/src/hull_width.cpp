#include "hyperplateau/hull_width.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include "hyperplateau/errors.hpp"
#include "hyperplateau/parallel.hpp"

namespace hyperplateau {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHullTol = 1e-9;

double dot(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

// Largest disk empty of samples reached from a seed: grow away from the
// nearest sample until a second contact, then slide along the bisector of
// the two contacts until a third. Empty when the growth is unbounded.
std::optional<Circle> grow_disk(Complex c, const std::vector<Complex>& pts) {
  std::size_t i1 = 0;
  double r = kInf;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double d = std::abs(pts[k] - c);
    if (d < r) {
      r = d;
      i1 = k;
    }
  }
  if (!(r > 0.0)) return std::nullopt;
  const Complex s1 = pts[i1];
  const Complex u = (c - s1) / r;
  double tau = kInf;
  std::size_t i2 = i1;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k == i1) continue;
    const Complex cs = c - pts[k];
    const double den = 2.0 * (r - dot(u, cs));
    if (den <= 0.0) continue;
    const double t = (std::norm(cs) - r * r) / den;
    if (t < tau) {
      tau = t;
      i2 = k;
    }
  }
  if (!std::isfinite(tau)) return std::nullopt;
  Complex c1 = c + tau * u;
  const double r1 = r + tau;
  const Complex s2 = pts[i2];
  const Complex chord = s2 - s1;
  Complex v = Complex(-chord.imag(), chord.real()) / std::abs(chord);
  if (dot(v, c1 - s1) < 0.0) v = -v;
  const double scale = std::abs(chord);
  double tau2 = kInf;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (k == i1 || k == i2) continue;
    const double den = 2.0 * dot(v, pts[k] - s1);
    if (den <= 1e-15 * scale) continue;
    const double t = (std::norm(c1 - pts[k]) - r1 * r1) / den;
    tau2 = std::min(tau2, std::max(t, 0.0));
  }
  if (!std::isfinite(tau2)) return std::nullopt;
  const Complex c2 = c1 + tau2 * v;
  double rad = kInf;
  for (const Complex& p : pts) rad = std::min(rad, std::abs(p - c2));
  return Circle{c2, rad * (1.0 - kGrowthSlack)};
}

std::vector<Complex> seeds_inside(const Polyline& poly, int budget) {
  const auto& pts = poly.points;
  double xmin = kInf, xmax = -kInf, ymin = kInf, ymax = -kInf;
  for (const Complex& p : pts) {
    xmin = std::min(xmin, p.real());
    xmax = std::max(xmax, p.real());
    ymin = std::min(ymin, p.imag());
    ymax = std::max(ymax, p.imag());
  }
  std::vector<Complex> grid, offset;
  const int g = static_cast<int>(std::ceil(std::sqrt(2.0 * budget)));
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      const Complex w(xmin + (xmax - xmin) * (i + 0.5) / g, ymin + (ymax - ymin) * (j + 0.5) / g);
      if (point_in_polygon(w, poly)) grid.push_back(w);
    }
  }
  // Seeds just inside the curve so narrow corridors and junctions get disks.
  const std::size_t n = pts.size();
  const std::size_t stride = std::max<std::size_t>(1, n / static_cast<std::size_t>(std::max(budget, 1)));
  for (std::size_t k = 0; k < n; k += stride) {
    const Complex prev = pts[(k + n - 1) % n], next = pts[(k + 1) % n];
    const Complex t = next - prev;
    if (std::abs(t) == 0.0) continue;
    const Complex nrm = Complex(-t.imag(), t.real()) / std::abs(t);
    const double h = std::min(std::abs(next - pts[k]), std::abs(pts[k] - prev));
    for (double f : {1.0, 4.0}) {
      for (int sgn : {1, -1}) {
        const Complex w = pts[k] + static_cast<double>(sgn) * f * h * nrm;
        if (point_in_polygon(w, poly)) {
          offset.push_back(w);
          break;
        }
      }
    }
  }
  std::vector<Complex> out;
  std::size_t a = 0, b = 0;
  while (static_cast<int>(out.size()) < 4 * budget && (a < grid.size() || b < offset.size())) {
    if (a < grid.size()) out.push_back(grid[a++]);
    if (b < offset.size()) out.push_back(offset[b++]);
  }
  return out;
}

// Support disks for the bounded complementary region of a closed polyline,
// as planes oriented with the hull outside the hemisphere.
std::vector<Circle> region_disks(const Polyline& poly, int budget) {
  const std::vector<Complex> seeds = seeds_inside(poly, budget);
  std::vector<std::optional<Circle>> grown(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    auto c = grow_disk(seeds[i], poly.points);
    if (c && point_in_polygon(c->center, poly)) grown[i] = c;
  });
  std::vector<Circle> out;
  for (const auto& c : grown) {
    if (!c) continue;
    bool dup = false;
    for (const Circle& d : out) {
      if (std::abs(d.center - c->center) <= 1e-9 * d.radius && std::abs(d.radius - c->radius) <= 1e-9 * d.radius) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(*c);
    if (static_cast<int>(out.size()) >= budget) break;
  }
  return out;
}

SupportPlaneSet closed_support_planes(const Polyline& curve, int budget) {
  SupportPlaneSet set;
  const std::vector<Circle> plus = region_disks(curve, budget);
  if (plus.empty()) throw GeometryError("support_planes: no disk fits inside the curve");
  for (const Circle& c : plus) set.planes.push_back({GeodesicPlane::circle(c.center, c.radius, 1), HullSide::Plus});

  // Exterior through the inversion about the centre of the largest inner disk.
  const Circle deep = *std::max_element(plus.begin(), plus.end(),
                                        [](const Circle& a, const Circle& b) { return a.radius < b.radius; });
  const Mobius inv(0.0, 1.0, 1.0, -deep.center);  // w -> 1 / (w - c)
  const Mobius back = inv.inverse();
  Polyline image;
  image.closed = true;
  for (const Complex& p : curve.points) image.points.push_back(inv.apply(BoundaryPoint(p)).value());
  for (const Circle& c : region_disks(image, budget)) {
    set.planes.push_back({transport(back, GeodesicPlane::circle(c.center, c.radius, 1)), HullSide::Minus});
  }
  if (set.count(HullSide::Minus) == 0) throw GeometryError("support_planes: no disk fits outside the curve");
  return set;
}

struct ProbeBox {
  double xmin, xmax, ymin, ymax, zmin, zmax;
};

double width_at(const PointH3& p, const SupportPlaneSet& set) {
  double dp = kInf, dm = kInf;
  for (const auto& sp : set.planes) {
    const double d = plane_signed_distance(p, sp.plane);
    if (sp.side == HullSide::Plus) {
      dp = std::min(dp, d);
    } else {
      dm = std::min(dm, d);
    }
  }
  return dp + dm;
}

struct Level {
  double best = -kInf;
  PointH3 arg{0.0, 0.0, 1.0};
  std::vector<PointH3> probes;
};

Level run_level(const Polyline& curve, int probe_budget, int plane_budget, const ProbeBox& box) {
  const SupportPlaneSet set = support_planes(curve, plane_budget);
  std::mt19937_64 rng(0x5eedu);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, curve.size() - 1);
  std::vector<PointH3> cand;
  const int half = std::max(1, probe_budget / 2);
  for (int k = 0; k < half; ++k) {
    const Complex w1 = curve.points[pick(rng)], w2 = curve.points[pick(rng)];
    const Complex w3 = curve.points[pick(rng)], w4 = curve.points[pick(rng)];
    if (w1 == w2) continue;
    const Complex mid = 0.5 * (w1 + w2);
    const double rad = 0.5 * std::abs(w2 - w1);
    const double phi = std::numbers::pi * (0.05 + 0.9 * unit(rng));
    PointH3 p(mid.real() + rad * std::cos(phi) * (w2 - w1).real() / (2 * rad),
              mid.imag() + rad * std::cos(phi) * (w2 - w1).imag() / (2 * rad), rad * std::sin(phi));
    for (const Complex& w : {w3, w4}) {
      const double t = 2.0 * unit(rng);
      p = exp_map(p, direction_to_ideal(p, BoundaryPoint(w)), t);
    }
    cand.push_back(p);
  }
  for (int k = 0; k < half; ++k) {
    const double x = box.xmin + (box.xmax - box.xmin) * unit(rng);
    const double y = box.ymin + (box.ymax - box.ymin) * unit(rng);
    const double z = box.zmin * std::pow(box.zmax / box.zmin, unit(rng));
    cand.emplace_back(x, y, z);
  }
  std::vector<double> val(cand.size(), -kInf);
  parallel_for(cand.size(), [&](std::size_t i) {
    const PointH3& p = cand[i];
    if (p.z() < box.zmin || p.z() > box.zmax) return;
    if (hull_margin(p, set) < -kHullTol) return;
    val[i] = width_at(p, set);
  });
  Level lv;
  for (std::size_t i = 0; i < cand.size(); ++i) {
    if (val[i] == -kInf) continue;
    lv.probes.push_back(cand[i]);
    if (val[i] > lv.best) {
      lv.best = val[i];
      lv.arg = cand[i];
    }
  }
  if (lv.probes.empty()) throw GeometryError("width_estimate: no probe accepted");

  double r = 0.25;
  for (int round = 0; round < 3; ++round, r /= 4.0) {
    const PointH3 c = lv.arg;
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        for (int k = -1; k <= 1; ++k) {
          if (i == 0 && j == 0 && k == 0) continue;
          const TangentVec v = TangentVec{c, Vec3(i, j, k) * c.z()}.normalized();
          const PointH3 p = exp_map(c, v, r);
          if (hull_margin(p, set) < -kHullTol) continue;
          const double w = width_at(p, set);
          if (w > lv.best) {
            lv.best = w;
            lv.arg = p;
          }
        }
      }
    }
  }
  return lv;
}

}  // namespace

std::size_t SupportPlaneSet::count(HullSide side) const {
  return static_cast<std::size_t>(
      std::count_if(planes.begin(), planes.end(), [side](const SupportPlane& p) { return p.side == side; }));
}

SupportPlaneSet support_planes(const Polyline& curve, int budget, std::string curve_id) {
  if (budget < 1) throw DomainError("support_planes: budget must be positive");
  if (curve.size() < 3) throw GeometryError("support_planes: degenerate curve");
  SupportPlaneSet set;
  if (curve.closed) {
    set = closed_support_planes(curve, budget);
  } else {
    // Close through infinity: w -> 1/(w - c) with c off the curve.
    const std::size_t mid = curve.size() / 2;
    const Complex t = curve.points[mid + 1] - curve.points[mid - 1];
    const Complex c = curve.points[mid] + Complex(-t.imag(), t.real()) / std::abs(t) *
                                              (0.25 * std::abs(curve.points.back() - curve.points.front()));
    const Mobius m(0.0, 1.0, 1.0, -c);
    Polyline image;
    image.closed = true;
    for (const Complex& p : curve.points) image.points.push_back(m.apply(BoundaryPoint(p)).value());
    image.points.push_back(0.0);
    const SupportPlaneSet img = closed_support_planes(image, budget);
    const Mobius back = m.inverse();
    for (const auto& sp : img.planes) set.planes.push_back({transport(back, sp.plane), sp.side});
  }
  set.curve_id = std::move(curve_id);
  return set;
}

double hull_margin(const PointH3& p, const SupportPlaneSet& set) {
  double m = kInf;
  for (const auto& sp : set.planes) m = std::min(m, plane_signed_distance(p, sp.plane));
  return m;
}

double hull_boundary_distance(const PointH3& p, const SupportPlaneSet& set, HullSide side) {
  if (hull_margin(p, set) < -kHullTol) throw GeometryError("not in hull");
  double d = kInf;
  for (const auto& sp : set.planes) {
    if (sp.side == side) d = std::min(d, plane_signed_distance(p, sp.plane));
  }
  return std::max(d, 0.0);
}

WidthEstimate width_estimate(const Polyline& curve, int probe_budget, int plane_budget, double z_min_rel) {
  if (probe_budget < 2 || plane_budget < 2) throw DomainError("width_estimate: budgets must be at least 2");
  if (!(z_min_rel > 0.0)) throw DomainError("width_estimate: z_min_rel must be positive");
  ProbeBox box{kInf, -kInf, kInf, -kInf, 0.0, 0.0};
  for (const Complex& p : curve.points) {
    box.xmin = std::min(box.xmin, p.real());
    box.xmax = std::max(box.xmax, p.real());
    box.ymin = std::min(box.ymin, p.imag());
    box.ymax = std::max(box.ymax, p.imag());
  }
  const double diam = std::hypot(box.xmax - box.xmin, box.ymax - box.ymin);
  box.zmin = z_min_rel * diam;
  box.zmax = diam;
  const Level coarse = run_level(curve, probe_budget / 2, plane_budget / 2, box);
  const Level full = run_level(curve, probe_budget, plane_budget, box);
  WidthEstimate out;
  out.best = std::max(full.best, 0.0);
  out.coarse = std::max(coarse.best, 0.0);
  out.spread = std::abs(out.best - out.coarse);
  out.maximizer = full.arg;
  out.probes_accepted = full.probes.size();
  out.probe_budget = probe_budget;
  out.plane_budget = plane_budget;
  out.probes = full.probes;
  return out;
}

double small_curvature_width_bound(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw DomainError("small_curvature_width_bound: eps must lie in (0, 1]");
  return 2.0 * std::atanh(1.0 - eps);
}

double probe_surface_distance(const PointH3& x, const DiskMesh& mesh, std::span<const Vec3> normals,
                              std::span<const int> dist_from_fixed) {
  std::size_t best = 0;
  double bd = kInf;
  for (std::size_t k = 0; k < mesh.vertices.size(); ++k) {
    const double d = dist(x, mesh.vertices[k]);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  if (dist_from_fixed[best] < 2) return -1.0;
  const LogResult lr = log_map(mesh.vertices[best], x);
  if (lr.coincident) return 0.0;
  const double z = mesh.vertices[best].z();
  const double normal = std::abs(lr.vec.v.dot(normals[best])) / (z * z);

  // x must project into the star of its nearest vertex.
  double reach = 0.0;
  const int b = static_cast<int>(best);
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] != b) continue;
      reach = std::max({reach, dist(mesh.vertices[b], mesh.vertices[t[(k + 1) % 3]]),
                        dist(mesh.vertices[b], mesh.vertices[t[(k + 2) % 3]])});
    }
  }
  const double len = lr.vec.v.norm() / z;
  const double tangential = std::sqrt(std::max(0.0, len * len - normal * normal));
  if (tangential > reach) return -1.0;
  return normal;
}

ProbeCheck probe_distance_check(const WidthEstimate& w, const SupportPlaneSet& set, const DiskMesh& mesh,
                                std::span<const Vec3> normals) {
  ProbeCheck out;
  double zb = 0.0;
  for (int b : mesh.boundary_loop) {
    out.boundary_excess = std::max(out.boundary_excess, -hull_margin(mesh.vertices[b], set));
    zb = std::max(zb, mesh.vertices[b].z());
  }
  const auto dfix = distance_from_fixed(mesh);
  out.worst_margin = -kInf;
  for (const auto& x : w.probes) {
    const double d = probe_surface_distance(x, mesh, normals, dfix);
    if (d < 0.0) continue;
    ++out.checked;
    out.max_distance = std::max(out.max_distance, d);
    const double limit = w.best + w.spread + out.boundary_excess * std::min(1.0, zb / x.z());
    out.worst_margin = std::max(out.worst_margin, d - limit);
  }
  out.pass = out.checked > 0 && out.worst_margin <= 0.0;
  return out;
}

}  // namespace hyperplateau
