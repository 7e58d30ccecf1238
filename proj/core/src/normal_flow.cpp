#include "hyperplateau/normal_flow.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <Eigen/Geometry>

#include "hyperplateau/errors.hpp"
#include "hyperplateau/parallel.hpp"

namespace hyperplateau {

FlowedMesh flow_mesh(const DiskMesh& mesh, std::span<const Vec3> normals, double t) {
  if (normals.size() != mesh.vertices.size()) throw DomainError("flow_mesh: one normal per vertex required");
  FlowedMesh out{mesh, std::vector<Vec3>(normals.begin(), normals.end()),
                 std::vector<std::uint8_t>(mesh.vertices.size(), 0)};
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const PointH3& p = mesh.vertices[i];
    if (normals[i].norm() == 0.0) {
      out.frozen[i] = 1;
      continue;
    }
    if (t == 0.0) continue;
    const TangentVec n{p, normals[i]};
    const TangentVec vel = geodesic_velocity(p, n, t);
    out.mesh.vertices[i] = vel.base;
    out.normals[i] = vel.normalized().v;
  }
  return out;
}

double predicted_curvature(double lambda, double t) {
  const double th = std::tanh(t);
  const double den = 1.0 - lambda * th;
  if (std::abs(den) <= 1e-15) throw DomainError("predicted_curvature: pole at lambda tanh t = 1");
  return (lambda - th) / den;
}

CurvatureReport leaf_curvatures(const FlowedMesh& leaf) {
  CurvatureOptions opts;
  opts.orientation_field = leaf.normals;
  return principal_curvatures(leaf.mesh, opts);
}

CurvatureLawReport curvature_law_check(const DiskMesh& mesh, const CurvatureReport& base,
                                       std::span<const double> t_grid) {
  CurvatureLawReport rep;
  for (double t : t_grid) {
    CurvatureLawRow row;
    row.t = t;
    try {
      const FlowedMesh leaf = flow_mesh(mesh, base.normals, t);
      validate_mesh(leaf.mesh, euler_characteristic(mesh));
      const CurvatureReport cur = t == 0.0 ? base : leaf_curvatures(leaf);
      std::vector<double> res;
      for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        if (!base.interior[i] || !cur.valid[i] || leaf.frozen[i]) continue;
        res.push_back(std::abs(cur.k1[i] - predicted_curvature(base.k1[i], t)));
        res.push_back(std::abs(cur.k2[i] - predicted_curvature(base.k2[i], t)));
      }
      row.vertices = res.size() / 2;
      if (!res.empty()) {
        row.max_residual = *std::max_element(res.begin(), res.end());
        std::nth_element(res.begin(), res.begin() + res.size() / 2, res.end());
        row.median_residual = res[res.size() / 2];
      }
    } catch (const GeometryError&) {
      row.degenerate = true;
    }
    rep.max_residual = std::max(rep.max_residual, row.max_residual);
    rep.rows.push_back(row);
  }
  return rep;
}

namespace {

bool segment_hits_triangle(const Vec3& p0, const Vec3& p1, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 dir = p1 - p0;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) <= 1e-300) return false;
  const double inv = 1.0 / det;
  const Vec3 tv = p0 - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  const double s = e2.dot(qv) * inv;
  return s >= 0.0 && s <= 1.0;
}

bool triangles_intersect(const std::array<Vec3, 3>& x, const std::array<Vec3, 3>& y) {
  for (int k = 0; k < 3; ++k) {
    if (segment_hits_triangle(x[k], x[(k + 1) % 3], y[0], y[1], y[2])) return true;
    if (segment_hits_triangle(y[k], y[(k + 1) % 3], x[0], x[1], x[2])) return true;
  }
  return false;
}

struct Box {
  Vec3 lo, hi;
  int face;
};

std::vector<Box> face_boxes(const DiskMesh& m) {
  std::vector<Box> boxes;
  boxes.reserve(m.triangles.size());
  for (std::size_t f = 0; f < m.triangles.size(); ++f) {
    const auto& t = m.triangles[f];
    const Vec3 a = m.vertices[t[0]].vec(), b = m.vertices[t[1]].vec(), c = m.vertices[t[2]].vec();
    boxes.push_back({a.cwiseMin(b).cwiseMin(c), a.cwiseMax(b).cwiseMax(c), static_cast<int>(f)});
  }
  std::sort(boxes.begin(), boxes.end(), [](const Box& u, const Box& v) { return u.lo.x() < v.lo.x(); });
  return boxes;
}

}  // namespace

std::pair<int, int> find_intersection(const DiskMesh& a, const DiskMesh& b) {
  const auto ba = face_boxes(a);
  const auto bb = face_boxes(b);
  std::vector<std::pair<int, int>> hit(ba.size(), {-1, -1});
  parallel_for(ba.size(), [&](std::size_t i) {
    const Box& x = ba[i];
    const auto& tx = a.triangles[x.face];
    const std::array<Vec3, 3> px{a.vertices[tx[0]].vec(), a.vertices[tx[1]].vec(), a.vertices[tx[2]].vec()};
    // boxes of b are sorted by lo.x; scan those starting before x.hi.x
    const auto end = std::upper_bound(bb.begin(), bb.end(), x.hi.x(),
                                      [](double v, const Box& box) { return v < box.lo.x(); });
    for (auto it = bb.begin(); it != end; ++it) {
      if (it->hi.x() < x.lo.x()) continue;
      if ((it->lo.array() > x.hi.array()).any() || (it->hi.array() < x.lo.array()).any()) continue;
      const auto& ty = b.triangles[it->face];
      const std::array<Vec3, 3> py{b.vertices[ty[0]].vec(), b.vertices[ty[1]].vec(), b.vertices[ty[2]].vec()};
      if (triangles_intersect(px, py)) {
        hit[i] = {x.face, it->face};
        return;
      }
    }
  });
  for (const auto& h : hit) {
    if (h.first >= 0) return h;
  }
  return {-1, -1};
}

FoliationReport foliation_and_sign_check(const DiskMesh& mesh, const CurvatureReport& base,
                                         std::span<const double> t_grid) {
  FoliationReport rep;
  std::vector<double> ts(t_grid.begin(), t_grid.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<FlowedMesh> leaves;
  for (double t : ts) leaves.push_back(flow_mesh(mesh, base.normals, t));

  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) pairs.insert({k, k + 1});
  if (ts.size() > 2) pairs.insert({0, ts.size() - 1});
  for (const auto& [i, j] : pairs) {
    rep.pairs_checked.emplace_back(ts[i], ts[j]);
    if (!rep.disjoint) continue;
    const auto w = find_intersection(leaves[i].mesh, leaves[j].mesh);
    if (w.first >= 0) {
      rep.disjoint = false;
      rep.witness_t1 = ts[i];
      rep.witness_t2 = ts[j];
      rep.witness_face1 = w.first;
      rep.witness_face2 = w.second;
    }
  }

  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    const CurvatureReport cur = t == 0.0 ? base : leaf_curvatures(leaves[k]);
    FoliationRow row;
    row.t = t;
    std::size_t good = 0;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      if (!base.interior[i] || !cur.valid[i]) continue;
      ++row.vertices;
      row.max_abs_mean = std::max(row.max_abs_mean, std::abs(cur.mean[i]));
      const double h = cur.mean[i];
      if ((t > 0 && h < 0) || (t < 0 && h > 0)) ++good;
    }
    row.sign_fraction = row.vertices ? static_cast<double>(good) / row.vertices : 0.0;
    if (std::abs(t) >= 0.1) rep.min_sign_fraction = std::min(rep.min_sign_fraction, row.sign_fraction);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace hyperplateau
