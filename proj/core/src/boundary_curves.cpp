#include "hyperplateau/boundary_curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "hyperplateau/errors.hpp"

namespace hyperplateau {

namespace {

constexpr double kPi = std::numbers::pi;

Complex mirror(Complex w) { return -std::conj(w); }

Complex scale2(Complex w, int n) { return {std::ldexp(w.real(), n), std::ldexp(w.imag(), n)}; }

// f on the fundamental window u in [1, 2).
Complex fundamental(double u, const QuasicircleParams& q) {
  const double a = kPi / 2.0 - q.delta;
  if (u <= 1.25) {
    const double v = (u - 1.0) * 4.0;
    return std::polar(1.0 - q.eps, a * (2.0 * v - 1.0));
  }
  if (u <= 1.5) {
    const double v = (u - 1.25) * 4.0;
    return std::polar((1.0 - q.eps) + v * 2.0 * q.eps, a);
  }
  if (u <= 1.75) {
    const double v = (u - 1.5) * 4.0;
    return std::polar(1.0 + q.eps, a * (1.0 - 2.0 * v));
  }
  const double v = (u - 1.75) * 4.0;
  return std::polar((1.0 + q.eps) + v * (1.0 - 3.0 * q.eps), -a);
}

double wrap_angle(double t) {
  t = std::fmod(t, 2.0 * kPi);
  if (t < 0) t += 2.0 * kPi;
  return t;
}

double segment_distance(Complex w, Complex a, Complex b) {
  const Complex ab = b - a;
  const double len2 = std::norm(ab);
  double t = len2 > 0 ? ((w - a) * std::conj(ab)).real() / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(w - (a + t * ab));
}

void push_unique(Polyline& out, Complex w, double s) {
  if (!out.points.empty()) {
    const Complex last = out.points.back();
    if (std::abs(w - last) <= 1e-15 * std::max(1.0, std::abs(w))) return;
  }
  out.points.push_back(w);
  out.params.push_back(s);
}

}  // namespace

void QuasicircleParams::validate() const {
  if (!(eps > 0.0 && eps < 1.0 / 3.0)) throw DomainError("quasicircle: eps must lie in (0, 1/3)");
  if (!(delta > 0.0 && delta < kPi / 8.0)) {
    throw DomainError("quasicircle: delta must lie in (0, pi/8)");
  }
}

BoundaryPoint eval_f(double s, const QuasicircleParams& q) {
  q.validate();
  if (std::isnan(s)) throw DomainError("eval_f: NaN parameter");
  if (std::isinf(s)) return BoundaryPoint::infinity();
  if (s == 0.0) return Complex(0.0, 0.0);
  if (s < 0.0) return mirror(eval_f(-s, q).value());
  int e = 0;
  const double m = std::frexp(s, &e);  // s = m 2^e, m in [1/2, 1)
  return scale2(fundamental(2.0 * m, q), e - 1);
}

Complex junction_p(int n, int sign_re, int sign_im, const QuasicircleParams& q) {
  const double a = kPi / 2.0 - q.delta;
  Complex w = std::polar(1.0 - q.eps, sign_im > 0 ? a : -a);
  if (sign_re < 0) w = mirror(w);
  return scale2(w, n);
}

Complex junction_q(int n, int sign_re, int sign_im, const QuasicircleParams& q) {
  const double a = kPi / 2.0 - q.delta;
  Complex w = std::polar(1.0 + q.eps, sign_im > 0 ? a : -a);
  if (sign_re < 0) w = mirror(w);
  return scale2(w, n);
}

Complex CurvePiece::at(double s) const {
  const double v = (s - s0) / (s1 - s0);
  if (is_arc) return std::polar(radius, angle0 + (angle1 - angle0) * v);
  return a + (b - a) * v;
}

double CurvePiece::distance_to(Complex w) const {
  if (!is_arc) return segment_distance(w, a, b);
  const double lo = std::min(angle0, angle1);
  const double hi = std::max(angle0, angle1);
  const double rel = wrap_angle(std::arg(w) - lo);
  if (rel <= hi - lo) return std::abs(std::abs(w) - radius);
  return std::min(std::abs(w - std::polar(radius, angle0)), std::abs(w - std::polar(radius, angle1)));
}

std::vector<CurvePiece> level_pieces(int n, const QuasicircleParams& q) {
  q.validate();
  const double a = kPi / 2.0 - q.delta;
  const double base = std::ldexp(1.0, n);
  const double r_in = base * (1.0 - q.eps);
  const double r_out = base * (1.0 + q.eps);
  std::vector<CurvePiece> pos;
  pos.push_back({true, r_in, -a, a, {}, {}, base, base * 1.25});
  pos.push_back({false, 0, 0, 0, std::polar(r_in, a), std::polar(r_out, a), base * 1.25, base * 1.5});
  pos.push_back({true, r_out, a, -a, {}, {}, base * 1.5, base * 1.75});
  pos.push_back({false, 0, 0, 0, std::polar(r_out, -a), std::polar(2.0 * r_in, -a), base * 1.75,
                 base * 2.0});
  std::vector<CurvePiece> out = pos;
  for (const auto& p : pos) {
    CurvePiece m = p;
    m.s0 = -p.s1;
    m.s1 = -p.s0;
    if (p.is_arc) {
      // mirror maps angle t to pi - t; traversal in s is reversed as well
      m.angle0 = kPi - p.angle1;
      m.angle1 = kPi - p.angle0;
    } else {
      m.a = mirror(p.b);
      m.b = mirror(p.a);
    }
    out.push_back(m);
  }
  return out;
}

Polyline sample_quasicircle(const QuasicircleParams& q, int n_min, int n_max, int per_piece) {
  q.validate();
  if (per_piece < 1 || n_max < n_min) throw DomainError("sample_quasicircle: bad resolution");
  std::vector<double> ss;
  for (int n = n_min; n <= n_max; ++n) {
    for (int k = 0; k < 4 * per_piece; ++k) {
      ss.push_back(std::ldexp(1.0 + 0.25 * k / per_piece, n));
    }
  }
  ss.push_back(std::ldexp(1.0, n_max + 1));
  Polyline out;
  out.closed = false;
  for (auto it = ss.rbegin(); it != ss.rend(); ++it) {
    out.points.push_back(eval_f(-*it, q).value());
    out.params.push_back(-*it);
  }
  out.points.push_back(0.0);
  out.params.push_back(0.0);
  for (double s : ss) {
    out.points.push_back(eval_f(s, q).value());
    out.params.push_back(s);
  }
  return out;
}

double gate_clearance(const Circle& c, int n, const QuasicircleParams& q) {
  double best = std::abs(c.center) - c.radius;  // the curve passes through 0
  for (int m = n - 2; m <= n + 2; ++m) {
    for (const auto& piece : level_pieces(m, q)) {
      best = std::min(best, piece.distance_to(c.center) - c.radius);
    }
  }
  return best;
}

GatePair gate_circles(int n, int j, const QuasicircleParams& q) {
  q.validate();
  if (j != 0 && j != 1) throw DomainError("gate_circles: j must be 0 or 1");
  Circle c0, c1;
  if (j == 0) {
    const double off = 2.0 * q.eps + (1.0 + q.eps) / 100.0;
    c0 = {1.0 - off, 0.01};
    c1 = {1.0 + off, 0.01};
  } else {
    const double tilt = q.delta + (1.0 + q.delta) * q.eps;
    const double r = q.eps * kCorridorGateShrink;
    c0 = {std::polar(1.0, kPi / 2.0 - tilt), r};
    c1 = {std::polar(1.0, kPi / 2.0 + tilt), r};
  }
  GatePair g{n, j, {scale2(c0.center, n), std::ldexp(c0.radius, n)},
             {scale2(c1.center, n), std::ldexp(c1.radius, n)}};
  if (gate_clearance(g.c, n, q) <= 0.0 || gate_clearance(g.c_prime, n, q) <= 0.0) {
    throw GeometryError(fmt::format("invalid gate: C_({},{}) meets the curve (eps={}, delta={})", n,
                                    j, q.eps, q.delta));
  }
  if (std::abs(g.c.center - g.c_prime.center) <= g.c.radius + g.c_prime.radius) {
    throw GeometryError("invalid gate: circle pair overlaps");
  }
  return g;
}

double gate_plane_distance(const GatePair& g) {
  return plane_plane_distance(GeodesicPlane::circle(g.c.center, g.c.radius),
                              GeodesicPlane::circle(g.c_prime.center, g.c_prime.radius))
      .value;
}

QuasicircleParams admissible_parameters(double d_max) {
  if (!(d_max > 0.0)) throw DomainError("admissible_parameters: d_max must be positive");
  const double bound = 0.9 * d_max;
  auto distance_ok = [&](const QuasicircleParams& q, int j) {
    try {
      return gate_plane_distance(gate_circles(0, j, q)) <= bound;
    } catch (const GeometryError&) {
      return false;
    }
  };
  for (int k = 2; k <= 40; ++k) {
    const double eps = std::ldexp(1.0, -k);
    if (!distance_ok({eps, eps / 1024.0}, 0)) continue;
    for (int kd = 2; kd <= 60; ++kd) {
      const QuasicircleParams q{eps, std::ldexp(1.0, -kd)};
      if (distance_ok(q, 1) && distance_ok(q, 0)) return q;
    }
    break;
  }
  throw GeometryError("admissible_parameters: dyadic search exhausted");
}

Polyline windowed_closure(const QuasicircleParams& q, int window, int per_piece) {
  q.validate();
  if (window < 1) throw DomainError("windowed_closure: window must be >= 1");
  if (per_piece < 2) throw DomainError("windowed_closure: need >= 2 samples per piece");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double a = kPi / 2.0 - q.delta;
  const double r_in = std::ldexp(1.0 - 2.0 * q.eps, -window);
  const double r_out = std::ldexp(1.0 + 2.0 * q.eps, window);
  const int cap_pts = std::max(3, per_piece / 4);

  // Right half: inner radial, f on [2^-N, 1.75 2^N], outer radial.
  Polyline right;
  const int radial_pts = std::max(2, per_piece / 8);
  const double r_first = std::ldexp(1.0 - q.eps, -window);
  for (int k = 0; k < radial_pts; ++k) {
    const double r = r_in + (r_first - r_in) * k / radial_pts;
    push_unique(right, std::polar(r, -a), nan);
  }
  for (int n = -window; n <= window; ++n) {
    const int pieces = n == window ? 3 : 4;
    for (int k = 0; k < pieces * per_piece; ++k) {
      const double s = std::ldexp(1.0 + 0.25 * k / per_piece, n);
      push_unique(right, eval_f(s, q).value(), s);
    }
  }
  const double s_last = std::ldexp(1.75, window);
  push_unique(right, eval_f(s_last, q).value(), s_last);
  const double r_last = std::ldexp(1.0 + q.eps, window);
  for (int k = 1; k <= radial_pts; ++k) {
    const double r = r_last + (r_out - r_last) * k / radial_pts;
    push_unique(right, std::polar(r, -a), nan);
  }

  Polyline out;
  out.closed = true;
  // inner cap interior points, from the left radial over to the right one
  for (int k = 1; k < cap_pts - 1; ++k) {
    const double t = -kPi / 2.0 - q.delta + 2.0 * q.delta * k / (cap_pts - 1);
    push_unique(out, std::polar(r_in, t), nan);
  }
  for (std::size_t i = 0; i < right.size(); ++i) push_unique(out, right.points[i], right.params[i]);
  for (int k = 1; k < cap_pts - 1; ++k) {
    const double t = -kPi / 2.0 + q.delta - 2.0 * q.delta * k / (cap_pts - 1);
    push_unique(out, std::polar(r_out, t), nan);
  }
  for (std::size_t i = right.size(); i-- > 0;) {
    push_unique(out, mirror(right.points[i]), -right.params[i]);
  }
  return out;
}

Polyline round_circle(Complex center, double radius, int samples) {
  if (!(radius > 0.0) || samples < 3) throw DomainError("round_circle: bad parameters");
  Polyline out;
  out.closed = true;
  for (int k = 0; k < samples; ++k) {
    const double t = 2.0 * kPi * k / samples;
    out.points.push_back(center + std::polar(radius, t));
    out.params.push_back(t);
  }
  return out;
}

Polyline ellipse(Complex center, double a, double b, int samples) {
  if (!(a > 0.0 && b > 0.0) || samples < 3) throw DomainError("ellipse: bad parameters");
  Polyline out;
  out.closed = true;
  for (int k = 0; k < samples; ++k) {
    const double t = 2.0 * kPi * k / samples;
    out.points.push_back(center + Complex(a * std::cos(t), b * std::sin(t)));
    out.params.push_back(t);
  }
  return out;
}

Polyline sample_curve(const CurveSpec& spec, int resolution) {
  return std::visit(
      [&](const auto& c) -> Polyline {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, RoundCircle>) {
          return round_circle(c.center, c.radius, resolution);
        } else if constexpr (std::is_same_v<T, LineCurve>) {
          Polyline out;
          out.closed = false;
          const Complex dir = std::polar(1.0, c.angle);
          for (int k = -resolution; k <= resolution; ++k) {
            const double s = static_cast<double>(k) / resolution;
            out.points.push_back(s * dir);
            out.params.push_back(s);
          }
          return out;
        } else if constexpr (std::is_same_v<T, PaperQuasicircle>) {
          return sample_quasicircle(c.params, -4, 3, resolution);
        } else if constexpr (std::is_same_v<T, WindowedClosure>) {
          return windowed_closure(c.params, c.window, resolution);
        } else {
          return c;
        }
      },
      spec);
}

double distance_to_polyline(Complex w, const Polyline& curve) {
  const std::size_t m = curve.size();
  if (m == 0) throw DomainError("distance_to_polyline: empty curve");
  if (m == 1) return std::abs(w - curve.points[0]);
  double best = std::numeric_limits<double>::infinity();
  const std::size_t segs = curve.closed ? m : m - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    best = std::min(best, segment_distance(w, curve.points[i], curve.points[(i + 1) % m]));
  }
  return best;
}

bool point_in_polygon(Complex w, const Polyline& curve) {
  bool inside = false;
  const std::size_t m = curve.size();
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Complex a = curve.points[i];
    const Complex b = curve.points[j];
    if ((a.imag() > w.imag()) != (b.imag() > w.imag())) {
      const double x = (b.real() - a.real()) * (w.imag() - a.imag()) / (b.imag() - a.imag()) + a.real();
      if (w.real() < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

double orient(Complex a, Complex b, Complex c) { return ((b - a) * std::conj(c - a)).imag() * -1.0; }

bool segments_cross(Complex p1, Complex p2, Complex q1, Complex q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  auto on_seg = [](Complex a, Complex b, Complex c) {
    return std::min(a.real(), b.real()) <= c.real() && c.real() <= std::max(a.real(), b.real()) &&
           std::min(a.imag(), b.imag()) <= c.imag() && c.imag() <= std::max(a.imag(), b.imag());
  };
  if (d1 == 0 && on_seg(q1, q2, p1)) return true;
  if (d2 == 0 && on_seg(q1, q2, p2)) return true;
  if (d3 == 0 && on_seg(p1, p2, q1)) return true;
  if (d4 == 0 && on_seg(p1, p2, q2)) return true;
  return false;
}

}  // namespace

bool is_simple(const Polyline& curve) {
  const std::size_t m = curve.size();
  if (m < 3) return false;
  const std::size_t segs = curve.closed ? m : m - 1;
  struct Seg {
    double xmin, xmax, ymin, ymax;
    std::size_t i;
  };
  std::vector<Seg> s(segs);
  for (std::size_t i = 0; i < segs; ++i) {
    const Complex a = curve.points[i];
    const Complex b = curve.points[(i + 1) % m];
    s[i] = {std::min(a.real(), b.real()), std::max(a.real(), b.real()), std::min(a.imag(), b.imag()),
            std::max(a.imag(), b.imag()), i};
  }
  std::sort(s.begin(), s.end(), [](const Seg& u, const Seg& v) { return u.xmin < v.xmin; });
  for (std::size_t u = 0; u < segs; ++u) {
    for (std::size_t v = u + 1; v < segs && s[v].xmin <= s[u].xmax; ++v) {
      if (s[v].ymin > s[u].ymax || s[u].ymin > s[v].ymax) continue;
      const std::size_t i = s[u].i;
      const std::size_t j = s[v].i;
      const std::size_t gap = i > j ? i - j : j - i;
      if (gap == 1 || (curve.closed && gap == segs - 1)) continue;  // neighbours share a vertex
      if (segments_cross(curve.points[i], curve.points[(i + 1) % m], curve.points[j],
                         curve.points[(j + 1) % m])) {
        return false;
      }
    }
  }
  return true;
}

double circle_clearance(const Circle& c, const Polyline& curve) {
  return distance_to_polyline(c.center, curve) - c.radius;
}

double ahlfors_constant(std::span<const Complex> z, bool closed) {
  const std::size_t m = z.size();
  if (m < 3) throw DomainError("ahlfors_constant: need at least 3 samples");
  for (std::size_t i = 0; i + 1 < m; ++i) {
    if (z[i] == z[i + 1]) throw DomainError("ahlfors_constant: coincident adjacent samples");
  }
  if (closed && z[m - 1] == z[0]) throw DomainError("ahlfors_constant: coincident adjacent samples");

  double best = 1.0;
  if (!closed) {
    for (std::size_t i = 0; i < m; ++i) {
      double run = 0.0;
      for (std::size_t j = i + 1; j < m; ++j) {
        const double d = std::abs(z[j] - z[i]);
        run = std::max(run, d);
        best = std::max(best, run / d);
      }
    }
    for (std::size_t j = m; j-- > 0;) {
      double run = 0.0;
      for (std::size_t i = j; i-- > 0;) {
        const double d = std::abs(z[j] - z[i]);
        run = std::max(run, d);
        best = std::max(best, run / d);
      }
    }
    return best;
  }

  if (m > 4096) throw DomainError("ahlfors_constant: closed curves are capped at 4096 samples");
  // g[i*m + j]: max of |z_k - z_anchor| over the forward arc i -> j, both anchors.
  std::vector<float> g(m * m, 0.0f);
  for (std::size_t i = 0; i < m; ++i) {
    double run = 0.0;
    for (std::size_t step = 1; step < m; ++step) {
      const std::size_t j = (i + step) % m;
      run = std::max(run, std::abs(z[j] - z[i]));
      g[i * m + j] = static_cast<float>(run);
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    // backward scan from anchor j covers the forward arcs i -> j
    double run = 0.0;
    for (std::size_t step = 1; step < m; ++step) {
      const std::size_t i = (j + m - step) % m;
      run = std::max(run, std::abs(z[j] - z[i]));
      float& cell = g[i * m + j];
      cell = std::max(cell, static_cast<float>(run));
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = std::abs(z[j] - z[i]);
      const double arc = std::min(g[i * m + j], g[j * m + i]);
      best = std::max(best, arc / d);
    }
  }
  return best;
}

std::string curve_csv(const Polyline& curve, bool include_infinity) {
  std::string out = "s,re,im\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const double s = i < curve.params.size() ? curve.params[i] : std::numeric_limits<double>::quiet_NaN();
    out += fmt::format("{:.17g},{:.17g},{:.17g}\n", s, curve.points[i].real(), curve.points[i].imag());
  }
  if (include_infinity) out += "inf,inf,inf\n";
  return out;
}

}  // namespace hyperplateau
