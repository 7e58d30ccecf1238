#pragma once

// Jordan curves on the ideal boundary, with emphasis on the dyadically
// self-similar quasicircle built from arcs of radius 2^n(1 -+ eps) joined by
// short radial segments, and on the gate circles whose catenoids act as
// barriers for minimal disks spanning it.

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hyperplateau/h3core.hpp"

namespace hyperplateau {

// Parameters of the quasicircle: 0 < eps < 1/3, 0 < delta < pi/8.
struct QuasicircleParams {
  double eps;
  double delta;

  void validate() const;  // throws DomainError
};

struct Polyline {
  std::vector<Complex> points;
  bool closed = true;
  // Curve parameter of each point when known (NaN otherwise); used for export.
  std::vector<double> params;

  std::size_t size() const noexcept { return points.size(); }
};

struct RoundCircle {
  Complex center;
  double radius;
};
struct LineCurve {
  double angle;  // line through the origin
};
struct PaperQuasicircle {
  QuasicircleParams params;
};
struct WindowedClosure {
  QuasicircleParams params;
  int window;
};

using CurveSpec = std::variant<RoundCircle, LineCurve, PaperQuasicircle, WindowedClosure, Polyline>;

// --- the quasicircle f ---------------------------------------------------

// f(s) for real s; s = +-inf gives the point at infinity. On the fundamental
// window s in [1, 2) the curve runs along four pieces (inner arc, radial
// segment, outer arc, radial segment) parameterized affinely in s, and is
// extended by f(2s) = 2 f(s), f(-s) = -conj(f(s)), f(0) = 0.
BoundaryPoint eval_f(double s, const QuasicircleParams& q);

// Junction points p^n_{s1,s2} (radius 2^n(1-eps)) and q^n_{s1,s2} (2^n(1+eps)).
Complex junction_p(int n, int sign_re, int sign_im, const QuasicircleParams& q);
Complex junction_q(int n, int sign_re, int sign_im, const QuasicircleParams& q);

// One smooth piece of f: an arc centred at the origin or a straight segment.
struct CurvePiece {
  bool is_arc;
  double radius;  // arcs
  double angle0, angle1;
  Complex a, b;  // segments
  double s0, s1;  // parameter range

  Complex at(double s) const;
  double distance_to(Complex w) const;
};

// The pieces covering |s| in [2^n, 2^{n+1}] for both signs of s.
std::vector<CurvePiece> level_pieces(int n, const QuasicircleParams& q);

// Samples of f over signed parameters +-[2^{n_min}, 2^{n_max+1}] plus s = 0,
// ordered by s. `per_piece` samples per smooth piece (endpoints shared).
Polyline sample_quasicircle(const QuasicircleParams& q, int n_min, int n_max, int per_piece);

// --- gate circles --------------------------------------------------------

// C_{1,n} radius factor: the printed radius 2^n eps makes C_{n,1} tangent to
// both arcs of its corridor, so the module shrinks it by this factor.
inline constexpr double kCorridorGateShrink = 0.95;

struct GatePair {
  int n;
  int j;
  Circle c;
  Circle c_prime;
};

// Throws GeometryError("invalid gate") if either circle meets the curve.
GatePair gate_circles(int n, int j, const QuasicircleParams& q);

// Distance between the planes spanned by the two circles of a gate pair.
double gate_plane_distance(const GatePair& g);

// Minimum distance from a circle (as a closed disk) to the curve near level n.
double gate_clearance(const Circle& c, int n, const QuasicircleParams& q);

// Largest dyadic eps, then delta, whose gate pairs have plane distance at
// most 0.9 d_max. Throws GeometryError when the search is exhausted.
QuasicircleParams admissible_parameters(double d_max);

// --- curves as polylines -------------------------------------------------

// Closed approximation agreeing with f for s in [2^-N, 1.75 * 2^N], capped by
// short arcs at radii 2^-N(1-2eps) and 2^N(1+2eps) across the wedge around
// the negative imaginary axis.
Polyline windowed_closure(const QuasicircleParams& q, int window, int per_piece);

Polyline round_circle(Complex center, double radius, int samples);
Polyline ellipse(Complex center, double a, double b, int samples);

// Polyline for any CurveSpec; `resolution` is samples (circle) or samples
// per piece (quasicircle variants).
Polyline sample_curve(const CurveSpec& spec, int resolution);

// --- polyline geometry ---------------------------------------------------

double distance_to_polyline(Complex w, const Polyline& curve);
bool point_in_polygon(Complex w, const Polyline& curve);
// Pairwise segment test; O(M^2) with bounding-box pruning.
bool is_simple(const Polyline& curve);
// Minimum distance from the curve to a closed disk (negative when they meet).
double circle_clearance(const Circle& c, const Polyline& curve);

// Max over sampled triples of |z3 - z1| / |z2 - z1| with z3 on the arc
// between z1 and z2 (both endpoints act as anchor). Closed curves use the
// arc giving the smaller ratio. Throws DomainError on coincident neighbours.
double ahlfors_constant(std::span<const Complex> samples, bool closed);

// --- export --------------------------------------------------------------

// CSV with header "s,re,im"; the point at infinity is the row "inf,inf,inf".
std::string curve_csv(const Polyline& curve, bool include_infinity);

}  // namespace hyperplateau
