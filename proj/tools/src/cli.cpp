#include "hyperplateau_cli/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hyperplateau/boundary_curves.hpp"
#include "hyperplateau/catenoid.hpp"
#include "hyperplateau/errors.hpp"
#include "hyperplateau/hull_width.hpp"
#include "hyperplateau/mesh_surface.hpp"
#include "hyperplateau/normal_flow.hpp"
#include "hyperplateau/plateau.hpp"
#include "hyperplateau_cli/reports.hpp"

namespace hyperplateau::cli {

namespace fs = std::filesystem;

namespace {

// --- configuration -----------------------------------------------------------

enum class Kind { Int, Real, RealOrAuto, Bool, RealList, StrList, Str, Choice };

struct Param {
  std::string key;
  Kind kind;
  Json def;
  std::string help;
  std::vector<std::string> choices = {};
};

std::string flag_name(const std::string& key) {
  if (key == "h") return "--height";  // -h is help
  std::string f = "--" + key;
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return f;
}

double parse_real(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, s));
  }
  if (used != s.size() || !std::isfinite(v)) throw ConfigError(fmt::format("{}: '{}' is not a finite number", key, s));
  return v;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, ',')) parts.push_back(cur);
  return parts;
}

Json from_text(const Param& p, const std::string& s) {
  switch (p.kind) {
    case Kind::Int: {
      const double v = parse_real(p.key, s);
      if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(fmt::format("{}: '{}' is not an integer", p.key, s));
      return static_cast<int>(v);
    }
    case Kind::Real:
      return parse_real(p.key, s);
    case Kind::RealOrAuto:
      if (s == "auto") return "auto";
      return parse_real(p.key, s);
    case Kind::Bool:
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      throw ConfigError(fmt::format("{}: '{}' is not a boolean", p.key, s));
    case Kind::RealList: {
      Json arr = Json::array();
      if (s.empty()) return arr;
      for (const auto& part : split_commas(s)) arr.push_back(parse_real(p.key, part));
      return arr;
    }
    case Kind::StrList: {
      Json arr = Json::array();
      for (const auto& part : split_commas(s)) arr.push_back(part);
      return arr;
    }
    case Kind::Str:
    case Kind::Choice:
      return s;
  }
  return s;
}

// Normalizes a value from a config file, rejecting the wrong type.
Json from_json_value(const Param& p, const Json& v) {
  auto bad = [&] { return ConfigError(fmt::format("{}: unexpected value {}", p.key, v.dump())); };
  switch (p.kind) {
    case Kind::Int:
      if (!v.is_number_integer()) throw bad();
      return v.get<int>();
    case Kind::Real:
      if (!v.is_number()) throw bad();
      return v.get<double>();
    case Kind::RealOrAuto:
      if (v.is_string() && v.get<std::string>() == "auto") return v;
      if (!v.is_number()) throw bad();
      return v.get<double>();
    case Kind::Bool:
      if (!v.is_boolean()) throw bad();
      return v;
    case Kind::RealList: {
      if (!v.is_array()) throw bad();
      Json arr = Json::array();
      for (const auto& e : v) {
        if (!e.is_number()) throw bad();
        arr.push_back(e.get<double>());
      }
      return arr;
    }
    case Kind::StrList:
      if (!v.is_array()) throw bad();
      for (const auto& e : v) {
        if (!e.is_string()) throw bad();
      }
      return v;
    case Kind::Str:
    case Kind::Choice:
      if (!v.is_string()) throw bad();
      return v;
  }
  return v;
}

void check_choice(const Param& p, const Json& v) {
  if (p.kind != Kind::Choice) return;
  const auto s = v.get<std::string>();
  for (const auto& c : p.choices) {
    if (c == s) return;
  }
  throw ConfigError(fmt::format("{}: '{}' is not one of the accepted values", p.key, s));
}

std::vector<Param> curve_params(const Json& window_default, const Json& per_piece_default) {
  return {
      {"curve", Kind::Choice, "circle", "boundary curve kind", {"circle", "ellipse", "paper"}},
      {"radius", Kind::Real, 1.0, "circle radius"},
      {"axes", Kind::RealList, Json::array({1.2, 1.0}), "ellipse semi-axes a,b"},
      {"eps", Kind::RealOrAuto, "auto", "quasicircle eps (number or auto)"},
      {"delta", Kind::RealOrAuto, "auto", "quasicircle delta (number or auto)"},
      {"window", Kind::Int, window_default, "dyadic window N"},
      {"samples", Kind::Int, 0, "samples of a circle or ellipse (0: default)"},
      {"per_piece", Kind::Int, per_piece_default, "samples per quasicircle piece"},
  };
}

struct Command {
  std::string name;
  std::string help;
  std::vector<Param> params;
  std::function<void(const Json&, OutputSet&, RunManifest&, Json&)> exec;
};

Json get_defaults(const std::vector<Param>& params) {
  Json j = Json::object();
  for (const auto& p : params) j[p.key] = p.def;
  return j;
}

// --- curve construction ----------------------------------------------------

struct BuiltCurve {
  Polyline poly;
  std::optional<QuasicircleParams> q;
  Json info;
};

int positive(const Json& cfg, const char* key, int lo = 1) {
  const int v = cfg.at(key).get<int>();
  if (v < lo) throw ConfigError(fmt::format("{}: must be at least {}", key, lo));
  return v;
}

double positive_real(const Json& cfg, const char* key) {
  const double v = cfg.at(key).get<double>();
  if (!(v > 0.0)) throw ConfigError(fmt::format("{}: must be positive", key));
  return v;
}

QuasicircleParams resolve_params(const Json& cfg, double d_max, Json& info) {
  const bool eps_auto = cfg.at("eps").is_string();
  const bool delta_auto = cfg.at("delta").is_string();
  const double bound = 0.9 * d_max;
  QuasicircleParams q{0.0, 0.0};
  if (eps_auto) {
    q = admissible_parameters(d_max);
    if (!delta_auto) q.delta = cfg.at("delta").get<double>();
  } else {
    q.eps = cfg.at("eps").get<double>();
    q.delta = delta_auto ? 0.0 : cfg.at("delta").get<double>();
    if (delta_auto) {
      for (int kd = 2; kd <= 60 && q.delta == 0.0; ++kd) {
        const QuasicircleParams trial{q.eps, std::ldexp(1.0, -kd)};
        bool ok = true;
        for (int j = 0; j < 2 && ok; ++j) {
          try {
            ok = gate_plane_distance(gate_circles(0, j, trial)) <= bound;
          } catch (const GeometryError&) {
            ok = false;
          }
        }
        if (ok) q.delta = trial.delta;
      }
      if (q.delta == 0.0) throw ConfigError("delta: no admissible dyadic value for the given eps");
    }
  }
  try {
    q.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  info["eps"] = q.eps;
  info["delta"] = q.delta;
  info["eps_source"] = eps_auto ? "auto" : "given";
  info["delta_source"] = delta_auto ? "auto" : "given";
  info["d_max"] = d_max;
  info["gate_distance_bound"] = bound;
  return q;
}

BuiltCurve build_curve(const Json& cfg, int default_samples) {
  BuiltCurve out;
  const std::string kind = cfg.at("curve").get<std::string>();
  out.info["curve"] = kind;
  int samples = cfg.at("samples").get<int>();
  if (samples == 0) samples = default_samples;
  if (samples < 8) throw ConfigError("samples: must be at least 8");
  if (kind == "circle") {
    out.poly = round_circle({0.0, 0.0}, positive_real(cfg, "radius"), samples);
    out.info["samples"] = samples;
  } else if (kind == "ellipse") {
    const auto axes = cfg.at("axes").get<std::vector<double>>();
    if (axes.size() != 2 || !(axes[0] > 0.0) || !(axes[1] > 0.0)) throw ConfigError("axes: expected two positive values");
    out.poly = ellipse({0.0, 0.0}, axes[0], axes[1], samples);
    out.info["samples"] = samples;
  } else {
    const SeparationMax sep = max_separation();
    const QuasicircleParams q = resolve_params(cfg, sep.d_max, out.info);
    const int window = positive(cfg, "window");
    const int per_piece = positive(cfg, "per_piece", 2);
    out.poly = windowed_closure(q, window, per_piece);
    out.q = q;
    out.info["window"] = window;
    out.info["per_piece"] = per_piece;
  }
  out.info["points"] = out.poly.size();
  return out;
}

// --- report fragments ------------------------------------------------------

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string s = "iter,energy,grad_norm,step,violations\n";
  for (const auto& r : trace) {
    s += fmt::format("{},{},{},{},{}\n", r.iter, fmt_double(r.energy), fmt_double(r.grad_norm), fmt_double(r.step),
                     r.violations);
  }
  return s;
}

Json curvature_json(const CurvatureReport& c) {
  return {{"max_abs_lambda", c.max_abs_lambda},
          {"eps_hat", c.eps_hat},
          {"max_abs_mean", c.max_abs_mean},
          {"max_norm_a", c.max_norm_a},
          {"boundary_max_abs_lambda", c.boundary_max_abs_lambda},
          {"interior_vertices", c.interior_count}};
}

Json stability_json(const SolveResult& r) {
  return {{"ok", r.stability_ok},
          {"error", r.stability_error},
          {"lambda_min", r.stability.lambda_min},
          {"residual", r.stability.residual},
          {"dofs", r.stability.dofs},
          {"iterations", r.stability.iterations}};
}

Json result_json(const SolveResult& r) {
  return {{"converged", r.converged},
          {"iterations", r.iterations},
          {"grad_norm", r.grad_norm},
          {"energy", r.energy},
          {"vertices", r.mesh.vertices.size()},
          {"triangles", r.mesh.triangles.size()},
          {"barrier_contacts", r.barrier_contacts},
          {"barrier_violations", r.barrier_violations},
          {"max_energy_increase", r.max_energy_increase},
          {"curvature", curvature_json(r.curvature)},
          {"stability", stability_json(r)}};
}

Json document(const std::string& kind) { return {{"schema", kSchema}, {"kind", kind}}; }

void add_input(RunManifest& m, const fs::path& path, const std::string& bytes) {
  std::error_code ec;
  const fs::path abs = fs::absolute(path, ec);
  m.inputs.push_back({(ec ? path : abs.lexically_normal()).string(), sha256_hex(bytes)});
}

fs::path input_dir(const Json& cfg, const fs::path& out_dir) {
  const auto in = cfg.at("in").get<std::string>();
  return in.empty() ? out_dir : fs::path(in);
}

// --- commands ----------------------------------------------------------------

void cmd_curve(const Json& cfg, OutputSet& out, RunManifest&, Json& summary) {
  BuiltCurve c = build_curve(cfg, 256);
  out.add("curve.csv", curve_csv(c.poly, !c.poly.closed));

  Json gates = document("gates");
  gates["gates"] = Json::array();
  if (c.q) {
    const int window = cfg.at("window").get<int>();
    for (int n = -window; n <= window; ++n) {
      for (int j = 0; j < 2; ++j) {
        const GatePair g = gate_circles(n, j, *c.q);
        for (const auto& [which, circ] : {std::pair{"c", g.c}, std::pair{"c_prime", g.c_prime}}) {
          gates["gates"].push_back({{"n", n},
                                    {"j", j},
                                    {"circle", which},
                                    {"center_re", circ.center.real()},
                                    {"center_im", circ.center.imag()},
                                    {"radius", circ.radius},
                                    {"clearance", gate_clearance(circ, n, *c.q)},
                                    {"polyline_clearance", circle_clearance(circ, c.poly)}});
        }
        gates["gates"].back()["plane_distance"] = gate_plane_distance(g);
      }
    }
  }
  out.add("gates.json", dump_json(gates));

  Json ahl = document("ahlfors");
  ahl["curve"] = c.info;
  const double k1 = ahlfors_constant(c.poly.points, c.poly.closed);
  Json dbl_cfg = cfg;
  if (c.q) {
    dbl_cfg["per_piece"] = 2 * cfg.at("per_piece").get<int>();
    dbl_cfg["eps"] = c.q->eps;
    dbl_cfg["delta"] = c.q->delta;
  } else {
    dbl_cfg["samples"] = 2 * c.info.at("samples").get<int>();
  }
  const BuiltCurve d = build_curve(dbl_cfg, 512);
  const double k2 = ahlfors_constant(d.poly.points, d.poly.closed);
  ahl["ahlfors_constant"] = k1;
  ahl["ahlfors_constant_doubled"] = k2;
  ahl["relative_change"] = std::abs(k2 - k1) / k1;
  if (c.q) {
    double worst = 0.0;
    for (int j = 0; j < 2; ++j) worst = std::max(worst, gate_plane_distance(gate_circles(0, j, *c.q)));
    ahl["max_gate_plane_distance"] = worst;
    ahl["admissible"] = worst <= c.info.at("gate_distance_bound").get<double>();
  }
  out.add("ahlfors.json", dump_json(ahl));
  summary = ahl;
}

SolveConfig solve_config(const Json& cfg, bool windowed) {
  SolveConfig sc;
  sc.h = positive_real(cfg, "h");
  sc.rings = positive(cfg, "rings", 2);
  sc.tol_g = positive_real(cfg, "tol_g");
  sc.max_iters = positive(cfg, "max_iters", 0);
  sc.h_schedule = cfg.at("schedule").get<std::vector<double>>();
  if (windowed) sc.window = cfg.at("window").get<int>() + 1;
  sc.validate();
  return sc;
}

void cmd_solve(const Json& cfg, OutputSet& out, RunManifest&, Json& summary) {
  const int rings = positive(cfg, "rings", 2);
  BuiltCurve c = build_curve(cfg, boundary_samples(rings));
  const SolveConfig sc = solve_config(cfg, c.q.has_value());

  Json doc = document("solve");
  doc["curve"] = c.info;
  doc["h"] = sc.h;
  doc["rings"] = sc.rings;
  doc["tol_g"] = sc.tol_g;
  SolveResult result;
  if (sc.h_schedule.empty()) {
    result = minimize(init_mesh(c.poly, sc.h, sc.rings, sc.window), sc);
  } else {
    auto stages = continuation_solve(c.poly, sc);
    Json js = Json::array();
    for (const auto& st : stages) {
      js.push_back({{"h", st.h},
                    {"converged", st.result.converged},
                    {"iterations", st.result.iterations},
                    {"grad_norm", st.result.grad_norm},
                    {"energy", st.result.energy},
                    {"interior_drift", st.interior_drift}});
    }
    doc["stages"] = js;
    result = std::move(stages.back().result);
  }
  certify_result(result);
  doc["result"] = result_json(result);
  if (cfg.at("two_sided").get<bool>()) {
    const double offset = positive_real(cfg, "offset");
    const TwoSidedResult ts = two_sided_solve(result.mesh, sc, offset);
    doc["two_sided"] = {{"offset", offset},
                        {"gap_plus", ts.gap_plus},
                        {"gap_minus", ts.gap_minus},
                        {"plus_converged", ts.plus.converged},
                        {"minus_converged", ts.minus.converged},
                        {"uniqueness_consistent", ts.uniqueness_consistent}};
  } else {
    doc["two_sided"] = nullptr;
  }
  out.add("curve.csv", curve_csv(c.poly, !c.poly.closed));
  out.add("mesh.obj", to_obj(result.mesh));
  out.add("mesh.ply", to_ply(result.mesh));
  out.add("trace.csv", trace_csv(result.trace));
  out.add("solve.json", dump_json(doc));
  summary = {{"converged", result.converged},
             {"iterations", result.iterations},
             {"grad_norm", result.grad_norm},
             {"max_abs_lambda", result.curvature.max_abs_lambda}};
}

struct LoadedSolve {
  DiskMesh mesh;
  Polyline curve;
  Json solve;
};

LoadedSolve load_solve(const fs::path& dir, RunManifest& m, bool need_curve) {
  LoadedSolve ls;
  const std::string obj = read_file(dir / "mesh.obj");
  add_input(m, dir / "mesh.obj", obj);
  ls.mesh = from_obj(obj);
  const std::string sj = read_file(dir / "solve.json");
  add_input(m, dir / "solve.json", sj);
  try {
    ls.solve = Json::parse(sj);
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("solve.json: {}", e.what()));
  }
  if (need_curve) {
    const std::string csv = read_file(dir / "curve.csv");
    add_input(m, dir / "curve.csv", csv);
    ls.curve = parse_curve_csv(csv);
  }
  return ls;
}

void cmd_certify(const Json& cfg, OutputSet& out, RunManifest& m, Json& summary) {
  const int probes = positive(cfg, "probes", 2);
  const int planes = positive(cfg, "planes", 2);
  const LoadedSolve ls = load_solve(input_dir(cfg, out.dir()), m, true);
  const bool converged = ls.solve.at("result").at("converged").get<bool>();

  SolveResult r;
  r.mesh = ls.mesh;
  certify_result(r);
  const CurvatureReport& cur = r.curvature;
  const Verdict verdict = classify(cur.max_abs_lambda);

  const WidthEstimate w = width_estimate(ls.curve, probes, planes);
  Json width = document("width");
  width["width_best"] = w.best;
  width["width_spread"] = w.spread;
  width["width_coarse"] = w.coarse;
  width["probe_budget"] = w.probe_budget;
  width["plane_budget"] = w.plane_budget;
  width["probes_accepted"] = w.probes_accepted;
  width["maximizer"] = {w.maximizer.x(), w.maximizer.y(), w.maximizer.z()};
  out.add("width.json", dump_json(width));

  const double bound = cur.eps_hat > 0.0 ? small_curvature_width_bound(std::min(cur.eps_hat, 1.0))
                                         : std::numeric_limits<double>::infinity();
  const ProbeCheck pc = probe_distance_check(w, support_planes(ls.curve, planes), r.mesh, cur.normals);

  Json doc = document("certificate");
  doc["verdict"] = verdict_name(verdict);
  doc["strong_margin"] = kStrongMargin;
  doc["converged"] = converged;
  doc["curvature"] = curvature_json(cur);
  doc["eps_hat"] = cur.eps_hat;
  doc["stability"] = stability_json(r);
  doc["stable"] = r.stability_ok && r.stability.lambda_min >= -1e-6;
  doc["width_best"] = w.best;
  doc["width_spread"] = w.spread;
  doc["width_bound"] = bound;
  doc["width_within_bound"] = w.best <= 1.05 * bound;
  doc["probe_distance_check"] = {{"probes_checked", pc.checked},
                                 {"max_distance", pc.max_distance},
                                 {"boundary_excess", pc.boundary_excess},
                                 {"worst_margin", pc.worst_margin},
                                 {"pass", pc.pass}};
  const bool met = uniqueness_hypotheses_met(converged, verdict, w.best);
  doc["uniqueness_hypotheses_met"] = met ? "yes" : "no";
  doc["uniqueness_note"] = "finite-width estimate and small-curvature class on a converged solve";
  out.add("certificate.json", dump_json(doc));
  summary = {{"verdict", verdict_name(verdict)}, {"eps_hat", cur.eps_hat}, {"uniqueness_hypotheses_met", met}};
}

void cmd_flow(const Json& cfg, OutputSet& out, RunManifest& m, Json& summary) {
  const auto ts = cfg.at("t").get<std::vector<double>>();
  const auto fts = cfg.at("foliation_t").get<std::vector<double>>();
  if (ts.empty()) throw ConfigError("t: at least one time is required");
  const LoadedSolve ls = load_solve(input_dir(cfg, out.dir()), m, false);
  const CurvatureReport base = principal_curvatures(ls.mesh);

  Json doc = document("flow");
  doc["base_verdict"] = verdict_name(classify(base.max_abs_lambda));
  doc["base_max_abs_lambda"] = base.max_abs_lambda;
  const CurvatureLawReport law = curvature_law_check(ls.mesh, base, ts);
  Json rows = Json::array();
  for (const auto& r : law.rows) {
    rows.push_back({{"t", r.t},
                    {"max_residual", r.max_residual},
                    {"median_residual", r.median_residual},
                    {"vertices", r.vertices},
                    {"degenerate", r.degenerate}});
  }
  doc["curvature_law"] = {{"rows", rows}, {"max_residual", law.max_residual}};

  if (!fts.empty()) {
    const FoliationReport fol = foliation_and_sign_check(ls.mesh, base, fts);
    Json frows = Json::array();
    for (const auto& r : fol.rows) {
      frows.push_back({{"t", r.t},
                       {"sign_fraction", r.sign_fraction},
                       {"max_abs_mean", r.max_abs_mean},
                       {"vertices", r.vertices}});
    }
    Json pairs = Json::array();
    for (const auto& [a, b] : fol.pairs_checked) pairs.push_back({a, b});
    doc["foliation"] = {{"disjoint", fol.disjoint},
                        {"witness", {fol.witness_t1, fol.witness_t2, fol.witness_face1, fol.witness_face2}},
                        {"pairs_checked", pairs},
                        {"rows", frows},
                        {"min_sign_fraction", fol.min_sign_fraction}};
  } else {
    doc["foliation"] = nullptr;
  }
  if (cfg.at("leaves").get<bool>()) {
    for (std::size_t k = 0; k < ts.size(); ++k) {
      out.add(fmt::format("leaf_{}.obj", k), to_obj(flow_mesh(ls.mesh, base.normals, ts[k]).mesh));
    }
  }
  out.add("flow.json", dump_json(doc));
  summary = {{"max_residual", law.max_residual}};
}

void cmd_catenoid(const Json& cfg, OutputSet& out, RunManifest&, Json& summary) {
  const double tol = positive_real(cfg, "tol");
  const double r_max = positive_real(cfg, "r_max");
  const int columns = positive(cfg, "columns", 3);
  const SeparationMax sep = max_separation(tol);
  const SeparationMax sep_half = max_separation(tol / 2.0);

  Json thr = document("threshold");
  thr["r0_star"] = sep.r0_star;
  thr["d_max"] = sep.d_max;
  thr["tol"] = tol;
  thr["d_max_half_tol"] = sep_half.d_max;
  thr["reproducibility"] = std::abs(sep.d_max - sep_half.d_max);
  out.add("threshold.json", dump_json(thr));

  std::string sc = "r0,separation\n";
  for (const auto& [r0, s] : sep.samples) sc += fmt::format("{},{}\n", fmt_double(r0), fmt_double(s));
  out.add("separation.csv", sc);

  const double r0 = cfg.at("r0").is_string() ? sep.r0_star : positive_real(cfg, "r0");
  const CatenoidProfile p = profile(r0, r_max, tol);
  const DiskMesh mesh = catenoid_mesh(p, Mobius::identity(), columns, std::min(kMeshREnd, r_max));
  CurvatureOptions opts;
  const CurvatureReport cur = principal_curvatures(mesh, opts);
  Json doc = document("catenoid");
  doc["r0"] = r0;
  doc["c"] = p.c;
  doc["half_separation"] = p.T;
  doc["separation"] = 2.0 * p.T;
  doc["first_integral_drift"] = first_integral_drift(p);
  doc["max_abs_mean"] = cur.max_abs_mean;
  doc["vertices"] = mesh.vertices.size();
  doc["columns"] = columns;
  out.add("catenoid.json", dump_json(doc));
  out.add("profile.csv", profile_csv(p));
  out.add("catenoid.obj", to_obj(mesh));
  summary = {{"d_max", sep.d_max}, {"r0_star", sep.r0_star}};
}

void cmd_multiplicity(const Json& cfg, OutputSet& out, RunManifest&, Json& summary) {
  const int window = positive(cfg, "window", 0);
  const int per_piece = positive(cfg, "per_piece", 2);
  std::vector<IotaAssignment> iotas;
  for (const auto& s : cfg.at("iotas").get<std::vector<std::string>>()) iotas.push_back(IotaAssignment::parse(s, window));
  if (iotas.size() < 2) throw ConfigError("iotas: at least two assignments are required");
  SolveConfig sc;
  sc.h = positive_real(cfg, "h");
  sc.rings = positive(cfg, "rings", 2);
  sc.tol_g = positive_real(cfg, "tol_g");
  sc.max_iters = positive(cfg, "max_iters", 0);
  sc.validate();

  Json info;
  const SeparationMax sep = max_separation();
  const QuasicircleParams q = resolve_params(cfg, sep.d_max, info);
  MultiplicityResult res = multiplicity_experiment(q, window, iotas, sc, per_piece);

  Json doc = document("multiplicity");
  doc["params"] = info;
  doc["window"] = window;
  Json runs = Json::array();
  for (auto& run : res.runs) {
    certify_result(run.result);
    const std::string tag = run.iota.str();
    Json jr = result_json(run.result);
    jr["iota"] = tag;
    jr["clear_of_barriers"] = run.clear_of_barriers;
    jr["stable"] = run.result.stability_ok && run.result.stability.lambda_min >= -1e-6;
    runs.push_back(jr);
    out.add(fmt::format("mesh_{}.obj", tag), to_obj(run.result.mesh));
    out.add(fmt::format("trace_{}.csv", tag), trace_csv(run.result.trace));
  }
  doc["runs"] = runs;
  Json matrix = Json::array();
  bool any_distinct = false;
  for (const auto& row : res.rows) {
    const bool parity_ok = row.parity_a[0] >= 0 && row.parity_b[0] >= 0 && row.parity_a[1] >= 0 && row.parity_b[1] >= 0;
    const bool differ = parity_ok && (row.parity_a[0] != row.parity_b[0] || row.parity_a[1] != row.parity_b[1]);
    const bool separated = row.hausdorff >= row.neck_half_diameter;
    any_distinct = any_distinct || (differ && separated);
    matrix.push_back({{"a", res.runs[row.a].iota.str()},
                      {"b", res.runs[row.b].iota.str()},
                      {"level", row.level},
                      {"hausdorff", row.hausdorff},
                      {"neck_half_diameter", row.neck_half_diameter},
                      {"parity_a", {row.parity_a[0], row.parity_a[1]}},
                      {"parity_b", {row.parity_b[0], row.parity_b[1]}},
                      {"parities_differ", differ},
                      {"separated", separated}});
  }
  doc["distinctness"] = matrix;
  out.add("multiplicity.json", dump_json(doc));
  summary = {{"runs", res.runs.size()}, {"distinct_pair_found", any_distinct}};
}

std::vector<Command> commands() {
  std::vector<Command> cmds;
  cmds.push_back({"curve", "Sample a boundary curve with gate circles and an Ahlfors report",
                  curve_params(4, 16), cmd_curve});

  auto solve = curve_params(4, 16);
  solve.push_back({"h", Kind::Real, 0.05, "truncation height"});
  solve.push_back({"rings", Kind::Int, 48, "mesh rings"});
  solve.push_back({"tol_g", Kind::Real, 1e-4, "gradient-norm tolerance"});
  solve.push_back({"max_iters", Kind::Int, 2000, "iteration cap"});
  solve.push_back({"schedule", Kind::RealList, Json::array(), "truncation heights for continuation"});
  solve.push_back({"two_sided", Kind::Bool, false, "also solve from both sides"});
  solve.push_back({"offset", Kind::Real, 0.3, "two-sided start offset"});
  cmds.push_back({"solve", "Minimize area for a truncated disk", solve, cmd_solve});

  cmds.push_back({"certify",
                  "Curvature class, stability and width of a solve",
                  {{"in", Kind::Str, "", "directory of a solve (default: --out)"},
                   {"probes", Kind::Int, 256, "width probe budget"},
                   {"planes", Kind::Int, 48, "support planes per side"}},
                  cmd_certify});

  cmds.push_back({"flow",
                  "Equidistant flow curvature law and foliation check",
                  {{"in", Kind::Str, "", "directory of a solve (default: --out)"},
                   {"t", Kind::RealList, Json::array({-1.0, -0.5, 0.0, 0.5, 1.0}), "flow times"},
                   {"foliation_t", Kind::RealList, Json::array({-1.5, -0.5, 0.5, 1.5}), "leaves for the foliation"},
                   {"leaves", Kind::Bool, false, "write flowed leaves as OBJ"}},
                  cmd_flow});

  cmds.push_back({"catenoid",
                  "Separation threshold and a meshed catenoid",
                  {{"r0", Kind::RealOrAuto, "auto", "neck radius (auto: maximal separation)"},
                   {"columns", Kind::Int, 64, "mesh columns"},
                   {"tol", Kind::Real, 1e-12, "quadrature tolerance"},
                   {"r_max", Kind::Real, kDefaultRMax, "profile table radius"}},
                  cmd_catenoid});

  cmds.push_back({"multiplicity",
                  "Barrier-assignment solves and their distinctness matrix",
                  {{"eps", Kind::RealOrAuto, "auto", "quasicircle eps"},
                   {"delta", Kind::RealOrAuto, "auto", "quasicircle delta"},
                   {"window", Kind::Int, 1, "dyadic window N"},
                   {"iotas", Kind::StrList, Json::array({"00", "10"}), "barrier assignments"},
                   {"per_piece", Kind::Int, 8, "samples per quasicircle piece"},
                   {"h", Kind::Real, 0.05, "truncation height"},
                   {"rings", Kind::Int, 24, "mesh rings"},
                   {"tol_g", Kind::Real, 1e-4, "gradient-norm tolerance"},
                   {"max_iters", Kind::Int, 200, "iteration cap"}},
                  cmd_multiplicity});
  return cmds;
}

void print_error(std::ostream& err, const std::string& kind, const std::string& message) {
  Json e = {{"schema", kSchema}, {"error", kind}, {"message", message}};
  err << e.dump() << "\n";
}

struct Invocation {
  const Command* cmd = nullptr;
  std::map<std::string, std::string> raw;
  std::map<std::string, bool> flags_set;
  std::string out_dir = ".";
  std::string config_file;
  bool verify = false;
  bool verify_only = false;
  std::string circle, ellipse;
  bool paper = false;
};

Json build_config(const Invocation& inv) {
  const Command& cmd = *inv.cmd;
  Json cfg = get_defaults(cmd.params);
  if (!inv.config_file.empty()) {
    Json file;
    try {
      file = Json::parse(read_file(inv.config_file));
    } catch (const Json::exception& e) {
      throw ConfigError(fmt::format("config file: {}", e.what()));
    } catch (const std::runtime_error& e) {
      throw ConfigError(fmt::format("config file: {}", e.what()));
    }
    if (!file.is_object()) throw ConfigError("config file: expected a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      const Param* p = nullptr;
      for (const auto& q : cmd.params) {
        if (q.key == it.key()) p = &q;
      }
      if (!p) throw ConfigError(fmt::format("config file: unknown key '{}'", it.key()));
      cfg[p->key] = from_json_value(*p, it.value());
    }
  }
  for (const auto& p : cmd.params) {
    if (auto it = inv.raw.find(p.key); it != inv.raw.end()) cfg[p.key] = from_text(p, it->second);
    if (auto it = inv.flags_set.find(p.key); it != inv.flags_set.end() && it->second) cfg[p.key] = true;
  }
  const int chosen = !inv.circle.empty() + !inv.ellipse.empty() + inv.paper;
  if (chosen > 1) throw ConfigError("curve: choose one of --circle, --ellipse, --paper");
  if (!inv.circle.empty()) {
    cfg["curve"] = "circle";
    cfg["radius"] = parse_real("radius", inv.circle);
  }
  if (!inv.ellipse.empty()) {
    cfg["curve"] = "ellipse";
    cfg["axes"] = from_text({"axes", Kind::RealList, Json::array(), ""}, inv.ellipse);
  }
  if (inv.paper) cfg["curve"] = "paper";
  for (const auto& p : cmd.params) check_choice(p, cfg[p.key]);
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto cmds = commands();
  CLI::App app{"Minimal disks in hyperbolic space: solves, certificates and barrier experiments"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Invocation>> invs;
  std::string verify_dir;
  auto* verify_cmd = app.add_subcommand("verify", "Check the files of a run against its manifest");
  verify_cmd->add_option("--out", verify_dir, "run directory")->required();

  for (const auto& cmd : cmds) {
    auto inv = std::make_unique<Invocation>();
    inv->cmd = &cmd;
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    for (const auto& p : cmd.params) {
      if (p.kind == Kind::Bool) {
        sub->add_flag_callback(flag_name(p.key), [ip = inv.get(), key = p.key] { ip->flags_set[key] = true; }, p.help);
      } else {
        sub->add_option_function<std::string>(
            flag_name(p.key), [ip = inv.get(), key = p.key](const std::string& v) { ip->raw[key] = v; }, p.help);
      }
    }
    if (cmd.name == "curve" || cmd.name == "solve") {
      sub->add_option("--circle", inv->circle, "round circle of this radius about 0");
      sub->add_option("--ellipse", inv->ellipse, "ellipse with semi-axes a,b");
      sub->add_flag("--paper", inv->paper, "dyadic quasicircle (windowed closure)");
    }
    sub->add_option("--out", inv->out_dir, "output directory");
    sub->add_option("--config", inv->config_file, "JSON config; flags take precedence");
    sub->add_flag("--verify", inv->verify, "re-run and compare with the manifest in --out");
    invs.push_back(std::move(inv));
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  }

  try {
    if (verify_cmd->parsed()) {
      const VerifyResult vr = verify_manifest(verify_dir);
      out << dump_json({{"schema", kSchema}, {"ok", vr.ok}, {"mismatches", vr.mismatches}});
      return vr.ok ? kExitOk : kExitIo;
    }
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error(err, "io", e.what());
    return kExitIo;
  }

  Invocation* inv = nullptr;
  for (auto& candidate : invs) {
    if (app.got_subcommand(candidate->cmd->name)) inv = candidate.get();
  }
  if (!inv) {
    print_error(err, "config", "no command given");
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  Json cfg;
  try {
    cfg = build_config(*inv);
  } catch (const std::exception& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  }

  OutputSet outputs(inv->out_dir);
  RunManifest manifest;
  manifest.command = inv->cmd->name;
  manifest.config = cfg;
  Json summary;
  try {
    inv->cmd->exec(cfg, outputs, manifest, summary);
  } catch (const ConfigError& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  } catch (const GeometryError& e) {
    print_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    print_error(err, "io", e.what());
    return kExitIo;
  }
  outputs.add(inv->cmd->name + ".config.json", dump_json(cfg));
  manifest.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  attach_manifest(outputs, manifest);

  try {
    if (inv->verify) {
      const std::string self = manifest_name(inv->cmd->name);
      const Json old = Json::parse(read_file(fs::path(inv->out_dir) / self));
      const RunManifest prev = RunManifest::from_json(old);
      std::vector<std::string> mismatches;
      std::map<std::string, std::string> expected(prev.outputs.begin(), prev.outputs.end());
      for (const auto& [name, content] : outputs.files()) {
        if (name == self) continue;
        auto it = expected.find(name);
        if (it == expected.end()) {
          mismatches.push_back(name + ": not in manifest");
        } else if (it->second != sha256_hex(content)) {
          mismatches.push_back(name + ": hash differs");
        }
        expected.erase(name);
      }
      for (const auto& [name, hash] : expected) mismatches.push_back(name + ": not produced");
      if (dump_json(prev.config) != dump_json(cfg)) mismatches.push_back("config: differs from manifest");
      const bool ok = mismatches.empty();
      out << dump_json({{"schema", kSchema}, {"ok", ok}, {"mismatches", mismatches}});
      return ok ? kExitOk : kExitIo;
    }
    outputs.commit();
  } catch (const std::exception& e) {
    print_error(err, "io", e.what());
    return kExitIo;
  }
  Json s = {{"schema", kSchema}, {"command", inv->cmd->name}, {"summary", summary}, {"out", inv->out_dir}};
  out << dump_json(s);
  return kExitOk;
}

}  // namespace hyperplateau::cli
