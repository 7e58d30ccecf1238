#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <unistd.h>

#include "hyperplateau/boundary_curves.hpp"
#include "hyperplateau_cli/cli.hpp"
#include "hyperplateau_cli/reports.hpp"

namespace fs = std::filesystem;
using namespace hyperplateau;
using namespace hyperplateau::cli;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run hp(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int code = run(args, o, e);
  return {code, o.str(), e.str()};
}

// Fresh scratch directory per test case, removed afterwards.
struct Scratch {
  fs::path root;
  Scratch() {
    static int counter = 0;
    root = fs::temp_directory_path() / ("hp_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(root);
    fs::create_directories(root);
  }
  ~Scratch() { fs::remove_all(root); }
  std::string operator/(const std::string& name) const { return (root / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::map<std::string, std::string> slurp(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = read_file(e.path());
  return files;
}

bool is_manifest(const std::string& name) { return name.size() > 14 && name.ends_with(".manifest.json"); }

}  // namespace

TEST_CASE("curve command") {
  Scratch s;
  const Run r = hp({"curve", "--circle", "1.0", "--out", s / "c"});
  REQUIRE(r.code == kExitOk);
  for (const char* f : {"curve.csv", "gates.json", "ahlfors.json", "curve.manifest.json", "curve.config.json"}) {
    CHECK(fs::exists(s.root / "c" / f));
  }
  const Json a = Json::parse(read_file(s.root / "c" / "ahlfors.json"));
  CHECK(a.at("schema") == 1);
  CHECK(std::abs(a.at("ahlfors_constant").get<double>() - 1.0) <= 1e-3);
  const Json summary = Json::parse(r.out);
  CHECK(summary.at("command") == "curve");

  const Run p = hp({"curve", "--paper", "--eps", "auto", "--delta", "auto", "--window", "2", "--out", s / "p"});
  REQUIRE(p.code == kExitOk);
  const Json ps = Json::parse(p.out).at("summary");
  CHECK(ps.at("admissible") == true);
  CHECK(ps.at("curve").at("eps").get<double>() == std::ldexp(1.0, -11));
}

TEST_CASE("exit codes and atomic failures") {
  Scratch s;
  write(s / "bad.json", "{\"h\": ");
  Run r = hp({"solve", "--config", s / "bad.json", "--out", s / "o1"});
  CHECK(r.code == kExitConfig);
  CHECK(Json::parse(r.err).at("error") == "config");
  CHECK_FALSE(fs::exists(s.root / "o1"));

  write(s / "unknown.json", "{\"bogus\": 1}");
  r = hp({"solve", "--config", s / "unknown.json", "--out", s / "o2"});
  CHECK(r.code == kExitConfig);
  CHECK_FALSE(fs::exists(s.root / "o2"));

  r = hp({"solve", "--rings", "abc", "--out", s / "o3"});
  CHECK(r.code == kExitConfig);
  r = hp({"solve", "--no-such-flag", "--out", s / "o3"});
  CHECK(r.code == kExitConfig);
  r = hp({"solve", "--circle", "1", "--paper", "--out", s / "o3"});
  CHECK(r.code == kExitConfig);
  r = hp({"solve", "--circle", "-1", "--out", s / "o3"});
  CHECK(r.code == kExitConfig);
  CHECK_FALSE(fs::exists(s.root / "o3"));

  // certify without a solve to read
  r = hp({"certify", "--out", s / "empty"});
  CHECK(r.code == kExitIo);
  CHECK(Json::parse(r.err).at("error") == "io");

  // output directory below a regular file
  write(s / "file", "x");
  r = hp({"curve", "--circle", "1", "--out", s / "file/sub"});
  CHECK(r.code == kExitIo);
  CHECK(hp({}).code == kExitConfig);
}

TEST_CASE("solve, certify and flow") {
  Scratch s;
  const std::string dir = s / "run";
  REQUIRE(hp({"solve", "--circle", "1.0", "--rings", "16", "--out", dir}).code == kExitOk);
  const Json solve = Json::parse(read_file(fs::path(dir) / "solve.json"));
  CHECK(solve.at("result").at("converged") == true);
  CHECK(fs::exists(fs::path(dir) / "mesh.obj"));
  CHECK(fs::exists(fs::path(dir) / "trace.csv"));
  CHECK(read_file(fs::path(dir) / "trace.csv").rfind("iter,energy,grad_norm,step,violations\n", 0) == 0);

  REQUIRE(hp({"certify", "--out", dir}).code == kExitOk);
  const Json cert = Json::parse(read_file(fs::path(dir) / "certificate.json"));
  CHECK(cert.at("verdict") == "strongly-small");
  CHECK(cert.at("eps_hat").get<double>() >= 0.95);
  CHECK(cert.at("uniqueness_hypotheses_met") == "yes");
  CHECK(cert.at("stable") == true);

  REQUIRE(hp({"flow", "--out", dir, "--t", "-0.5,0,0.5"}).code == kExitOk);
  const Json flow = Json::parse(read_file(fs::path(dir) / "flow.json"));
  CHECK(flow.at("curvature_law").at("rows").size() == 3);

  const Run v = hp({"verify", "--out", dir});
  CHECK(v.code == kExitOk);
  CHECK(Json::parse(v.out).at("ok") == true);

  // tampering is detected
  write((fs::path(dir) / "trace.csv").string(), "changed\n");
  const Run t = hp({"verify", "--out", dir});
  CHECK(t.code == kExitIo);
  CHECK_FALSE(Json::parse(t.out).at("mismatches").empty());
}

TEST_CASE("determinism") {
  Scratch s;
  for (const char* d : {"a", "b"}) {
    const std::string dir = s / d;
    REQUIRE(hp({"solve", "--ellipse", "1.2,1.0", "--rings", "12", "--out", dir}).code == kExitOk);
    REQUIRE(hp({"certify", "--out", dir, "--probes", "64", "--planes", "16"}).code == kExitOk);
    REQUIRE(hp({"catenoid", "--r0", "0.7", "--columns", "16", "--out", dir}).code == kExitOk);
  }
  const auto a = slurp(s.root / "a"), b = slurp(s.root / "b");
  REQUIRE(a.size() == b.size());
  for (const auto& [name, content] : a) {
    if (is_manifest(name)) continue;
    CHECK_MESSAGE(b.at(name) == content, name);
  }
  // a re-run in place reproduces every hash of its manifest
  const Run v = hp({"solve", "--ellipse", "1.2,1.0", "--rings", "12", "--out", s / "a", "--verify"});
  CHECK(v.code == kExitOk);
  CHECK(Json::parse(v.out).at("ok") == true);
}

TEST_CASE("config round trip") {
  Scratch s;
  REQUIRE(hp({"curve", "--circle", "0.5", "--samples", "64", "--out", s / "a"}).code == kExitOk);
  const std::string cfg = read_file(s.root / "a" / "curve.config.json");
  REQUIRE(hp({"curve", "--config", s / "a/curve.config.json", "--out", s / "b"}).code == kExitOk);
  CHECK(read_file(s.root / "b" / "curve.config.json") == cfg);
  CHECK(read_file(s.root / "b" / "curve.csv") == read_file(s.root / "a" / "curve.csv"));
  // flags override the file
  REQUIRE(hp({"curve", "--config", s / "a/curve.config.json", "--samples", "32", "--out", s / "c"}).code == kExitOk);
  CHECK(Json::parse(read_file(s.root / "c" / "curve.config.json")).at("samples") == 32);

  const Json m = Json::parse(read_file(s.root / "a" / "curve.manifest.json"));
  const RunManifest rm = RunManifest::from_json(m);
  CHECK(dump_json(rm.to_json()) == dump_json(m));
  CHECK(rm.command == "curve");
  CHECK_THROWS(RunManifest::from_json(Json::parse("{\"command\": 3}")));
}

TEST_CASE("curve CSV round trip") {
  const Polyline c = round_circle(Complex(0.25, -1.0), 0.75, 40);
  const Polyline back = parse_curve_csv(curve_csv(c, false));
  REQUIRE(back.size() == c.size());
  CHECK(back.closed);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(back.points[i] == c.points[i]);
  CHECK_THROWS(parse_curve_csv("s,re,im\n0,1\n"));
  CHECK_THROWS(parse_curve_csv("x,y\n"));
}

TEST_CASE("report formatting") {
  const Json j = {{"b", 0.1}, {"a", std::numeric_limits<double>::infinity()}, {"c", {1, 2}}, {"d", -0.0}};
  const std::string text = dump_json(j);
  CHECK(text.find("\"a\"") < text.find("\"b\""));
  CHECK(text.find("0.10000000000000001") != std::string::npos);
  CHECK(text.find("\"inf\"") != std::string::npos);
  CHECK(text.back() == '\n');
  CHECK(text.find("\n  \"b\"") != std::string::npos);
  CHECK(fmt_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(std::stod(fmt_double(0.1)) == 0.1);
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(manifest_name("solve") == "solve.manifest.json");
}

TEST_CASE("verdicts") {
  CHECK(classify(0.0) == Verdict::StronglySmall);
  CHECK(classify(1.0 - kStrongMargin) == Verdict::StronglySmall);
  CHECK(classify(0.97) == Verdict::WeaklySmall);
  CHECK(classify(1.0) == Verdict::WeaklySmall);
  CHECK(classify(1.01) == Verdict::NotSmall);
  CHECK(classify(std::numeric_limits<double>::quiet_NaN()) == Verdict::NotSmall);
  CHECK(verdict_name(Verdict::StronglySmall) == "strongly-small");
  CHECK(verdict_name(Verdict::WeaklySmall) == "weakly-small");
  CHECK(verdict_name(Verdict::NotSmall) == "not-small");
  CHECK(uniqueness_hypotheses_met(true, Verdict::WeaklySmall, 0.3));
  CHECK_FALSE(uniqueness_hypotheses_met(false, Verdict::StronglySmall, 0.3));
  CHECK_FALSE(uniqueness_hypotheses_met(true, Verdict::NotSmall, 0.3));
  CHECK_FALSE(uniqueness_hypotheses_met(true, Verdict::StronglySmall, std::numeric_limits<double>::infinity()));
}
