#include "hyperplateau_cli/reports.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "hyperplateau/errors.hpp"

namespace hyperplateau::cli {

namespace {

void emit(const Json& v, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close_pad(static_cast<std::size_t>(indent), ' ');
  switch (v.type()) {
    case Json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + Json(it.key()).dump() + ": ";
        emit(it.value(), indent + 2, out);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(v[i], indent + 2, out);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (std::isnan(d)) {
        out += "\"nan\"";
      } else if (std::isinf(d)) {
        out += d > 0 ? "\"inf\"" : "\"-inf\"";
      } else {
        std::string s = fmt::format("{:.17g}", d);
        // keep the value a float on re-parse
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        out += s;
      }
      return;
    }
    default:
      out += v.dump();
  }
}

}  // namespace

std::string dump_json(const Json& value) {
  std::string out;
  emit(value, 0, out);
  out += "\n";
  return out;
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256: digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void OutputSet::add(const std::string& name, std::string content) { files_[name] = std::move(content); }

void OutputSet::commit() const {
  std::filesystem::create_directories(dir_);
  for (const auto& [name, content] : files_) {
    const auto target = dir_ / name;
    auto tmp = target;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
      if (!f) {
        throw std::filesystem::filesystem_error("cannot open for writing", tmp,
                                                std::make_error_code(std::errc::io_error));
      }
      f.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!f) {
        throw std::filesystem::filesystem_error("write failed", tmp, std::make_error_code(std::errc::io_error));
      }
    }
    std::filesystem::rename(tmp, target);
  }
}

Json RunManifest::to_json() const {
  Json j;
  j["schema"] = kSchema;
  j["command"] = command;
  j["config"] = config;
  j["tool_version"] = tool_version;
  j["wall_time_s"] = wall_time_s;
  Json in = Json::array();
  for (const auto& f : inputs) in.push_back({{"path", f.path}, {"sha256", f.sha256}});
  j["inputs"] = in;
  Json outs = Json::array();
  for (const auto& [name, hash] : outputs) outs.push_back({{"path", name}, {"sha256", hash}});
  j["outputs"] = outs;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    for (const auto& f : j.at("inputs")) m.inputs.push_back({f.at("path"), f.at("sha256")});
    for (const auto& f : j.at("outputs")) m.outputs.emplace_back(f.at("path"), f.at("sha256"));
    return m;
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("manifest: {}", e.what()));
  }
}

std::string manifest_name(const std::string& command) { return command + ".manifest.json"; }

void attach_manifest(OutputSet& out, RunManifest manifest) {
  const std::string self = manifest_name(manifest.command);
  manifest.outputs.clear();
  for (const auto& [name, content] : out.files()) {
    if (name == self) continue;
    manifest.outputs.emplace_back(name, sha256_hex(content));
  }
  out.add(self, dump_json(manifest.to_json()));
}

namespace {

void verify_one(const std::filesystem::path& dir, const std::filesystem::path& file, VerifyResult& res) {
  Json j;
  try {
    j = Json::parse(read_file(file));
  } catch (const Json::exception& e) {
    throw ConfigError(fmt::format("manifest: {}", e.what()));
  }
  const RunManifest m = RunManifest::from_json(j);
  auto check = [&](const std::filesystem::path& path, const std::string& expected) {
    try {
      if (sha256_hex(read_file(path)) != expected) res.mismatches.push_back(path.string() + ": hash differs");
    } catch (const std::runtime_error&) {
      res.mismatches.push_back(path.string() + ": missing");
    }
  };
  for (const auto& [name, hash] : m.outputs) check(dir / name, hash);
  for (const auto& f : m.inputs) check(f.path, f.sha256);
  const std::string snap = dump_json(m.config);
  if (dump_json(Json::parse(snap)) != snap) res.mismatches.push_back(m.command + " config: snapshot does not round-trip");
}

}  // namespace

VerifyResult verify_manifest(const std::filesystem::path& dir) {
  VerifyResult res;
  std::vector<std::filesystem::path> manifests;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 14 && name.ends_with(".manifest.json")) manifests.push_back(entry.path());
  }
  if (manifests.empty()) throw std::runtime_error(fmt::format("no manifest in {}", dir.string()));
  std::sort(manifests.begin(), manifests.end());
  for (const auto& f : manifests) verify_one(dir, f, res);
  res.ok = res.mismatches.empty();
  return res;
}

Verdict classify(double max_abs_lambda) {
  if (!std::isfinite(max_abs_lambda)) return Verdict::NotSmall;
  if (max_abs_lambda <= 1.0 - kStrongMargin) return Verdict::StronglySmall;
  if (max_abs_lambda <= 1.0) return Verdict::WeaklySmall;
  return Verdict::NotSmall;
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::StronglySmall:
      return "strongly-small";
    case Verdict::WeaklySmall:
      return "weakly-small";
    case Verdict::NotSmall:
      break;
  }
  return "not-small";
}

bool uniqueness_hypotheses_met(bool converged, Verdict v, double width_best) {
  return converged && v != Verdict::NotSmall && std::isfinite(width_best);
}

Polyline parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "s,re,im") throw ConfigError("curve csv: expected header s,re,im");
  Polyline out;
  out.closed = true;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    double v[3];
    const char* p = line.c_str();
    for (int k = 0; k < 3; ++k) {
      char* end = nullptr;
      v[k] = std::strtod(p, &end);
      if (end == p || (k < 2 && *end != ',') || (k == 2 && *end != '\0')) {
        throw ConfigError(fmt::format("curve csv: malformed row {}", row));
      }
      p = end + (k < 2 ? 1 : 0);
    }
    if (std::isinf(v[1]) || std::isinf(v[2])) {
      out.closed = false;
      continue;
    }
    out.params.push_back(v[0]);
    out.points.emplace_back(v[1], v[2]);
  }
  if (out.points.size() < 3) throw ConfigError("curve csv: need at least 3 points");
  return out;
}

}  // namespace hyperplateau::cli
