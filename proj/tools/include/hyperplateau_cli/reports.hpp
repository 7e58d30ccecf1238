#pragma once

// Report plumbing for the command-line tool: canonical JSON text, buffered
// outputs committed by a single writer, run manifests and the certificate
// verdict.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperplateau/boundary_curves.hpp"

namespace hyperplateau::cli {

using Json = nlohmann::json;

inline constexpr int kSchema = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Sorted keys, two-space indent, floats as {:.17g}; non-finite floats as the
// strings "inf", "-inf", "nan". Ends with a newline.
std::string dump_json(const Json& value);

// "{:.17g}" for CSV cells.
std::string fmt_double(double v);

std::string sha256_hex(const std::string& bytes);
std::string read_file(const std::filesystem::path& path);  // throws std::runtime_error

// Files are held in memory until commit(), which writes each one through a
// temporary name and a rename, so a failed command leaves nothing behind.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void add(const std::string& name, std::string content);
  const std::map<std::string, std::string>& files() const noexcept { return files_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }
  void commit() const;  // throws std::filesystem::filesystem_error

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
};

struct InputFile {
  std::string path;
  std::string sha256;
};

struct RunManifest {
  std::string command;
  Json config;
  std::string tool_version = kToolVersion;
  std::vector<InputFile> inputs;
  std::vector<std::pair<std::string, std::string>> outputs;  // name, sha256
  double wall_time_s = 0.0;

  Json to_json() const;
  static RunManifest from_json(const Json& j);  // throws ConfigError
};

// "<command>.manifest.json"; several commands may share one directory.
std::string manifest_name(const std::string& command);

// Lists every file of the set, then adds the manifest itself to the set.
void attach_manifest(OutputSet& out, RunManifest manifest);

struct VerifyResult {
  bool ok = true;
  std::vector<std::string> mismatches;
};

// For every manifest in dir, recomputes the hashes of its listed outputs and
// inputs and checks that the config snapshot re-serializes to the same bytes.
VerifyResult verify_manifest(const std::filesystem::path& dir);

// --- certificate verdict ---------------------------------------------------

// Margin eps_hat needed for a strongly-small verdict; it sits above the
// curvature estimator's error on resolved meshes.
inline constexpr double kStrongMargin = 0.05;

enum class Verdict { StronglySmall, WeaklySmall, NotSmall };

Verdict classify(double max_abs_lambda);
std::string verdict_name(Verdict v);

// Finite width plus a small-curvature class on a converged solve.
bool uniqueness_hypotheses_met(bool converged, Verdict v, double width_best);

// --- curve CSV ---------------------------------------------------------------

// Inverse of curve_csv; an "inf" row marks an open curve through infinity.
Polyline parse_curve_csv(const std::string& text);

}  // namespace hyperplateau::cli
