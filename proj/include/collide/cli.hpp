#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "collide/collisions.hpp"
#include "collide/harness.hpp"
#include "json.hpp"

namespace collide::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"collisions", "partition",   "chaos",         "duality",    "expmoment",
                                          "tightness",  "convergence", "kernels-check", "ustat-check"};
  return c;
}

struct RunConfig {
  std::string command;

  // walks
  int k = 2;
  std::vector<int> ladder{64, 256, 1024};
  long long replicas = 10000;

  // environment
  std::string amplitude = "gaussian_bump";  // gaussian_bump | constant | window
  double alpha = 1.0;
  double sigma = 1.0;
  double halfwidth = 1.0;
  double beta = 1.0;

  // chaos
  double dt = 1.0 / 32;
  double dx = 1.0 / 8;
  double L = 6.0;
  int M = 8;
  double gamma = 0.7071067811865476;
  int chaos_replicas = 1000;
  bool chaos_target = false;

  // harness
  std::optional<std::uint64_t> seed;
  long long env_replicas = 10000;
  std::vector<double> m_ladder{1.0, 2.0, 4.0, 8.0};
  std::string generator = "polymer";  // polymer | deterministic | zero
  long long norm_samples = 1000000;
  int norm_orders = 4;
  long long clt_budget = 200000;
  double gap_shrink = 2.0;
  double plateau_z = 3.0;
  double final_level = 0.01;
  double chaos_z = 3.0;
  double identity_tol = 1e-10;
  double norm_tol = 0.01;

  // run
  std::string out = "out";
  int workers = 1;
  bool raw = false;
  bool to_stdout = false;

  collisions::TestFunction test_function() const;
  /// Everything that determines the results; excludes workers and paths.
  nlohmann::ordered_json echo() const;
  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Reads the sections walks, environment, chaos and harness over the
/// defaults. Unknown keys and wrong types throw ConfigError naming the field
/// as section.key.
RunConfig load_config(const nlohmann::json& j, RunConfig base = {});

harness::ExperimentReport execute(const RunConfig& cfg);

/// Runs the command and writes report.json, manifest.json and, with raw,
/// raw/*.csv under cfg.out. Returns 0 iff every verdict passed.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses flags and the config file, then calls run. Config errors print
/// to err and return 2.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace collide::cli
