#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "clusterq/evaluation.hpp"
#include "clusterq/orchestrator.hpp"

namespace clusterq {

/// Bad config file, bad value or inconsistent parameters (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepLists {
  std::vector<double> tolerance_n{0.1, 1.0, 1.1, 1.5, 2.0};
  std::vector<double> seed_variance{0.1, 1.0, 100.0};
  double cluster_epsilon = 0.3;
  std::vector<double> epsilon{0.1, 0.3, 0.7, 1.0};
  std::vector<int> episode_counts{100, 500, 1000};
  std::vector<double> convergence_epsilon{0.1, 0.3, 0.7, 1.0};
  int convergence_budget = 300;
};

struct RunConfig {
  std::uint64_t seed = 1;
  int episodes = 1000;
  int runs = 10;
  WorldMap map = canonical_map();
  std::string primary = "***1";
  /// Named secondary objectives looked up among the discovered clusters.
  std::map<std::string, std::string> named{{"light", "0100"}, {"rough", "0010"}};
  RunParams run;
  EvalConfig eval;
  SweepLists sweeps;

  /// Throws ConfigError.
  void validate() const;
  ObjectiveSpec primary_spec() const { return ObjectiveSpec::parse(primary); }
};

nlohmann::ordered_json to_json(const RunConfig& cfg);
/// Keys absent from `j` keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON dump of the resolved config.
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

}  // namespace clusterq
