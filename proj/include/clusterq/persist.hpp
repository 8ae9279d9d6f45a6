#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "clusterq/config.hpp"
#include "clusterq/orchestrator.hpp"

namespace clusterq {

/// Full run state (config, clusters, every learner, RNG, counters) as JSON.
/// Doubles are written in shortest round-trip form, so loading is exact.
nlohmann::ordered_json snapshot_json(const RunConfig& cfg, const Run& run);

struct LoadedSnapshot {
  RunConfig config;
  std::unique_ptr<Run> run;
};

/// Rebuilds a Run that continues exactly where the saved one stopped.
LoadedSnapshot run_from_snapshot(const nlohmann::json& j);

void save_snapshot(const std::string& path, const RunConfig& cfg, const Run& run);
LoadedSnapshot load_snapshot(const std::string& path);

/// One NDJSON line (without the newline) for a step record.
std::string step_record_line(const StepRecord& rec);

/// CSV writer whose first line is `# config_hash=<hex>,seed=<n>`.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const RunConfig& cfg, const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

/// Fixed-point formatting for table cells.
std::string fmt(double v, int digits = 4);

}  // namespace clusterq
