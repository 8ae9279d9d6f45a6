#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clusterq/config.hpp"

namespace clusterq {

/// Seed of repetition r.
inline std::uint64_t repetition_seed(const RunConfig& cfg, int r) { return cfg.seed + static_cast<std::uint64_t>(r); }

/// Largest-count secondary whose current pattern equals `pattern`.
std::optional<std::size_t> find_named(const Run& run, const std::string& pattern);

// ---- train

struct TrainReport {
  RunSummary summary;
  double primary_coverage = 0.0;
  std::vector<double> secondary_coverage;
};

/// Writes snapshot.json, episodes.ndjson and train_summary.csv into `out_dir`.
TrainReport cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream* log);

// ---- cluster-count sweep

struct ClusterCell {
  double seed_variance = 0.0;
  double tolerance_n = 0.0;
  std::vector<std::size_t> final_count;
  /// First episode (1-based) after which the count no longer changed.
  std::vector<int> settled_after;
  double mean() const;
  double median() const;
};

std::vector<ClusterCell> sweep_clustering(const RunConfig& cfg);
void write_cluster_sweep(const std::string& out_dir, const RunConfig& cfg, const std::vector<ClusterCell>& cells);

// ---- coverage vs epsilon

struct CoverageCell {
  int episodes = 0;
  double epsilon = 0.0;
  std::string objective;  // "primary" or a named secondary
  std::vector<std::optional<double>> per_run;  // nullopt: not discovered
  std::optional<double> mean() const;
};

std::vector<CoverageCell> sweep_epsilon(const RunConfig& cfg);
void write_epsilon_sweep(const std::string& out_dir, const RunConfig& cfg, const std::vector<CoverageCell>& cells);

// ---- episodes to convergence

enum class Outcome : std::uint8_t { Converged, NotConverged, Missing };

struct ConvergenceResult {
  Outcome outcome = Outcome::Missing;
  int episodes = 0;
};

struct ConvergenceCell {
  double epsilon = 0.0;
  std::string objective;
  std::string role;  // "primary" (learned from scratch) or "secondary" (promoted)
  std::vector<ConvergenceResult> per_run;
  /// Mean over runs where the objective existed; non-converged runs count as
  /// the budget. nullopt when no run had the objective.
  std::optional<double> mean(int budget) const;
  int converged() const;
};

std::vector<ConvergenceCell> convergence_study(const RunConfig& cfg);
void write_convergence(const std::string& out_dir, const RunConfig& cfg, const std::vector<ConvergenceCell>& cells);

// ---- snapshot evaluation

struct ObjectiveEval {
  std::string name;
  std::string pattern;
  std::vector<StartEval> starts;
  double coverage = 0.0;
};

std::vector<ObjectiveEval> evaluate_snapshot(const RunConfig& cfg, const Run& run);
void write_snapshot_eval(const std::string& out_dir, const RunConfig& cfg, const std::vector<ObjectiveEval>& evals);

}  // namespace clusterq
