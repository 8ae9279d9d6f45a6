#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "clusterq/learner.hpp"
#include "clusterq/orchestrator.hpp"
#include "clusterq/world.hpp"

namespace clusterq {

struct EvalConfig {
  double acceptance_ratio = 1.5;
  double convergence_threshold = 0.5;
  int rollout_cap = 500;
  std::uint64_t tie_seed = 0x5eedULL;

  void validate() const;
};

/// 8-connected cell graph used as the shortest-path reference. Each move
/// costs one step regardless of direction.
struct GridGraph {
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> blocked;
  std::vector<std::uint8_t> goal;
  /// Bit k set when the move in direction k (Action order N..NW) is open.
  std::vector<std::uint8_t> moves;

  int index(int i, int j) const { return j * nx + i; }
  int size() const { return nx * ny; }

  /// Cells are blocked when their centre lies in an obstacle; a move is open
  /// when the segment between the two centres misses every obstacle. Goal
  /// cells are those whose noiseless F_e satisfies `objective` under some
  /// compass heading.
  static GridGraph from_map(const WorldMap& map, const ObjectiveSpec& objective);
};

/// Cell offsets in Action order N, NE, E, SE, S, SW, W, NW.
inline constexpr int kCellDx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
inline constexpr int kCellDy[8] = {1, 1, 0, -1, -1, -1, 0, 1};

/// A* with the Chebyshev distance to the nearest goal cell as heuristic.
/// nullopt when no goal is reachable.
std::optional<int> astar_length(const GridGraph& g, int start_cell);
std::optional<int> astar_length(const WorldMap& map, int cell_x, int cell_y, const ObjectiveSpec& objective);

struct PathResult {
  int length = 0;
  bool reached = false;
  std::vector<Vec2> trajectory;
};

/// Noiseless greedy rollout until the objective is met or `cap` steps.
PathResult greedy_rollout(const WeightTable& w, const ObjectiveSpec& objective, const AgentState& start,
                          const WorldMap& map, int cap, Rng& tie_rng, bool keep_trajectory = false);

struct StartEval {
  int cell_x = 0;
  int cell_y = 0;
  int astar = 0;
  int rollout = 0;
  bool reached = false;
  bool acceptable = false;
};

/// Start grid and reference path lengths for one (map, objective) pair.
class CoverageGrid {
 public:
  CoverageGrid(const WorldMap& map, ObjectiveSpec objective);

  const WorldMap& map() const { return map_; }
  const ObjectiveSpec& objective() const { return objective_; }
  const GridGraph& graph() const { return graph_; }
  /// Valid starts: free, non-goal, goal-reachable cells.
  const std::vector<int>& starts() const { return starts_; }
  int astar(std::size_t k) const { return astar_[k]; }

 private:
  WorldMap map_;
  ObjectiveSpec objective_;
  GridGraph graph_;
  std::vector<int> starts_;
  std::vector<int> astar_;
};

enum class Exec : std::uint8_t { Serial, OpenMP };

/// Per-start evaluation. Each start draws tie-breaks from its own stream
/// seeded by (tie_seed, cell index), so both execution modes agree exactly.
/// `acceptability_only` stops each rollout once it can no longer be
/// acceptable; rollout lengths are then truncated but `acceptable` is exact.
std::vector<StartEval> evaluate_starts(const WeightTable& w, const CoverageGrid& grid, const EvalConfig& cfg,
                                       Exec exec = Exec::OpenMP, bool acceptability_only = false);

/// Percentage of valid starts whose greedy path reaches the goal within
/// acceptance_ratio x A* steps.
double coverage_percentage(const WeightTable& w, const CoverageGrid& grid, const EvalConfig& cfg,
                           Exec exec = Exec::OpenMP);

/// Trains `run` one episode at a time until the primary's coverage exceeds
/// the convergence threshold. Returns the number of episodes trained (0 if
/// already converged) or nullopt after `budget` episodes.
std::optional<int> episodes_to_convergence(Run& run, const CoverageGrid& grid, const EvalConfig& cfg,
                                           int budget);

/// Seed for an independent substream.
std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index);

}  // namespace clusterq
