#include "clusterq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <queue>
#include <stdexcept>

namespace clusterq {

void EvalConfig::validate() const {
  if (!(acceptance_ratio > 1.0)) throw std::invalid_argument("eval: acceptance_ratio must be > 1");
  if (!(convergence_threshold > 0.0 && convergence_threshold < 1.0))
    throw std::invalid_argument("eval: convergence_threshold must lie in (0, 1)");
  if (rollout_cap < 1) throw std::invalid_argument("eval: rollout_cap must be >= 1");
}

std::uint64_t substream_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

GridGraph GridGraph::from_map(const WorldMap& map, const ObjectiveSpec& objective) {
  GridGraph g;
  g.nx = map.x_bins();
  g.ny = map.y_bins();
  g.blocked.assign(static_cast<std::size_t>(g.size()), 0);
  g.goal.assign(static_cast<std::size_t>(g.size()), 0);
  g.moves.assign(static_cast<std::size_t>(g.size()), 0);
  auto centre = [](int i, int j) { return Vec2{i + 0.5, j + 0.5}; };

  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = static_cast<std::size_t>(g.index(i, j));
      const Vec2 p = centre(i, j);
      if (map.in_obstacle(p)) {
        g.blocked[c] = 1;
        continue;
      }
      for (int k = 0; k < 8; ++k) {
        const AgentState s{p.x, p.y, heading_of(action_at(k))};
        if (matches(objective, noiseless_env(s, map))) {
          g.goal[c] = 1;
          break;
        }
      }
    }
  }
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const auto c = static_cast<std::size_t>(g.index(i, j));
      if (g.blocked[c]) continue;
      for (int k = 0; k < 8; ++k) {
        const int ni = i + kCellDx[k];
        const int nj = j + kCellDy[k];
        if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ny) continue;
        if (g.blocked[static_cast<std::size_t>(g.index(ni, nj))]) continue;
        const Vec2 a = centre(i, j);
        const Vec2 b = centre(ni, nj);
        const bool hit = std::any_of(map.obstacles.begin(), map.obstacles.end(),
                                     [&](const Rect& r) { return segment_intersects(r, a, b); });
        if (!hit) g.moves[c] |= static_cast<std::uint8_t>(1u << k);
      }
    }
  }
  return g;
}

namespace {

/// Chebyshev distance from every cell to the nearest goal cell, ignoring walls.
std::vector<int> chebyshev_to_goal(const GridGraph& g) {
  std::vector<int> goals;
  for (int c = 0; c < g.size(); ++c)
    if (g.goal[static_cast<std::size_t>(c)]) goals.push_back(c);
  std::vector<int> h(static_cast<std::size_t>(g.size()), std::numeric_limits<int>::max());
  for (int c = 0; c < g.size(); ++c) {
    const int ci = c % g.nx;
    const int cj = c / g.nx;
    for (int q : goals) {
      const int d = std::max(std::abs(ci - q % g.nx), std::abs(cj - q / g.nx));
      h[static_cast<std::size_t>(c)] = std::min(h[static_cast<std::size_t>(c)], d);
    }
  }
  return h;
}

std::optional<int> astar_with(const GridGraph& g, int start, const std::vector<int>& h) {
  if (start < 0 || start >= g.size()) throw std::out_of_range("astar: start outside grid");
  if (g.blocked[static_cast<std::size_t>(start)]) throw std::invalid_argument("astar: start cell is blocked");
  if (h[static_cast<std::size_t>(start)] == std::numeric_limits<int>::max()) return std::nullopt;

  using Node = std::pair<int, int>;  // (f, cell)
  std::priority_queue<Node, std::vector<Node>, std::greater<>> open;
  std::vector<int> dist(static_cast<std::size_t>(g.size()), std::numeric_limits<int>::max());
  dist[static_cast<std::size_t>(start)] = 0;
  open.emplace(h[static_cast<std::size_t>(start)], start);
  while (!open.empty()) {
    const auto [f, c] = open.top();
    open.pop();
    const int gc = dist[static_cast<std::size_t>(c)];
    if (f > gc + h[static_cast<std::size_t>(c)]) continue;  // stale
    if (g.goal[static_cast<std::size_t>(c)]) return gc;
    const int ci = c % g.nx;
    const int cj = c / g.nx;
    const std::uint8_t mask = g.moves[static_cast<std::size_t>(c)];
    for (int k = 0; k < 8; ++k) {
      if (!(mask & (1u << k))) continue;
      const int n = g.index(ci + kCellDx[k], cj + kCellDy[k]);
      if (gc + 1 < dist[static_cast<std::size_t>(n)]) {
        dist[static_cast<std::size_t>(n)] = gc + 1;
        open.emplace(gc + 1 + h[static_cast<std::size_t>(n)], n);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<int> astar_length(const GridGraph& g, int start_cell) {
  return astar_with(g, start_cell, chebyshev_to_goal(g));
}

std::optional<int> astar_length(const WorldMap& map, int cell_x, int cell_y, const ObjectiveSpec& objective) {
  const GridGraph g = GridGraph::from_map(map, objective);
  if (cell_x < 0 || cell_y < 0 || cell_x >= g.nx || cell_y >= g.ny) throw std::out_of_range("astar: cell outside map");
  return astar_length(g, g.index(cell_x, cell_y));
}

PathResult greedy_rollout(const WeightTable& w, const ObjectiveSpec& objective, const AgentState& start,
                          const WorldMap& map, int cap, Rng& tie_rng, bool keep_trajectory) {
  PathResult out;
  AgentState s = start;
  if (keep_trajectory) out.trajectory.push_back(s.position());
  FeatureVector f = extract_features(sense(s, map, nullptr), s, map);
  if (matches(objective, f.env)) {
    out.reached = true;
    return out;
  }
  for (int t = 0; t < cap; ++t) {
    const int a = greedy_action(w, f.active(), tie_rng);
    s = step(s, action_at(a), map).state;
    ++out.length;
    if (keep_trajectory) out.trajectory.push_back(s.position());
    f = extract_features(sense(s, map, nullptr), s, map);
    if (matches(objective, f.env)) {
      out.reached = true;
      break;
    }
  }
  return out;
}

CoverageGrid::CoverageGrid(const WorldMap& map, ObjectiveSpec objective)
    : map_(map), objective_(std::move(objective)), graph_(GridGraph::from_map(map_, objective_)) {
  const std::vector<int> h = chebyshev_to_goal(graph_);
  for (int c = 0; c < graph_.size(); ++c) {
    const auto cu = static_cast<std::size_t>(c);
    if (graph_.blocked[cu] || graph_.goal[cu]) continue;
    if (auto len = astar_with(graph_, c, h)) {
      starts_.push_back(c);
      astar_.push_back(*len);
    }
  }
}

namespace {

StartEval evaluate_one(const WeightTable& w, const CoverageGrid& grid, const EvalConfig& cfg, std::size_t k,
                       bool acceptability_only) {
  const int c = grid.starts()[k];
  StartEval ev;
  ev.cell_x = c % grid.graph().nx;
  ev.cell_y = c / grid.graph().nx;
  ev.astar = grid.astar(k);
  Rng tie(substream_seed(cfg.tie_seed, static_cast<std::uint64_t>(c)));
  const AgentState start{ev.cell_x + 0.5, ev.cell_y + 0.5, 0.0};
  int cap = cfg.rollout_cap;
  // Past ratio x A* the start is unacceptable whatever happens next.
  if (acceptability_only)
    cap = std::min(cap, static_cast<int>(std::floor(cfg.acceptance_ratio * ev.astar + 1e-9)));
  const PathResult r = greedy_rollout(w, grid.objective(), start, grid.map(), cap, tie);
  ev.rollout = r.length;
  ev.reached = r.reached;
  ev.acceptable = r.reached && static_cast<double>(r.length) <= cfg.acceptance_ratio * ev.astar;
  return ev;
}

}  // namespace

std::vector<StartEval> evaluate_starts(const WeightTable& w, const CoverageGrid& grid, const EvalConfig& cfg,
                                       Exec exec, bool acceptability_only) {
  const auto n = static_cast<std::ptrdiff_t>(grid.starts().size());
  std::vector<StartEval> out(static_cast<std::size_t>(n));
  if (exec == Exec::Serial) {
    for (std::ptrdiff_t k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = evaluate_one(w, grid, cfg, static_cast<std::size_t>(k), acceptability_only);
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = evaluate_one(w, grid, cfg, static_cast<std::size_t>(k), acceptability_only);
  }
  return out;
}

double coverage_percentage(const WeightTable& w, const CoverageGrid& grid, const EvalConfig& cfg, Exec exec) {
  if (grid.starts().empty()) return 0.0;
  const auto evals = evaluate_starts(w, grid, cfg, exec, true);
  const auto ok = std::count_if(evals.begin(), evals.end(), [](const StartEval& e) { return e.acceptable; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(evals.size());
}

std::optional<int> episodes_to_convergence(Run& run, const CoverageGrid& grid, const EvalConfig& cfg, int budget) {
  const double threshold = 100.0 * cfg.convergence_threshold;
  if (coverage_percentage(run.primary().weights(), grid, cfg) > threshold) return 0;
  for (int ep = 1; ep <= budget; ++ep) {
    run.run_training(1);
    if (coverage_percentage(run.primary().weights(), grid, cfg) > threshold) return ep;
  }
  return std::nullopt;
}

}  // namespace clusterq
