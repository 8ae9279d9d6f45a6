#pragma once
// Deterministic 5x5 gridworld with one-hot state features, learned by
// td_update and checked against value iteration.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "clusterq/learner.hpp"

namespace gridworld {

inline constexpr int kSide = 5;
inline constexpr int kStates = kSide * kSide;
inline constexpr int kGoal = kStates - 1;
inline constexpr int kActions = 4;  // N E S W
inline constexpr double kGamma = 0.9;
inline constexpr int kWall = 12;  // centre cell blocked

struct Outcome {
  int next;
  double reward;
  bool terminal;
};

inline Outcome transition(int s, int a) {
  static constexpr int dx[4] = {0, 1, 0, -1};
  static constexpr int dy[4] = {1, 0, -1, 0};
  const int x = s % kSide + dx[a];
  const int y = s / kSide + dy[a];
  int next = s;
  double r = -1.0;
  if (x < 0 || y < 0 || x >= kSide || y >= kSide || y * kSide + x == kWall) {
    r = -5.0;
  } else {
    next = y * kSide + x;
  }
  if (next == kGoal) return {next, 10.0, true};
  return {next, r, false};
}

/// Optimal Q by value iteration.
inline std::vector<std::array<double, kActions>> value_iteration() {
  std::vector<double> v(kStates, 0.0);
  std::vector<std::array<double, kActions>> q(kStates);
  for (int it = 0; it < 2000; ++it) {
    for (int s = 0; s < kStates; ++s) {
      if (s == kGoal || s == kWall) continue;
      for (int a = 0; a < kActions; ++a) {
        const Outcome o = transition(s, a);
        q[s][a] = o.reward + (o.terminal ? 0.0 : kGamma * v[o.next]);
      }
      v[s] = *std::max_element(q[s].begin(), q[s].end());
    }
  }
  return q;
}

/// Q-learning (lambda = 0) under a uniformly random behavior policy.
inline clusterq::WeightTable learn(int episodes, std::uint64_t seed) {
  clusterq::LearnerParams p;
  p.alpha = 0.1;
  p.gamma = kGamma;
  p.lambda = 0.0;
  p.normalize_step = false;
  clusterq::WeightTable w(kActions, kStates);
  clusterq::TraceTable e(kActions, kStates);
  clusterq::Rng rng(seed);
  std::uniform_int_distribution<int> start(0, kStates - 1);
  for (int ep = 0; ep < episodes; ++ep) {
    e.fill(0.0);
    int s = start(rng);
    while (s == kGoal || s == kWall) s = start(rng);
    for (int t = 0; t < 200; ++t) {
      const std::vector<int> sa{s};
      const int a = clusterq::epsilon_greedy(w, sa, 1.0, rng);
      const Outcome o = transition(s, a);
      const std::vector<int> na{o.next};
      clusterq::td_update(w, e, p, sa, a, o.reward, na, o.terminal, false);
      s = o.next;
      if (o.terminal) break;
    }
  }
  return w;
}

/// Number of non-terminal states whose learned greedy action is not optimal.
inline int policy_mismatches(const clusterq::WeightTable& w) {
  const auto q = value_iteration();
  int bad = 0;
  for (int s = 0; s < kStates; ++s) {
    if (s == kGoal || s == kWall) continue;
    const std::vector<int> sa{s};
    const int greedy = clusterq::max_q(w, sa).first;
    const double best = *std::max_element(q[s].begin(), q[s].end());
    if (q[s][greedy] < best - 1e-9) ++bad;
  }
  return bad;
}

}  // namespace gridworld
