#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "clusterq/world.hpp"

namespace clusterq {

/// Element of an objective pattern over F_e.
enum class Trit : std::uint8_t { Zero = 0, One = 1, DontCare = 2 };

enum class ObjectiveKind : std::uint8_t { Primary, Secondary };

struct ObjectiveSpec {
  std::vector<Trit> pattern;
  ObjectiveKind kind = ObjectiveKind::Primary;
  std::optional<std::size_t> source_cluster;

  /// Parses "01*1" style strings ('*' or 'x' is don't-care).
  static ObjectiveSpec parse(std::string_view text, ObjectiveKind kind = ObjectiveKind::Primary);
  std::string to_string() const;
};

bool matches(const ObjectiveSpec& spec, std::span<const std::uint8_t> env);

struct RewardConfig {
  double goal_reward = 100.0;
  double living_penalty = -10.0;
  double bump_penalty = -100.0;
};

double compute_reward(const ObjectiveSpec& spec, std::span<const std::uint8_t> env_next, bool bumped,
                      const RewardConfig& cfg);

struct LearnerParams {
  double alpha = 0.3;
  double gamma = 0.9;
  double lambda = 0.9;
  /// Zero all traces after a step whose action was not greedy for the learner.
  bool watkins_cut = false;
  /// Scale alpha by (1 - gamma*lambda) / max_active, the most any one
  /// update can add to a Q-value through a full trace.
  bool normalize_step = true;
  int max_active = 6;

  double step_size() const {
    return normalize_step ? alpha * (1.0 - gamma * lambda) / static_cast<double>(max_active) : alpha;
  }
  void validate() const;
};

/// Dense [actions x features] matrix, row-major by action.
class ActionFeatureTable {
 public:
  ActionFeatureTable() = default;
  ActionFeatureTable(int actions, int features)
      : actions_(actions), features_(features),
        data_(static_cast<std::size_t>(actions) * static_cast<std::size_t>(features), 0.0) {}

  int actions() const { return actions_; }
  int features() const { return features_; }
  double& at(int a, int i) { return data_[index(a, i)]; }
  double at(int a, int i) const { return data_[index(a, i)]; }
  std::span<double> row(int a) { return {data_.data() + index(a, 0), static_cast<std::size_t>(features_)}; }
  std::span<const double> row(int a) const {
    return {data_.data() + index(a, 0), static_cast<std::size_t>(features_)};
  }
  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }
  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const ActionFeatureTable&, const ActionFeatureTable&) = default;

 private:
  std::size_t index(int a, int i) const {
    return static_cast<std::size_t>(a) * static_cast<std::size_t>(features_) + static_cast<std::size_t>(i);
  }

  int actions_ = 0;
  int features_ = 0;
  std::vector<double> data_;
};

using WeightTable = ActionFeatureTable;
using TraceTable = ActionFeatureTable;

/// Raised when a TD error stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Q(s, a): sum of the action's weights over the active features of s.
double q_value(const WeightTable& w, std::span<const int> active, int action);

/// max_a Q(s, a); the arg is the lowest maximizing index.
std::pair<int, double> max_q(const WeightTable& w, std::span<const int> active);

/// One Q(lambda) step with replacing traces. `terminal` suppresses the
/// bootstrap term. Returns the TD error that was applied.
double td_update(WeightTable& w, TraceTable& e, const LearnerParams& p, std::span<const int> s_active,
                 int action, double reward, std::span<const int> next_active, bool terminal,
                 bool behavior_was_greedy);

/// Greedy action with uniform random tie-breaking.
int greedy_action(const WeightTable& w, std::span<const int> active, Rng& rng);

/// True if `action` attains max_a Q(s, a).
bool is_greedy(const WeightTable& w, std::span<const int> active, int action);

int epsilon_greedy(const WeightTable& w, std::span<const int> active, double epsilon, Rng& rng);

/// Value function for one objective plus its running TD-error statistics.
class ObjectiveLearner {
 public:
  ObjectiveLearner(ObjectiveSpec spec, int actions, int features);

  const ObjectiveSpec& spec() const { return spec_; }
  ObjectiveSpec& spec() { return spec_; }
  const WeightTable& weights() const { return weights_; }
  WeightTable& weights() { return weights_; }
  const TraceTable& traces() const { return traces_; }

  void reset_traces() { traces_.fill(0.0); }

  /// Reward for landing on `env_next`, then td_update. Terminal when the
  /// next observation satisfies this learner's own objective; greediness for
  /// the trace cut is judged against this learner's own Q.
  double observe(const LearnerParams& p, const RewardConfig& rc, std::span<const int> s_active,
                 int action, std::span<const int> next_active,
                 std::span<const std::uint8_t> env_next, bool bumped);

  /// Running mean of |delta| since creation (0 before the first update).
  double avg_td_error() const { return updates_ == 0 ? 0.0 : abs_td_sum_ / static_cast<double>(updates_); }
  std::uint64_t updates() const { return updates_; }

  void record_td(double delta) {
    abs_td_sum_ += std::abs(delta);
    ++updates_;
  }
  void restore_stats(double abs_sum, std::uint64_t updates) {
    abs_td_sum_ = abs_sum;
    updates_ = updates;
  }
  double abs_td_sum() const { return abs_td_sum_; }

 private:
  ObjectiveSpec spec_;
  WeightTable weights_;
  TraceTable traces_;
  double abs_td_sum_ = 0.0;
  std::uint64_t updates_ = 0;
};

}  // namespace clusterq
