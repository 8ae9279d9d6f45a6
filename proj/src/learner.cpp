#include "clusterq/learner.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace clusterq {

namespace {

// Traces below this are flushed to zero; keeps the decay loop out of denormals.
constexpr double kTraceFlush = 1e-100;

}  // namespace

ObjectiveSpec ObjectiveSpec::parse(std::string_view text, ObjectiveKind kind) {
  ObjectiveSpec s;
  s.kind = kind;
  for (char c : text) {
    switch (c) {
      case '0': s.pattern.push_back(Trit::Zero); break;
      case '1': s.pattern.push_back(Trit::One); break;
      case '*':
      case 'x':
      case 'X': s.pattern.push_back(Trit::DontCare); break;
      default: throw std::invalid_argument("objective pattern: unexpected character '" + std::string(1, c) + "'");
    }
  }
  if (s.pattern.empty()) throw std::invalid_argument("objective pattern: empty");
  return s;
}

std::string ObjectiveSpec::to_string() const {
  std::string out;
  for (Trit t : pattern) out.push_back(t == Trit::Zero ? '0' : t == Trit::One ? '1' : '*');
  return out;
}

bool matches(const ObjectiveSpec& spec, std::span<const std::uint8_t> env) {
  if (spec.pattern.size() != env.size()) throw std::invalid_argument("matches: dimension mismatch");
  for (std::size_t j = 0; j < env.size(); ++j) {
    const Trit t = spec.pattern[j];
    if (t == Trit::DontCare) continue;
    if ((t == Trit::One) != (env[j] != 0)) return false;
  }
  return true;
}

double compute_reward(const ObjectiveSpec& spec, std::span<const std::uint8_t> env_next, bool bumped,
                      const RewardConfig& cfg) {
  const double outcome = matches(spec, env_next) ? cfg.goal_reward : cfg.living_penalty;
  return bumped ? outcome + cfg.bump_penalty : outcome;
}

void LearnerParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("learner: alpha must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("learner: gamma must lie in [0, 1)");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("learner: lambda must lie in [0, 1]");
  if (max_active < 1) throw std::invalid_argument("learner: max_active must be >= 1");
}

double q_value(const WeightTable& w, std::span<const int> active, int action) {
  const auto row = w.row(action);
  double q = 0.0;
  for (int i : active) q += row[static_cast<std::size_t>(i)];
  return q;
}

std::pair<int, double> max_q(const WeightTable& w, std::span<const int> active) {
  int best = 0;
  double best_q = q_value(w, active, 0);
  for (int a = 1; a < w.actions(); ++a) {
    const double q = q_value(w, active, a);
    if (q > best_q) {
      best_q = q;
      best = a;
    }
  }
  return {best, best_q};
}

double td_update(WeightTable& w, TraceTable& e, const LearnerParams& p, std::span<const int> s_active,
                 int action, double reward, std::span<const int> next_active, bool terminal,
                 bool behavior_was_greedy) {
  auto trace_row = e.row(action);
  for (int i : s_active) trace_row[static_cast<std::size_t>(i)] = 1.0;

  double delta = reward - q_value(w, s_active, action);
  if (!terminal) delta += p.gamma * max_q(w, next_active).second;
  if (!std::isfinite(delta)) throw DivergenceError("td_update: non-finite TD error (weights diverged)");

  const double step = p.step_size() * delta;
  const double decay = p.gamma * p.lambda;
  auto& wr = w.raw();
  auto& er = e.raw();
  const bool cut = p.watkins_cut && !behavior_was_greedy;
  for (std::size_t k = 0; k < wr.size(); ++k) {
    const double ek = er[k];
    if (ek == 0.0) continue;
    wr[k] += step * ek;
    const double next = cut ? 0.0 : decay * ek;
    er[k] = next < kTraceFlush ? 0.0 : next;
  }
  return delta;
}

int greedy_action(const WeightTable& w, std::span<const int> active, Rng& rng) {
  std::array<int, 64> tied{};
  int n_tied = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < w.actions(); ++a) {
    const double q = q_value(w, active, a);
    if (q > best) {
      best = q;
      n_tied = 0;
    }
    if (q == best && n_tied < static_cast<int>(tied.size())) tied[static_cast<std::size_t>(n_tied++)] = a;
  }
  if (n_tied == 1) return tied[0];
  std::uniform_int_distribution<int> pick(0, n_tied - 1);
  return tied[static_cast<std::size_t>(pick(rng))];
}

bool is_greedy(const WeightTable& w, std::span<const int> active, int action) {
  return q_value(w, active, action) >= max_q(w, active).second;
}

int epsilon_greedy(const WeightTable& w, std::span<const int> active, double epsilon, Rng& rng) {
  if (epsilon > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < epsilon) {
      std::uniform_int_distribution<int> pick(0, w.actions() - 1);
      return pick(rng);
    }
  }
  return greedy_action(w, active, rng);
}

ObjectiveLearner::ObjectiveLearner(ObjectiveSpec spec, int actions, int features)
    : spec_(std::move(spec)), weights_(actions, features), traces_(actions, features) {}

double ObjectiveLearner::observe(const LearnerParams& p, const RewardConfig& rc,
                                 std::span<const int> s_active, int action,
                                 std::span<const int> next_active,
                                 std::span<const std::uint8_t> env_next, bool bumped) {
  const bool greedy = !p.watkins_cut || is_greedy(weights_, s_active, action);
  const bool own_goal = matches(spec_, env_next);
  const double reward = compute_reward(spec_, env_next, bumped, rc);
  const double delta = td_update(weights_, traces_, p, s_active, action, reward, next_active, own_goal, greedy);
  record_td(delta);
  return delta;
}

}  // namespace clusterq
