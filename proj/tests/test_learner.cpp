#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "clusterq/learner.hpp"
#include "gridworld.hpp"

using namespace clusterq;

namespace {

LearnerParams raw_params(double alpha = 0.3, double gamma = 0.9, double lambda = 0.9) {
  LearnerParams p;
  p.alpha = alpha;
  p.gamma = gamma;
  p.lambda = lambda;
  p.normalize_step = false;
  p.watkins_cut = false;
  return p;
}

const std::vector<std::uint8_t> env(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("q_value: zero weights, sum of ones, dense dot product") {
  WeightTable w(kNumActions, 64);
  const std::vector<int> active{0, 10, 40};
  CHECK(q_value(w, active, 3) == 0.0);

  for (double& x : w.row(index_of(Action::E))) x = 1.0;
  const std::vector<int> two{4 + 7, 34 + 2};
  CHECK(q_value(w, two, index_of(Action::E)) == 2.0);

  Rng rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  std::bernoulli_distribution bit(0.2);
  for (double& x : w.raw()) x = u(rng);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> act;
    std::vector<double> dense(64, 0.0);
    for (int i = 0; i < 64; ++i)
      if (bit(rng)) {
        act.push_back(i);
        dense[static_cast<std::size_t>(i)] = 1.0;
      }
    for (int a = 0; a < kNumActions; ++a) {
      double dot = 0;
      for (int i = 0; i < 64; ++i) dot += w.at(a, i) * dense[static_cast<std::size_t>(i)];
      CHECK(q_value(w, act, a) == doctest::Approx(dot).epsilon(1e-12));
    }
  }
}

TEST_CASE("matches: don't-care, exact match, mismatch") {
  CHECK(matches(ObjectiveSpec::parse("***1"), env({1, 0, 0, 1})));
  CHECK(matches(ObjectiveSpec::parse("0100"), env({0, 1, 0, 0})));
  CHECK_FALSE(matches(ObjectiveSpec::parse("0100"), env({1, 1, 0, 0})));
  CHECK(ObjectiveSpec::parse("x1*0").to_string() == "*1*0");
  CHECK_THROWS_AS(ObjectiveSpec::parse("01a0"), std::invalid_argument);
}

TEST_CASE("compute_reward: goal, living penalty, additive bump") {
  const RewardConfig rc;
  const auto spec = ObjectiveSpec::parse("***1");
  CHECK(compute_reward(spec, env({0, 0, 0, 1}), false, rc) == 100.0);
  CHECK(compute_reward(spec, env({0, 0, 0, 0}), false, rc) == -10.0);
  CHECK(compute_reward(spec, env({1, 0, 0, 0}), true, rc) == -110.0);
  CHECK(compute_reward(spec, env({1, 0, 0, 1}), true, rc) == 0.0);

  // Only the four composed values ever occur.
  Rng rng(2);
  std::bernoulli_distribution bit(0.5);
  for (int i = 0; i < 1000; ++i) {
    const auto e = env({bit(rng), bit(rng), bit(rng), bit(rng)});
    const double r = compute_reward(spec, e, bit(rng), rc);
    REQUIRE((r == 100.0 || r == -10.0 || r == -110.0 || r == 0.0));
  }
}

TEST_CASE("td_update: terminal step from zero weights writes alpha*R on active features") {
  const LearnerParams p = raw_params();
  WeightTable w(kNumActions, 64);
  TraceTable e(kNumActions, 64);
  const std::vector<int> s{1, 4 + 5, 34 + 6};
  const std::vector<int> s2{4 + 6, 34 + 6};
  const double d = td_update(w, e, p, s, 2, 100.0, s2, true, true);
  CHECK(d == 100.0);
  for (int a = 0; a < kNumActions; ++a)
    for (int i = 0; i < 64; ++i) {
      const bool on = a == 2 && std::find(s.begin(), s.end(), i) != s.end();
      CHECK(w.at(a, i) == doctest::Approx(on ? 0.3 * 100.0 : 0.0));
    }
}

TEST_CASE("td_update: lambda = 0 leaves no traces") {
  const LearnerParams p = raw_params(0.3, 0.9, 0.0);
  WeightTable w(kNumActions, 64);
  TraceTable e(kNumActions, 64);
  const std::vector<int> s{0, 5, 40};
  td_update(w, e, p, s, 4, -10.0, s, false, true);
  for (double x : e.raw()) CHECK(x == 0.0);
}

TEST_CASE("td_update: a feature active only at step 1 carries trace 0.81 into step 2") {
  const LearnerParams p = raw_params(0.3, 0.9, 0.9);
  WeightTable w(kNumActions, 64);
  TraceTable e(kNumActions, 64);
  const std::vector<int> s1{4 + 1, 34 + 1};
  const std::vector<int> s2{4 + 2, 34 + 1};
  td_update(w, e, p, s1, 0, -10.0, s2, false, true);
  CHECK(e.at(0, 4 + 1) == doctest::Approx(0.81));
  const double w_before = w.at(0, 4 + 1);
  const double d = td_update(w, e, p, s2, 0, -10.0, s1, false, true);
  CHECK(w.at(0, 4 + 1) - w_before == doctest::Approx(0.3 * d * 0.81));
}

TEST_CASE("td_update: Watkins cut clears traces after a non-greedy action") {
  LearnerParams p = raw_params();
  p.watkins_cut = true;
  WeightTable w(kNumActions, 64);
  TraceTable e(kNumActions, 64);
  const std::vector<int> s{4, 34};
  td_update(w, e, p, s, 1, -10.0, s, false, false);
  for (double x : e.raw()) CHECK(x == 0.0);
  td_update(w, e, p, s, 1, -10.0, s, false, true);
  CHECK(e.at(1, 4) == doctest::Approx(0.81));
}

TEST_CASE("td_update: non-finite TD error signals divergence") {
  const LearnerParams p = raw_params();
  WeightTable w(kNumActions, 64);
  TraceTable e(kNumActions, 64);
  w.at(0, 4) = std::numeric_limits<double>::infinity();
  const std::vector<int> s{4, 34};
  CHECK_THROWS_AS(td_update(w, e, p, s, 0, 1.0, s, true, true), DivergenceError);
}

TEST_CASE("normalized step size") {
  LearnerParams p;
  p.max_active = 6;
  CHECK(p.step_size() == doctest::Approx(0.3 * (1 - 0.81) / 6));
  p.normalize_step = false;
  CHECK(p.step_size() == 0.3);
  p.alpha = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("traces stay in [0, 1] under random updates") {
  for (bool cut : {false, true}) {
    LearnerParams p;
    p.watkins_cut = cut;
    WeightTable w(kNumActions, 64);
    TraceTable e(kNumActions, 64);
    Rng rng(9);
    std::uniform_int_distribution<int> feat(0, 29), act(0, kNumActions - 1);
    std::uniform_real_distribution<double> rew(-110, 100);
    std::bernoulli_distribution bit(0.5);
    for (int t = 0; t < 5000; ++t) {
      const std::vector<int> s{4 + feat(rng), 34 + feat(rng)};
      const std::vector<int> s2{4 + feat(rng), 34 + feat(rng)};
      td_update(w, e, p, s, act(rng), rew(rng), s2, bit(rng), bit(rng));
      for (double x : e.raw()) REQUIRE((x >= 0.0 && x <= 1.0));
      for (double x : w.raw()) REQUIRE(std::isfinite(x));
    }
  }
}

TEST_CASE("greedy_action: all tied, unique argmax, two-way tie statistics") {
  WeightTable w(kNumActions, 64);
  const std::vector<int> s{4, 34};
  Rng rng(4);
  std::array<int, kNumActions> hist{};
  for (int i = 0; i < 9000; ++i) ++hist[static_cast<std::size_t>(greedy_action(w, s, rng))];
  for (int h : hist) CHECK(h == doctest::Approx(1000).epsilon(0.15));

  w.at(index_of(Action::E), 4) = 1.0;
  CHECK(greedy_action(w, s, rng) == index_of(Action::E));

  w.at(index_of(Action::N), 4) = 1.0;
  int n_e = 0;
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) n_e += greedy_action(w, s, rng) == index_of(Action::E);
  CHECK(static_cast<double>(n_e) / draws == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("epsilon_greedy: pure exploration, pure greed and the mixture") {
  WeightTable w(kNumActions, 64);
  const std::vector<int> s{4, 34};
  w.at(index_of(Action::E), 4) = 1.0;
  Rng rng(8);
  const int draws = 100000;
  std::array<int, kNumActions> hist{};
  for (int i = 0; i < draws; ++i) ++hist[static_cast<std::size_t>(epsilon_greedy(w, s, 1.0, rng))];
  for (int h : hist) CHECK(std::abs(static_cast<double>(h) / draws - 1.0 / 9.0) < 0.01);

  for (int i = 0; i < 100; ++i) REQUIRE(epsilon_greedy(w, s, 0.0, rng) == index_of(Action::E));

  int n_e = 0;
  for (int i = 0; i < draws; ++i) n_e += epsilon_greedy(w, s, 0.3, rng) == index_of(Action::E);
  CHECK(static_cast<double>(n_e) / draws == doctest::Approx(0.7 + 0.3 / 9).epsilon(0.01));
}

TEST_CASE("avg_td_error: running mean of |delta|") {
  ObjectiveLearner l(ObjectiveSpec::parse("0100"), kNumActions, 64);
  CHECK(l.avg_td_error() == 0.0);
  l.record_td(4);
  CHECK(l.avg_td_error() == 4.0);
  ObjectiveLearner m(ObjectiveSpec::parse("0100"), kNumActions, 64);
  m.record_td(2);
  m.record_td(-2);
  CHECK(m.avg_td_error() == 2.0);

  ObjectiveLearner r(ObjectiveSpec::parse("0100"), kNumActions, 64);
  Rng rng(6);
  std::normal_distribution<double> d(0, 30);
  double sum = 0;
  const int n = 5000;
  for (int i = 0; i < n; ++i) {
    const double x = d(rng);
    sum += std::abs(x);
    r.record_td(x);
  }
  CHECK(std::abs(r.avg_td_error() - sum / n) <= 1e-9 * (sum / n));
}

TEST_CASE("observe: own goal suppresses bootstrap, other learners keep it") {
  LearnerParams p = raw_params();
  const RewardConfig rc;
  ObjectiveLearner goal(ObjectiveSpec::parse("0100", ObjectiveKind::Secondary), kNumActions, 64);
  ObjectiveLearner other(ObjectiveSpec::parse("0010", ObjectiveKind::Secondary), kNumActions, 64);
  const std::vector<int> s{4, 34};
  const std::vector<int> s2{1, 5, 34};
  goal.weights().at(0, 5) = 50.0;
  other.weights().at(0, 5) = 50.0;
  const auto e2 = env({0, 1, 0, 0});
  CHECK(goal.observe(p, rc, s, 2, s2, e2, false) == 100.0);
  CHECK(other.observe(p, rc, s, 2, s2, e2, false) == doctest::Approx(-10.0 + 0.9 * 50.0));
}

TEST_CASE("tabular Q-learning reaches the value-iteration policy") {
  const WeightTable w = gridworld::learn(3000, 1);
  CHECK(gridworld::policy_mismatches(w) == 0);
}
