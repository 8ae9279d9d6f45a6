#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "clusterq/orchestrator.hpp"

using namespace clusterq;

namespace {

RunParams small_params(GateMode g = GateMode::kAllElements) {
  RunParams p;
  p.cluster.gate = g;
  return p;
}

}  // namespace

TEST_CASE("secondary_spec_from_cluster binarizes at 0.5") {
  const std::vector<double> a{0.97, 0.02, 0.01, 0.0};
  CHECK(secondary_spec_from_cluster(a).to_string() == "1000");
  const std::vector<double> z{0, 0, 0, 0};
  CHECK(secondary_spec_from_cluster(z).to_string() == "0000");
  const std::vector<double> h{0.5, 0.49, 0.51, 0};
  const auto s = secondary_spec_from_cluster(h, 3);
  CHECK(s.to_string() == "1010");
  CHECK(s.kind == ObjectiveKind::Secondary);
  CHECK(s.source_cluster == 3u);
}

TEST_CASE("run_training: rejects zero episodes, clusters exist after the first episode") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(), 1);
  CHECK_THROWS_AS(run.run_training(0), std::invalid_argument);
  const auto s = run.run_training(1);
  CHECK(run.store().size() >= 1);
  CHECK(s.clusters_over_time.size() == 1);
}

TEST_CASE("learner-cluster bijection, monotone cluster series, episode termination") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(GateMode::kAnyElement), 3);
  run.params().max_steps = 300;
  const auto s = run.run_training(40);
  CHECK(run.secondaries().size() == run.store().size());
  for (std::size_t k = 0; k < run.secondaries().size(); ++k) CHECK(run.secondaries()[k].spec().source_cluster == k);
  CHECK(std::is_sorted(s.clusters_over_time.begin(), s.clusters_over_time.end()));
  CHECK(run.store().size() > 1);
  for (int steps : s.steps_per_episode) CHECK((steps >= 1 && steps <= 300));
  const int capped = static_cast<int>(std::count(s.steps_per_episode.begin(), s.steps_per_episode.end(), 300));
  CHECK(capped >= s.failed_episodes);
}

TEST_CASE("run_episode: every episode ends on the goal or at max_steps") {
  RunParams p = small_params();
  p.sensor_noise = false;
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), p, 5);
  for (int i = 0; i < 20; ++i) {
    const AgentState start = run.random_start();
    const auto log = run.run_episode(start, 150, true);
    if (log.reached) {
      CHECK(matches(ObjectiveSpec::parse("***1"), noiseless_env({log.records.back().x, log.records.back().y, 0},
                                                                 run.map())) == true);
    } else {
      CHECK(log.steps == 150);
    }
    CHECK(static_cast<int>(log.records.size()) == log.steps);
  }
}

TEST_CASE("run_episode: a start next to the goal with weights pointing at it ends in one step") {
  RunParams p = small_params();
  p.epsilon = 0.0;
  p.sensor_noise = false;
  const WorldMap m = canonical_map();
  Run run(m, ObjectiveSpec::parse("***1"), p, 1);
  // Target disc: centre (23, 22), radius 3. Start 1 unit west of its edge.
  const AgentState start{19.0, 22.0, 0.0};
  const auto f = extract_features(sense(start, m, nullptr), start, m);
  for (int i : f.active()) run.primary().weights().at(index_of(Action::E), i) = 1.0;
  const auto log = run.run_episode(start, 100, true);
  CHECK(log.reached);
  CHECK(log.steps == 1);
  CHECK(log.records[0].rewards[0] == 100.0);
}

TEST_CASE("run_episode: a start on the goal is rejected") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(), 1);
  run.params().sensor_noise = false;
  CHECK_THROWS_AS(run.run_episode({23, 22, 0}, 10), std::invalid_argument);
}

TEST_CASE("random starts avoid obstacles and the primary goal") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(), 2);
  for (int i = 0; i < 500; ++i) {
    const AgentState s = run.random_start();
    CHECK_FALSE(run.map().in_obstacle(s.position()));
    CHECK_FALSE(run.map().in_target(s.position()));
    CHECK(s.heading == 0.0);
  }
}

TEST_CASE("reproducibility: identical seeds give identical logs") {
  auto trace = [](std::uint64_t seed) {
    Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(GateMode::kAnyElement), seed);
    std::vector<StepRecord> recs;
    run.run_training(15, [&](const StepRecord& r) { recs.push_back(r); });
    return std::make_pair(recs, run.primary().weights());
  };
  const auto a = trace(42);
  const auto b = trace(42);
  REQUIRE(a.first.size() == b.first.size());
  for (std::size_t i = 0; i < a.first.size(); ++i) {
    REQUIRE(a.first[i].x == b.first[i].x);
    REQUIRE(a.first[i].y == b.first[i].y);
    REQUIRE(a.first[i].action == b.first[i].action);
    REQUIRE(a.first[i].rewards == b.first[i].rewards);
    REQUIRE(a.first[i].cluster == b.first[i].cluster);
  }
  CHECK(a.second == b.second);
}

TEST_CASE("behavior purity: secondaries never affect the primary trajectory") {
  RunParams with = small_params(GateMode::kAnyElement);
  RunParams without = with;
  without.discover = false;
  Run a(canonical_map(), ObjectiveSpec::parse("***1"), with, 11);
  Run b(canonical_map(), ObjectiveSpec::parse("***1"), without, 11);
  const auto sa = a.run_training(30);
  const auto sb = b.run_training(30);
  CHECK(a.secondaries().size() > 1);
  CHECK(b.secondaries().empty());
  CHECK(sa.steps_per_episode == sb.steps_per_episode);
  CHECK(a.primary().weights() == b.primary().weights());
}

TEST_CASE("serial and OpenMP fan-out give bit-identical weights") {
  RunParams serial = small_params(GateMode::kAnyElement);
  serial.fan_out = FanOut::Serial;
  RunParams par = serial;
  par.fan_out = FanOut::OpenMP;
  par.parallel_min_learners = 1;
  Run a(canonical_map(), ObjectiveSpec::parse("***1"), serial, 21);
  Run b(canonical_map(), ObjectiveSpec::parse("***1"), par, 21);
  a.run_training(25);
  b.run_training(25);
  REQUIRE(a.secondaries().size() == b.secondaries().size());
  for (std::size_t k = 0; k < a.secondaries().size(); ++k) {
    CHECK(a.secondaries()[k].weights() == b.secondaries()[k].weights());
    CHECK(a.secondaries()[k].avg_td_error() == b.secondaries()[k].avg_td_error());
  }
}

TEST_CASE("learner update order does not matter") {
  const LearnerParams lp;
  const RewardConfig rc;
  const std::vector<std::string> pats{"0000", "0100", "0010", "1000"};
  auto make = [&] {
    std::vector<ObjectiveLearner> v;
    for (const auto& p : pats) v.emplace_back(ObjectiveSpec::parse(p, ObjectiveKind::Secondary), kNumActions, 64);
    return v;
  };
  auto fwd = make();
  auto rev = make();
  Rng rng(13);
  std::uniform_int_distribution<int> bin(0, 29), act(0, 8);
  std::bernoulli_distribution bit(0.3);
  for (int t = 0; t < 2000; ++t) {
    const std::vector<int> s{4 + bin(rng), 34 + bin(rng)};
    const std::vector<int> s2{4 + bin(rng), 34 + bin(rng)};
    const std::vector<std::uint8_t> e2{bit(rng), bit(rng), bit(rng), 0};
    const int a = act(rng);
    const bool bumped = bit(rng);
    for (auto& l : fwd) l.observe(lp, rc, s, a, s2, e2, bumped);
    for (auto it = rev.rbegin(); it != rev.rend(); ++it) it->observe(lp, rc, s, a, s2, e2, bumped);
  }
  for (std::size_t k = 0; k < pats.size(); ++k) CHECK(fwd[k].weights() == rev[k].weights());
}

TEST_CASE("rank_objectives: singleton, ordering, sort oracle") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(), 1);
  CHECK_THROWS_AS(run.rank_objectives(), std::logic_error);
  auto add = [&](double err) {
    ObjectiveLearner l(ObjectiveSpec::parse("0000", ObjectiveKind::Secondary), kNumActions, 64);
    l.restore_stats(err, 1);
    run.secondaries().push_back(std::move(l));
  };
  add(5);
  CHECK(run.rank_objectives().size() == 1);
  add(2);
  const auto r = run.rank_objectives();
  CHECK(r[0].first == 1);
  CHECK(r[1].first == 0);

  Rng rng(17);
  std::uniform_int_distribution<int> e(0, 20);
  run.secondaries().clear();
  std::vector<std::pair<double, std::size_t>> oracle;
  for (std::size_t k = 0; k < 50; ++k) {
    const double err = e(rng);
    add(err);
    oracle.emplace_back(err, k);
  }
  std::sort(oracle.begin(), oracle.end());
  const auto ranked = run.rank_objectives();
  for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(ranked[i].first == oracle[i].second);
}

TEST_CASE("weights stay finite over 1000 canonical episodes") {
  Run run(canonical_map(), ObjectiveSpec::parse("***1"), small_params(GateMode::kAnyElement), 1);
  CHECK_NOTHROW(run.run_training(1000));
  for (double w : run.primary().weights().raw()) REQUIRE(std::isfinite(w));
  for (const auto& l : run.secondaries())
    for (double w : l.weights().raw()) REQUIRE(std::isfinite(w));
}
