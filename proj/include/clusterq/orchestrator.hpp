#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "clusterq/clustering.hpp"
#include "clusterq/learner.hpp"
#include "clusterq/world.hpp"

namespace clusterq {

/// How the per-step secondary td_updates are executed. Both produce
/// bit-identical weights; Serial is the reference path.
enum class FanOut : std::uint8_t { Serial, OpenMP };

struct RunParams {
  LearnerParams learner;
  RewardConfig reward;
  ClusterParams cluster;
  double epsilon = 0.3;
  int max_steps = 2000;
  bool sensor_noise = true;
  /// When false no clustering happens and no secondary learners exist.
  bool discover = true;
  FanOut fan_out = FanOut::OpenMP;
  /// Learner count below which the OpenMP path still runs serially.
  int parallel_min_learners = 16;

  void validate() const;
};

struct StepRecord {
  std::uint64_t episode = 0;
  int step = 0;
  double x = 0.0;
  double y = 0.0;
  Action action = Action::Hold;
  bool bumped = false;
  /// Primary first, then one entry per secondary in cluster order.
  std::vector<double> rewards;
  std::size_t cluster = 0;
  bool cluster_created = false;
};

struct EpisodeLog {
  std::uint64_t episode = 0;
  int steps = 0;
  bool reached = false;
  std::vector<StepRecord> records;
};

using StepSink = std::function<void(const StepRecord&)>;

struct LearnerStats {
  std::size_t cluster = 0;
  std::string pattern;
  double avg_td_error = 0.0;
  std::uint64_t updates = 0;
};

struct RunSummary {
  int episodes = 0;
  /// Cluster count after each episode.
  std::vector<std::size_t> clusters_over_time;
  std::vector<int> steps_per_episode;
  int failed_episodes = 0;
  double primary_avg_td_error = 0.0;
  std::vector<LearnerStats> secondaries;
};

/// Binarizes a cluster mean at 0.5 into a fully specified pattern.
ObjectiveSpec secondary_spec_from_cluster(std::span<const double> mean,
                                          std::optional<std::size_t> source = std::nullopt);

/// State of one learning run: the behavior (primary) learner, one learner
/// per discovered cluster, the cluster store, and the single seeded stream.
class Run {
 public:
  Run(WorldMap map, ObjectiveSpec primary, RunParams params, std::uint64_t seed);

  /// Starts from given primary weights (a promoted secondary, for instance).
  Run(WorldMap map, ObjectiveSpec primary, const WeightTable& primary_weights, RunParams params,
      std::uint64_t seed);

  /// One episode from `start`. `record` keeps the per-step records in the
  /// returned log; `sink` receives them either way.
  EpisodeLog run_episode(const AgentState& start, int max_steps, bool record = false,
                         const StepSink& sink = {});

  /// n_episodes episodes from random non-goal starts, traces reset each time.
  RunSummary run_training(int n_episodes, const StepSink& sink = {});

  /// Uniform start outside obstacles whose noiseless F_e misses the primary.
  AgentState random_start();

  /// Secondaries sorted by ascending average |TD error|, ties by index.
  std::vector<std::pair<std::size_t, double>> rank_objectives() const;

  const WorldMap& map() const { return map_; }
  const RunParams& params() const { return params_; }
  RunParams& params() { return params_; }
  const ObjectiveLearner& primary() const { return primary_; }
  ObjectiveLearner& primary() { return primary_; }
  const std::vector<ObjectiveLearner>& secondaries() const { return secondaries_; }
  std::vector<ObjectiveLearner>& secondaries() { return secondaries_; }
  const ClusterStore& store() const { return store_; }
  ClusterStore& store() { return store_; }
  std::uint64_t episode_counter() const { return episode_counter_; }
  std::uint64_t step_counter() const { return step_counter_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  void set_counters(std::uint64_t episodes, std::uint64_t steps) {
    episode_counter_ = episodes;
    step_counter_ = steps;
  }

  /// Drops all secondaries and clusters (used by behavior-purity checks).
  void clear_secondaries();

 private:
  FeatureVector observe_features(const AgentState& s);
  void update_secondaries(std::span<const int> s_active, int action, std::span<const int> next_active,
                          std::span<const std::uint8_t> env_next, bool bumped, std::vector<double>* rewards);

  WorldMap map_;
  RunParams params_;
  ObjectiveLearner primary_;
  std::vector<ObjectiveLearner> secondaries_;
  ClusterStore store_;
  std::uint64_t episode_counter_ = 0;
  std::uint64_t step_counter_ = 0;
  Rng rng_;
};

}  // namespace clusterq
