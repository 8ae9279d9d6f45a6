#include "clusterq/orchestrator.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace clusterq {

void RunParams::validate() const {
  learner.validate();
  cluster.validate();
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("run: epsilon must lie in [0, 1]");
  if (max_steps < 1) throw std::invalid_argument("run: max_steps must be >= 1");
}

ObjectiveSpec secondary_spec_from_cluster(std::span<const double> mean, std::optional<std::size_t> source) {
  ObjectiveSpec s;
  s.kind = ObjectiveKind::Secondary;
  s.source_cluster = source;
  s.pattern.reserve(mean.size());
  for (double m : mean) s.pattern.push_back(m >= kBinaryThreshold ? Trit::One : Trit::Zero);
  return s;
}

Run::Run(WorldMap map, ObjectiveSpec primary, RunParams params, std::uint64_t seed)
    : map_(std::move(map)),
      params_(params),
      primary_(std::move(primary), kNumActions, map_.feature_dim()),
      store_(params.cluster, static_cast<std::size_t>(map_.env_dim())),
      rng_(seed) {
  map_.validate();
  params_.learner.max_active = map_.env_dim() + 2;
  params_.validate();
  if (primary_.spec().pattern.size() != static_cast<std::size_t>(map_.env_dim()))
    throw std::invalid_argument("run: primary pattern length does not match F_e dimension");
}

Run::Run(WorldMap map, ObjectiveSpec primary, const WeightTable& primary_weights, RunParams params,
         std::uint64_t seed)
    : Run(std::move(map), std::move(primary), params, seed) {
  if (primary_weights.actions() != kNumActions || primary_weights.features() != map_.feature_dim())
    throw std::invalid_argument("run: primary weight table has the wrong shape");
  primary_.weights() = primary_weights;
}

FeatureVector Run::observe_features(const AgentState& s) {
  return extract_features(sense(s, map_, params_.sensor_noise ? &rng_ : nullptr), s, map_);
}

AgentState Run::random_start() {
  std::uniform_real_distribution<double> ux(0.0, map_.width);
  std::uniform_real_distribution<double> uy(0.0, map_.height);
  for (int attempt = 0; attempt < 1'000'000; ++attempt) {
    AgentState s{ux(rng_), uy(rng_), 0.0};
    if (map_.in_obstacle(s.position())) continue;
    if (matches(primary_.spec(), noiseless_env(s, map_))) continue;
    return s;
  }
  throw std::runtime_error("run: no non-goal start position found");
}

void Run::update_secondaries(std::span<const int> s_active, int action, std::span<const int> next_active,
                             std::span<const std::uint8_t> env_next, bool bumped, std::vector<double>* rewards) {
  const auto n = static_cast<std::ptrdiff_t>(secondaries_.size());
  const bool parallel = params_.fan_out == FanOut::OpenMP && n >= params_.parallel_min_learners;
  if (!parallel) {
    for (auto& l : secondaries_)
      l.observe(params_.learner, params_.reward, s_active, action, next_active, env_next, bumped);
  } else {
    std::exception_ptr failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      try {
        secondaries_[static_cast<std::size_t>(k)].observe(params_.learner, params_.reward, s_active, action,
                                                          next_active, env_next, bumped);
      } catch (...) {
#pragma omp critical(clusterq_fanout_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }
  if (rewards != nullptr) {
    for (const auto& l : secondaries_)
      rewards->push_back(compute_reward(l.spec(), env_next, bumped, params_.reward));
  }
}

EpisodeLog Run::run_episode(const AgentState& start, int max_steps, bool record, const StepSink& sink) {
  EpisodeLog log;
  log.episode = episode_counter_;
  AgentState state = start;
  FeatureVector f = observe_features(state);
  if (matches(primary_.spec(), f.env)) throw std::invalid_argument("run_episode: start satisfies the primary objective");
  std::vector<int> active = f.active();
  const bool want_records = record || static_cast<bool>(sink);

  for (int t = 0; t < max_steps; ++t) {
    const int a = epsilon_greedy(primary_.weights(), active, params_.epsilon, rng_);
    const StepResult moved = step(state, action_at(a), map_);
    FeatureVector f_next = observe_features(moved.state);
    std::vector<int> next_active = f_next.active();

    AssignResult cl;
    if (params_.discover) {
      cl = store_.assign(f_next.env_as_double());
      if (cl.created) {
        secondaries_.emplace_back(secondary_spec_from_cluster(store_.clusters()[cl.winner].mean, cl.winner),
                                  kNumActions, map_.feature_dim());
      } else {
        // The winner's mean moved; re-derive its pattern.
        secondaries_[cl.winner].spec() = secondary_spec_from_cluster(store_.clusters()[cl.winner].mean, cl.winner);
      }
    }

    StepRecord rec;
    std::vector<double>* rewards = nullptr;
    if (want_records) {
      rec.episode = episode_counter_;
      rec.step = t;
      rec.x = moved.state.x;
      rec.y = moved.state.y;
      rec.action = action_at(a);
      rec.bumped = moved.bumped;
      rec.cluster = cl.winner;
      rec.cluster_created = cl.created;
      rec.rewards.push_back(compute_reward(primary_.spec(), f_next.env, moved.bumped, params_.reward));
      rewards = &rec.rewards;
    }

    primary_.observe(params_.learner, params_.reward, active, a, next_active, f_next.env, moved.bumped);
    update_secondaries(active, a, next_active, f_next.env, moved.bumped, rewards);

    ++step_counter_;
    ++log.steps;
    state = moved.state;
    f = std::move(f_next);
    active = std::move(next_active);
    if (want_records) {
      if (sink) sink(rec);
      if (record) log.records.push_back(std::move(rec));
    }
    if (matches(primary_.spec(), f.env)) {
      log.reached = true;
      break;
    }
  }
  ++episode_counter_;
  return log;
}

RunSummary Run::run_training(int n_episodes, const StepSink& sink) {
  if (n_episodes < 1) throw std::invalid_argument("run_training: n_episodes must be >= 1");
  RunSummary summary;
  summary.clusters_over_time.reserve(static_cast<std::size_t>(n_episodes));
  for (int i = 0; i < n_episodes; ++i) {
    const AgentState start = random_start();
    primary_.reset_traces();
    for (auto& l : secondaries_) l.reset_traces();
    const EpisodeLog log = run_episode(start, params_.max_steps, false, sink);
    summary.steps_per_episode.push_back(log.steps);
    if (!log.reached) ++summary.failed_episodes;
    summary.clusters_over_time.push_back(store_.size());
  }
  summary.episodes = n_episodes;
  summary.primary_avg_td_error = primary_.avg_td_error();
  for (std::size_t k = 0; k < secondaries_.size(); ++k) {
    summary.secondaries.push_back(
        {k, secondaries_[k].spec().to_string(), secondaries_[k].avg_td_error(), secondaries_[k].updates()});
  }
  return summary;
}

std::vector<std::pair<std::size_t, double>> Run::rank_objectives() const {
  if (secondaries_.empty()) throw std::logic_error("rank_objectives: no secondary learners");
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(secondaries_.size());
  for (std::size_t k = 0; k < secondaries_.size(); ++k) out.emplace_back(k, secondaries_[k].avg_td_error());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  return out;
}

void Run::clear_secondaries() {
  secondaries_.clear();
  store_ = ClusterStore(params_.cluster, store_.dim());
}

}  // namespace clusterq
