#include "clusterq/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace clusterq {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

ojson rect_json(const Rect& r) { return ojson::array({r.x0, r.y0, r.x1, r.y1}); }

Rect rect_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected [x0, y0, x1, y1]");
  Rect r{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!r.valid()) throw ConfigError(where + ": rectangle has x0 > x1 or y0 > y1");
  return r;
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

const char* gate_name(GateMode g) { return g == GateMode::kAnyElement ? "any" : "all"; }

}  // namespace

void RunConfig::validate() const {
  try {
    map.validate();
    run.validate();
    eval.validate();
    const ObjectiveSpec p = primary_spec();
    if (p.pattern.size() != static_cast<std::size_t>(map.env_dim()))
      throw ConfigError("primary pattern length does not match the number of environment channels");
    for (const auto& [name, pat] : named) {
      const ObjectiveSpec s = ObjectiveSpec::parse(pat, ObjectiveKind::Secondary);
      if (s.pattern.size() != p.pattern.size()) throw ConfigError("secondary '" + name + "': wrong pattern length");
      for (Trit t : s.pattern)
        if (t == Trit::DontCare) throw ConfigError("secondary '" + name + "': don't-care not allowed");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (episodes < 1) throw ConfigError("episodes must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (sweeps.tolerance_n.empty() || sweeps.seed_variance.empty() || sweeps.epsilon.empty() ||
      sweeps.episode_counts.empty() || sweeps.convergence_epsilon.empty())
    throw ConfigError("sweep lists must be non-empty");
  for (double n : sweeps.tolerance_n)
    if (!(n > 0.0)) throw ConfigError("sweeps.tolerance_n entries must be > 0");
  for (double v : sweeps.seed_variance)
    if (!(v >= run.cluster.variance_floor)) throw ConfigError("sweeps.seed_variance entries must be >= variance_floor");
  auto check_eps = [](double e) {
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilon values must lie in [0, 1]");
  };
  check_eps(sweeps.cluster_epsilon);
  for (double e : sweeps.epsilon) check_eps(e);
  for (double e : sweeps.convergence_epsilon) check_eps(e);
  for (int c : sweeps.episode_counts)
    if (c < 1) throw ConfigError("sweeps.episode_counts entries must be >= 1");
  if (sweeps.convergence_budget < 1) throw ConfigError("sweeps.convergence_budget must be >= 1");
}

ojson to_json(const RunConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["episodes"] = c.episodes;
  j["runs"] = c.runs;
  j["max_steps"] = c.run.max_steps;
  j["epsilon"] = c.run.epsilon;
  j["sensor_noise"] = c.run.sensor_noise;
  j["primary"] = c.primary;
  ojson named = ojson::object();
  for (const auto& [k, v] : c.named) named[k] = v;
  j["secondaries"] = named;

  ojson m;
  m["width"] = c.map.width;
  m["height"] = c.map.height;
  ojson obs = ojson::array();
  for (const auto& r : c.map.obstacles) obs.push_back(rect_json(r));
  m["obstacles"] = obs;
  m["light"] = rect_json(c.map.light_region);
  m["rough"] = rect_json(c.map.rough_region);
  m["target_center"] = ojson::array({c.map.target_center.x, c.map.target_center.y});
  m["target_radius"] = c.map.target_radius;
  ojson extra = ojson::array();
  for (const auto& r : c.map.extra_regions) extra.push_back(rect_json(r));
  m["extra_regions"] = extra;
  j["map"] = m;

  const auto& l = c.run.learner;
  j["learner"] = {{"alpha", l.alpha}, {"gamma", l.gamma}, {"lambda", l.lambda},
                  {"watkins_cut", l.watkins_cut}, {"normalize_step", l.normalize_step}};
  const auto& r = c.run.reward;
  j["reward"] = {{"goal", r.goal_reward}, {"living", r.living_penalty}, {"bump", r.bump_penalty}};
  const auto& cl = c.run.cluster;
  j["clustering"] = {{"tolerance_n", cl.tolerance_n}, {"seed_variance", cl.seed_variance},
                     {"variance_floor", cl.variance_floor}, {"gate", gate_name(cl.gate)}};
  j["eval"] = {{"acceptance_ratio", c.eval.acceptance_ratio},
               {"convergence_threshold", c.eval.convergence_threshold},
               {"rollout_cap", c.eval.rollout_cap},
               {"tie_seed", c.eval.tie_seed}};
  const auto& s = c.sweeps;
  j["sweeps"] = {{"tolerance_n", s.tolerance_n},
                 {"seed_variance", s.seed_variance},
                 {"cluster_epsilon", s.cluster_epsilon},
                 {"epsilon", s.epsilon},
                 {"episode_counts", s.episode_counts},
                 {"convergence_epsilon", s.convergence_epsilon},
                 {"convergence_budget", s.convergence_budget}};
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j, {"seed", "episodes", "runs", "max_steps", "epsilon", "sensor_noise", "primary", "secondaries",
                       "map", "learner", "reward", "clustering", "eval", "sweeps"},
                   "config");
    read(j, "seed", c.seed);
    read(j, "episodes", c.episodes);
    read(j, "runs", c.runs);
    read(j, "max_steps", c.run.max_steps);
    read(j, "epsilon", c.run.epsilon);
    read(j, "sensor_noise", c.run.sensor_noise);
    read(j, "primary", c.primary);
    if (j.contains("secondaries")) {
      const json& s = j.at("secondaries");
      if (!s.is_object()) throw ConfigError("secondaries: expected an object of name -> pattern");
      c.named.clear();
      for (const auto& [k, v] : s.items()) c.named[k] = v.get<std::string>();
    }
    if (j.contains("map")) {
      const json& m = j.at("map");
      reject_unknown(m, {"width", "height", "obstacles", "light", "rough", "target_center", "target_radius",
                         "extra_regions"},
                     "map");
      read(m, "width", c.map.width);
      read(m, "height", c.map.height);
      if (m.contains("obstacles")) {
        c.map.obstacles.clear();
        for (const auto& r : m.at("obstacles")) c.map.obstacles.push_back(rect_from(r, "map.obstacles"));
      }
      if (m.contains("light")) c.map.light_region = rect_from(m.at("light"), "map.light");
      if (m.contains("rough")) c.map.rough_region = rect_from(m.at("rough"), "map.rough");
      if (m.contains("target_center")) {
        const json& t = m.at("target_center");
        if (!t.is_array() || t.size() != 2) throw ConfigError("map.target_center: expected [x, y]");
        c.map.target_center = {t[0].get<double>(), t[1].get<double>()};
      }
      read(m, "target_radius", c.map.target_radius);
      if (m.contains("extra_regions")) {
        c.map.extra_regions.clear();
        for (const auto& r : m.at("extra_regions")) c.map.extra_regions.push_back(rect_from(r, "map.extra_regions"));
      }
    }
    if (j.contains("learner")) {
      const json& l = j.at("learner");
      reject_unknown(l, {"alpha", "gamma", "lambda", "watkins_cut", "normalize_step"}, "learner");
      read(l, "alpha", c.run.learner.alpha);
      read(l, "gamma", c.run.learner.gamma);
      read(l, "lambda", c.run.learner.lambda);
      read(l, "watkins_cut", c.run.learner.watkins_cut);
      read(l, "normalize_step", c.run.learner.normalize_step);
    }
    if (j.contains("reward")) {
      const json& r = j.at("reward");
      reject_unknown(r, {"goal", "living", "bump"}, "reward");
      read(r, "goal", c.run.reward.goal_reward);
      read(r, "living", c.run.reward.living_penalty);
      read(r, "bump", c.run.reward.bump_penalty);
    }
    if (j.contains("clustering")) {
      const json& cl = j.at("clustering");
      reject_unknown(cl, {"tolerance_n", "seed_variance", "variance_floor", "gate"}, "clustering");
      read(cl, "tolerance_n", c.run.cluster.tolerance_n);
      read(cl, "seed_variance", c.run.cluster.seed_variance);
      read(cl, "variance_floor", c.run.cluster.variance_floor);
      if (cl.contains("gate")) {
        const auto g = cl.at("gate").get<std::string>();
        if (g == "all") c.run.cluster.gate = GateMode::kAllElements;
        else if (g == "any") c.run.cluster.gate = GateMode::kAnyElement;
        else throw ConfigError("clustering.gate: expected \"all\" or \"any\"");
      }
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      reject_unknown(e, {"acceptance_ratio", "convergence_threshold", "rollout_cap", "tie_seed"}, "eval");
      read(e, "acceptance_ratio", c.eval.acceptance_ratio);
      read(e, "convergence_threshold", c.eval.convergence_threshold);
      read(e, "rollout_cap", c.eval.rollout_cap);
      read(e, "tie_seed", c.eval.tie_seed);
    }
    if (j.contains("sweeps")) {
      const json& s = j.at("sweeps");
      reject_unknown(s, {"tolerance_n", "seed_variance", "cluster_epsilon", "epsilon", "episode_counts",
                         "convergence_epsilon", "convergence_budget"},
                     "sweeps");
      read(s, "tolerance_n", c.sweeps.tolerance_n);
      read(s, "seed_variance", c.sweeps.seed_variance);
      read(s, "cluster_epsilon", c.sweeps.cluster_epsilon);
      read(s, "epsilon", c.sweeps.epsilon);
      read(s, "episode_counts", c.sweeps.episode_counts);
      read(s, "convergence_epsilon", c.sweeps.convergence_epsilon);
      read(s, "convergence_budget", c.sweeps.convergence_budget);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace clusterq
