#include "clusterq/persist.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace clusterq {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

ojson learner_json(const ObjectiveLearner& l) {
  ojson j;
  j["pattern"] = l.spec().to_string();
  if (l.spec().source_cluster) j["cluster"] = *l.spec().source_cluster;
  j["abs_td_sum"] = l.abs_td_sum();
  j["updates"] = l.updates();
  ojson rows = ojson::array();
  for (int a = 0; a < l.weights().actions(); ++a) {
    const auto r = l.weights().row(a);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["weights"] = rows;
  return j;
}

WeightTable weights_from(const json& rows, int actions, int features) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != actions)
    throw std::invalid_argument("snapshot: weight table has the wrong number of actions");
  WeightTable w(actions, features);
  for (int a = 0; a < actions; ++a) {
    const auto v = rows[static_cast<std::size_t>(a)].get<std::vector<double>>();
    if (static_cast<int>(v.size()) != features) throw std::invalid_argument("snapshot: weight row has the wrong length");
    std::copy(v.begin(), v.end(), w.row(a).begin());
  }
  return w;
}

}  // namespace

ojson snapshot_json(const RunConfig& cfg, const Run& run) {
  ojson j;
  j["format"] = "clusterq-snapshot/1";
  j["config"] = to_json(cfg);
  j["episode_counter"] = run.episode_counter();
  j["step_counter"] = run.step_counter();
  std::ostringstream rng;
  rng << run.rng();
  j["rng"] = rng.str();
  ojson clusters = ojson::array();
  for (const auto& c : run.store().clusters())
    clusters.push_back({{"mean", c.mean}, {"variance", c.variance}, {"raw_variance", c.raw_variance}, {"count", c.count}});
  j["clusters"] = clusters;
  j["primary"] = learner_json(run.primary());
  ojson sec = ojson::array();
  for (const auto& l : run.secondaries()) sec.push_back(learner_json(l));
  j["secondaries"] = sec;
  return j;
}

LoadedSnapshot run_from_snapshot(const json& j) {
  LoadedSnapshot out;
  try {
    if (j.value("format", "") != "clusterq-snapshot/1") throw ConfigError("snapshot: unknown format");
    out.config = config_from_json(j.at("config"));
    const RunConfig& cfg = out.config;
    const int features = cfg.map.feature_dim();
    const json& pj = j.at("primary");
    const WeightTable pw = weights_from(pj.at("weights"), kNumActions, features);
    out.run = std::make_unique<Run>(cfg.map, ObjectiveSpec::parse(pj.at("pattern").get<std::string>()), pw, cfg.run,
                                    cfg.seed);
    Run& run = *out.run;
    run.primary().restore_stats(pj.at("abs_td_sum").get<double>(), pj.at("updates").get<std::uint64_t>());

    std::vector<Cluster> clusters;
    for (const auto& cj : j.at("clusters")) {
      Cluster c;
      c.mean = cj.at("mean").get<std::vector<double>>();
      c.variance = cj.at("variance").get<std::vector<double>>();
      c.raw_variance = cj.at("raw_variance").get<std::vector<double>>();
      c.count = cj.at("count").get<std::uint64_t>();
      clusters.push_back(std::move(c));
    }
    run.store() = ClusterStore::restore(cfg.run.cluster, static_cast<std::size_t>(cfg.map.env_dim()),
                                        std::move(clusters));
    for (const auto& lj : j.at("secondaries")) {
      ObjectiveSpec spec = ObjectiveSpec::parse(lj.at("pattern").get<std::string>(), ObjectiveKind::Secondary);
      if (lj.contains("cluster")) spec.source_cluster = lj.at("cluster").get<std::size_t>();
      ObjectiveLearner l(std::move(spec), kNumActions, features);
      l.weights() = weights_from(lj.at("weights"), kNumActions, features);
      l.restore_stats(lj.at("abs_td_sum").get<double>(), lj.at("updates").get<std::uint64_t>());
      run.secondaries().push_back(std::move(l));
    }
    if (run.params().discover && run.secondaries().size() != run.store().size())
      throw std::invalid_argument("snapshot: learner count does not match cluster count");
    run.set_counters(j.at("episode_counter").get<std::uint64_t>(), j.at("step_counter").get<std::uint64_t>());
    std::istringstream rng(j.at("rng").get<std::string>());
    rng >> run.rng();
    if (!rng) throw std::invalid_argument("snapshot: malformed RNG state");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("snapshot: ") + e.what());
  }
  return out;
}

void save_snapshot(const std::string& path, const RunConfig& cfg, const Run& run) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << snapshot_json(cfg, run).dump(1) << '\n';
}

LoadedSnapshot load_snapshot(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open snapshot '" + path + "'");
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return run_from_snapshot(j);
}

std::string step_record_line(const StepRecord& rec) {
  ojson j;
  j["episode"] = rec.episode;
  j["step"] = rec.step;
  j["x"] = rec.x;
  j["y"] = rec.y;
  j["action"] = action_name(rec.action);
  j["bumped"] = rec.bumped;
  j["rewards"] = rec.rewards;
  j["cluster"] = rec.cluster;
  j["cluster_created"] = rec.cluster_created;
  return j.dump();
}

CsvWriter::CsvWriter(const std::string& path, const RunConfig& cfg, const std::vector<std::string>& columns)
    : out_(path), width_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write " + path);
  out_ << "# config_hash=" << hex64(config_hash(cfg)) << ",seed=" << cfg.seed << '\n';
  row(columns);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("csv: row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace clusterq
