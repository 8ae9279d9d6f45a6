// clusterq command-line front end.
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "clusterq/config.hpp"
#include "clusterq/experiments.hpp"
#include "clusterq/persist.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> runs;
  std::optional<int> episodes;
  std::optional<double> epsilon;
  bool quiet = false;
  std::string snapshot;
};

clusterq::RunConfig resolve(const Options& o, const std::string& cmd) {
  clusterq::RunConfig cfg = o.config.empty() ? clusterq::RunConfig{} : clusterq::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  if (o.episodes) {
    if (cmd == "sweep-epsilon") cfg.sweeps.episode_counts = {*o.episodes};
    else if (cmd == "convergence-study") cfg.sweeps.convergence_budget = *o.episodes;
    else cfg.episodes = *o.episodes;
  }
  if (o.epsilon) {
    if (cmd == "sweep-clustering") cfg.sweeps.cluster_epsilon = *o.epsilon;
    else if (cmd == "sweep-epsilon") cfg.sweeps.epsilon = {*o.epsilon};
    else if (cmd == "convergence-study") cfg.sweeps.convergence_epsilon = {*o.epsilon};
    else cfg.run.epsilon = *o.epsilon;
  }
  cfg.validate();
  return cfg;
}

void print_file(const std::string& path) {
  std::ifstream f(path);
  std::cout << f.rdbuf();
}

int dispatch(const std::string& cmd, const Options& o) {
  using namespace clusterq;
  std::ostream* log = o.quiet ? nullptr : &std::cout;
  const std::string table = o.out + "/";

  if (cmd == "eval-snapshot") {
    LoadedSnapshot snap = load_snapshot(o.snapshot);
    RunConfig cfg = snap.config;
    if (!o.config.empty()) cfg.eval = load_config(o.config).eval;
    if (o.seed) cfg.seed = *o.seed;
    const auto evals = evaluate_snapshot(cfg, *snap.run);
    write_snapshot_eval(o.out, cfg, evals);
    if (log) print_file(table + "eval_summary.csv");
    return 0;
  }

  const RunConfig cfg = resolve(o, cmd);
  if (cmd == "train") {
    cmd_train(cfg, o.out, log);
  } else if (cmd == "sweep-clustering") {
    write_cluster_sweep(o.out, cfg, sweep_clustering(cfg));
    if (log) print_file(table + "cluster_table.csv");
  } else if (cmd == "sweep-epsilon") {
    write_epsilon_sweep(o.out, cfg, sweep_epsilon(cfg));
    if (log) print_file(table + "coverage_table.csv");
  } else if (cmd == "convergence-study") {
    write_convergence(o.out, cfg, convergence_study(cfg));
    if (log) print_file(table + "convergence_table.csv");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Objective discovery by adaptive clustering with parallel off-policy Q(lambda)"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file (defaults built in)");
    sub->add_option("--seed", o.seed, "base seed; repetition r uses seed + r");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option("--runs", o.runs, "repetitions per sweep cell");
    sub->add_option("--episodes", o.episodes,
                    "episodes (train, sweep-clustering); single episode count (sweep-epsilon); "
                    "episode budget (convergence-study)");
    sub->add_option("--epsilon", o.epsilon, "exploration rate, or a single sweep value");
    sub->add_flag("--quiet", o.quiet, "no console summary");
  };
  common(app.add_subcommand("train", "train one run, write snapshot, step log and summary"));
  common(app.add_subcommand("sweep-clustering", "final cluster count over seed variance x tolerance n"));
  common(app.add_subcommand("sweep-epsilon", "acceptable-start coverage over epsilon and episode count"));
  common(app.add_subcommand("convergence-study", "episodes to convergence, from scratch vs promoted secondary"));
  auto* ev = app.add_subcommand("eval-snapshot", "per-start evaluation of every learner in a snapshot");
  common(ev);
  ev->add_option("snapshot", o.snapshot, "snapshot.json written by train")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o);
  } catch (const clusterq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const clusterq::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
