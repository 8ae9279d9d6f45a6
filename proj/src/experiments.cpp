#include "clusterq/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>

#include "clusterq/persist.hpp"

namespace clusterq {

namespace {

/// Runs body(i) for i in [0, n) across threads; the first exception wins.
template <typename F>
void parallel_tasks(std::size_t n, F&& body) {
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(clusterq_task_error)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Repetitions already run in parallel, so each run fans out serially.
RunParams rep_params(const RunConfig& cfg) {
  RunParams p = cfg.run;
  p.fan_out = FanOut::Serial;
  return p;
}

std::string path_in(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string num(double v) {
  // Shortest round-trip form, as in the JSON config.
  return nlohmann::json(v).dump();
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "CONVERGED";
    case Outcome::NotConverged: return "NOT_CONVERGED";
    case Outcome::Missing: return "MISSING";
  }
  return "?";
}

}  // namespace

std::optional<std::size_t> find_named(const Run& run, const std::string& pattern) {
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < run.secondaries().size(); ++k) {
    if (run.secondaries()[k].spec().to_string() != pattern) continue;
    if (!best || run.store().clusters()[k].count > run.store().clusters()[*best].count) best = k;
  }
  return best;
}

// ---------------------------------------------------------------- train

TrainReport cmd_train(const RunConfig& cfg, const std::string& out_dir, std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  Run run(cfg.map, cfg.primary_spec(), cfg.run, cfg.seed);

  std::ofstream nd(path_in(out_dir, "episodes.ndjson"));
  if (!nd) throw std::runtime_error("cannot write episodes.ndjson in " + out_dir);
  TrainReport rep;
  rep.summary = run.run_training(cfg.episodes, [&](const StepRecord& r) { nd << step_record_line(r) << '\n'; });
  nd.close();
  save_snapshot(path_in(out_dir, "snapshot.json"), cfg, run);

  const CoverageGrid pg(cfg.map, cfg.primary_spec());
  rep.primary_coverage = coverage_percentage(run.primary().weights(), pg, cfg.eval);
  for (const auto& l : run.secondaries()) {
    const CoverageGrid g(cfg.map, l.spec());
    rep.secondary_coverage.push_back(coverage_percentage(l.weights(), g, cfg.eval));
  }

  std::map<std::string, std::string> name_of;
  for (const auto& [name, pat] : cfg.named) name_of[pat] = name;

  CsvWriter csv(path_in(out_dir, "train_summary.csv"), cfg,
                {"objective", "pattern", "cluster", "members", "avg_td_error", "updates", "coverage"});
  csv.row({"primary", cfg.primary, "", "", fmt(run.primary().avg_td_error(), 6),
           std::to_string(run.primary().updates()), fmt(rep.primary_coverage, 2)});
  for (std::size_t k = 0; k < run.secondaries().size(); ++k) {
    const auto& l = run.secondaries()[k];
    const std::string pat = l.spec().to_string();
    const auto it = name_of.find(pat);
    csv.row({it == name_of.end() ? "secondary" : it->second, pat, std::to_string(k),
             std::to_string(run.store().clusters()[k].count), fmt(l.avg_td_error(), 6), std::to_string(l.updates()),
             fmt(rep.secondary_coverage[k], 2)});
  }

  if (log) {
    *log << "episodes " << cfg.episodes << ", failed " << rep.summary.failed_episodes << ", clusters "
         << run.store().size() << '\n';
    *log << "primary " << cfg.primary << "  avg|td| " << fmt(run.primary().avg_td_error(), 3) << "  coverage "
         << fmt(rep.primary_coverage, 2) << "%\n";
    for (std::size_t k = 0; k < run.secondaries().size(); ++k) {
      const auto& l = run.secondaries()[k];
      *log << "cluster " << k << " " << l.spec().to_string() << "  members " << run.store().clusters()[k].count
           << "  avg|td| " << fmt(l.avg_td_error(), 3) << "  coverage " << fmt(rep.secondary_coverage[k], 2) << "%\n";
    }
    if (!run.secondaries().empty()) {
      *log << "ranking (most reliable first):";
      for (const auto& [k, e] : run.rank_objectives()) *log << ' ' << k;
      *log << '\n';
    }
  }
  return rep;
}

// ---------------------------------------------------------------- cluster sweep

double ClusterCell::mean() const {
  if (final_count.empty()) return 0.0;
  return static_cast<double>(std::accumulate(final_count.begin(), final_count.end(), std::size_t{0})) /
         static_cast<double>(final_count.size());
}

double ClusterCell::median() const {
  if (final_count.empty()) return 0.0;
  std::vector<std::size_t> v = final_count;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? static_cast<double>(v[m]) : 0.5 * static_cast<double>(v[m - 1] + v[m]);
}

std::vector<ClusterCell> sweep_clustering(const RunConfig& cfg) {
  std::vector<ClusterCell> cells;
  for (double sv : cfg.sweeps.seed_variance)
    for (double n : cfg.sweeps.tolerance_n) {
      ClusterCell c;
      c.seed_variance = sv;
      c.tolerance_n = n;
      c.final_count.assign(static_cast<std::size_t>(cfg.runs), 0);
      c.settled_after.assign(static_cast<std::size_t>(cfg.runs), 0);
      cells.push_back(std::move(c));
    }
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  parallel_tasks(cells.size() * runs, [&](std::size_t t) {
    ClusterCell& cell = cells[t / runs];
    const std::size_t r = t % runs;
    RunParams p = rep_params(cfg);
    p.epsilon = cfg.sweeps.cluster_epsilon;
    p.cluster.tolerance_n = cell.tolerance_n;
    p.cluster.seed_variance = cell.seed_variance;
    p.cluster.variance_floor = std::min(p.cluster.variance_floor, cell.seed_variance);
    Run run(cfg.map, cfg.primary_spec(), p, repetition_seed(cfg, static_cast<int>(r)));
    const RunSummary s = run.run_training(cfg.episodes);
    const auto& series = s.clusters_over_time;
    cell.final_count[r] = series.back();
    const auto first = std::find(series.begin(), series.end(), series.back());
    cell.settled_after[r] = static_cast<int>(first - series.begin()) + 1;
  });
  return cells;
}

void write_cluster_sweep(const std::string& out_dir, const RunConfig& cfg, const std::vector<ClusterCell>& cells) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> cols{"seed_variance"};
  for (double n : cfg.sweeps.tolerance_n) cols.push_back("n=" + num(n));
  CsvWriter table(path_in(out_dir, "cluster_table.csv"), cfg, cols);
  std::size_t i = 0;
  for (double sv : cfg.sweeps.seed_variance) {
    std::vector<std::string> row{num(sv)};
    for (std::size_t k = 0; k < cfg.sweeps.tolerance_n.size(); ++k) row.push_back(fmt(cells[i++].mean(), 2));
    table.row(row);
  }
  CsvWriter runs(path_in(out_dir, "cluster_runs.csv"), cfg,
                 {"seed_variance", "n", "run", "seed", "final_clusters", "settled_after_episode"});
  for (const auto& c : cells)
    for (std::size_t r = 0; r < c.final_count.size(); ++r)
      runs.row({num(c.seed_variance), num(c.tolerance_n), std::to_string(r),
                std::to_string(repetition_seed(cfg, static_cast<int>(r))), std::to_string(c.final_count[r]),
                std::to_string(c.settled_after[r])});
}

// ---------------------------------------------------------------- coverage sweep

std::optional<double> CoverageCell::mean() const {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : per_run)
    if (v) {
      sum += *v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::vector<CoverageCell> sweep_epsilon(const RunConfig& cfg) {
  std::vector<int> counts = cfg.sweeps.episode_counts;
  std::sort(counts.begin(), counts.end());
  counts.erase(std::unique(counts.begin(), counts.end()), counts.end());

  std::vector<std::string> objectives{"primary"};
  for (const auto& [name, pat] : cfg.named) objectives.push_back(name);

  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  const std::size_t n_eps = cfg.sweeps.epsilon.size();
  std::vector<CoverageCell> cells;
  auto cell_at = [&](std::size_t ci, std::size_t ei, std::size_t oi) -> CoverageCell& {
    return cells[(ci * n_eps + ei) * objectives.size() + oi];
  };
  for (int c : counts)
    for (double e : cfg.sweeps.epsilon)
      for (const auto& o : objectives) {
        CoverageCell cell;
        cell.episodes = c;
        cell.epsilon = e;
        cell.objective = o;
        cell.per_run.assign(runs, std::nullopt);
        cells.push_back(std::move(cell));
      }

  const CoverageGrid primary_grid(cfg.map, cfg.primary_spec());
  std::vector<CoverageGrid> named_grids;
  for (const auto& [name, pat] : cfg.named) named_grids.emplace_back(cfg.map, ObjectiveSpec::parse(pat));

  parallel_tasks(n_eps * runs, [&](std::size_t t) {
    const std::size_t ei = t / runs;
    const std::size_t r = t % runs;
    RunParams p = rep_params(cfg);
    p.epsilon = cfg.sweeps.epsilon[ei];
    Run run(cfg.map, cfg.primary_spec(), p, repetition_seed(cfg, static_cast<int>(r)));
    // Evaluation never touches the run, so one run serves every checkpoint.
    int trained = 0;
    for (std::size_t ci = 0; ci < counts.size(); ++ci) {
      run.run_training(counts[ci] - trained);
      trained = counts[ci];
      cell_at(ci, ei, 0).per_run[r] = coverage_percentage(run.primary().weights(), primary_grid, cfg.eval, Exec::Serial);
      std::size_t oi = 1;
      for (const auto& [name, pat] : cfg.named) {
        if (auto k = find_named(run, pat))
          cell_at(ci, ei, oi).per_run[r] =
              coverage_percentage(run.secondaries()[*k].weights(), named_grids[oi - 1], cfg.eval, Exec::Serial);
        ++oi;
      }
    }
  });
  return cells;
}

void write_epsilon_sweep(const std::string& out_dir, const RunConfig& cfg, const std::vector<CoverageCell>& cells) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::string> cols{"episodes", "objective"};
  for (double e : cfg.sweeps.epsilon) cols.push_back("epsilon=" + num(e));
  CsvWriter table(path_in(out_dir, "coverage_table.csv"), cfg, cols);
  const std::size_t n_eps = cfg.sweeps.epsilon.size();
  const std::size_t n_obj = cfg.named.size() + 1;
  for (std::size_t start = 0; start < cells.size(); start += n_eps * n_obj) {
    for (std::size_t oi = 0; oi < n_obj; ++oi) {
      const CoverageCell& first = cells[start + oi];
      std::vector<std::string> row{std::to_string(first.episodes), first.objective};
      for (std::size_t ei = 0; ei < n_eps; ++ei) {
        const auto m = cells[start + ei * n_obj + oi].mean();
        row.push_back(m ? fmt(*m, 2) : "MISSING");
      }
      table.row(row);
    }
  }
  CsvWriter runs(path_in(out_dir, "coverage_runs.csv"), cfg,
                 {"episodes", "epsilon", "objective", "run", "seed", "coverage"});
  for (const auto& c : cells)
    for (std::size_t r = 0; r < c.per_run.size(); ++r)
      runs.row({std::to_string(c.episodes), num(c.epsilon), c.objective, std::to_string(r),
                std::to_string(repetition_seed(cfg, static_cast<int>(r))),
                c.per_run[r] ? fmt(*c.per_run[r], 2) : "MISSING"});
}

// ---------------------------------------------------------------- convergence

std::optional<double> ConvergenceCell::mean(int budget) const {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : per_run) {
    if (r.outcome == Outcome::Missing) continue;
    sum += r.outcome == Outcome::Converged ? r.episodes : budget;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

int ConvergenceCell::converged() const {
  return static_cast<int>(
      std::count_if(per_run.begin(), per_run.end(), [](const auto& r) { return r.outcome == Outcome::Converged; }));
}

std::vector<ConvergenceCell> convergence_study(const RunConfig& cfg) {
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  const int budget = cfg.sweeps.convergence_budget;
  const auto& eps = cfg.sweeps.convergence_epsilon;

  // Per epsilon: [target as primary] then, for each named objective, [as primary, as secondary].
  std::vector<std::pair<std::string, std::string>> named(cfg.named.begin(), cfg.named.end());
  const std::size_t per_eps = 1 + 2 * named.size();
  std::vector<ConvergenceCell> cells;
  for (double e : eps) {
    auto add = [&](const std::string& obj, const char* role) {
      ConvergenceCell c;
      c.epsilon = e;
      c.objective = obj;
      c.role = role;
      c.per_run.assign(runs, {});
      cells.push_back(std::move(c));
    };
    add("target", "primary");
    for (const auto& [name, pat] : named) {
      add(name, "primary");
      add(name, "secondary");
    }
  }

  const CoverageGrid primary_grid(cfg.map, cfg.primary_spec());
  std::vector<CoverageGrid> grids;
  for (const auto& [name, pat] : named) grids.emplace_back(cfg.map, ObjectiveSpec::parse(pat));

  auto measure = [&](Run& run, const CoverageGrid& g) {
    ConvergenceResult res;
    if (auto n = episodes_to_convergence(run, g, cfg.eval, budget)) {
      res.outcome = Outcome::Converged;
      res.episodes = *n;
    } else {
      res.outcome = Outcome::NotConverged;
      res.episodes = budget;
    }
    return res;
  };

  // One task per (epsilon, run, job); job 0 is the discovering primary run
  // plus promotions, job 1 + k learns named objective k from scratch.
  const std::size_t jobs = 1 + named.size();
  parallel_tasks(eps.size() * runs * jobs, [&](std::size_t t) {
    const std::size_t ei = t / (runs * jobs);
    const std::size_t r = (t / jobs) % runs;
    const std::size_t job = t % jobs;
    const std::uint64_t seed = repetition_seed(cfg, static_cast<int>(r));
    RunParams p = rep_params(cfg);
    p.epsilon = eps[ei];
    ConvergenceCell* base = &cells[ei * per_eps];

    if (job > 0) {
      const std::size_t k = job - 1;
      RunParams q = p;
      q.discover = false;
      Run run(cfg.map, ObjectiveSpec::parse(named[k].second), q, seed);
      base[1 + 2 * k].per_run[r] = measure(run, grids[k]);
      return;
    }
    Run main(cfg.map, cfg.primary_spec(), p, seed);
    base[0].per_run[r] = measure(main, primary_grid);
    for (std::size_t k = 0; k < named.size(); ++k) {
      ConvergenceResult& slot = base[2 + 2 * k].per_run[r];
      const auto idx = find_named(main, named[k].second);
      if (!idx) {
        slot.outcome = Outcome::Missing;
        continue;
      }
      RunParams q = p;
      q.discover = false;
      Run promoted(cfg.map, ObjectiveSpec::parse(named[k].second), main.secondaries()[*idx].weights(), q, seed);
      slot = measure(promoted, grids[k]);
    }
  });
  return cells;
}

void write_convergence(const std::string& out_dir, const RunConfig& cfg, const std::vector<ConvergenceCell>& cells) {
  std::filesystem::create_directories(out_dir);
  const int budget = cfg.sweeps.convergence_budget;
  CsvWriter table(path_in(out_dir, "convergence_table.csv"), cfg,
                  {"epsilon", "objective", "role", "mean_episodes", "converged_runs", "runs"});
  for (const auto& c : cells) {
    const auto m = c.mean(budget);
    std::string cell = "MISSING";
    if (m) cell = c.converged() == 0 ? "NOT_CONVERGED" : fmt(*m, 2);
    table.row({num(c.epsilon), c.objective, c.role, cell, std::to_string(c.converged()),
               std::to_string(c.per_run.size())});
  }
  CsvWriter runs(path_in(out_dir, "convergence_runs.csv"), cfg,
                 {"epsilon", "objective", "role", "run", "seed", "episodes"});
  for (const auto& c : cells)
    for (std::size_t r = 0; r < c.per_run.size(); ++r) {
      const auto& res = c.per_run[r];
      runs.row({num(c.epsilon), c.objective, c.role, std::to_string(r),
                std::to_string(repetition_seed(cfg, static_cast<int>(r))),
                res.outcome == Outcome::Converged ? std::to_string(res.episodes) : outcome_name(res.outcome)});
    }
}

// ---------------------------------------------------------------- snapshot evaluation

std::vector<ObjectiveEval> evaluate_snapshot(const RunConfig& cfg, const Run& run) {
  std::vector<ObjectiveEval> out;
  auto eval = [&](std::string name, const ObjectiveLearner& l) {
    const CoverageGrid g(run.map(), l.spec());
    ObjectiveEval e;
    e.name = std::move(name);
    e.pattern = l.spec().to_string();
    e.starts = evaluate_starts(l.weights(), g, cfg.eval);
    const auto ok = std::count_if(e.starts.begin(), e.starts.end(), [](const StartEval& s) { return s.acceptable; });
    e.coverage = e.starts.empty() ? 0.0 : 100.0 * static_cast<double>(ok) / static_cast<double>(e.starts.size());
    out.push_back(std::move(e));
  };
  eval("primary", run.primary());
  for (std::size_t k = 0; k < run.secondaries().size(); ++k) eval("cluster" + std::to_string(k), run.secondaries()[k]);
  return out;
}

void write_snapshot_eval(const std::string& out_dir, const RunConfig& cfg, const std::vector<ObjectiveEval>& evals) {
  std::filesystem::create_directories(out_dir);
  CsvWriter summary(path_in(out_dir, "eval_summary.csv"), cfg, {"objective", "pattern", "starts", "coverage"});
  for (const auto& e : evals) {
    summary.row({e.name, e.pattern, std::to_string(e.starts.size()), fmt(e.coverage, 2)});
    CsvWriter csv(path_in(out_dir, "eval_" + e.name + ".csv"), cfg,
                  {"start_x", "start_y", "astar_len", "rollout_len", "acceptable"});
    for (const auto& s : e.starts)
      csv.row({fmt(s.cell_x + 0.5, 1), fmt(s.cell_y + 0.5, 1), std::to_string(s.astar),
               std::to_string(s.rollout), s.acceptable ? "1" : "0"});
  }
}

}  // namespace clusterq
