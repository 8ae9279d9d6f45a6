// Acceptance run: one PASS/FAIL line per criterion. Exits 0 once every
// criterion has been evaluated; --strict makes any FAIL a non-zero exit.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../tests/dijkstra.hpp"
#include "../tests/gridworld.hpp"
#include "clusterq/experiments.hpp"

using namespace clusterq;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail, double secs) {
  if (!pass) ++failures;
  std::printf("[%s] %d %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str(), secs);
  std::fflush(stdout);
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double secs() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
};

std::string f2(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.2f", v);
  return b;
}

// 1 ------------------------------------------------------------------
void incremental_moments() {
  Timer t;
  Rng rng(2024);
  std::uniform_int_distribution<int> len(1, 500);
  std::uniform_real_distribution<double> real(-2.0, 3.0);
  std::bernoulli_distribution bit(0.2);
  const std::size_t dim = 4;
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const bool binary = s % 2 == 0;
    const int n = len(rng);
    std::vector<std::vector<double>> xs(static_cast<std::size_t>(n), std::vector<double>(dim));
    for (auto& v : xs)
      for (auto& x : v) x = binary ? (bit(rng) ? 1.0 : 0.0) : real(rng);
    Cluster c;
    c.mean = xs[0];
    c.variance.assign(dim, 1.0);
    c.raw_variance.assign(dim, 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i) c = update_stats(c, xs[i], 1e-6);
    for (std::size_t j = 0; j < dim; ++j) {
      long double m = 0;
      for (const auto& v : xs) m += v[j];
      m /= n;
      long double var = 0;
      for (const auto& v : xs) var += (v[j] - m) * (v[j] - m);
      var /= n;
      auto rel = [](double got, long double want) {
        const long double d = std::fabs(static_cast<long double>(got) - want);
        if (want == 0) return static_cast<double>(d == 0 ? 0.0L : std::numeric_limits<double>::infinity());
        return static_cast<double>(d / std::fabs(want));
      };
      worst = std::max({worst, rel(c.mean[j], m), rel(c.raw_variance[j], var)});
    }
  }
  char d[96];
  std::snprintf(d, sizeof d, "1000 streams, worst relative error %.3g (limit 1e-9)", worst);
  report(1, worst <= 1e-9, "incremental moments equal batch moments", d, t.secs());
}

// 2 ------------------------------------------------------------------
void astar_oracle() {
  Timer t;
  Rng rng(77);
  long pairs = 0, bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    WorldMap m = oracle::random_map(rng, 10);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    const double lx = u(rng), ly = u(rng);
    m.light_region = {lx, ly, lx + 2.0, ly + 2.0};
    for (const char* goal : {"***1", "*1**"}) {
      const GridGraph g = GridGraph::from_map(m, ObjectiveSpec::parse(goal));
      const auto ref = oracle::ucs_to_goal(g);
      for (int c = 0; c < g.size(); ++c) {
        if (g.blocked[static_cast<std::size_t>(c)]) continue;
        const auto a = astar_length(g, c);
        const int d = ref[static_cast<std::size_t>(c)];
        const bool ok = d == std::numeric_limits<int>::max() ? !a.has_value() : (a && *a == d);
        ++pairs;
        bad += !ok;
      }
    }
  }
  report(2, bad == 0, "A* equals Dijkstra on random 10x10 maps",
         std::to_string(pairs) + " (start, goal set) pairs, " + std::to_string(bad) + " mismatches", t.secs());
}

// 3 ------------------------------------------------------------------
void tabular() {
  Timer t;
  const int bad = gridworld::policy_mismatches(gridworld::learn(3000, 1));
  report(3, bad == 0, "tabular Q-learning matches value iteration",
         "5x5 grid, gamma 0.9, lambda 0, epsilon 1: " + std::to_string(bad) + " states differ", t.secs());
}

// 4, 7, 9 -------------------------------------------------------------
void clustering_criteria(RunConfig cfg, int runs, const std::string& out) {
  Timer t;
  cfg.runs = std::max(runs, 10);
  cfg.sweeps.cluster_epsilon = 0.3;
  const auto cells = sweep_clustering(cfg);
  write_cluster_sweep(out + "/cluster_sweep", cfg, cells);
  const double secs = t.secs();

  bool ok4 = true;
  std::ostringstream d4;
  for (const auto& c : cells) {
    const bool low = c.tolerance_n == 0.1 || c.tolerance_n == 1.0;
    const bool high = c.tolerance_n == 1.5 || c.tolerance_n == 2.0;
    if (low && c.median() < 5) ok4 = false;
    if (high && c.median() > 2) ok4 = false;
  }
  d4 << "median clusters by n";
  for (double n : cfg.sweeps.tolerance_n) d4 << ' ' << n;
  d4 << ", one group per seed variance:";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i % cfg.sweeps.tolerance_n.size() == 0) d4 << (i ? " |" : "");
    d4 << ' ' << cells[i].median();
  }
  d4 << "; need >=5 for n<=1, <=2 for n>=1.5";
  report(4, ok4, "cluster-count collapse across n", d4.str(), secs);

  // Canonical cell: n = 1, seed variance = 1.
  for (const auto& c : cells) {
    if (c.tolerance_n != cfg.run.cluster.tolerance_n || c.seed_variance != cfg.run.cluster.seed_variance) continue;
    const auto early = std::count_if(c.settled_after.begin(), c.settled_after.end(), [](int e) { return e <= 25; });
    const double frac = static_cast<double>(early) / static_cast<double>(c.settled_after.size());
    report(7, frac >= 0.8, "final cluster count reached within 25 episodes",
           std::to_string(early) + "/" + std::to_string(c.settled_after.size()) + " runs (need >= 80%)", 0.0);
  }

  bool ok9 = true;
  std::ostringstream d9;
  const std::size_t nn = cfg.sweeps.tolerance_n.size();
  for (std::size_t r = 0; r < cfg.sweeps.seed_variance.size(); ++r) {
    d9 << (r ? " | sv " : "sv ") << cfg.sweeps.seed_variance[r] << ":";
    for (std::size_t k = 0; k < nn; ++k) {
      d9 << ' ' << cells[r * nn + k].median();
      if (k > 0 && cells[r * nn + k].median() > cells[r * nn + k - 1].median()) ok9 = false;
    }
  }
  report(9, ok9, "median cluster count non-increasing in n", d9.str(), 0.0);
}

// 5 ------------------------------------------------------------------
void coverage_trend(RunConfig cfg, int runs, const std::string& out) {
  Timer t;
  cfg.runs = runs;
  cfg.sweeps.epsilon = {0.1, 0.3, 0.7, 1.0};
  cfg.sweeps.episode_counts = {1000};
  const auto cells = sweep_epsilon(cfg);
  write_epsilon_sweep(out + "/epsilon_sweep", cfg, cells);

  std::vector<double> primary;
  std::ostringstream d;
  d << "primary by epsilon:";
  for (const auto& c : cells)
    if (c.objective == "primary") {
      primary.push_back(*c.mean());
      d << ' ' << f2(*c.mean());
    }
  bool ok = std::is_sorted(primary.begin(), primary.end()) && primary.back() >= 80.0;
  d << "; at epsilon 1:";
  for (const auto& c : cells) {
    if (c.objective == "primary" || c.epsilon != 1.0) continue;
    const auto m = c.mean();
    d << ' ' << c.objective << ' ' << (m ? f2(*m) : std::string("MISSING"));
    if (!m || *m < 70.0) ok = false;
  }
  d << " (need non-decreasing, primary >= 80, secondaries >= 70)";
  report(5, ok, "coverage trend over epsilon", d.str(), t.secs());
}

// 6 ------------------------------------------------------------------
void convergence_speedup(RunConfig cfg, int runs, const std::string& out) {
  Timer t;
  cfg.runs = runs;
  cfg.sweeps.convergence_epsilon = {0.7};
  const auto cells = convergence_study(cfg);
  write_convergence(out + "/convergence", cfg, cells);
  const int budget = cfg.sweeps.convergence_budget;
  bool ok = !cfg.named.empty();
  std::ostringstream d;
  d << "epsilon 0.7, mean episodes:";
  for (const auto& [name, pat] : cfg.named) {
    std::optional<double> scratch, promoted;
    for (const auto& c : cells) {
      if (c.objective != name) continue;
      (c.role == "primary" ? scratch : promoted) = c.mean(budget);
    }
    d << ' ' << name << " scratch " << (scratch ? f2(*scratch) : "MISSING") << " promoted "
      << (promoted ? f2(*promoted) : "MISSING") << ';';
    if (!scratch || !promoted || !(*promoted < 0.5 * *scratch)) ok = false;
  }
  d << " need promoted < 0.5 x scratch";
  report(6, ok, "promoted secondary converges faster", d.str(), t.secs());
}

// 8 ------------------------------------------------------------------
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::vector<fs::path> fa, fb;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) fa.push_back(fs::relative(e.path(), a));
  for (const auto& e : fs::recursive_directory_iterator(b))
    if (e.is_regular_file()) fb.push_back(fs::relative(e.path(), b));
  std::sort(fa.begin(), fa.end());
  std::sort(fb.begin(), fb.end());
  if (fa != fb || fa.empty()) {
    why = "file sets differ under " + a.string();
    return false;
  }
  for (const auto& rel : fa) {
    std::ifstream x(a / rel, std::ios::binary), y(b / rel, std::ios::binary);
    const std::string sx((std::istreambuf_iterator<char>(x)), {}), sy((std::istreambuf_iterator<char>(y)), {});
    if (sx != sy) {
      why = (a / rel).string() + " differs";
      return false;
    }
  }
  return true;
}

void reproducibility(const std::string& cli, const std::string& out) {
  Timer t;
  const fs::path root = fs::path(out) / "repro";
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> cmds{
      {"train", "train --episodes 40 --seed 3"},
      {"sweep-clustering", "sweep-clustering --runs 2 --episodes 40"},
      {"sweep-epsilon", "sweep-epsilon --runs 2 --episodes 40"},
      {"convergence-study", "convergence-study --runs 2 --episodes 15 --epsilon 0.7"},
  };
  bool ok = true;
  std::string why;
  int compared = 0;
  for (int rep = 0; rep < 2 && ok; ++rep) {
    for (const auto& [name, args] : cmds) {
      const fs::path dir = root / ("run" + std::to_string(rep)) / name;
      const std::string line = "\"" + cli + "\" " + args + " --quiet --out \"" + dir.string() + "\"";
      if (std::system(line.c_str()) != 0) {
        ok = false;
        why = "command failed: " + line;
        break;
      }
    }
    if (!ok) break;
    const fs::path snap = root / ("run" + std::to_string(rep)) / "train" / "snapshot.json";
    const fs::path dir = root / ("run" + std::to_string(rep)) / "eval-snapshot";
    const std::string line = "\"" + cli + "\" eval-snapshot \"" + snap.string() + "\" --quiet --out \"" + dir.string() + "\"";
    if (std::system(line.c_str()) != 0) {
      ok = false;
      why = "command failed: " + line;
    }
  }
  if (ok) {
    for (const char* name : {"train", "sweep-clustering", "sweep-epsilon", "convergence-study", "eval-snapshot"}) {
      if (!same_tree(root / "run0" / name, root / "run1" / name, why)) {
        ok = false;
        break;
      }
      ++compared;
    }
  }
  report(8, ok, "CLI artifacts byte-identical across reruns",
         ok ? std::to_string(compared) + " subcommands, all CSV/JSON/NDJSON artifacts identical" : why, t.secs());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string config;
  std::string out = "acceptance_out";
  int runs = 10;
  int cluster_runs = 20;
  bool strict = false;
  app.add_option("--config", config, "JSON config (defaults built in)");
  app.add_option("--out", out, "directory for sweep tables and rerun artifacts");
  app.add_option("--runs", runs, "repetitions for the coverage and convergence criteria");
  app.add_option("--cluster-runs", cluster_runs, "repetitions per cluster-sweep cell (at least 10)");
  app.add_flag("--strict", strict, "exit 1 if any criterion fails");
  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = config.empty() ? RunConfig{} : load_config(config);
    fs::create_directories(out);
    incremental_moments();
    astar_oracle();
    tabular();
    clustering_criteria(cfg, cluster_runs, out);
    coverage_trend(cfg, runs, out);
    convergence_speedup(cfg, runs, out);
    reproducibility(CLUSTERQ_CLI_PATH, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
  std::printf("%d criteria failed\n", failures);
  return strict && failures > 0 ? 1 : 0;
}
