// Serial vs OpenMP timings for the two parallel kernels: per-start
// evaluation rollouts and the per-step secondary learner fan-out.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <omp.h>

#include "clusterq/evaluation.hpp"
#include "clusterq/orchestrator.hpp"

using namespace clusterq;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int episodes = argc > 1 ? std::atoi(argv[1]) : 200;
  std::printf("threads: %d\n", omp_get_max_threads());

  // Any-element gate gives several secondaries to fan out over.
  RunParams p;
  p.cluster.gate = GateMode::kAnyElement;
  p.parallel_min_learners = 1;
  const auto target = ObjectiveSpec::parse("***1");

  p.fan_out = FanOut::Serial;
  Run serial(canonical_map(), target, p, 42);
  const double ts = seconds([&] { serial.run_training(episodes); });

  p.fan_out = FanOut::OpenMP;
  Run par(canonical_map(), target, p, 42);
  const double tp = seconds([&] { par.run_training(episodes); });

  bool same = serial.primary().weights() == par.primary().weights() &&
              serial.secondaries().size() == par.secondaries().size();
  for (std::size_t k = 0; same && k < serial.secondaries().size(); ++k)
    same = serial.secondaries()[k].weights() == par.secondaries()[k].weights();
  std::printf("training %d episodes, %zu secondaries: serial %.3fs  openmp %.3fs  speedup %.2fx  identical=%s\n",
              episodes, serial.secondaries().size(), ts, tp, ts / tp, same ? "yes" : "NO");

  const CoverageGrid grid(serial.map(), target);
  EvalConfig cfg;
  std::vector<StartEval> a, b;
  const double es = seconds([&] { a = evaluate_starts(serial.primary().weights(), grid, cfg, Exec::Serial); });
  const double ep = seconds([&] { b = evaluate_starts(serial.primary().weights(), grid, cfg, Exec::OpenMP); });
  bool eq = a.size() == b.size();
  for (std::size_t k = 0; eq && k < a.size(); ++k)
    eq = a[k].rollout == b[k].rollout && a[k].acceptable == b[k].acceptable;
  std::printf("evaluation over %zu starts: serial %.3fs  openmp %.3fs  speedup %.2fx  identical=%s\n", a.size(), es,
              ep, es / ep, eq ? "yes" : "NO");
  return same && eq ? 0 : 1;
}
