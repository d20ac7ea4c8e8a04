#include <benchmark/benchmark.h>

#include "radopf/cases.hpp"
#include "radopf/conditions.hpp"
#include "radopf/dual.hpp"
#include "radopf/experiment.hpp"
#include "radopf/formulation.hpp"
#include "radopf/solver.hpp"

namespace {

using namespace radopf;

void BM_BuildOpfCr33(benchmark::State& state) {
  const Network net = ieee33_network();
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_opf_cr(net, ObjectiveSpec::loss()));
  }
}
BENCHMARK(BM_BuildOpfCr33);

void BM_Solve33(benchmark::State& state) {
  const Network net = modify_network(ieee33_network(), Condition::c1).net;
  const ConicProgram p = build_opf_cr(net, ObjectiveSpec::loss());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(p));
  }
}
BENCHMARK(BM_Solve33)->Unit(benchmark::kMillisecond);

void BM_SolveDual33(benchmark::State& state) {
  const Network net = modify_network(ieee33_network(), Condition::c1).net;
  const DualProgram dual = build_dual(build_opf_cr(net, ObjectiveSpec::loss()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(dual.program));
  }
}
BENCHMARK(BM_SolveDual33)->Unit(benchmark::kMillisecond);

void BM_Certify33(benchmark::State& state) {
  const Network net = modify_network(ieee33_network(), Condition::c1).net;
  for (auto _ : state) {
    benchmark::DoNotOptimize(certify_strong_duality(net));
  }
}
BENCHMARK(BM_Certify33);

void BM_Solve56(benchmark::State& state) {
  const Network net = modify_network(synthetic56_network(), Condition::c1).net;
  const ConicProgram p = build_opf_cr(net, ObjectiveSpec::loss());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve(p));
  }
}
BENCHMARK(BM_Solve56)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
