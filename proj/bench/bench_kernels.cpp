// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.
#include "mtdc/linearization.hpp"
#include "mtdc/operating_point.hpp"
#include "mtdc/sweep.hpp"

#include <benchmark/benchmark.h>

using namespace mtdc;

namespace {

const ValidatedGridSpec& paper() {
  static const auto vs = validate_spec(load_grid_spec(std::string(MTDC_SOURCE_DIR) + "/configs/paper_4t.cfg"));
  return vs;
}

const OperatingPoint& paper_op() {
  static const auto op = compute_operating_point(paper());
  return op;
}

void BM_Linearize(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(linearize(paper(), paper_op(), st.range(0) != 0).A.data());
}

void BM_NumericJacobian(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(numeric_jacobian(paper(), paper_op(), 1e-6, st.range(0) != 0).data());
}

void BM_Sweep(benchmark::State& st) {
  SweepPlan p;
  p.param = ParameterRef::parse("T4.k_p_pll");
  p.q_lo = 1;
  p.q_hi = 100;
  p.steps = 24;
  for (auto _ : st) benchmark::DoNotOptimize(sweep_parameter(paper(), p, st.range(0) != 0).steps.size());
}

} // namespace

BENCHMARK(BM_Linearize)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NumericJacobian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
