// Parallel vs serial residual over sample points, on operators from the zoo.

#include <benchmark/benchmark.h>

#include "sqm/verify.hpp"

using namespace sqm;

namespace {

SampleSpec points(std::size_t n, int k) {
  SampleSpec s;
  s.box.assign(n, {-1, 1});
  s.n_points = k;
  return s;
}

// {Q, Sbar} on the warped Kahler model: a deep field DAG per coefficient
const DiffOp& kahler_bracket() {
  static const DiffOp op = [] {
    auto c = real_coords(4);
    Mat I = Mat::Zero(4, 4);
    I(0, 1) = I(2, 3) = 1;
    I(1, 0) = I(3, 2) = -1;
    Model m = kahler(warped_kahler(parse("0.3*sin(x1) + 0.2*x1*x2", c), c), I);
    return anticommutator(m.op("Q"), m.op("Sbar"));
  }();
  return op;
}

const DiffOp& witten_closure() {
  static const DiffOp op = [] {
    Model m = witten(parse("x^3 - x + 0.3*sin(x)", {"x"}));
    return anticommutator(m.op("Q"), m.op("Qbar")) - 2.0 * m.op("H");
  }();
  return op;
}

template <Residual (*F)(const std::vector<const DiffOp*>&, const std::vector<std::vector<double>>&)>
void run(benchmark::State& st, const DiffOp& op, std::size_t n) {
  auto pts = sample_points(points(n, static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(F({&op}, pts));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_kahler_parallel(benchmark::State& st) { run<residual>(st, kahler_bracket(), 4); }
void BM_kahler_serial(benchmark::State& st) { run<residual_serial>(st, kahler_bracket(), 4); }
void BM_witten_parallel(benchmark::State& st) { run<residual>(st, witten_closure(), 1); }
void BM_witten_serial(benchmark::State& st) { run<residual_serial>(st, witten_closure(), 1); }

}  // namespace

BENCHMARK(BM_kahler_parallel)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_kahler_serial)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_witten_parallel)->Arg(20)->Arg(200)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_witten_serial)->Arg(20)->Arg(200)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
