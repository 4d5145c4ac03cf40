// Serial reference loops vs the OpenMP kernels. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "kdisc/discrepancy.hpp"
#include "kdisc/inference.hpp"

using namespace kdisc;

namespace {

struct Fixture {
  Target target = Target::standard_normal(3);
  SteinKernel sk = stein_kernel(ScalarKernel::imq(3, 1.0, 0.5), target);
  ScalarKernel k = ScalarKernel::gaussian(3, 1.0);
  MatrixBaseKernel K = MatrixBaseKernel::promote(ScalarKernel::gaussian(3, 1.0));
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

SampleSet points(std::int64_t n, std::uint64_t seed = 1) {
  return draw_samples(Target::gaussian({0.5, 0.0, -0.5}, {1.0, 2.0, 0.5}), static_cast<std::size_t>(n), seed);
}

void BM_ksd_v_serial(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(serial::ksd_v_squared(fx().sk, q));
  s.SetComplexityN(s.range(0));
}

void BM_ksd_v_parallel(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(ksd_v_stat(fx().sk, q).squared_value);
  s.SetComplexityN(s.range(0));
}

void BM_stein_gram_serial(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(serial::stein_gram(fx().sk, q));
}

void BM_stein_gram_parallel(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(stein_gram(fx().sk, q));
}

void BM_mmd_serial(benchmark::State& s) {
  const auto q = points(s.range(0), 1), p = points(s.range(0), 2);
  for (auto _ : s) benchmark::DoNotOptimize(serial::mmd_v_squared(fx().k, q, p));
}

void BM_mmd_parallel(benchmark::State& s) {
  const auto q = points(s.range(0), 1), p = points(s.range(0), 2);
  for (auto _ : s) benchmark::DoNotOptimize(mmd_v_stat(fx().k, q, p).squared_value);
}

void BM_svgd_direction_serial(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(serial::svgd_direction(fx().target, fx().K, q));
}

void BM_svgd_direction_parallel(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(svgd_direction(fx().target, fx().K, q));
}

void BM_bootstrap_serial(benchmark::State& s) {
  const auto q = points(s.range(0));
  const auto gram = stein_gram(fx().sk, q);
  for (auto _ : s) benchmark::DoNotOptimize(serial::bootstrap_statistics(gram, q.size(), 200, 3));
}

void BM_gof_parallel(benchmark::State& s) {
  const auto q = points(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(gof_test(fx().sk, q, 0.05, 200, 3).p_value);
}

}  // namespace

BENCHMARK(BM_ksd_v_serial)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ksd_v_parallel)->RangeMultiplier(4)->Range(256, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stein_gram_serial)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_stein_gram_parallel)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mmd_serial)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mmd_parallel)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_svgd_direction_serial)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_svgd_direction_parallel)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_serial)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_gof_parallel)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
