// Serial reference against the OpenMP path for the hot per-node kernels.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tofwave/kernels.hpp"
#include "tofwave/model.hpp"

using namespace tofwave;

namespace {

struct Data {
  std::vector<double> w;
  std::vector<Vec2> a, b, out;
  std::vector<Mat2> blocks;

  explicit Data(std::size_t n) : w(n), a(n), b(n), out(n), blocks(n) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
      w[j] = 1.0 + std::abs(g(rng));
      a[j] = Vec2(g(rng), g(rng));
      b[j] = 1e-3 * Vec2(g(rng), g(rng));
      blocks[j] << g(rng), g(rng), g(rng), g(rng);
    }
  }
};

Exec exec_of(const benchmark::State& s) { return s.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_WeightedSumsq(benchmark::State& s) {
  Data d(s.range(0));
  for (auto _ : s) benchmark::DoNotOptimize(kernels::weighted_sumsq(d.w.data(), d.a.data(), d.a.size(), exec_of(s)));
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_WeightedDot(benchmark::State& s) {
  Data d(s.range(0));
  for (auto _ : s)
    benchmark::DoNotOptimize(kernels::weighted_dot(d.w.data(), d.a.data(), d.b.data(), d.a.size(), exec_of(s)));
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_NonlinearDifference(benchmark::State& s) {
  Data d(s.range(0));
  const ModelParams p = default_params();
  for (auto _ : s) {
    kernels::nonlinear_difference(p, d.a.data(), d.b.data(), d.out.data(), d.a.size(), exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

void BM_BlockApply(benchmark::State& s) {
  Data d(s.range(0));
  for (auto _ : s) {
    kernels::block_apply(d.blocks.data(), d.a.data(), d.out.data(), d.a.size(), exec_of(s));
    benchmark::ClobberMemory();
  }
  s.SetItemsProcessed(s.iterations() * s.range(0));
}

// second argument: 0 serial, 1 parallel
void sizes(benchmark::internal::Benchmark* b) {
  for (long n : {4096L, 65536L, 1L << 20})
    for (long par : {0L, 1L}) b->Args({n, par});
}

}  // namespace

BENCHMARK(BM_WeightedSumsq)->Apply(sizes);
BENCHMARK(BM_WeightedDot)->Apply(sizes);
BENCHMARK(BM_NonlinearDifference)->Apply(sizes);
BENCHMARK(BM_BlockApply)->Apply(sizes);

BENCHMARK_MAIN();
