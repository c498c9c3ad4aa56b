#include <doctest.h>

#include <random>
#include <vector>

#include "tofwave/kernels.hpp"

using namespace tofwave;

namespace {

struct Data {
  std::vector<double> w;
  std::vector<Vec2> a, b;
  std::vector<Mat2> blocks;
};

Data make(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Data x;
  x.w.resize(n);
  x.a.resize(n);
  x.b.resize(n);
  x.blocks.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x.w[i] = std::abs(d(rng));
    x.a[i] = Vec2(d(rng), d(rng));
    x.b[i] = Vec2(d(rng), d(rng));
    x.blocks[i] << d(rng), d(rng), d(rng), d(rng);
  }
  return x;
}

}  // namespace

TEST_CASE("parallel reductions match the serial reference") {
  for (std::size_t n : {std::size_t(1), std::size_t(1023), std::size_t(1024), std::size_t(5000), std::size_t(70001)}) {
    const Data x = make(n, static_cast<unsigned>(n));
    const double s = kernels::weighted_sumsq(x.w.data(), x.a.data(), n, Exec::Serial);
    CHECK(kernels::weighted_sumsq(x.w.data(), x.a.data(), n, Exec::Parallel) == doctest::Approx(s).epsilon(1e-13));
    const double d = kernels::weighted_dot(x.w.data(), x.a.data(), x.b.data(), n, Exec::Serial);
    CHECK(std::abs(kernels::weighted_dot(x.w.data(), x.a.data(), x.b.data(), n, Exec::Parallel) - d) <=
          1e-13 * std::sqrt(s * kernels::weighted_sumsq(x.w.data(), x.b.data(), n, Exec::Serial)));
    if (n <= kernels::kChunk) CHECK(kernels::weighted_sumsq(x.w.data(), x.a.data(), n, Exec::Parallel) == s);
    CHECK(kernels::max_norm(x.a.data(), n, Exec::Serial) == kernels::max_norm(x.a.data(), n, Exec::Parallel));
  }
}

TEST_CASE("reductions match a direct sum") {
  const Data x = make(3000, 1);
  double s = 0.0, dot = 0.0;
  for (std::size_t i = 0; i < 3000; ++i) {
    s += x.w[i] * x.a[i].squaredNorm();
    dot += x.w[i] * x.a[i].dot(x.b[i]);
  }
  CHECK(kernels::weighted_sumsq(x.w.data(), x.a.data(), 3000, Exec::Parallel) == doctest::Approx(s).epsilon(1e-13));
  CHECK(kernels::weighted_dot(x.w.data(), x.a.data(), x.b.data(), 3000, Exec::Parallel) ==
        doctest::Approx(dot).epsilon(1e-12));
}

TEST_CASE("pointwise kernels agree between serial and parallel") {
  const std::size_t n = 9000;
  const Data x = make(n, 2);
  const ModelParams p = default_params();
  std::vector<Vec2> o1(n), o2(n), b1(n), b2(n);
  kernels::nonlinear_difference(p, x.a.data(), x.b.data(), o1.data(), n, Exec::Serial);
  kernels::nonlinear_difference(p, x.a.data(), x.b.data(), o2.data(), n, Exec::Parallel);
  kernels::block_apply(x.blocks.data(), x.a.data(), b1.data(), n, Exec::Serial);
  kernels::block_apply(x.blocks.data(), x.a.data(), b2.data(), n, Exec::Parallel);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(o1[i] == o2[i]);
    CHECK(b1[i] == b2[i]);
    CHECK((o1[i] - f_difference(p, x.a[i], x.b[i])).norm() == 0.0);
    CHECK((b1[i] - x.blocks[i] * x.a[i]).norm() < 1e-15 * (1.0 + b1[i].norm()));
  }
}

TEST_CASE("thread count changes do not change results") {
  const Data x = make(50000, 3);
  const double ref = kernels::weighted_sumsq(x.w.data(), x.a.data(), 50000, Exec::Parallel);
  const int before = thread_count();
  for (int t : {1, 2, 3}) {
    set_thread_count(t);
    CHECK(kernels::weighted_sumsq(x.w.data(), x.a.data(), 50000, Exec::Parallel) == ref);
  }
  set_thread_count(before);
}
