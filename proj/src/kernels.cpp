#include "tofwave/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

namespace tofwave {

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

namespace kernels {

namespace {

template <class ChunkFn>
double chunked_sum(std::size_t n, Exec exec, ChunkFn&& chunk) {
  const std::size_t nchunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(nchunks, 0.0);
  const long long nc = static_cast<long long>(nchunks);
#pragma omp parallel for schedule(static) if (exec == Exec::Parallel)
  for (long long c = 0; c < nc; ++c) {
    const std::size_t b = static_cast<std::size_t>(c) * kChunk;
    partial[c] = chunk(b, std::min(n, b + kChunk));
  }
  double s = 0.0;
  for (double v : partial) s += v;
  return s;
}

}  // namespace

double weighted_sumsq(const double* w, const Vec2* a, std::size_t n, Exec exec) {
  if (exec == Exec::Serial) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[j] * a[j].squaredNorm();
    return s;
  }
  return chunked_sum(n, exec, [&](std::size_t b, std::size_t e) {
    double s = 0.0;
    for (std::size_t j = b; j < e; ++j) s += w[j] * a[j].squaredNorm();
    return s;
  });
}

double weighted_dot(const double* w, const Vec2* a, const Vec2* b, std::size_t n, Exec exec) {
  if (exec == Exec::Serial) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[j] * a[j].dot(b[j]);
    return s;
  }
  return chunked_sum(n, exec, [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t j = lo; j < hi; ++j) s += w[j] * a[j].dot(b[j]);
    return s;
  });
}

void nonlinear_difference(const ModelParams& p, const Vec2* base, const Vec2* u, Vec2* out,
                          std::size_t n, Exec exec) {
  if (exec == Exec::Serial) {
    for (std::size_t j = 0; j < n; ++j) out[j] = f_difference(p, base[j], u[j]);
    return;
  }
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nn; ++j) out[j] = f_difference(p, base[j], u[j]);
}

void block_apply(const Mat2* blocks, const Vec2* u, Vec2* out, std::size_t n, Exec exec) {
  if (exec == Exec::Serial) {
    for (std::size_t j = 0; j < n; ++j) out[j] = blocks[j] * u[j];
    return;
  }
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long j = 0; j < nn; ++j) out[j] = blocks[j] * u[j];
}

double max_norm(const Vec2* a, std::size_t n, Exec exec) {
  if (exec == Exec::Serial) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) m = std::max(m, a[j].norm());
    return m;
  }
  double m = 0.0;
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static) reduction(max : m)
  for (long long j = 0; j < nn; ++j) m = std::max(m, a[j].norm());
  return m;
}

}  // namespace kernels
}  // namespace tofwave
