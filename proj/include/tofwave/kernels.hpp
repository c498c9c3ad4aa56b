#pragma once

#include <cstddef>

#include "tofwave/model.hpp"
#include "tofwave/types.hpp"

namespace tofwave {

// Serial is the plain-loop reference; Parallel uses OpenMP with a fixed chunk
// decomposition so results do not depend on the thread count.
enum class Exec { Serial, Parallel };

void set_thread_count(int n);
int thread_count();

namespace kernels {

inline constexpr std::size_t kChunk = 1024;

// sum_j w_j |a_j|^2
double weighted_sumsq(const double* w, const Vec2* a, std::size_t n, Exec exec);
// sum_j w_j a_j . b_j
double weighted_dot(const double* w, const Vec2* a, const Vec2* b, std::size_t n, Exec exec);
// out_j = f(base_j + u_j) - f(base_j)
void nonlinear_difference(const ModelParams& p, const Vec2* base, const Vec2* u, Vec2* out,
                          std::size_t n, Exec exec);
// out_j = J_j u_j with per-node 2x2 blocks
void block_apply(const Mat2* blocks, const Vec2* u, Vec2* out, std::size_t n, Exec exec);
double max_norm(const Vec2* a, std::size_t n, Exec exec);

}  // namespace kernels
}  // namespace tofwave
