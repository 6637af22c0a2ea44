// Serial reference kernels vs the OpenMP versions on encoder-sized problems.
//
//   ./bench_kernels --benchmark_filter=conv
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dascd/kernels.hpp"

namespace k = dascd::kernels;

namespace {

std::vector<double> random_buffer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Square matmul of side state.range(0).
template <auto Kernel>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_buffer(n * n, 1), b = random_buffer(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Kernel(a, b, c, n, n, n);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

// 3×3 same-padded conv: range(0) channels in and out, range(1) spatial side.
k::ConvGeometry geometry(const benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto s = static_cast<std::size_t>(state.range(1));
  return {c, s, s, c, 3, 1, 1};
}

template <auto Kernel>
void BM_ConvForward(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto x = random_buffer(g.input_size(), 3), w = random_buffer(g.weight_size(), 4);
  std::vector<double> y(g.output_size());
  for (auto _ : state) {
    Kernel(g, x, w, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.counters["threads"] = k::max_threads();
}

template <auto Kernel>
void BM_ConvBackwardWeight(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto x = random_buffer(g.input_size(), 5), gy = random_buffer(g.output_size(), 6);
  std::vector<double> gw(g.weight_size());
  for (auto _ : state) {
    Kernel(g, x, gy, gw);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <auto Kernel>
void BM_ConvBackwardInput(benchmark::State& state) {
  const k::ConvGeometry g = geometry(state);
  const auto gy = random_buffer(g.output_size(), 7), w = random_buffer(g.weight_size(), 8);
  std::vector<double> gx(g.input_size());
  for (auto _ : state) {
    Kernel(g, gy, w, gx);
    benchmark::DoNotOptimize(gx.data());
  }
}

void conv_args(benchmark::internal::Benchmark* b) {
  b->Args({16, 32})->Args({32, 16})->Args({32, 64});
}

}  // namespace

BENCHMARK(BM_Matmul<k::serial::matmul>)->Name("matmul/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_Matmul<k::matmul>)->Name("matmul/omp")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_ConvForward<k::serial::conv2d_forward>)->Name("conv_forward/serial")->Apply(conv_args);
BENCHMARK(BM_ConvForward<k::conv2d_forward>)->Name("conv_forward/omp")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardWeight<k::serial::conv2d_backward_weight>)->Name("conv_backward_weight/serial")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardWeight<k::conv2d_backward_weight>)->Name("conv_backward_weight/omp")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::serial::conv2d_backward_input>)->Name("conv_backward_input/serial")->Apply(conv_args);
BENCHMARK(BM_ConvBackwardInput<k::conv2d_backward_input>)->Name("conv_backward_input/omp")->Apply(conv_args);

BENCHMARK_MAIN();
