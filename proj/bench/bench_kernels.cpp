// Serial reference vs OpenMP kernels on network-sized batches.
//   ./bench_kernels --benchmark_filter=affine

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "paddy/kernels.hpp"

namespace {

using paddy::Matrix;
namespace k = paddy::kernels;

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = n(rng);
  return m;
}

std::vector<double> random_vector(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> v(size);
  for (double& x : v) x = n(rng);
  return v;
}

template <bool Parallel>
void BM_affine(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto x = random_matrix(rows, 64, 1);
  const auto w = random_matrix(32, 64, 2);
  const auto b = random_vector(32, 3);
  Matrix y(rows, 32);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::affine(x, w, b, y);
    else k::serial::affine(x, w, b, y);
    benchmark::DoNotOptimize(y.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <bool Parallel>
void BM_affine_param_grad(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto dy = random_matrix(rows, 32, 4);
  const auto x = random_matrix(rows, 64, 5);
  Matrix dw(32, 64);
  std::vector<double> db(32);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::affine_param_grad(dy, x, dw, db);
    else k::serial::affine_param_grad(dy, x, dw, db);
    benchmark::DoNotOptimize(dw.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <bool Parallel>
void BM_conv1d(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const k::ConvShape s{.in_channels = 16, .in_length = 9, .filters = 16, .width = 3, .stride = 1};
  const auto x = random_matrix(rows, s.in_cols(), 6);
  const auto kernel = random_vector(s.kernel_size(), 7);
  const auto bias = random_vector(s.filters, 8);
  Matrix y(rows, s.out_cols());
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv1d(x, kernel, bias, s, y);
    else k::serial::conv1d(x, kernel, bias, s, y);
    benchmark::DoNotOptimize(y.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

template <bool Parallel>
void BM_conv1d_input_grad(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const k::ConvShape s{.in_channels = 16, .in_length = 9, .filters = 16, .width = 3, .stride = 1};
  const auto dy = random_matrix(rows, s.out_cols(), 9);
  const auto kernel = random_vector(s.kernel_size(), 10);
  Matrix dx(rows, s.in_cols());
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::conv1d_input_grad(dy, kernel, s, dx);
    else k::serial::conv1d_input_grad(dy, kernel, s, dx);
    benchmark::DoNotOptimize(dx.flat().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}

}  // namespace

BENCHMARK(BM_affine<false>)->Name("affine/serial")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_affine<true>)->Name("affine/parallel")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_affine_param_grad<false>)->Name("affine_param_grad/serial")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_affine_param_grad<true>)->Name("affine_param_grad/parallel")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_conv1d<false>)->Name("conv1d/serial")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_conv1d<true>)->Name("conv1d/parallel")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_conv1d_input_grad<false>)->Name("conv1d_input_grad/serial")->RangeMultiplier(8)->Range(128, 8192);
BENCHMARK(BM_conv1d_input_grad<true>)->Name("conv1d_input_grad/parallel")->RangeMultiplier(8)->Range(128, 8192);

BENCHMARK_MAIN();
