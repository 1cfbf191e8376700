// Copyright 2026 The AVSE-ISAM Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Optimized kernels against their serial references at model-sized shapes.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "avse/core/kernels.h"

namespace {

using avse::core::kernels::Trans;
namespace k = avse::core::kernels;

std::vector<float> random_buffer(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto &x : v) x = dist(rng);
  return v;
}

// Args: m, n, k, transpose-A, transpose-B.
template <bool kReference>
void BM_Gemm(benchmark::State &state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto kk = static_cast<std::size_t>(state.range(2));
  const Trans ta = state.range(3) ? Trans::kYes : Trans::kNo;
  const Trans tb = state.range(4) ? Trans::kYes : Trans::kNo;
  const auto a = random_buffer(m * kk, 1), b = random_buffer(kk * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (kReference) {
      k::reference::gemm(ta, tb, m, n, kk, a.data(), b.data(), c.data(), false);
    } else {
      k::gemm(ta, tb, m, n, kk, a.data(), b.data(), c.data(), false);
    }
    benchmark::DoNotOptimize(c.data());
  }
  state.counters["GFLOP/s"] = benchmark::Counter(
      2.0 * static_cast<double>(m * n * kk), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}

void GemmShapes(benchmark::internal::Benchmark *b) {
  // Recurrent input projection, hidden step, weight gradient, visual encoder.
  b->Args({8 * 1600, 96, 64, 0, 0});
  b->Args({64, 96, 32, 0, 0});
  b->Args({64, 96, 8 * 1600, 1, 0});
  b->Args({8 * 1600, 64, 96, 0, 1});
  b->Args({400, 1024, 25, 0, 0});
  b->Unit(benchmark::kMicrosecond);
}

BENCHMARK_TEMPLATE(BM_Gemm, false)->Name("gemm/optimized")->Apply(GemmShapes);
BENCHMARK_TEMPLATE(BM_Gemm, true)->Name("gemm/reference")->Apply(GemmShapes);

template <bool kReference>
void BM_Conv1d(benchmark::State &state) {
  const std::size_t batch = 8, t_in = 32000, c_out = 64, kernel = 40, stride = 20;
  const std::size_t t_out = (t_in - kernel) / stride + 1;
  const auto x = random_buffer(batch * t_in, 3), w = random_buffer(c_out * kernel, 4);
  std::vector<float> out(batch * c_out * t_out);
  for (auto _ : state) {
    if constexpr (kReference) {
      k::reference::conv1d(batch, 1, t_in, c_out, kernel, stride, x.data(), w.data(), out.data());
    } else {
      k::conv1d(batch, 1, t_in, c_out, kernel, stride, x.data(), w.data(), out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK_TEMPLATE(BM_Conv1d, false)->Name("conv1d/optimized")->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_Conv1d, true)->Name("conv1d/reference")->Unit(benchmark::kMicrosecond);

template <bool kReference>
void BM_ConvTranspose1d(benchmark::State &state) {
  const std::size_t batch = 8, frames = 1599, filters = 64, kernel = 40, stride = 20;
  const std::size_t t_out = (frames - 1) * stride + kernel;
  const auto x = random_buffer(batch * filters * frames, 5), w = random_buffer(filters * kernel, 6);
  std::vector<float> out(batch * t_out);
  for (auto _ : state) {
    if constexpr (kReference) {
      k::reference::conv_transpose1d(batch, 1, frames, filters, kernel, stride, x.data(), w.data(),
                                     out.data());
    } else {
      k::conv_transpose1d(batch, 1, frames, filters, kernel, stride, x.data(), w.data(), out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}

BENCHMARK_TEMPLATE(BM_ConvTranspose1d, false)
    ->Name("conv_transpose1d/optimized")
    ->Unit(benchmark::kMicrosecond);
BENCHMARK_TEMPLATE(BM_ConvTranspose1d, true)
    ->Name("conv_transpose1d/reference")
    ->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
