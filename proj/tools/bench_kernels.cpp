// Copyright (c) 2026, The jedssl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference against OpenMP kernels on encoder-sized matmuls and
// k-means assignment.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "jedssl/kernels.hpp"

namespace k = jedssl::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist;
    std::vector<double> v(n);
    for (auto& x : v) x = dist(rng);
    return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const k::GemmShape s{n, n, n};
    const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
    std::vector<double> c(n * n);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::omp::gemm<double>(k::Trans::kNo, k::Trans::kNo, s, a.data(), b.data(), c.data(), false);
        } else {
            k::serial::gemm<double>(k::Trans::kNo, k::Trans::kNo, s, a.data(), b.data(), c.data(), false);
        }
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}

template <bool Parallel>
void BM_Assign(benchmark::State& state) {
    const auto points = static_cast<std::size_t>(state.range(0));
    const k::AssignShape s{points, 64, 64};
    const auto x = random_values(points * s.d, 3), c = random_values(s.k * s.d, 4);
    std::vector<std::int32_t> ids(points);
    std::vector<double> dist(points);
    for (auto _ : state) {
        if constexpr (Parallel) {
            k::omp::assign_nearest(s, x.data(), c.data(), ids.data(), dist.data());
        } else {
            k::serial::assign_nearest(s, x.data(), c.data(), ids.data(), dist.data());
        }
        benchmark::DoNotOptimize(ids.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(points));
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Arg(64)->Arg(256);
BENCHMARK(BM_Assign<false>)->Name("assign/serial")->Arg(4096)->Arg(65536);
BENCHMARK(BM_Assign<true>)->Name("assign/omp")->Arg(4096)->Arg(65536);

BENCHMARK_MAIN();
