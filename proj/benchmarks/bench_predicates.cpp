#include <benchmark/benchmark.h>

#include "pfem/geometry.hpp"

#include <random>
#include <vector>

namespace {

std::vector<pfem::Point2> random_points(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<pfem::Point2> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng)};
    return pts;
}

void BM_orient2d_random(benchmark::State& state) {
    const auto pts = random_points(3 * 1024, 1);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto& a = pts[i % pts.size()];
        const auto& b = pts[(i + 1) % pts.size()];
        const auto& c = pts[(i + 2) % pts.size()];
        benchmark::DoNotOptimize(pfem::orient2d(a, b, c));
        i += 3;
    }
}
BENCHMARK(BM_orient2d_random);

void BM_orient2d_degenerate(benchmark::State& state) {
    // exact collinear triples force the expansion fallback
    const pfem::Point2 a{0.5, 0.5}, b{12.0, 12.0}, c{3.25, 3.25};
    for (auto _ : state) benchmark::DoNotOptimize(pfem::orient2d(a, b, c));
}
BENCHMARK(BM_orient2d_degenerate);

void BM_incircle_random(benchmark::State& state) {
    const auto pts = random_points(4 * 1024, 2);
    std::size_t i = 0;
    for (auto _ : state) {
        pfem::Point2 a = pts[i % pts.size()];
        pfem::Point2 b = pts[(i + 1) % pts.size()];
        const pfem::Point2 c = pts[(i + 2) % pts.size()];
        const pfem::Point2 d = pts[(i + 3) % pts.size()];
        if (pfem::orient2d(a, b, c) < 0) std::swap(a, b);
        benchmark::DoNotOptimize(pfem::incircle(a, b, c, d));
        i += 4;
    }
}
BENCHMARK(BM_incircle_random);

void BM_incircle_cocircular(benchmark::State& state) {
    // on-circle query exercises the exact evaluation path
    const pfem::Point2 a{-1, -1}, b{1, -1}, c{1, 1}, d{-1, 1};
    for (auto _ : state) benchmark::DoNotOptimize(pfem::incircle(a, b, c, d));
}
BENCHMARK(BM_incircle_cocircular);

} // namespace
