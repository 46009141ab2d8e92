#include <benchmark/benchmark.h>

#include "pfem/triangulation.hpp"

#include <random>

namespace {

pfem::ParticleSet cloud(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    pfem::ParticleSet ps;
    for (std::size_t i = 0; i < n; ++i) ps.add({u(rng), u(rng)});
    return ps;
}

void BM_build_cdt(benchmark::State& state) {
    const auto ps = cloud(static_cast<std::size_t>(state.range(0)), 42);
    for (auto _ : state) {
        pfem::TriMesh mesh = pfem::TriMesh::build_cdt(ps, {});
        benchmark::DoNotOptimize(mesh.real_triangle_count());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_build_cdt)->Arg(1000)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_locate(benchmark::State& state) {
    const auto ps = cloud(5000, 7);
    const pfem::TriMesh mesh = pfem::TriMesh::build_cdt(ps, {});
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (auto _ : state) {
        benchmark::DoNotOptimize(mesh.locate({u(rng), u(rng)}));
    }
}
BENCHMARK(BM_locate);

} // namespace
