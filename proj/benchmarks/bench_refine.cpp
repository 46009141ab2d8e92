#include <benchmark/benchmark.h>

#include "pfem/refine.hpp"

#include <cmath>

namespace {

void BM_adapt_square(benchmark::State& state) {
    const double h = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) {
        state.PauseTiming();
        pfem::ParticleSet ps;
        ps.add({0, 0}, {}, pfem::NodeRole::control);
        ps.add({1, 0}, {}, pfem::NodeRole::control);
        ps.add({1, 1}, {}, pfem::NodeRole::control);
        ps.add({0, 1}, {}, pfem::NodeRole::control);
        std::vector<pfem::Edge> cons{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
        pfem::TriMesh mesh = pfem::TriMesh::build_cdt(ps, cons);
        pfem::FluidDomain dom;
        dom.is_fluid.assign(mesh.triangle_capacity(), 0);
        for (pfem::TriId t : mesh.real_triangles()) dom.is_fluid[t] = 1;
        pfem::extract_boundary_loops(mesh, dom);
        const pfem::SizeField sf = pfem::SizeField::uniform(h);
        state.ResumeTiming();

        pfem::adapt(mesh, dom, sf, pfem::RefineParams{});
        benchmark::DoNotOptimize(mesh.vertex_count());
    }
}
BENCHMARK(BM_adapt_square)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_classify(benchmark::State& state) {
    pfem::ParticleSet ps;
    ps.add({0, 0}, {}, pfem::NodeRole::control);
    ps.add({1, 0}, {}, pfem::NodeRole::control);
    ps.add({1, 1}, {}, pfem::NodeRole::control);
    ps.add({0, 1}, {}, pfem::NodeRole::control);
    std::vector<pfem::Edge> cons{{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    pfem::TriMesh mesh = pfem::TriMesh::build_cdt(ps, cons);
    pfem::FluidDomain dom;
    dom.is_fluid.assign(mesh.triangle_capacity(), 0);
    for (pfem::TriId t : mesh.real_triangles()) dom.is_fluid[t] = 1;
    pfem::extract_boundary_loops(mesh, dom);
    const pfem::SizeField sf = pfem::SizeField::uniform(0.02);
    pfem::adapt(mesh, dom, sf, pfem::RefineParams{});

    for (auto _ : state) {
        auto d = pfem::classify_fluid(mesh, {1.2, &sf});
        pfem::detect_bubbles(mesh, d);
        benchmark::DoNotOptimize(d.fluid_volume);
    }
}
BENCHMARK(BM_classify)->Unit(benchmark::kMillisecond);

} // namespace
