#include <doctest.h>

#include "pfem/domain_shape.hpp"
#include "pfem/error.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace pfem;

namespace {

// disk of points on concentric rings, spacing ~h
ParticleSet disk_cloud(Point2 center, double radius, double h) {
    ParticleSet ps;
    ps.add(center);
    const int nr = std::max(1, static_cast<int>(std::round(radius / h)));
    for (int r = 1; r <= nr; ++r) {
        const double rr = radius * r / nr;
        const int nth = std::max(6, static_cast<int>(std::round(2 * M_PI * rr / h)));
        for (int k = 0; k < nth; ++k) {
            const double th = 2 * M_PI * k / nth + 0.1 * r;
            ps.add({center.x + rr * std::cos(th), center.y + rr * std::sin(th)});
        }
    }
    return ps;
}

// rectangle filled with a jittered grid
ParticleSet box_cloud(Point2 lo, Point2 hi, double h, unsigned seed = 7) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> jit(-0.15 * h, 0.15 * h);
    ParticleSet ps;
    const int nx = static_cast<int>(std::round((hi.x - lo.x) / h));
    const int ny = static_cast<int>(std::round((hi.y - lo.y) / h));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            const bool edge = i == 0 || j == 0 || i == nx || j == ny;
            const double jx = edge ? 0.0 : jit(rng);
            const double jy = edge ? 0.0 : jit(rng);
            ps.add({lo.x + i * h + jx, lo.y + j * h + jy});
        }
    return ps;
}

} // namespace

TEST_CASE("classify_fluid: threshold arithmetic on a single triangle") {
    // R_e = 1.3, alpha = 1.0, threshold 1.2 -> not fluid
    // equilateral triangle with circumradius R: side = R*sqrt(3)
    const double R = 1.3;
    const double side = R * std::sqrt(3.0);
    ParticleSet ps;
    ps.add({0, 0});
    ps.add({side, 0});
    ps.add({side / 2, side * std::sqrt(3.0) / 2});
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(1.0);
    const FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    CHECK(dom.fluid_volume == doctest::Approx(0.0));
    const FluidDomain dom2 = classify_fluid(mesh, {1.31, &alpha});
    CHECK(dom2.fluid_volume > 0.0);
}

TEST_CASE("classify_fluid: fine disk is all fluid with one external loop") {
    const auto ps = disk_cloud({0, 0}, 0.5, 0.06);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(10.0);  // alpha >> all R_e
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    detect_bubbles(mesh, dom);
    CHECK(dom.bubble_count == 0);
    REQUIRE(dom.loops.size() == 1);
    CHECK(dom.loops[0].label == LoopLabel::external_free_surface);
    CHECK(dom.loops[0].signed_area > 0.0);
    for (TriId t : mesh.real_triangles()) CHECK(dom.fluid(t));
}

TEST_CASE("classify_fluid equals the direct per-triangle circumradius oracle") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 4; ++rep) {
        ParticleSet ps;
        const int n = 300 + rep * 400;
        for (int i = 0; i < n; ++i) ps.add({u(rng), u(rng)});
        const TriMesh mesh = TriMesh::build_cdt(ps, {});
        const SizeField alpha = SizeField::uniform(0.06);
        const FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
        for (TriId t : mesh.real_triangles()) {
            const auto& T = mesh.tri(t);
            // independent recomputation of R_e: distance from circumcenter to a
            // vertex via the perpendicular-bisector construction
            const Point2 a = mesh.position(T.v[0]);
            const Point2 b = mesh.position(T.v[1]);
            const Point2 c = mesh.position(T.v[2]);
            const double d = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
            const double ux = ((a.x * a.x + a.y * a.y) * (b.y - c.y) +
                               (b.x * b.x + b.y * b.y) * (c.y - a.y) +
                               (c.x * c.x + c.y * c.y) * (a.y - b.y)) / d;
            const double uy = ((a.x * a.x + a.y * a.y) * (c.x - b.x) +
                               (b.x * b.x + b.y * b.y) * (a.x - c.x) +
                               (c.x * c.x + c.y * c.y) * (b.x - a.x)) / d;
            const double Re = dist({ux, uy}, a);
            const bool fluid_oracle = Re / 0.06 <= 1.2;
            CHECK(dom.fluid(t) == fluid_oracle);
        }
    }
}

TEST_CASE("classify_fluid is idempotent and order-independent") {
    const auto ps = box_cloud({0, 0}, {1, 1}, 0.1);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(0.12);
    const FluidDomain a = classify_fluid(mesh, {1.2, &alpha});
    const FluidDomain b = classify_fluid(mesh, {1.2, &alpha});
    CHECK(a.is_fluid == b.is_fluid);
    CHECK(a.loops.size() == b.loops.size());
}

TEST_CASE("detect_bubbles: annulus has one bubble; region touching hull has none") {
    // fluid ring: points on circles between r=0.3 and r=0.6, hole inside
    ParticleSet ps;
    const double h = 0.05;
    for (double rr = 0.3; rr <= 0.6001; rr += h) {
        const int nth = std::max(8, static_cast<int>(std::round(2 * M_PI * rr / h)));
        for (int k = 0; k < nth; ++k) {
            const double th = 2 * M_PI * k / nth + rr;
            ps.add({rr * std::cos(th), rr * std::sin(th)});
        }
    }
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(1.5 * h);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    detect_bubbles(mesh, dom);
    CHECK(dom.bubble_count == 1);
    REQUIRE(dom.bubble_volumes.size() == 1);
    // the hole has radius ~0.3 minus half a spacing
    CHECK(dom.bubble_volumes[0] == doctest::Approx(M_PI * 0.3 * 0.3).epsilon(0.25));
    int bubble_loops = 0, external_loops = 0;
    for (const auto& l : dom.loops) {
        if (l.label == LoopLabel::bubble) {
            ++bubble_loops;
            CHECK(l.signed_area < 0.0);  // clockwise around the hole
        }
        if (l.label == LoopLabel::external_free_surface) ++external_loops;
    }
    CHECK(bubble_loops == 1);
    CHECK(external_loops == 1);
}

TEST_CASE("detect_bubbles: two disjoint holes, deterministic ordinals, flood-fill oracle") {
    // 8-shaped fluid: two annuli sharing a bridge; build as a box with two holes
    ParticleSet ps = box_cloud({0, 0}, {2, 1}, 0.05, 11);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    // carve two holes by classification: alpha small near two disks is not
    // expressible with the uniform field, so instead classify normally and
    // then manually flag triangles whose centroid falls into either disk.
    const SizeField alpha = SizeField::uniform(0.075);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    const Point2 c1{0.5, 0.5}, c2{1.5, 0.5};
    const double hole_r = 0.2;
    for (TriId t : mesh.real_triangles()) {
        const auto& T = mesh.tri(t);
        Point2 cen{0, 0};
        for (VertexId v : T.v) cen += mesh.position(v);
        cen = cen / 3.0;
        if (dist(cen, c1) < hole_r || dist(cen, c2) < hole_r) dom.is_fluid[t] = 0;
    }
    extract_boundary_loops(mesh, dom);
    detect_bubbles(mesh, dom);
    CHECK(dom.bubble_count == 2);

    // flood-fill oracle over non-fluid triangles with shared-edge adjacency
    std::map<TriId, int> comp;
    int ncomp = 0;
    int enclosed = 0;
    for (TriId t0 : mesh.real_triangles()) {
        if (dom.fluid(t0) || comp.count(t0)) continue;
        const int c = ncomp++;
        bool touches_hull = false;
        std::vector<TriId> work{t0};
        comp[t0] = c;
        while (!work.empty()) {
            const TriId t = work.back();
            work.pop_back();
            const auto& T = mesh.tri(t);
            for (int e = 0; e < 3; ++e) {
                const TriId nb = mesh.neighbor(t, e);
                if (nb == kNoTriangle) { touches_hull = true; continue; }
                if (dom.fluid(nb) || comp.count(nb)) continue;
                comp[nb] = c;
                work.push_back(nb);
            }
        }
        if (!touches_hull) ++enclosed;
    }
    CHECK(enclosed == dom.bubble_count);

    // ordinals ordered by minimal loop vertex id
    std::vector<VertexId> min_v(static_cast<std::size_t>(dom.bubble_count), kGhostVertex);
    for (const auto& l : dom.loops) {
        if (l.label != LoopLabel::bubble) continue;
        for (VertexId v : l.vertices)
            min_v[static_cast<std::size_t>(l.bubble_index)] =
                std::min(min_v[static_cast<std::size_t>(l.bubble_index)], v);
    }
    CHECK(min_v[0] < min_v[1]);
}

TEST_CASE("loop_geometry: unit square loop") {
    ParticleSet ps = box_cloud({0, 0}, {1, 1}, 0.25, 3);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(10.0);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    REQUIRE(dom.loops.size() == 1);
    const LoopGeometry g = loop_geometry(mesh, dom.loops[0]);
    CHECK(g.enclosed_area == doctest::Approx(1.0).epsilon(1e-12));
    Vec2 closure{0, 0};
    for (std::size_t k = 0; k < g.edge_lengths.size(); ++k) {
        closure += g.outward_normals[k] * g.edge_lengths[k];
        // normals point away from the fluid: for the unit square that is
        // away from the centroid (.5,.5)
        const Point2 a = mesh.position(dom.loops[0].vertices[k]);
        const Point2 b = mesh.position(
            dom.loops[0].vertices[(k + 1) % dom.loops[0].vertices.size()]);
        const Point2 midp = (a + b) * 0.5;
        CHECK(dot(g.outward_normals[k], midp - Point2{0.5, 0.5}) > 0.0);
    }
    CHECK(norm(closure) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("loop_geometry: 256-gon area approaches the disk") {
    ParticleSet ps;
    const double R = 0.5;
    for (int k = 0; k < 256; ++k) {
        const double th = 2 * M_PI * k / 256;
        ps.add({R * std::cos(th), R * std::sin(th)});
    }
    ps.add({0, 0});
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(10.0);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    REQUIRE(dom.loops.size() == 1);
    const LoopGeometry g = loop_geometry(mesh, dom.loops[0]);
    CHECK(g.enclosed_area == doctest::Approx(M_PI * R * R).epsilon(1e-3));
}

TEST_CASE("fluid_volume: additivity and loop identity") {
    ParticleSet ps = box_cloud({0, 0}, {1, 1}, 0.05, 19);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(0.075);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    CHECK(dom.fluid_volume == doctest::Approx(1.0).epsilon(1e-9));

    // carve a hole and compare triangle-sum vs loop-area identity
    for (TriId t : mesh.real_triangles()) {
        const auto& T = mesh.tri(t);
        Point2 cen{0, 0};
        for (VertexId v : T.v) cen += mesh.position(v);
        cen = cen / 3.0;
        if (dist(cen, {0.5, 0.5}) < 0.2) dom.is_fluid[t] = 0;
    }
    extract_boundary_loops(mesh, dom);
    detect_bubbles(mesh, dom);
    const double vol = fluid_volume(dom, mesh);
    double loop_sum = 0.0;
    for (const auto& l : dom.loops) loop_sum += l.signed_area;
    CHECK(vol == doctest::Approx(loop_sum).epsilon(1e-10));
    CHECK(vol < 1.0);
}

TEST_CASE("every fluid boundary edge lies on exactly one loop") {
    ParticleSet ps = box_cloud({0, 0}, {1, 1}, 0.07, 23);
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(0.09);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    std::set<std::pair<VertexId, VertexId>> loop_edges;
    for (const auto& l : dom.loops) {
        for (std::size_t k = 0; k < l.vertices.size(); ++k) {
            const auto key = std::make_pair(l.vertices[k],
                                            l.vertices[(k + 1) % l.vertices.size()]);
            CHECK(loop_edges.insert(key).second);  // no duplicates across loops
        }
    }
    std::size_t boundary_count = 0;
    for (TriId t : mesh.real_triangles()) {
        if (!dom.fluid(t)) continue;
        const auto& T = mesh.tri(t);
        for (int e = 0; e < 3; ++e) {
            const TriId nb = T.nbr[e];
            const bool nb_fluid =
                nb != kNoTriangle && !mesh.tri_is_ghost(nb) && dom.fluid(nb);
            if (nb_fluid) continue;
            ++boundary_count;
            CHECK(loop_edges.count({T.v[(e + 1) % 3], T.v[(e + 2) % 3]}) == 1);
        }
    }
    CHECK(boundary_count == loop_edges.size());
}

TEST_CASE("alpha-shape stability under small perturbations") {
    // refinement-clean cloud: jittered grid; perturb every point by 0.05*h
    const double h = 0.05;
    ParticleSet ps = box_cloud({0, 0}, {1, 1}, h, 37);
    const SizeField alpha = SizeField::uniform(1.4 * h);
    const TriMesh mesh0 = TriMesh::build_cdt(ps, {});
    FluidDomain d0 = classify_fluid(mesh0, {1.2, &alpha});
    detect_bubbles(mesh0, d0);

    std::mt19937 rng(101);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ParticleSet perturbed = ps;
    for (auto& p : perturbed.positions) {
        p.x += 0.05 * 1.4 * h * u(rng);
        p.y += 0.05 * 1.4 * h * u(rng);
    }
    const TriMesh mesh1 = TriMesh::build_cdt(perturbed, {});
    FluidDomain d1 = classify_fluid(mesh1, {1.2, &alpha});
    detect_bubbles(mesh1, d1);

    CHECK(d0.bubble_count == d1.bubble_count);
    int ext0 = 0, ext1 = 0;
    for (const auto& l : d0.loops)
        if (l.label == LoopLabel::external_free_surface) ++ext0;
    for (const auto& l : d1.loops)
        if (l.label == LoopLabel::external_free_surface) ++ext1;
    CHECK(ext0 == ext1);
}
