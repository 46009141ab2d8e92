#include <doctest.h>

#include "pfem/lagrangian.hpp"
#include "pfem/error.hpp"
#include "test_fixtures.hpp"

#include <cmath>
#include <random>

using namespace pfem;

TEST_CASE("advance_positions moves particles, control nodes stay") {
    ParticleSet ps;
    ps.add({0, 0}, {1, 0});
    ps.add({1, 1}, {5, -2}, NodeRole::control);
    advance_positions(ps, 0.1);
    CHECK(ps.positions[0].x == doctest::Approx(0.1));
    CHECK(ps.positions[0].y == doctest::Approx(0.0));
    CHECK(ps.positions[1].x == doctest::Approx(1.0));
    CHECK(ps.positions[1].y == doctest::Approx(1.0));
}

TEST_CASE("RK4 advance shows fifth-order local error against fine substepping") {
    // rotating field u = (-y, x): analytic circles
    auto field = [](Point2 x, double) { return Vec2{-x.y, x.x}; };
    auto run_one = [&](double dt) {
        ParticleSet ps;
        ps.add({1, 0});
        advance_positions_rk4(ps, field, 0.0, dt);
        return ps.positions[0];
    };
    auto reference = [&](double dt) {
        ParticleSet ps;
        ps.add({1, 0});
        for (int k = 0; k < 256; ++k)
            advance_positions_rk4(ps, field, dt * k / 256.0, dt / 256.0);
        return ps.positions[0];
    };
    const double dt1 = 0.4, dt2 = 0.2;
    const double e1 = dist(run_one(dt1), reference(dt1));
    const double e2 = dist(run_one(dt2), reference(dt2));
    REQUIRE(e1 > 0.0);
    REQUIRE(e2 > 0.0);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 4.3);   // Richardson: local error scales like dt^5
    CHECK(order <= 5.7);
}

TEST_CASE("reproject: straight wall crossing per the textbook case") {
    WallGeometry walls;
    walls.segments.push_back({{-1, 0}, {1, 0}, {0, 1}});
    ParticleSet ps;
    ps.add({0.5, -0.05}, {0.0, -1.0});
    std::vector<Point2> prev{{0.5, 0.05}};
    const auto res = reproject_wall_crossers(ps, prev, walls, 0.01);
    CHECK(res.corrected == 1);
    CHECK(ps.positions[0].x == doctest::Approx(0.5));
    CHECK(ps.positions[0].y == 0.0);   // snapped exactly
    CHECK(ps.velocities[0].y == 0.0);  // normal component zeroed
    CHECK(ps.roles[0] == NodeRole::wall);
}

TEST_CASE("reproject: grazing particle ending on the wall") {
    WallGeometry walls;
    walls.segments.push_back({{-1, 0}, {1, 0}, {0, 1}});
    ParticleSet ps;
    ps.add({0.25, 0.0}, {0.3, -0.7});
    std::vector<Point2> prev{{0.2, 0.08}};
    const auto res = reproject_wall_crossers(ps, prev, walls, 0.01);
    CHECK(ps.velocities[0].y == 0.0);
    CHECK(ps.velocities[0].x == doctest::Approx(0.3));
    CHECK(ps.positions[0].y == 0.0);
}

TEST_CASE("reproject: corner crossing resolves against both walls") {
    WallGeometry walls;
    walls.segments.push_back({{0, -1}, {0, 1}, {1, 0}});   // vertical wall x=0
    walls.segments.push_back({{-1, 0}, {1, 0}, {0, 1}});   // horizontal wall y=0
    ParticleSet ps;
    // heading through the corner from the inside quadrant x>0, y>0
    ps.add({-0.08, -0.02}, {-1.0, -0.5});
    std::vector<Point2> prev{{0.06, 0.05}};
    const auto res = reproject_wall_crossers(ps, prev, walls, 0.01);
    CHECK(res.corrected == 1);
    // exhaustive oracle: earliest intersection is with the vertical wall
    const auto first = segment_intersection(prev[0], {-0.08, -0.02}, {0, -1}, {0, 1});
    REQUIRE(first.has_value());
    CHECK(ps.positions[0].x == 0.0);
    CHECK(ps.positions[0].y >= 0.0);  // stays inside after the second pass
    CHECK(ps.velocities[0].x == 0.0);
}

TEST_CASE("reproject: count is zero for wall-tangential flow") {
    WallGeometry walls;
    walls.segments.push_back({{-1, 0}, {1, 0}, {0, 1}});
    ParticleSet ps;
    std::vector<Point2> prev;
    for (int i = 0; i < 20; ++i) {
        prev.push_back({i * 0.05, 0.3});
        ps.add({i * 0.05 + 0.01, 0.3}, {0.2, 0.0});
    }
    const auto res = reproject_wall_crossers(ps, prev, walls, 0.01);
    CHECK(res.corrected == 0);
}

TEST_CASE("project_fields: nodal values, midpoints and linear reproduction") {
    using namespace pfem::testfix;
    BoxFluid fx = make_box_fluid(1.0, 1.0, 8, 8, 11);
    FlowState state;
    state.resize(fx.mesh.vertex_capacity());
    // manufactured linear field u = A x + b
    auto lin = [](Point2 p) { return Vec2{0.3 * p.x - 0.7 * p.y + 0.1, 1.1 * p.x + 0.4 * p.y - 0.2}; };
    for (VertexId v = 0; v < fx.mesh.vertex_capacity(); ++v)
        state.velocity[v] = lin(fx.mesh.position(v));

    ParticleSet query;
    std::vector<VertexId> ids;
    // at an old vertex
    query.add(fx.mesh.position(5));
    // at an edge midpoint of some fluid triangle
    const TriId t0 = fx.mesh.real_triangles().front();
    const auto& T0 = fx.mesh.tri(t0);
    query.add((fx.mesh.position(T0.v[0]) + fx.mesh.position(T0.v[1])) * 0.5);
    // random interior points
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    for (int i = 0; i < 50; ++i) query.add({u(rng), u(rng)});
    for (VertexId i = 0; i < query.size(); ++i) ids.push_back(i);

    const SizeField psf = SizeField::uniform(0.125);
    const auto vel = project_fields(ids, fx.mesh, fx.domain, state, query, psf);
    CHECK(dist(vel[0], state.velocity[5]) <= 1e-12);
    const Vec2 mid_expect = (state.velocity[T0.v[0]] + state.velocity[T0.v[1]]) * 0.5;
    CHECK(dist(vel[1], mid_expect) <= 1e-12);
    for (std::size_t k = 2; k < ids.size(); ++k)
        CHECK(dist(vel[k], lin(query.positions[k])) <= 1e-12);
}

TEST_CASE("project_fields: outside falls back to nearest, far outside throws") {
    using namespace pfem::testfix;
    BoxFluid fx = make_box_fluid(1.0, 1.0, 6, 6, 13);
    FlowState state;
    state.resize(fx.mesh.vertex_capacity());
    for (VertexId v = 0; v < fx.mesh.vertex_capacity(); ++v)
        state.velocity[v] = {double(v), 1.0};

    const double h_fs = 1.0 / 6.0;
    const SizeField psf = SizeField::uniform(h_fs);
    ParticleSet query;
    query.add({1.0 + 0.5 * h_fs, 0.5});  // just outside, within 2 h_fs
    std::vector<VertexId> one{0};
    const auto vel = project_fields(one, fx.mesh, fx.domain, state, query, psf);
    // nearest node is on the right wall at y ~ 0.5
    double best = 1e300;
    VertexId bv = kGhostVertex;
    for (VertexId v = 0; v < fx.mesh.vertex_capacity(); ++v) {
        const double d = dist(query.positions[0], fx.mesh.position(v));
        if (d < best) { best = d; bv = v; }
    }
    CHECK(dist(vel[0], state.velocity[bv]) <= 1e-12);

    ParticleSet far;
    far.add({3.0, 3.0});
    CHECK_THROWS_AS(project_fields(one, fx.mesh, fx.domain, state, far, psf),
                    ProjectionError);
}
