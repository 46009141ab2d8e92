#include <doctest.h>

#include "pfem/scenario.hpp"
#include "test_fixtures.hpp"
#include "pfem/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pfem;

TEST_CASE("config: minimal hydrostatic fills defaults and echoes") {
    const ScenarioConfig cfg = parse_config_text("scenario = hydrostatic\n");
    CHECK(cfg.alpha_threshold == doctest::Approx(1.2));
    CHECK(cfg.phys.rho == doctest::Approx(1000.0));
    CHECK(cfg.geom("width") == doctest::Approx(1.0));
    CHECK(cfg.probes.size() == 1);
    const std::string echo = config_echo(cfg);
    CHECK(echo.find("scenario = hydrostatic") != std::string::npos);
    CHECK(echo.find("alpha_threshold = 1.2") != std::string::npos);
    // the echo itself parses back
    const ScenarioConfig redo = parse_config_text(echo);
    CHECK(redo.h_fs == cfg.h_fs);
}

TEST_CASE("config: unknown key rejected with line number") {
    try {
        parse_config_text("scenario = hydrostatic\nfoo = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("foo") != std::string::npos);
    }
}

TEST_CASE("config: missing scenario and malformed values rejected") {
    CHECK_THROWS_AS(parse_config_text("h_fs = 0.01\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("scenario = hydrostatic\nh_fs = banana\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("scenario = nope\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("scenario = hydrostatic\nh_fs = -1\n"), ConfigError);
}

TEST_CASE("sloshing oracle: value at zero, inviscid reduction, direct evaluation") {
    CHECK(sloshing_wave_ratio(0.0, 0.005, M_PI, 9.81) == doctest::Approx(1.0));
    // nu = 0 reduces to cos(sqrt(kg) t)
    for (double t : {0.1, 0.7, 1.9}) {
        CHECK(sloshing_wave_ratio(t, 0.0, M_PI, 9.81) ==
              doctest::Approx(std::cos(std::sqrt(M_PI * 9.81) * t)).epsilon(1e-12));
    }
    // independent transcription of the published expression
    const double nu = 0.005, k = M_PI, g = 9.81;
    const double t = M_PI / std::sqrt(k * g);
    const double om = std::sqrt(k * g);
    const double expect =
        1.0 - 1.0 / (1.0 + 4.0 * nu * nu * k * k * k / g) *
                  (1.0 - std::exp(-2.0 * nu * k * k * t) *
                             (std::cos(om * t) + 2.0 * nu * k * k * std::sin(om * t) / om));
    CHECK(sloshing_wave_ratio(t, nu, k, g) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("vortex field: zeros, reference value, discrete divergence, reversal") {
    CHECK(vortex_velocity({0.3, 0.8}, 0.0, 5.0).x == doctest::Approx(0.0));
    CHECK(vortex_velocity({0.3, 0.8}, 0.0, 5.0).y == doctest::Approx(0.0));
    const Vec2 u = vortex_velocity({0.5, 0.75}, 1.25, 5.0);
    CHECK(u.x == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(u.y == doctest::Approx(0.0).epsilon(1e-12));

    // analytic divergence via central differences
    const double eps = 1e-6;
    for (const Point2 x : {Point2{0.31, 0.42}, Point2{0.77, 0.13}, Point2{0.5, 0.9}}) {
        const double dudx =
            (vortex_velocity({x.x + eps, x.y}, 1.0, 5.0).x -
             vortex_velocity({x.x - eps, x.y}, 1.0, 5.0).x) / (2 * eps);
        const double dvdy =
            (vortex_velocity({x.x, x.y + eps}, 1.0, 5.0).y -
             vortex_velocity({x.x, x.y - eps}, 1.0, 5.0).y) / (2 * eps);
        CHECK(std::abs(dudx + dvdy) <= 1e-8);
    }

    // reversal: field at T - t is the negative of the field at t
    for (double t : {0.3, 1.1, 2.2}) {
        const Vec2 a = vortex_velocity({0.4, 0.6}, t, 5.0);
        const Vec2 b = vortex_velocity({0.4, 0.6}, 5.0 - t, 5.0);
        CHECK(a.x == doctest::Approx(-b.x).epsilon(1e-12));
        CHECK(a.y == doctest::Approx(-b.y).epsilon(1e-12));
    }
}

TEST_CASE("hydrostatic run: equilibrium, probe, surface height") {
    ScenarioConfig cfg = parse_config_text(
        "scenario = hydrostatic\nh_fs = 0.08\nh_max = 0.2\ndt = 0.01\nt_end = 0.1\n"
        "output_every = 1\nwrite_meshes = off\nout_dir = /tmp/pfem_test_hydro\n");
    const RunResult res = run_scenario(cfg);
    CHECK(res.max_rel_volume_variation <= 1e-3);
    REQUIRE(!res.rows.empty());
    for (const auto& row : res.rows) {
        CHECK(row.probe_values.at(0) == doctest::Approx(9810.0).epsilon(0.01));
        CHECK(row.eta == doctest::Approx(1.0).epsilon(0.01));
        CHECK(row.n_bubbles == 0);
    }
}

TEST_CASE("probe in a dry region reports a missing value") {
    ScenarioConfig cfg = parse_config_text(
        "scenario = hydrostatic\nh_fs = 0.1\nh_max = 0.25\ndt = 0.01\nt_end = 0.01\n"
        "output_every = 1\nwrite_meshes = off\nout_dir = /tmp/pfem_test_dry\n"
        "probe = wet 0.5 0.5\nprobe = dry 0.5 1.3\n");
    const RunResult res = run_scenario(cfg);
    REQUIRE(!res.rows.empty());
    CHECK(!std::isnan(res.rows.back().probe_values.at(0)));
    CHECK(std::isnan(res.rows.back().probe_values.at(1)));
}

TEST_CASE("determinism: identical configs produce byte-identical outputs") {
    const char* text =
        "scenario = hydrostatic\nh_fs = 0.1\nh_max = 0.25\ndt = 0.01\nt_end = 0.03\n"
        "output_every = 1\nwrite_meshes = on\n";
    const ScenarioConfig cfg = parse_config_text(text);
    setenv("PFEM_OUT", "/tmp/pfem_det_a", 1);
    run_scenario(cfg);
    setenv("PFEM_OUT", "/tmp/pfem_det_b", 1);
    run_scenario(cfg);
    unsetenv("PFEM_OUT");
    for (const char* name : {"series.csv", "config_resolved.cfg", "mesh_0.txt"}) {
        std::ifstream fa(std::string("/tmp/pfem_det_a/") + name),
            fb(std::string("/tmp/pfem_det_b/") + name);
        REQUIRE(fa.good());
        REQUIRE(fb.good());
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        CHECK(sa.str() == sb.str());
        CHECK(!sa.str().empty());
    }
}

TEST_CASE("series CSV columns match the contract") {
    ScenarioConfig cfg = parse_config_text(
        "scenario = hydrostatic\nh_fs = 0.1\nh_max = 0.25\ndt = 0.01\nt_end = 0.01\n"
        "output_every = 1\nwrite_meshes = off\nout_dir = /tmp/pfem_csv\n");
    run_scenario(cfg);
    std::ifstream f("/tmp/pfem_csv/series.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header == "t,volume,rel_vol_var,n_bubbles,probe_bottom,eta,div_l2,max_bubble_flux");
}

TEST_CASE("vortex kinematic short run keeps the disk volume") {
    ScenarioConfig cfg = parse_config_text(
        "scenario = vortex_box_bubble\nh_fs = 0.03\nh_max = 0.09\ndt = 0.02\nt_end = 0.2\n"
        "output_every = 5\nwrite_meshes = off\nout_dir = /tmp/pfem_vortex_short\n");
    const RunResult res = run_scenario(cfg);
    CHECK(res.initial_volume == doctest::Approx(M_PI * 0.15 * 0.15).epsilon(0.05));
    CHECK(res.max_rel_volume_variation <= 0.02);
}

#include "pfem/mesh_io.hpp"

TEST_CASE("mesh snapshot and loop CSV export formats") {
    using namespace pfem::testfix;
    BoxFluid fx = make_box_fluid(1.0, 0.5, 4, 2, 21, 0.0);
    FlowState state;
    state.resize(fx.mesh.vertex_capacity());
    std::ostringstream ms;
    write_mesh_snapshot(ms, fx.mesh, fx.domain, state);
    const std::string snap = ms.str();
    CHECK(snap.rfind("pfem-mesh 1\n", 0) == 0);
    CHECK(snap.find("vertices 15") != std::string::npos);
    CHECK(snap.find("# id x y role ux uy p") != std::string::npos);
    CHECK(snap.find("triangles") != std::string::npos);
    CHECK(snap.find("control") != std::string::npos);

    std::ostringstream ls;
    write_loops_csv(ls, fx.mesh, fx.domain);
    const std::string loops = ls.str();
    CHECK(loops.rfind("loop,label,vertex,x,y\n", 0) == 0);
    CHECK(loops.find("external_free_surface") != std::string::npos);
}
