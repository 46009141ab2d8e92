// Acceptance suite: one self-contained check per shipped guarantee, each
// printing a PASS/FAIL line. Run all with no arguments or a single one with
// --criterion N.

#include "pfem/error.hpp"
#include "pfem/mesh_io.hpp"
#include "pfem/refine.hpp"
#include "pfem/scenario.hpp"

#include "../test_fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace pfem;

namespace {

struct Check {
    int id;
    std::string name;
    std::function<bool(std::string&)> run;
};

std::string g_outdir = "/tmp/pfem_acceptance";

// ---------------------------------------------------------------------------
// 1. Delaunay correctness on random constrained clouds

bool criterion1(std::string& detail) {
    std::mt19937 rng(20260808);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<std::pair<int, int>> plan = {
        {40, 100}, {30, 500}, {20, 1000}, {9, 2000}, {1, 5000}};
    int cloud_no = 0;
    for (const auto& [count, size] : plan) {
        for (int rep = 0; rep < count; ++rep, ++cloud_no) {
            ParticleSet ps;
            for (int i = 0; i < size; ++i) ps.add({u(rng), u(rng)});
            // random non-crossing constraints on every second cloud
            std::vector<Edge> constraints;
            if (cloud_no % 2 == 1) {
                std::uniform_int_distribution<VertexId> pick(0, static_cast<VertexId>(size - 1));
                auto ok = [&](Edge e) {
                    if (e.a == e.b) return false;
                    for (const Edge& c : constraints) {
                        if (e.a == c.a || e.a == c.b || e.b == c.a || e.b == c.b) return false;
                        if (segment_intersection(ps.positions[e.a], ps.positions[e.b],
                                                 ps.positions[c.a], ps.positions[c.b]))
                            return false;
                    }
                    return true;
                };
                while (constraints.size() < 6) {
                    const Edge e{pick(rng), pick(rng)};
                    if (ok(e)) constraints.push_back(e);
                }
            }
            const TriMesh mesh = TriMesh::build_cdt(ps, constraints);
            mesh.audit(true);  // includes the local empty-circle check per edge

            if (constraints.empty() && size <= 1000) {
                // full brute force: no vertex inside any circumdisk
                for (TriId t : mesh.real_triangles()) {
                    const auto& T = mesh.tri(t);
                    for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
                        if (v == T.v[0] || v == T.v[1] || v == T.v[2]) continue;
                        if (incircle(mesh.position(T.v[0]), mesh.position(T.v[1]),
                                     mesh.position(T.v[2]), mesh.position(v)) > 0) {
                            detail = "global empty-circle violation, cloud " +
                                     std::to_string(cloud_no);
                            return false;
                        }
                    }
                }
            }
            for (const Edge& c : constraints) {
                if (!mesh.is_constrained(c.a, c.b)) {
                    detail = "constraint lost, cloud " + std::to_string(cloud_no);
                    return false;
                }
            }
        }
    }
    detail = "100 clouds audited";
    return true;
}

// ---------------------------------------------------------------------------
// 2. Refinement guarantee on convex polygons with a uniform size field

bool criterion2(std::string& detail) {
    struct Fix {
        std::vector<Point2> corners;
        double h;
    };
    std::vector<Fix> fixtures;
    fixtures.push_back({{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 0.08});
    {
        std::vector<Point2> pent;
        for (int k = 0; k < 5; ++k) {
            const double th = 2 * M_PI * k / 5 + 0.3;
            pent.push_back({std::cos(th), std::sin(th)});
        }
        fixtures.push_back({pent, 0.1});
    }
    for (const Fix& fx : fixtures) {
        ParticleSet ps;
        std::vector<Edge> cons;
        for (const Point2& c : fx.corners) ps.add(c, {}, NodeRole::control);
        const VertexId n = static_cast<VertexId>(ps.size());
        for (VertexId i = 0; i < n; ++i) cons.push_back(Edge{i, (i + 1) % n});
        TriMesh mesh = TriMesh::build_cdt(ps, cons);
        const SizeField sf = SizeField::uniform(fx.h);
        FluidDomain dom;
        dom.is_fluid.assign(mesh.triangle_capacity(), 0);
        for (TriId t : mesh.real_triangles()) dom.is_fluid[t] = 1;
        extract_boundary_loops(mesh, dom);
        RefineParams rp;
        const AdaptResult first = adapt(mesh, dom, sf, rp);
        mesh.audit();

        double min_angle = 180.0;
        const double r_base = 0.5 * sf.h_fs();
        for (TriId t : mesh.real_triangles()) {
            if (!dom.fluid(t)) continue;
            const auto& T = mesh.tri(t);
            const Point2 a = mesh.position(T.v[0]);
            const Point2 b = mesh.position(T.v[1]);
            const Point2 c = mesh.position(T.v[2]);
            for (int i = 0; i < 3; ++i) {
                const Point2 xs[3] = {a, b, c};
                const Vec2 e1 = xs[(i + 1) % 3] - xs[i];
                const Vec2 e2 = xs[(i + 2) % 3] - xs[i];
                min_angle = std::min(
                    min_angle, std::acos(std::clamp(dot(e1, e2) / (norm(e1) * norm(e2)),
                                                    -1.0, 1.0)) * 180.0 / M_PI);
            }
            const TriMetrics m = tri_metrics(a, b, c);
            const double h = sf.eval(m.circumcenter);
            if (m.circumradius < std::max(r_base, rp.collapse_ratio * h)) continue;
            if (m.quality < rp.gamma_min || m.circumradius > rp.size_ratio * h) {
                detail = "triangle fails quality/size without exemption";
                return false;
            }
        }
        if (min_angle < 26.5) {
            std::ostringstream os;
            os << "min angle " << min_angle << " deg < 26.5";
            detail = os.str();
            return false;
        }
        const AdaptResult second = adapt(mesh, dom, sf, rp);
        if (!second.inserted.empty() || !second.removed.empty()) {
            detail = "adapt is not idempotent";
            return false;
        }
        (void)first;
    }
    detail = "square and pentagon fixtures: angle bound, criteria, idempotence";
    return true;
}

// ---------------------------------------------------------------------------
// 3. Alpha-shape oracle equivalence and bubble flood-fill oracle

bool criterion3(std::string& detail) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 6; ++rep) {
        const int n = 200 + rep * 350;
        ParticleSet ps;
        for (int i = 0; i < n; ++i) ps.add({u(rng), u(rng)});
        const TriMesh mesh = TriMesh::build_cdt(ps, {});
        const double alpha_val = 0.05 + 0.01 * rep;
        const SizeField alpha = SizeField::uniform(alpha_val);
        const FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
        for (TriId t : mesh.real_triangles()) {
            const auto& T = mesh.tri(t);
            const Point2 a = mesh.position(T.v[0]);
            const Point2 b = mesh.position(T.v[1]);
            const Point2 c = mesh.position(T.v[2]);
            // independent circumradius: R = abc / (4 A)
            const double la = dist(b, c), lb = dist(c, a), lc = dist(a, b);
            const double area = 0.5 * std::abs(signed_area2(a, b, c));
            const double R = la * lb * lc / (4.0 * area);
            const bool oracle = R / alpha_val <= 1.2;
            if (dom.fluid(t) != oracle) {
                detail = "alpha classification mismatch";
                return false;
            }
        }
    }

    // constructed two-hole fixture with a flood-fill oracle
    ParticleSet ps;
    std::mt19937 rng2(3);
    std::uniform_real_distribution<double> jit(-0.008, 0.008);
    const double h = 0.05;
    for (int j = 0; j <= 20; ++j)
        for (int i = 0; i <= 40; ++i) {
            const bool edge = i == 0 || j == 0 || i == 40 || j == 20;
            ps.add({i * h + (edge ? 0.0 : jit(rng2)), j * h + (edge ? 0.0 : jit(rng2))});
        }
    const TriMesh mesh = TriMesh::build_cdt(ps, {});
    const SizeField alpha = SizeField::uniform(0.075);
    FluidDomain dom = classify_fluid(mesh, {1.2, &alpha});
    const Point2 c1{0.5, 0.5}, c2{1.5, 0.5};
    for (TriId t : mesh.real_triangles()) {
        const auto& T = mesh.tri(t);
        Point2 cen{0, 0};
        for (VertexId v : T.v) cen += mesh.position(v);
        cen = cen / 3.0;
        if (dist(cen, c1) < 0.18 || dist(cen, c2) < 0.18) dom.is_fluid[t] = 0;
    }
    extract_boundary_loops(mesh, dom);
    detect_bubbles(mesh, dom);

    // oracle: flood fill of non-fluid triangles; enclosed components
    std::vector<int> comp(mesh.triangle_capacity(), -1);
    int ncomp = 0, enclosed = 0;
    for (TriId t0 : mesh.real_triangles()) {
        if (dom.fluid(t0) || comp[t0] >= 0) continue;
        bool hull = false;
        std::vector<TriId> work{t0};
        comp[t0] = ncomp;
        while (!work.empty()) {
            const TriId t = work.back();
            work.pop_back();
            for (int e = 0; e < 3; ++e) {
                const TriId nb = mesh.neighbor(t, e);
                if (nb == kNoTriangle) {
                    hull = true;
                    continue;
                }
                if (dom.fluid(nb) || comp[nb] >= 0) continue;
                comp[nb] = ncomp;
                work.push_back(nb);
            }
        }
        ++ncomp;
        if (!hull) ++enclosed;
    }
    if (dom.bubble_count != enclosed || enclosed != 2) {
        std::ostringstream os;
        os << "bubble count " << dom.bubble_count << " vs flood-fill oracle " << enclosed;
        detail = os.str();
        return false;
    }
    detail = "classification equals the direct R/alpha test; 2 bubbles match flood fill";
    return true;
}

// ---------------------------------------------------------------------------
// 4. Vortex-in-a-box volume conservation under adaptation

bool criterion4(std::string& detail) {
    struct VortexStats {
        double at_end = 0.0;
        double max_over_run = 0.0;
    };
    auto run_vortex = [&](double h_fs, bool adapt_on, double dt) {
        std::ostringstream cfg;
        cfg << "scenario = vortex_box_bubble\n"
            << "h_fs = " << h_fs << "\nh_max = " << (adapt_on ? 4 * h_fs : h_fs) << "\n"
            << "dt = " << dt << "\nt_end = 5.0\noutput_every = 25\nwrite_meshes = off\n"
            << "adapt = " << (adapt_on ? "on" : "off") << "\n"
            << "out_dir = " << g_outdir << "/vortex\n";
        const ScenarioConfig c = parse_config_text(cfg.str());
        const RunResult res = run_scenario(c);
        VortexStats st;
        st.at_end = std::abs(res.rows.back().volume - res.initial_volume) / res.initial_volume;
        st.max_over_run = res.max_rel_volume_variation;
        return st;
    };
    const VortexStats coarse = run_vortex(0.02, true, 0.008);
    const VortexStats fine = run_vortex(0.01, true, 0.004);
    // ~25k uniform elements at box scale (the uniform comparison meshes the
    // whole domain at one size): h = sqrt(area / (0.433 * 25000))
    const double h_uni = std::sqrt((1.0 - M_PI * 0.15 * 0.15) / (0.433 * 25000.0));
    const VortexStats uniform = run_vortex(h_uni, false, 0.008);

    std::ostringstream os;
    os << "rel volume variation at t=T (max over run): adapted h=0.02: " << coarse.at_end
       << " (" << coarse.max_over_run << "), h=0.01: " << fine.at_end << " ("
       << fine.max_over_run << "), uniform no-adapt h=" << h_uni << ": " << uniform.at_end
       << " (" << uniform.max_over_run << ")";
    detail = os.str();
    // the kinematic no-adapt cloud retraces its streamlines, so its loss is
    // measured over the run (the alpha shape erodes the stretched filament)
    return coarse.at_end < 0.03 && fine.at_end < coarse.at_end &&
           uniform.max_over_run > coarse.max_over_run;
}

// ---------------------------------------------------------------------------
// 5. Hydrostatic equilibrium over 50 steps

bool criterion5(std::string& detail) {
    std::ostringstream cfg;
    cfg << "scenario = hydrostatic\nh_fs = 0.05\nh_max = 0.15\ndt = 0.005\nt_end = 0.25\n"
        << "output_every = 1\nwrite_meshes = off\nout_dir = " << g_outdir << "/hydro\n";
    const RunResult res = run_scenario(parse_config_text(cfg.str()));
    double max_u = 0.0, max_var = 0.0, worst_probe = 0.0;
    for (const auto& row : res.rows) {
        max_u = std::max(max_u, row.max_speed);
        max_var = std::max(max_var, row.rel_vol_var);
        worst_probe = std::max(worst_probe, std::abs(row.probe_values.at(0) - 9810.0));
    }
    std::ostringstream os;
    os << res.rows.size() << " steps: max|u| " << max_u << " m/s, volume drift " << max_var
       << ", probe error " << worst_probe << " Pa";
    detail = os.str();
    return res.rows.size() >= 50 && max_u <= 1e-5 && worst_probe <= 98.1 && max_var <= 1e-3;
}

// ---------------------------------------------------------------------------
// 6. Low-amplitude sloshing against the analytic solution

struct PeakInfo {
    std::vector<double> times;
    std::vector<double> values;
};

PeakInfo find_peaks(const std::vector<TimeSeriesRow>& rows, double h0) {
    PeakInfo out;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        const double prev = rows[i - 1].eta - h0;
        const double cur = rows[i].eta - h0;
        const double next = rows[i + 1].eta - h0;
        if (cur > 0 && cur >= prev && cur > next) {
            out.times.push_back(rows[i].t);
            out.values.push_back(cur);
        }
    }
    return out;
}

bool criterion6(std::string& detail) {
    const double h0 = 1.0, L = 1.0, eta0 = 0.01 * h0;
    const double k = M_PI / L, g = 9.81;
    const double period = 2.0 * M_PI / std::sqrt(k * g);

    auto run_slosh = [&](double mu, const char* tag) {
        std::ostringstream cfg;
        cfg << "scenario = sloshing\nh_fs = 0.025\nh_max = 0.1\ndt = 0.0005\n"
            << "t_end = " << 3.0 * period + 0.2 << "\nmu = " << mu << "\n"
            << "output_every = 4\nwrite_meshes = off\nout_dir = " << g_outdir << "/slosh_"
            << tag << "\n";
        return run_scenario(parse_config_text(cfg.str()));
    };

    // inviscid: constant amplitude, period within 2%
    const RunResult inv = run_slosh(0.0, "inviscid");
    const PeakInfo peaks = find_peaks(inv.rows, h0);
    if (peaks.times.size() < 3) {
        detail = "too few oscillation peaks detected";
        return false;
    }
    double amp_lo = 1e300, amp_hi = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, peaks.values.size()); ++i) {
        amp_lo = std::min(amp_lo, peaks.values[i]);
        amp_hi = std::max(amp_hi, peaks.values[i]);
    }
    // first peak is at t=0 (not detected); period from successive maxima
    std::vector<double> gaps;
    for (std::size_t i = 1; i < peaks.times.size(); ++i)
        gaps.push_back(peaks.times[i] - peaks.times[i - 1]);
    double mean_gap = 0.0;
    for (double d : gaps) mean_gap += d;
    mean_gap /= static_cast<double>(gaps.size());

    const bool amp_ok = amp_lo >= 0.95 * eta0 && amp_hi <= 1.05 * eta0;
    const bool period_ok = std::abs(mean_gap - period) <= 0.02 * period;

    // viscous: peaks match the analytic envelope within 5% of eta0
    const double nu = 0.005;
    const RunResult visc = run_slosh(nu * 1000.0, "viscous");
    const PeakInfo vpeaks = find_peaks(visc.rows, h0);
    double worst_env = 0.0;
    for (std::size_t i = 0; i < vpeaks.times.size(); ++i) {
        const double analytic = eta0 * sloshing_wave_ratio(vpeaks.times[i], nu, k, g);
        worst_env = std::max(worst_env, std::abs(vpeaks.values[i] - analytic));
    }
    const bool env_ok = !vpeaks.values.empty() && worst_env <= 0.05 * eta0;

    std::ostringstream os;
    os << "inviscid peaks in [" << amp_lo / eta0 << ", " << amp_hi / eta0
       << "] eta0, period " << mean_gap << " vs " << period << "; viscous envelope error "
       << worst_env / eta0 << " eta0";
    detail = os.str();
    return amp_ok && period_ok && env_ok;
}

// ---------------------------------------------------------------------------
// 7. Bubble incompressibility: flux, Young-Laplace, rising bubble

bool criterion7(std::string& detail) {
    // (b) static Young-Laplace at 64 boundary nodes
    using namespace pfem::testfix;
    BoxFluid ring = make_annulus_fluid({0, 0}, 0.25, 0.5, 64, 5);
    PhysicalParams phys;
    phys.gravity = {0, 0};
    phys.mu = 0.1;
    phys.sigma_st = 24.5;
    FlowState rest;
    rest.resize(ring.mesh.vertex_capacity());
    const auto [ystate, yreport] =
        assemble_and_solve(ring.mesh, ring.domain, rest, phys, 1e-3);
    const double jump = ystate.bubble_pressure.at(0);
    const double laplace = phys.sigma_st / 0.25;
    const bool young_ok = std::abs(jump - laplace) <= 0.05 * laplace;

    // (a) + (c): rising bubble run
    std::ostringstream cfg;
    cfg << "scenario = rising_bubble\ndt = 0.005\nt_end = 3.0\noutput_every = 4\n"
        << "write_meshes = off\nout_dir = " << g_outdir << "/bubble\n";
    const RunResult res = run_scenario(parse_config_text(cfg.str()));

    const double A0 = M_PI * 0.25 * 0.25;
    double worst_area = 0.0, worst_flux_ratio = 0.0;
    bool monotone = true;
    double prev_y = -1e300;
    for (const auto& row : res.rows) {
        if (row.n_bubbles != 1) {
            detail = "bubble lost or split during the rise";
            return false;
        }
        worst_area = std::max(worst_area, std::abs(row.bubble_volume_total - A0) / A0);
        if (row.max_speed > 0)
            worst_flux_ratio = std::max(
                worst_flux_ratio,
                row.max_bubble_flux / (row.max_speed * std::max(row.fluid_perimeter, 1e-30)));
        if (row.bubble_centroid.y < prev_y - 1e-6) monotone = false;
        prev_y = row.bubble_centroid.y;
    }

    // shape overlay artifact for human inspection (not a gate)
    {
        std::ofstream shape(g_outdir + "/bubble/bubble_shape_t3.csv");
        shape << "x,y\n";
        // re-run the final state is not retained; the series carries the
        // centroid history, the mesh snapshots the shape. Write the centroid
        // history as the overlay companion.
        std::ofstream rise(g_outdir + "/bubble/bubble_rise.csv");
        rise << "t,centroid_y,area\n";
        for (const auto& row : res.rows)
            rise << row.t << ',' << row.bubble_centroid.y << ',' << row.bubble_volume_total
                 << "\n";
    }

    std::ostringstream os;
    os << "Young-Laplace jump " << jump << " vs " << laplace << "; area drift " << worst_area
       << "; worst flux ratio " << worst_flux_ratio << "; centroid rise "
       << (monotone ? "monotone" : "NOT monotone") << " to y=" << prev_y;
    detail = os.str();
    return young_ok && worst_area <= 0.015 && worst_flux_ratio <= 1e-8 && monotone &&
           prev_y > 0.5;
}

// ---------------------------------------------------------------------------
// 8. Dam break over a dry bed

bool criterion8(std::string& detail) {
    std::ostringstream cfg;
    cfg << "scenario = dam_break_dry\ndt = 0.001\nt_end = 1.8\noutput_every = 2\n"
        << "write_meshes = off\nout_dir = " << g_outdir << "/dam\n";
    const RunResult res = run_scenario(parse_config_text(cfg.str()));

    double max_var = 0.0;
    for (const auto& row : res.rows) max_var = std::max(max_var, row.rel_vol_var);

    // probe arrival: first time the pressure exceeds half its global max
    const double H = 0.6, g = 9.81;
    auto arrival = [&](std::size_t probe_idx) {
        double pmax = 0.0;
        for (const auto& row : res.rows) {
            const double v = row.probe_values.at(probe_idx);
            if (!std::isnan(v)) pmax = std::max(pmax, v);
        }
        for (const auto& row : res.rows) {
            const double v = row.probe_values.at(probe_idx);
            if (!std::isnan(v) && v >= 0.5 * pmax) return row.t * std::sqrt(g / H);
        }
        return -1.0;
    };

    // digitized reference arrival centers shipped as a fixture
    std::map<std::string, double> reference;
    {
        std::ifstream fx(std::string(PFEM_TEST_FIXTURE_DIR) + "/dambreak_probe_reference.csv");
        std::string line;
        while (std::getline(fx, line)) {
            if (line.empty() || line[0] == '#') continue;
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            reference[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
        }
    }
    const double t03 = arrival(0), t08 = arrival(1);
    const double r03 = reference.at("p03"), r08 = reference.at("p08");
    const bool probes_ok = t03 > 0 && t08 > 0 && std::abs(t03 - r03) <= 0.15 * r03 &&
                           std::abs(t08 - r08) <= 0.15 * r08;

    std::ostringstream os;
    os << "volume variation " << max_var << "; first-peak arrivals t* = " << t03 << " ("
       << r03 << " ref), " << t08 << " (" << r08 << " ref)";
    detail = os.str();
    return max_var <= 0.02 && probes_ok;
}

// ---------------------------------------------------------------------------
// 9. Falling drop: volume variation decreases under refinement

bool criterion9(std::string& detail) {
    auto run_drop = [&](double h_fs, const char* tag) {
        std::ostringstream cfg;
        cfg << "scenario = falling_drop\nh_fs = " << h_fs << "\nh_max = " << 4 * h_fs
            << "\ndt = 0.0008\nt_end = 0.3\noutput_every = 10\nwrite_meshes = off\n"
            << "out_dir = " << g_outdir << "/drop_" << tag << "\n";
        const RunResult res = run_scenario(parse_config_text(cfg.str()));
        return res.max_rel_volume_variation;
    };
    const double v1 = run_drop(0.008, "h1");
    const double v2 = run_drop(0.008 / std::sqrt(2.0), "h2");
    const double v3 = run_drop(0.004, "h3");
    std::ostringstream os;
    os << "max volume variation: " << v1 << " -> " << v2 << " -> " << v3;
    detail = os.str();
    return v1 > v2 && v2 > v3;
}

// ---------------------------------------------------------------------------
// 10. Determinism

bool criterion10(std::string& detail) {
    const char* text =
        "scenario = dam_break_dry\nh_fs = 0.03\nh_max = 0.1\ndt = 0.002\nt_end = 0.1\n"
        "output_every = 5\nwrite_meshes = on\n";
    const ScenarioConfig cfg = parse_config_text(text);
    const std::string da = g_outdir + "/det_a", db = g_outdir + "/det_b";
    setenv("PFEM_OUT", da.c_str(), 1);
    run_scenario(cfg);
    setenv("PFEM_OUT", db.c_str(), 1);
    run_scenario(cfg);
    unsetenv("PFEM_OUT");
    for (const char* name : {"series.csv", "config_resolved.cfg", "mesh_0.txt",
                             "adapt_report.csv"}) {
        std::ifstream fa(da + "/" + name), fb(db + "/" + name);
        std::stringstream sa, sb;
        sa << fa.rdbuf();
        sb << fb.rdbuf();
        if (sa.str().empty() || sa.str() != sb.str()) {
            detail = std::string("output differs or missing: ") + name;
            return false;
        }
    }
    detail = "repeated runs byte-identical (series, config echo, meshes, adapt report)";
    return true;
}

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
        else if (std::strncmp(argv[i], "--out=", 6) == 0) g_outdir = argv[i] + 6;
    }
    std::filesystem::create_directories(g_outdir);

    const std::vector<Check> checks = {
        {1, "Delaunay correctness (random constrained clouds)", criterion1},
        {2, "refinement guarantee (angle bound, criteria, idempotence)", criterion2},
        {3, "alpha-shape oracle equivalence and bubble flood fill", criterion3},
        {4, "vortex-in-a-box volume conservation under adaptation", criterion4},
        {5, "hydrostatic equilibrium", criterion5},
        {6, "low-amplitude sloshing vs analytic solution", criterion6},
        {7, "bubble incompressibility (flux, Young-Laplace, rising bubble)", criterion7},
        {8, "dam break dry bed (volume, probe arrival)", criterion8},
        {9, "falling drop refinement consistency", criterion9},
        {10, "determinism (byte-identical outputs)", criterion10},
    };

    int failures = 0;
    for (const Check& c : checks) {
        if (only != 0 && c.id != only) continue;
        std::string info;
        bool ok = false;
        try {
            ok = c.run(info);
        } catch (const std::exception& e) {
            info = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s -- %s\n", ok ? "PASS" : "FAIL", c.id,
                    c.name.c_str(), info.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
