#include "pfem/mesh_io.hpp"
#include "pfem/scenario.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace pfem {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_kinematic(ScenarioKind k) {
    return k == ScenarioKind::vortex_box_bubble || k == ScenarioKind::vortex_box_hole;
}

// particles that collided within the duplicate tolerance (wall corners after
// reprojection snapping) are merged, keeping the higher-role one
int dedupe_particles(ParticleSet& particles, double tol) {
    const std::size_t n = particles.size();
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        const Point2 pa = particles.positions[a], pb = particles.positions[b];
        return pa.x < pb.x || (pa.x == pb.x && pa.y < pb.y);
    });
    auto rank = [&](std::uint32_t v) {
        switch (particles.roles[v]) {
            case NodeRole::control: return 3;
            case NodeRole::wall: return 2;
            case NodeRole::free_surface: return 1;
            default: return 0;
        }
    };
    std::vector<char> drop(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[order[i]]) continue;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (particles.positions[order[j]].x - particles.positions[order[i]].x > tol) break;
            if (drop[order[j]]) continue;
            if (dist(particles.positions[order[i]], particles.positions[order[j]]) > tol)
                continue;
            const std::uint32_t keep =
                rank(order[i]) >= rank(order[j]) ? order[i] : order[j];
            const std::uint32_t gone = keep == order[i] ? order[j] : order[i];
            drop[gone] = 1;
            if (gone == order[i]) break;
        }
    }
    ParticleSet kept;
    int removed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (drop[i]) { ++removed; continue; }
        kept.add(particles.positions[i], particles.velocities[i], particles.roles[i]);
    }
    if (removed > 0) particles = std::move(kept);
    return removed;
}

std::vector<Edge> wall_chain_edges(const ParticleSet& particles, const WallGeometry& walls) {
    std::vector<Edge> chains;
    for (const WallSegment& seg : walls.segments) {
        const Vec2 d = seg.b - seg.a;
        const double len2 = norm2(d);
        std::vector<std::pair<double, VertexId>> on;
        for (VertexId v = 0; v < particles.size(); ++v) {
            const Point2 p = particles.positions[v];
            const double t = dot(p - seg.a, d) / len2;
            if (t < -1e-12 || t > 1.0 + 1e-12) continue;
            const Point2 proj = seg.a + d * std::clamp(t, 0.0, 1.0);
            if (dist(p, proj) <= 1e-12 * std::max(1.0, std::sqrt(len2)))
                on.push_back({t, v});
        }
        std::sort(on.begin(), on.end());
        for (std::size_t i = 0; i + 1 < on.size(); ++i)
            if (on[i].second != on[i + 1].second)
                chains.push_back(Edge{on[i].second, on[i + 1].second});
    }
    return chains;
}

// free-surface samples (external and cavity interfaces) with their velocities
void collect_surface(const TriMesh& mesh, const FluidDomain& domain,
                     const std::vector<Vec2>& velocity, std::vector<Point2>& pos,
                     std::vector<Vec2>& vel) {
    pos.clear();
    vel.clear();
    std::vector<char> taken(mesh.vertex_capacity(), 0);
    for (const BoundaryLoop& loop : domain.loops) {
        const std::size_t n = loop.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            if (loop.edge_kinds[k] != EdgeKind::free_surface) continue;
            for (const VertexId v : {loop.vertices[k], loop.vertices[(k + 1) % n]}) {
                if (taken[v]) continue;
                taken[v] = 1;
                pos.push_back(mesh.position(v));
                vel.push_back(v < velocity.size() ? velocity[v] : Vec2{});
            }
        }
    }
}

// surface elevation where the external free surface crosses x = x0
double surface_height_at(const TriMesh& mesh, const FluidDomain& domain, double x0,
                         double h_fs) {
    double best = kNaN;
    for (const BoundaryLoop& loop : domain.loops) {
        const std::size_t n = loop.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            if (loop.edge_kinds[k] != EdgeKind::free_surface || loop.edge_region[k] >= 0)
                continue;
            const Point2 a = mesh.position(loop.vertices[k]);
            const Point2 b = mesh.position(loop.vertices[(k + 1) % n]);
            if ((a.x - x0) * (b.x - x0) > 0.0) continue;
            double y;
            if (a.x == b.x) y = std::max(a.y, b.y);
            else y = a.y + (x0 - a.x) / (b.x - a.x) * (b.y - a.y);
            if (std::isnan(best) || y > best) best = y;
        }
    }
    if (std::isnan(best)) {
        // fall back to the nearest surface vertex
        double dmin = 2.0 * h_fs;
        for (const BoundaryLoop& loop : domain.loops) {
            const std::size_t n = loop.vertices.size();
            for (std::size_t k = 0; k < n; ++k) {
                if (loop.edge_kinds[k] != EdgeKind::free_surface || loop.edge_region[k] >= 0)
                    continue;
                const Point2 a = mesh.position(loop.vertices[k]);
                if (std::abs(a.x - x0) < dmin) {
                    dmin = std::abs(a.x - x0);
                    best = a.y;
                }
            }
        }
    }
    return best;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

struct Background {
    TriMesh mesh;
    FluidDomain domain;
    FlowState state;
};

} // namespace

RunResult run_scenario(const ScenarioConfig& cfg) {
    namespace fs = std::filesystem;
    std::string out_dir = cfg.out_dir;
    if (const char* env = std::getenv("PFEM_OUT")) out_dir = env;
    fs::create_directories(out_dir);

    {
        std::ofstream echo(out_dir + "/config_resolved.cfg");
        echo << config_echo(cfg);
    }

    const bool kinematic = is_kinematic(cfg.scenario);
    const SizeFieldParams sf_params{cfg.h_fs, cfg.h_max, cfg.gradation};

    ScenarioSetup setup = build_setup(cfg);
    BootstrapResult boot = bootstrap(cfg, setup);

    ParticleSet particles = std::move(boot.particles);
    Background background{std::move(boot.mesh), std::move(boot.domain), std::move(boot.state)};

    std::vector<Point2> surf_pos;
    std::vector<Vec2> surf_vel;
    collect_surface(background.mesh, background.domain, background.state.velocity, surf_pos,
                    surf_vel);
    if (surf_pos.empty())
        for (const Point2& p : setup.initial_surface) {
            surf_pos.push_back(p);
            surf_vel.push_back({});
        }

    const double V0 = background.domain.fluid_volume;
    RunResult result;
    result.initial_volume = V0;

    std::ofstream series(out_dir + "/series.csv");
    series << "t,volume,rel_vol_var,n_bubbles";
    for (const Probe& p : cfg.probes) series << ",probe_" << p.name;
    series << ",eta,div_l2,max_bubble_flux\n";

    std::ofstream adapt_report;
    if (cfg.adapt_enabled) {
        adapt_report.open(out_dir + "/adapt_report.csv");
        adapt_report << "step,insertions,removals,worst_gamma_before,worst_gamma_after\n";
    }

    double t = 0.0;
    double last_dt = 0.0;
    int step = 0;
    int snapshot_id = 0;
    std::string phase = "setup";

    try {
        while (t < cfg.t_end - 1e-12) {
            ++step;

            // (1) triangulate the cloud, walls constrained
            phase = "triangulate";
            // merge particles that ended up closer than any physical feature
            // (reprojection pile-ups at stagnation points that an inversion-
            // rejected collapse could not clean)
            dedupe_particles(particles, 0.1 * cfg.h_fs);
            const std::vector<Edge> chains = wall_chain_edges(particles, setup.walls);
            TriMesh mesh = TriMesh::build_cdt(particles, chains);

            // (2) alpha-shape classification with the advected-surface size field
            phase = "classify";
            const SizeField sf =
                SizeField::build_from_surface(surf_pos, surf_vel, last_dt, sf_params);
            FluidDomain domain = classify_fluid(mesh, {cfg.alpha_threshold, &sf});
            detect_bubbles(mesh, domain);

            // roles follow walls and the detected surface
            phase = "roles";
            for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
                if (!mesh.vertex_alive(v)) continue;
                if (mesh.role(v) == NodeRole::control) continue;
                const int s = setup.walls.on_segment(mesh.position(v), 1e-9 * cfg.h_fs);
                mesh.set_role(v, s >= 0 ? NodeRole::wall : NodeRole::interior);
            }
            for (const BoundaryLoop& loop : domain.loops) {
                const std::size_t n = loop.vertices.size();
                for (std::size_t k = 0; k < n; ++k) {
                    if (loop.edge_kinds[k] != EdgeKind::free_surface) continue;
                    for (const VertexId v : {loop.vertices[k], loop.vertices[(k + 1) % n]})
                        if (mesh.role(v) == NodeRole::interior)
                            mesh.set_role(v, NodeRole::free_surface);
                }
            }

            // velocities carried per particle id (same ids as mesh vertices here)
            std::vector<Vec2> velocity(mesh.vertex_capacity(), Vec2{});
            for (VertexId v = 0; v < particles.size(); ++v)
                velocity[v] = particles.velocities[v];

            // (3) adaptation + projection for inserted nodes
            if (cfg.adapt_enabled) {
                phase = "adapt";
                const AdaptResult ares = adapt(mesh, domain, sf, cfg.refine);
                velocity.resize(mesh.vertex_capacity(), Vec2{});
                if (!ares.inserted.empty() && !kinematic) {
                    phase = "project";
                    ParticleSet snapshot;
                    for (VertexId v = 0; v < mesh.vertex_capacity(); ++v)
                        snapshot.add(mesh.vertex_alive(v) ? mesh.position(v) : Point2{});
                    const auto projected =
                        project_fields(ares.inserted, background.mesh, background.domain,
                                       background.state, snapshot, sf);
                    for (std::size_t k = 0; k < ares.inserted.size(); ++k)
                        velocity[ares.inserted[k]] = projected[k];
                }
                if (adapt_report.is_open())
                    adapt_report << step << ',' << ares.inserted.size() << ','
                                 << ares.removed.size() << ','
                                 << csv_number(ares.worst_quality_before) << ','
                                 << csv_number(ares.worst_quality_after) << "\n";
            }

            // (4) solve (or evaluate the kinematic field)
            FlowState state;
            SolveReport report;
            state.resize(mesh.vertex_capacity());
            std::vector<char> fluid_node(mesh.vertex_capacity(), 0);
            for (TriId tt = 0; tt < mesh.triangle_capacity(); ++tt) {
                if (!mesh.tri_alive(tt) || mesh.tri_is_ghost(tt) || !domain.fluid(tt)) continue;
                for (VertexId v : mesh.tri(tt).v) fluid_node[v] = 1;
            }

            double dt_step = cfg.dt;
            if (kinematic) {
                phase = "kinematic";
                for (VertexId v = 0; v < mesh.vertex_capacity(); ++v)
                    if (mesh.vertex_alive(v))
                        state.velocity[v] = vortex_velocity(mesh.position(v), t, cfg.vortex_period);
                report.divergence_l2 = kNaN;
            } else {
                phase = "solve";
                FlowState prev;
                prev.velocity = velocity;
                prev.pressure.assign(mesh.vertex_capacity(), 0.0);
                auto solved = assemble_and_solve(mesh, domain, prev, cfg.phys, dt_step);
                state = std::move(solved.first);
                report = std::move(solved.second);
                // detached particles fall ballistically
                for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
                    if (!mesh.vertex_alive(v) || fluid_node[v]) continue;
                    if (mesh.role(v) == NodeRole::control) continue;
                    state.velocity[v] = velocity[v] + cfg.phys.gravity * dt_step;
                }
            }

            // (5) CFL bound (nodewise h(x)/|u|), then move and reproject
            phase = "cfl";
            double bound = std::numeric_limits<double>::infinity();
            for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
                if (!mesh.vertex_alive(v)) continue;
                const double speed = norm(state.velocity[v]);
                if (speed <= 0.0) continue;
                bound = std::min(bound, sf.eval(mesh.position(v)) / speed);
            }
            if (dt_step > bound) {
                if (cfg.cfl_policy == CflPolicy::error) {
                    std::ostringstream os;
                    os << "CFL violation at step " << step << ": dt " << dt_step
                       << " exceeds the bound " << bound;
                    throw CflError(os.str());
                }
                dt_step = bound;
            }
            // rotational sweep clamp (see ScenarioConfig::sweep_beta)
            if (!kinematic && cfg.sweep_beta > 0.0) {
                double omega_max = 0.0;
                for (TriId tt = 0; tt < mesh.triangle_capacity(); ++tt) {
                    if (!mesh.tri_alive(tt) || mesh.tri_is_ghost(tt) || !domain.fluid(tt))
                        continue;
                    const auto& T = mesh.tri(tt);
                    const Point2 x0 = mesh.position(T.v[0]);
                    const Point2 x1 = mesh.position(T.v[1]);
                    const Point2 x2 = mesh.position(T.v[2]);
                    const double area = 0.5 * signed_area2(x0, x1, x2);
                    const Point2 xs[3] = {x0, x1, x2};
                    double om = 0.0;
                    for (int i = 0; i < 3; ++i) {
                        const Vec2 gradN{(xs[(i + 1) % 3].y - xs[(i + 2) % 3].y) / (2 * area),
                                         (xs[(i + 2) % 3].x - xs[(i + 1) % 3].x) / (2 * area)};
                        const Vec2 uu = state.velocity[T.v[i]];
                        om += gradN.x * uu.y - gradN.y * uu.x;
                    }
                    omega_max = std::max(omega_max, std::abs(om));
                }
                if (omega_max > 0.0)
                    dt_step = std::min(dt_step, cfg.sweep_beta / omega_max);
            }
            // do not overshoot the end time
            dt_step = std::min(dt_step, cfg.t_end - t);

            // surface for the next step's size field (pre-move positions)
            collect_surface(mesh, domain, state.velocity, surf_pos, surf_vel);

            // metrics before moving (solve-time geometry)
            phase = "output";
            const double vol = domain.fluid_volume;
            TimeSeriesRow row;
            row.t = t + dt_step;
            row.volume = vol;
            row.rel_vol_var = V0 > 0 ? std::abs(vol - V0) / V0 : 0.0;
            row.n_bubbles = domain.bubble_count;
            for (const Probe& p : cfg.probes) {
                const auto val = probe_pressure(mesh, domain, state, p.location);
                row.probe_values.push_back(val ? *val : kNaN);
            }
            row.eta = surface_height_at(mesh, domain, cfg.eta_probe_x, cfg.h_fs);
            row.div_l2 = report.divergence_l2;
            for (VertexId v = 0; v < mesh.vertex_capacity(); ++v)
                if (mesh.vertex_alive(v) && fluid_node[v])
                    row.max_speed = std::max(row.max_speed, norm(state.velocity[v]));
            for (const BoundaryLoop& loop : domain.loops) {
                const std::size_t n = loop.vertices.size();
                for (std::size_t k = 0; k < n; ++k)
                    row.fluid_perimeter += dist(mesh.position(loop.vertices[k]),
                                                mesh.position(loop.vertices[(k + 1) % n]));
            }
            row.max_bubble_flux = 0.0;
            for (double f : report.bubble_flux)
                row.max_bubble_flux = std::max(row.max_bubble_flux, std::abs(f));
            if (report.bubble_flux.empty()) row.max_bubble_flux = kinematic ? kNaN : 0.0;
            double bub_total = 0.0;
            for (double bv : domain.bubble_volumes) bub_total += bv;
            row.bubble_volume_total = bub_total;
            // bubble centroid from the loop polygons (shoelace moments)
            if (domain.bubble_count > 0) {
                double cx = 0, cy = 0, area_sum = 0;
                for (const BoundaryLoop& loop : domain.loops) {
                    bool is_bubble_loop = loop.label == LoopLabel::bubble;
                    if (!is_bubble_loop) continue;
                    const std::size_t n = loop.vertices.size();
                    double a2 = 0, mx = 0, my = 0;
                    for (std::size_t k = 0; k < n; ++k) {
                        const Point2 p = mesh.position(loop.vertices[k]);
                        const Point2 q = mesh.position(loop.vertices[(k + 1) % n]);
                        const double cr = p.x * q.y - q.x * p.y;
                        a2 += cr;
                        mx += (p.x + q.x) * cr;
                        my += (p.y + q.y) * cr;
                    }
                    const double A = 0.5 * a2;  // negative for bubble loops
                    if (A == 0.0) continue;
                    cx += mx / 6.0;
                    cy += my / 6.0;
                    area_sum += A;
                }
                if (area_sum != 0.0) row.bubble_centroid = {cx / area_sum, cy / area_sum};
            }
            result.rows.push_back(row);
            result.max_rel_volume_variation =
                std::max(result.max_rel_volume_variation, row.rel_vol_var);

            if (step % cfg.output_every == 0 || t + dt_step >= cfg.t_end - 1e-12) {
                series << csv_number(row.t) << ',' << csv_number(row.volume) << ','
                       << csv_number(row.rel_vol_var) << ',' << row.n_bubbles;
                for (double pv : row.probe_values) series << ',' << csv_number(pv);
                series << ',' << csv_number(row.eta) << ',' << csv_number(row.div_l2) << ','
                       << csv_number(row.max_bubble_flux) << "\n";
                if (cfg.write_meshes) {
                    std::ostringstream name;
                    name << out_dir << "/mesh_" << snapshot_id++ << ".txt";
                    std::ofstream ms(name.str());
                    write_mesh_snapshot(ms, mesh, domain, state);
                }
            }

            // (6) move, reproject, prepare the next step
            phase = "advance";
            ParticleSet moved;
            std::vector<Point2> prev_pos;
            std::vector<VertexId> alive_ids;
            for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
                if (!mesh.vertex_alive(v)) continue;
                alive_ids.push_back(v);
                moved.add(mesh.position(v), state.velocity[v], mesh.role(v));
                prev_pos.push_back(mesh.position(v));
            }
            if (kinematic) {
                advance_positions_rk4(
                    moved,
                    [&](Point2 x, double tt) { return vortex_velocity(x, tt, cfg.vortex_period); },
                    t, dt_step);
            } else {
                advance_positions(moved, dt_step);
                phase = "reproject";
                reproject_wall_crossers(moved, prev_pos, setup.walls, cfg.h_fs);
            }

            // deform this step's mesh to the moved positions: it becomes the
            // interpolation background for the next step's inserted nodes
            for (std::size_t i = 0; i < alive_ids.size(); ++i)
                mesh.set_position(alive_ids[i], moved.positions[i]);
            background = Background{std::move(mesh), std::move(domain), std::move(state)};

            particles = std::move(moved);
            last_dt = dt_step;
            t += dt_step;
        }
    } catch (const Error&) {
        std::ofstream dump(out_dir + "/abort.txt");
        dump << "step " << step << "\nphase " << phase << "\nt " << t << "\n";
        std::ofstream ms(out_dir + "/mesh_abort.txt");
        write_mesh_snapshot(ms, background.mesh, background.domain, background.state);
        throw;
    }

    result.steps = step;
    result.final_time = t;
    return result;
}

} // namespace pfem
