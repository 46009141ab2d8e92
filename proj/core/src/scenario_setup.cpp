#include "pfem/scenario.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

namespace {

// even-odd point-in-region test over the closed polylines
bool inside_region(const std::vector<std::vector<Point2>>& region, Point2 p) {
    bool inside = false;
    for (const auto& poly : region) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = poly[i];
            const Point2 b = poly[(i + 1) % n];
            if ((a.y > p.y) != (b.y > p.y)) {
                const double xcross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (p.x < xcross) inside = !inside;
            }
        }
    }
    return inside;
}

struct SetupBuilder {
    const ScenarioConfig& cfg;
    ScenarioSetup out;

    // walls are chains of axis-aligned segments; corners become control nodes
    void add_wall_chain(const std::vector<Point2>& chain, Vec2 /*unused*/ = {}) {
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            const Point2 a = chain[i];
            const Point2 b = chain[i + 1];
            // outward normal: right of the travel direction when the fluid is
            // walked with the wall on its... the scenario passes chains with
            // the fluid on the LEFT of a->b, so outward is to the right
            const Vec2 d = b - a;
            const double len = norm(d);
            out.walls.segments.push_back({a, b, Vec2{d.y / len, -d.x / len}});
        }
        for (const Point2& c : chain) {
            bool present = false;
            for (VertexId v : out.walls.control_nodes)
                if (out.particles.positions[v] == c) present = true;
            if (!present) {
                const VertexId id = out.particles.add(c, {}, NodeRole::control);
                out.walls.control_nodes.push_back(id);
            }
        }
    }

    // sample an open polyline at spacing ~h (local size), excluding both ends
    void sample_surface_line(Point2 a, Point2 b, double h, bool include_a, bool include_b) {
        const double len = dist(a, b);
        const int nseg = std::max(1, static_cast<int>(std::round(len / h)));
        for (int k = include_a ? 0 : 1; k <= (include_b ? nseg : nseg - 1); ++k) {
            const double t = static_cast<double>(k) / nseg;
            Point2 p = a + (b - a) * t;
            if (a.x == b.x) p.x = a.x;  // keep exact coordinates on axis-aligned lines
            if (a.y == b.y) p.y = a.y;
            out.particles.add(p, {}, NodeRole::free_surface);
            out.initial_surface.push_back(p);
        }
    }

    void sample_surface_circle(Point2 c, double r, double h) {
        const int n = std::max(12, static_cast<int>(std::round(2.0 * M_PI * r / h)));
        for (int k = 0; k < n; ++k) {
            const double th = 2.0 * M_PI * k / n;
            const Point2 p{c.x + r * std::cos(th), c.y + r * std::sin(th)};
            out.particles.add(p, {}, NodeRole::free_surface);
            out.initial_surface.push_back(p);
        }
    }

    // sloshing surface y = depth + eta0 cos(pi x / L)
    void sample_sloshing_surface(double L, double depth, double eta0, double h) {
        const int n = std::max(8, static_cast<int>(std::round(L / h)));
        for (int k = 0; k <= n; ++k) {
            const double x = L * k / n;
            Point2 p{x, depth + eta0 * std::cos(M_PI * x / L)};
            if (k == 0) p.x = 0.0;
            if (k == n) p.x = L;
            const NodeRole role =
                (k == 0 || k == n) ? NodeRole::wall : NodeRole::free_surface;
            out.particles.add(p, {}, role);
            out.initial_surface.push_back(p);
        }
    }
};

} // namespace

ScenarioSetup build_setup(const ScenarioConfig& cfg) {
    SetupBuilder sb{cfg, {}};
    const double h = cfg.h_fs;

    switch (cfg.scenario) {
        case ScenarioKind::hydrostatic: {
            const double W = cfg.geom("width");
            const double H = cfg.geom("depth");
            const double Hw = cfg.geom("wall_height") * H;
            sb.add_wall_chain({{0, Hw}, {0, 0}, {W, 0}, {W, Hw}});
            sb.out.fluid_region.push_back({{0, 0}, {W, 0}, {W, H}, {0, H}});
            // top surface; the end points sit on the side walls
            const int n = std::max(4, static_cast<int>(std::round(W / h)));
            for (int k = 0; k <= n; ++k) {
                Point2 p{W * k / n, H};
                if (k == 0) p.x = 0.0;
                if (k == n) p.x = W;
                sb.out.particles.add(p, {}, (k == 0 || k == n) ? NodeRole::wall
                                                               : NodeRole::free_surface);
                sb.out.initial_surface.push_back(p);
            }
            break;
        }
        case ScenarioKind::sloshing: {
            const double L = cfg.geom("container_length");
            const double depth = cfg.geom("fluid_depth");
            const double eta0 = cfg.geom("eta0") * depth;
            const double Hw = cfg.geom("wall_height") * depth;
            sb.add_wall_chain({{0, Hw}, {0, 0}, {L, 0}, {L, Hw}});
            // polygon with the cosine surface
            std::vector<Point2> poly{{0, 0}, {L, 0}};
            const int n = std::max(8, static_cast<int>(std::round(L / h)));
            for (int k = n; k >= 0; --k) {
                const double x = L * k / n;
                poly.push_back({x, depth + eta0 * std::cos(M_PI * x / L)});
            }
            sb.out.fluid_region.push_back(poly);
            sb.sample_sloshing_surface(L, depth, eta0, h);
            break;
        }
        case ScenarioKind::vortex_box_bubble: {
            const Point2 c{cfg.geom("disk_cx"), cfg.geom("disk_cy")};
            const double r = cfg.geom("disk_r");
            std::vector<Point2> circle;
            const int n = std::max(12, static_cast<int>(std::round(2 * M_PI * r / h)));
            for (int k = 0; k < n; ++k) {
                const double th = 2 * M_PI * k / n;
                circle.push_back({c.x + r * std::cos(th), c.y + r * std::sin(th)});
            }
            sb.out.fluid_region.push_back(circle);
            sb.sample_surface_circle(c, r, h);
            break;
        }
        case ScenarioKind::vortex_box_hole: {
            const Point2 c{cfg.geom("disk_cx"), cfg.geom("disk_cy")};
            const double r = cfg.geom("disk_r");
            // fluid: unit box minus the disk
            sb.out.fluid_region.push_back({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
            std::vector<Point2> circle;
            const int n = std::max(12, static_cast<int>(std::round(2 * M_PI * r / h)));
            for (int k = 0; k < n; ++k) {
                const double th = 2 * M_PI * k / n;
                circle.push_back({c.x + r * std::cos(th), c.y + r * std::sin(th)});
            }
            sb.out.fluid_region.push_back(circle);
            sb.sample_surface_circle(c, r, h);
            // outer box boundary is also a free surface (no walls here); its
            // size follows the field built from the disk samples
            SizeFieldParams sp{cfg.h_fs, cfg.h_max, cfg.gradation};
            const SizeField sf =
                SizeField::build_from_surface(sb.out.initial_surface, {}, 0.0, sp);
            const Point2 corners[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
            for (int side = 0; side < 4; ++side) {
                const Point2 a = corners[side];
                const Point2 b = corners[(side + 1) % 4];
                // walk the side with locally adapted spacing
                double t = 0.0;
                const double len = dist(a, b);
                while (t < 1.0 - 1e-9) {
                    Point2 p = a + (b - a) * t;
                    if (a.x == b.x) p.x = a.x;
                    if (a.y == b.y) p.y = a.y;
                    sb.out.particles.add(p, {}, NodeRole::free_surface);
                    sb.out.initial_surface.push_back(p);
                    t += std::min(sf.eval(p), cfg.h_max) / len;
                }
            }
            break;
        }
        case ScenarioKind::rising_bubble: {
            const double W = cfg.geom("domain_w");
            const double H = cfg.geom("domain_h");
            const Point2 c{cfg.geom("bubble_cx"), cfg.geom("bubble_cy")};
            const double r = cfg.geom("bubble_r");
            sb.add_wall_chain({{0, 0}, {W, 0}, {W, H}, {0, H}, {0, 0}});
            sb.out.fluid_region.push_back({{0, 0}, {W, 0}, {W, H}, {0, H}});
            std::vector<Point2> circle;
            const int n = std::max(12, static_cast<int>(std::round(2 * M_PI * r / h)));
            for (int k = 0; k < n; ++k) {
                const double th = 2 * M_PI * k / n;
                circle.push_back({c.x + r * std::cos(th), c.y + r * std::sin(th)});
            }
            sb.out.fluid_region.push_back(circle);
            sb.sample_surface_circle(c, r, h);
            break;
        }
        case ScenarioKind::falling_drop: {
            const double W = cfg.geom("bulk_width");
            const double D = cfg.geom("bulk_depth");
            const double Hw = cfg.geom("wall_height");
            const double d = cfg.geom("drop_d");
            const double cx = cfg.geom("drop_cx");
            const double gap = cfg.geom("drop_gap");
            const double cy = D + gap + 0.5 * d;
            sb.add_wall_chain({{0, Hw}, {0, 0}, {W, 0}, {W, Hw}});
            sb.out.fluid_region.push_back({{0, 0}, {W, 0}, {W, D}, {0, D}});
            // bulk top surface
            const int n = std::max(4, static_cast<int>(std::round(W / h)));
            for (int k = 0; k <= n; ++k) {
                Point2 p{W * k / n, D};
                if (k == 0) p.x = 0.0;
                if (k == n) p.x = W;
                sb.out.particles.add(p, {}, (k == 0 || k == n) ? NodeRole::wall
                                                               : NodeRole::free_surface);
                sb.out.initial_surface.push_back(p);
            }
            // the drop
            std::vector<Point2> circle;
            const int nc = std::max(12, static_cast<int>(std::round(M_PI * d / h)));
            for (int k = 0; k < nc; ++k) {
                const double th = 2 * M_PI * k / nc;
                circle.push_back({cx + 0.5 * d * std::cos(th), cy + 0.5 * d * std::sin(th)});
            }
            sb.out.fluid_region.push_back(circle);
            sb.sample_surface_circle({cx, cy}, 0.5 * d, h);
            break;
        }
        case ScenarioKind::dam_break_dry:
        case ScenarioKind::dam_break_wet: {
            const double L = cfg.geom("tank_length");
            const double W = cfg.geom("column_width");
            const double H = cfg.geom("column_height");
            const double Hw = cfg.geom("wall_height");
            const bool wet = cfg.scenario == ScenarioKind::dam_break_wet;
            const double d = wet ? cfg.geom("layer_depth") : 0.0;
            sb.add_wall_chain({{0, Hw}, {0, 0}, {L, 0}, {L, Hw}});
            if (!wet) {
                sb.out.fluid_region.push_back({{0, 0}, {W, 0}, {W, H}, {0, H}});
                // free surface: top of the column and its exposed right face
                sb.sample_surface_line({0, H}, {W, H}, h, true, true);
                sb.sample_surface_line({W, H}, {W, 0}, h, false, true);
            } else {
                sb.out.fluid_region.push_back(
                    {{0, 0}, {L, 0}, {L, d}, {W, d}, {W, H}, {0, H}});
                sb.sample_surface_line({0, H}, {W, H}, h, true, true);
                sb.sample_surface_line({W, H}, {W, d}, h, false, true);
                sb.sample_surface_line({W, d}, {L, d}, h, false, true);
            }
            break;
        }
    }

    // fix the roles of the last surface sample per wall proximity (exact
    // wall coordinates were preserved above)
    for (std::size_t i = 0; i < sb.out.particles.size(); ++i) {
        if (sb.out.particles.roles[i] != NodeRole::free_surface) continue;
        const int s = sb.out.walls.on_segment(sb.out.particles.positions[i], 1e-12);
        if (s >= 0) sb.out.particles.roles[i] = NodeRole::wall;
    }
    return sb.out;
}

BootstrapResult bootstrap(const ScenarioConfig& cfg, const ScenarioSetup& setup) {
    ParticleSet cloud = setup.particles;
    if (!cfg.adapt_enabled) {
        // uniform interior fill (hex packing at h_fs); no adaptation will run
        Point2 lo{1e300, 1e300}, hi{-1e300, -1e300};
        for (const auto& poly : setup.fluid_region)
            for (const Point2& p : poly) {
                lo.x = std::min(lo.x, p.x);
                lo.y = std::min(lo.y, p.y);
                hi.x = std::max(hi.x, p.x);
                hi.y = std::max(hi.y, p.y);
            }
        const double h = cfg.h_fs;
        const double row_h = h * std::sqrt(3.0) / 2.0;
        int row = 0;
        for (double y = lo.y + 0.5 * row_h; y < hi.y; y += row_h, ++row) {
            const double x0 = lo.x + (row % 2 == 0 ? 0.5 * h : h);
            for (double x = x0; x < hi.x; x += h) {
                const Point2 p{x, y};
                if (!inside_region(setup.fluid_region, p)) continue;
                bool clear = true;
                for (const Point2& q : setup.initial_surface)
                    if (dist(p, q) < 0.6 * h) { clear = false; break; }
                if (clear)
                    for (const WallSegment& seg : setup.walls.segments) {
                        const Vec2 d = seg.b - seg.a;
                        const double t = std::clamp(dot(p - seg.a, d) / norm2(d), 0.0, 1.0);
                        if (dist(p, seg.a + d * t) < 0.6 * h) { clear = false; break; }
                    }
                if (clear) cloud.add(p, {}, NodeRole::interior);
            }
        }
    }
    BootstrapResult out{TriMesh::build_cdt(
                            cloud,
                            [&] {
                                // wall chains: consecutive particles on each segment
                                std::vector<Edge> chains;
                                for (std::size_t s = 0; s < setup.walls.segments.size(); ++s) {
                                    const WallSegment& seg = setup.walls.segments[s];
                                    std::vector<std::pair<double, VertexId>> on;
                                    for (VertexId v = 0; v < cloud.size(); ++v) {
                                        const Point2 p = cloud.positions[v];
                                        const Vec2 dseg = seg.b - seg.a;
                                        const double t =
                                            dot(p - seg.a, dseg) / norm2(dseg);
                                        if (t < -1e-12 || t > 1.0 + 1e-12) continue;
                                        const Point2 proj = seg.a + dseg * std::clamp(t, 0.0, 1.0);
                                        if (dist(p, proj) <= 1e-12) on.push_back({t, v});
                                    }
                                    std::sort(on.begin(), on.end());
                                    for (std::size_t i = 0; i + 1 < on.size(); ++i)
                                        chains.push_back(Edge{on[i].second, on[i + 1].second});
                                }
                                return chains;
                            }()),
                        FluidDomain{}, cloud, FlowState{}, SizeField{}};

    // bootstrap classification: centroid inside the region polygon, with a
    // sanity cut on the circumradius (removes hull-chord lens slivers)
    Point2 lo{1e300, 1e300}, hi{-1e300, -1e300};
    for (VertexId v = 0; v < out.mesh.vertex_capacity(); ++v) {
        const Point2 p = out.mesh.position(v);
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    const double diag = dist(lo, hi);
    out.domain.is_fluid.assign(out.mesh.triangle_capacity(), 0);
    for (TriId t : out.mesh.real_triangles()) {
        const auto& T = out.mesh.tri(t);
        Point2 cen{0, 0};
        for (VertexId v : T.v) cen += out.mesh.position(v);
        cen = cen / 3.0;
        if (!inside_region(setup.fluid_region, cen)) continue;
        const TriMetrics m = tri_metrics(out.mesh.position(T.v[0]), out.mesh.position(T.v[1]),
                                         out.mesh.position(T.v[2]));
        if (m.circumradius > 4.0 * diag) continue;
        out.domain.is_fluid[t] = 1;
    }
    extract_boundary_loops(out.mesh, out.domain);
    detect_bubbles(out.mesh, out.domain);
    out.domain.fluid_volume = fluid_volume(out.domain, out.mesh);

    out.size_field = SizeField::build_from_surface(
        setup.initial_surface, {}, 0.0, SizeFieldParams{cfg.h_fs, cfg.h_max, cfg.gradation});

    if (cfg.adapt_enabled) {
        adapt(out.mesh, out.domain, out.size_field, cfg.refine);
    }

    // rebuild the particle table from the adapted mesh
    out.particles = ParticleSet{};
    for (VertexId v = 0; v < out.mesh.vertex_capacity(); ++v) {
        if (!out.mesh.vertex_alive(v)) continue;
        out.particles.add(out.mesh.position(v), {}, out.mesh.role(v));
    }

    // initial conditions
    out.state.resize(out.mesh.vertex_capacity());
    if (cfg.scenario == ScenarioKind::falling_drop) {
        const double cx = cfg.geom("drop_cx");
        const double cy = cfg.geom("bulk_depth") + cfg.geom("drop_gap") + 0.5 * cfg.geom("drop_d");
        const double r = 0.5 * cfg.geom("drop_d");
        const double v0 = cfg.geom("drop_speed");
        std::size_t i = 0;
        for (VertexId v = 0; v < out.mesh.vertex_capacity(); ++v) {
            if (!out.mesh.vertex_alive(v)) continue;
            if (dist(out.mesh.position(v), {cx, cy}) <= r + 1e-12) {
                out.state.velocity[v] = {0.0, -v0};
                out.particles.velocities[i] = {0.0, -v0};
            }
            ++i;
        }
    }
    return out;
}

} // namespace pfem
