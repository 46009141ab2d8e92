#include "pfem/lagrangian.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

int WallGeometry::on_segment(Point2 x, double tol) const {
    int best = -1;
    double best_d = tol;
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const WallSegment& seg = segments[s];
        const Vec2 d = seg.b - seg.a;
        const double t = std::clamp(dot(x - seg.a, d) / norm2(d), 0.0, 1.0);
        const double dd = dist(x, seg.a + d * t);
        if (dd <= best_d) {
            best_d = dd;
            best = static_cast<int>(s);
        }
    }
    return best;
}

Point2 WallGeometry::snap(Point2 x, int s) const {
    const WallSegment& seg = segments[static_cast<std::size_t>(s)];
    if (seg.a.x == seg.b.x) {
        const double y = std::clamp(x.y, std::min(seg.a.y, seg.b.y), std::max(seg.a.y, seg.b.y));
        return {seg.a.x, y};
    }
    if (seg.a.y == seg.b.y) {
        const double xx = std::clamp(x.x, std::min(seg.a.x, seg.b.x), std::max(seg.a.x, seg.b.x));
        return {xx, seg.a.y};
    }
    const Vec2 d = seg.b - seg.a;
    const double t = std::clamp(dot(x - seg.a, d) / norm2(d), 0.0, 1.0);
    return seg.a + d * t;
}

void advance_positions(ParticleSet& particles, double dt) {
    for (std::size_t i = 0; i < particles.size(); ++i) {
        if (particles.roles[i] == NodeRole::control) continue;
        particles.positions[i] += particles.velocities[i] * dt;
    }
}

void advance_positions_rk4(ParticleSet& particles,
                           const std::function<Vec2(Point2, double)>& field, double t,
                           double dt) {
    for (std::size_t i = 0; i < particles.size(); ++i) {
        if (particles.roles[i] == NodeRole::control) continue;
        const Point2 x = particles.positions[i];
        const Vec2 k1 = field(x, t);
        const Vec2 k2 = field(x + k1 * (dt / 2.0), t + dt / 2.0);
        const Vec2 k3 = field(x + k2 * (dt / 2.0), t + dt / 2.0);
        const Vec2 k4 = field(x + k3 * dt, t + dt);
        particles.positions[i] = x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        particles.velocities[i] = field(particles.positions[i], t + dt);
    }
}

ReprojectResult reproject_wall_crossers(ParticleSet& particles,
                                        std::span<const Point2> previous_positions,
                                        const WallGeometry& walls, double h_fs) {
    ReprojectResult result;
    const double on_tol = 1e-10 * h_fs;
    for (std::size_t i = 0; i < particles.size(); ++i) {
        if (particles.roles[i] == NodeRole::control) continue;
        Point2 prev = previous_positions[i];
        Point2 cur = particles.positions[i];
        bool corrected = false;
        // at most two passes: a particle may cross two walls in a corner
        for (int pass = 0; pass < 2; ++pass) {
            int hit_seg = -1;
            double hit_t = 2.0;
            for (std::size_t s = 0; s < walls.segments.size(); ++s) {
                const WallSegment& seg = walls.segments[s];
                const auto hit = segment_intersection(prev, cur, seg.a, seg.b);
                if (!hit) continue;
                // ignore a contact at the very start (particle leaving a wall
                // it already sits on)
                if (hit->t <= 0.0 && dist(prev, hit->point) <= on_tol) continue;
                if (hit->t < hit_t) {
                    hit_t = hit->t;
                    hit_seg = static_cast<int>(s);
                }
            }
            if (hit_seg < 0) break;
            const WallSegment& seg = walls.segments[static_cast<std::size_t>(hit_seg)];
            const Point2 placed = walls.snap(prev + (cur - prev) * hit_t, hit_seg);
            const Vec2 n = seg.outward_normal;
            particles.velocities[i] -= n * dot(particles.velocities[i], n);
            cur = placed;
            prev = placed;
            corrected = true;
        }
        if (corrected) {
            particles.positions[i] = cur;
            if (particles.roles[i] == NodeRole::interior ||
                particles.roles[i] == NodeRole::free_surface)
                particles.roles[i] = NodeRole::wall;
            ++result.corrected;
        } else {
            // grazing case: ended exactly on a wall without crossing it
            const int s = walls.on_segment(cur, on_tol);
            if (s >= 0) {
                const Vec2 n = walls.segments[static_cast<std::size_t>(s)].outward_normal;
                particles.velocities[i] -= n * dot(particles.velocities[i], n);
                particles.positions[i] = walls.snap(cur, s);
                if (particles.roles[i] == NodeRole::interior) particles.roles[i] = NodeRole::wall;
            }
        }
    }
    return result;
}

std::vector<Vec2> project_fields(std::span<const VertexId> new_nodes,
                                 const TriMesh& old_mesh, const FluidDomain& old_domain,
                                 const FlowState& old_state,
                                 const ParticleSet& new_particles, const SizeField& sf) {
    std::vector<Vec2> out(new_nodes.size());
    TriId hint = kNoTriangle;
    for (std::size_t k = 0; k < new_nodes.size(); ++k) {
        const Point2 x = new_particles.positions[new_nodes[k]];

        // try the containing old triangle first
        TriMesh::Location loc;
        bool located = false;
        try {
            loc = old_mesh.locate(x, hint);
            located = loc.kind != TriMesh::Location::Kind::outside;
        } catch (const Error&) {
            located = false;
        }
        if (located) {
            // barycentric interpolation; accept fluid triangles only
            const TriId t = loc.tri;
            if (t != kNoTriangle && old_domain.fluid(t)) {
                hint = t;
                const auto& T = old_mesh.tri(t);
                const Point2 a = old_mesh.position(T.v[0]);
                const Point2 b = old_mesh.position(T.v[1]);
                const Point2 c = old_mesh.position(T.v[2]);
                const double den = signed_area2(a, b, c);
                const double wa = signed_area2(x, b, c) / den;
                const double wb = signed_area2(a, x, c) / den;
                const double wc = 1.0 - wa - wb;
                out[k] = old_state.velocity[T.v[0]] * wa + old_state.velocity[T.v[1]] * wb +
                         old_state.velocity[T.v[2]] * wc;
                continue;
            }
        }

        // fallback: nearest old node within twice the local target size
        double best = 2.0 * std::max(sf.h_fs(), sf.eval(x));
        VertexId best_v = kGhostVertex;
        for (VertexId v = 0; v < old_mesh.vertex_capacity(); ++v) {
            if (!old_mesh.vertex_alive(v)) continue;
            const double d = dist(x, old_mesh.position(v));
            if (d < best) {
                best = d;
                best_v = v;
            }
        }
        if (best_v == kGhostVertex)
            throw ProjectionError(
                "project_fields: inserted node lies far outside the previous fluid domain");
        out[k] = old_state.velocity[best_v];
    }
    return out;
}

} // namespace pfem
