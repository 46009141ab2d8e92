#include "pfem/refine.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <queue>
#include <set>
#include <sstream>

#define PFEM_ADAPT_TRACE(...) \
    do { if (std::getenv("PFEM_TRACE_ADAPT")) std::fprintf(stderr, __VA_ARGS__); } while (0)

namespace pfem {

namespace {

double exemption_base(const SizeField& sf, const RefineParams& params) {
    return params.r_min_exempt >= 0.0 ? params.r_min_exempt : 0.5 * sf.h_fs();
}

TriMetrics metrics_of(const TriMesh& mesh, TriId t) {
    const auto& T = mesh.tri(t);
    return tri_metrics(mesh.position(T.v[0]), mesh.position(T.v[1]), mesh.position(T.v[2]));
}

// The insertion floor must sit at or above the coarsening threshold, or the
// next coarsening sweep would undo fresh insertions: the effective exemption
// is max(r_min, collapse_ratio * h(x_e)). Exempt triangles whose edges all
// survive coarsening then satisfy sin(theta) >= collapse_ratio / 2.
//
// The size criterion skips triangles carrying a free-surface edge: those sit
// inside the alpha acceptance band by construction, and refining a borderline
// triangle freshly claimed at a ragged concave junction would materialize
// particles in what was air, making every spurious claim permanent (the
// fluid then inflates step after step). Their shape is still policed by the
// quality criterion, whose hidden-circumcenter path splits boundary edges
// without claiming new area.
bool has_free_surface_edge(const TriMesh& mesh, const FluidDomain& domain, TriId t) {
    const auto& T = mesh.tri(t);
    for (int e = 0; e < 3; ++e) {
        const TriId nb = T.nbr[e];
        const bool nb_fluid = nb != kNoTriangle && !mesh.tri_is_ghost(nb) && domain.fluid(nb);
        if (nb_fluid) continue;
        // boundary edges whose endpoints are both solid-boundary nodes are
        // wall edges (the pass marks surface edges constrained, so the
        // constraint flag cannot tell them apart here)
        const NodeRole ra = mesh.role(T.v[(e + 1) % 3]);
        const NodeRole rb = mesh.role(T.v[(e + 2) % 3]);
        const bool wall_edge = (ra == NodeRole::wall || ra == NodeRole::control) &&
                               (rb == NodeRole::wall || rb == NodeRole::control);
        if (!wall_edge) return true;
    }
    return false;
}

bool offending(const TriMesh& mesh, const FluidDomain& domain, const SizeField& sf,
               const RefineParams& params, TriId t, double r_min_base,
               TriMetrics* out = nullptr) {
    if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t) || !domain.fluid(t)) return false;
    const TriMetrics m = metrics_of(mesh, t);
    if (out) *out = m;
    const double h = sf.eval(m.circumcenter);
    if (m.circumradius < std::max(r_min_base, params.collapse_ratio * h)) return false;
    if (m.quality < params.gamma_min) return true;
    if (m.circumradius <= params.size_ratio * h) return false;
    return !has_free_surface_edge(mesh, domain, t);
}

struct PqEntry {
    double R;
    TriId tri;
    std::uint64_t serial;
};
struct PqLess {
    bool operator()(const PqEntry& a, const PqEntry& b) const {
        if (a.R != b.R) return a.R < b.R;  // max-heap on R
        return a.tri > b.tri;              // ties: lower id first
    }
};

double worst_fluid_quality(const TriMesh& mesh, const FluidDomain& domain) {
    double worst = 1.0;
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t) || !domain.fluid(t)) continue;
        worst = std::min(worst, metrics_of(mesh, t).quality);
    }
    return worst;
}

} // namespace

std::vector<Offender> worklist(const TriMesh& mesh, const FluidDomain& domain,
                               const SizeField& sf, const RefineParams& params) {
    const double r_min = exemption_base(sf, params);
    std::vector<Offender> out;
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        TriMetrics m;
        if (offending(mesh, domain, sf, params, t, r_min, &m))
            out.push_back(Offender{m.circumradius, t, mesh.serial(t)});
    }
    std::sort(out.begin(), out.end(), [](const Offender& a, const Offender& b) {
        if (a.circumradius != b.circumradius) return a.circumradius > b.circumradius;
        return a.tri < b.tri;
    });
    return out;
}

std::vector<std::pair<VertexId, VertexId>> coarsen(TriMesh& mesh, FluidDomain& domain,
                                                   const SizeField& sf,
                                                   const RefineParams& params) {
    struct Cand {
        double len;
        VertexId a, b;
    };
    std::set<std::pair<VertexId, VertexId>> seen;
    std::vector<Cand> cands;
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t) || !domain.fluid(t)) continue;
        const auto& T = mesh.tri(t);
        for (int e = 0; e < 3; ++e) {
            VertexId a = T.v[(e + 1) % 3], b = T.v[(e + 2) % 3];
            if (a > b) std::swap(a, b);
            if (!seen.insert({a, b}).second) continue;
            const Point2 pa = mesh.position(a), pb = mesh.position(b);
            const double len = dist(pa, pb);
            const double h = sf.eval((pa + pb) * 0.5);
            // boundary chains coarsen at half the threshold so that fresh
            // midpoint splits are not merged straight back
            const double ratio =
                mesh.is_constrained(a, b) ? 0.5 * params.collapse_ratio : params.collapse_ratio;
            if (len < ratio * h) cands.push_back(Cand{len, a, b});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.len != r.len) return l.len < r.len;
        if (l.a != r.a) return l.a < r.a;
        return l.b < r.b;
    });

    std::vector<std::pair<VertexId, VertexId>> removed;
    for (const Cand& c : cands) {
        if (!mesh.vertex_alive(c.a) || !mesh.vertex_alive(c.b)) continue;
        if (!mesh.edge_exists(c.a, c.b)) continue;
        const double len = dist(mesh.position(c.a), mesh.position(c.b));
        const Point2 mid = (mesh.position(c.a) + mesh.position(c.b)) * 0.5;
        const double ratio =
            mesh.is_constrained(c.a, c.b) ? 0.5 * params.collapse_ratio : params.collapse_ratio;
        if (len >= ratio * sf.eval(mid)) continue;
        const auto survivor = mesh.collapse_edge(Edge{c.a, c.b});
        if (!survivor) continue;
        removed.emplace_back(*survivor == c.a ? c.b : c.a, *survivor);
        if (domain.is_fluid.size() < mesh.triangle_capacity())
            domain.is_fluid.resize(mesh.triangle_capacity(), 0);
    }
    return removed;
}

AdaptResult adapt(TriMesh& mesh, FluidDomain& domain, const SizeField& sf,
                  const RefineParams& params) {
    AdaptResult result;
    result.worst_quality_before = worst_fluid_quality(mesh, domain);
    const double r_min = exemption_base(sf, params);

    // constrain the detected free-surface edges for the duration of the pass
    std::set<std::pair<VertexId, VertexId>> temp;
    for (const BoundaryLoop& loop : domain.loops) {
        const std::size_t n = loop.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            if (mesh.is_constrained(a, b)) continue;
            mesh.set_constrained(a, b, true);
            VertexId x = a, y = b;
            if (x > y) std::swap(x, y);
            temp.insert({x, y});
        }
    }
    auto drop_temp = [&]() {
        for (const auto& [a, b] : temp)
            if (mesh.vertex_alive(a) && mesh.vertex_alive(b) && mesh.is_constrained(a, b))
                mesh.set_constrained(a, b, false);
    };

    auto grow_flags = [&]() {
        if (domain.is_fluid.size() < mesh.triangle_capacity())
            domain.is_fluid.resize(mesh.triangle_capacity(), 0);
    };

    auto remap_temp = [&](VertexId dying, VertexId survivor) {
        std::vector<std::pair<VertexId, VertexId>> renamed;
        for (auto it = temp.begin(); it != temp.end();) {
            if (it->first == dying || it->second == dying) {
                const VertexId other = it->first == dying ? it->second : it->first;
                if (other != survivor)
                    renamed.emplace_back(std::min(other, survivor), std::max(other, survivor));
                it = temp.erase(it);
            } else {
                ++it;
            }
        }
        temp.insert(renamed.begin(), renamed.end());
    };

    try {
        // coarsening first
        {
            const auto removed = coarsen(mesh, domain, sf, params);
            result.collapses = static_cast<int>(removed.size());
            for (const auto& [dying, survivor] : removed) {
                result.removed.push_back(dying);
                remap_temp(dying, survivor);
            }
        }

        std::priority_queue<PqEntry, std::vector<PqEntry>, PqLess> pq;
        std::size_t initial_fluid = 0;
        for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
            TriMetrics m;
            if (offending(mesh, domain, sf, params, t, r_min, &m))
                pq.push(PqEntry{m.circumradius, t, mesh.serial(t)});
            if (mesh.tri_alive(t) && !mesh.tri_is_ghost(t) && domain.fluid(t)) ++initial_fluid;
        }

        // termination guard: proportional to whichever is larger, the current
        // element count or the count the size field asks for
        const double fluid_area = fluid_volume(domain, mesh);
        const std::size_t target_fluid = static_cast<std::size_t>(
            std::max(1.0, fluid_area / (0.433 * sf.h_fs() * sf.h_fs())));
        const std::size_t cap =
            params.max_iteration_factor * std::max({initial_fluid, target_fluid, std::size_t{16}});
        std::size_t iterations = 0;
        std::set<std::uint64_t> skipped;  // serials given up on (duplicate-tolerance hits)

        auto push_changed = [&]() {
            grow_flags();
            for (TriId t : mesh.last_changed()) {
                TriMetrics m;
                if (offending(mesh, domain, sf, params, t, r_min, &m))
                    pq.push(PqEntry{m.circumradius, t, mesh.serial(t)});
            }
        };

        while (!pq.empty()) {
            if (++iterations > cap) {
                std::ostringstream os;
                os << "adapt: refinement stalled after " << iterations
                   << " iterations (fluid elements: " << initial_fluid
                   << ", queue: " << pq.size() << ")";
                throw RefinementStalledError(os.str());
            }
            const PqEntry top = pq.top();
            pq.pop();
            if (!mesh.tri_alive(top.tri) || mesh.serial(top.tri) != top.serial) continue;
            if (skipped.count(top.serial)) continue;
            TriMetrics m;
            if (!offending(mesh, domain, sf, params, top.tri, r_min, &m)) continue;
            PFEM_ADAPT_TRACE("pop tri %u serial %llu R %.5g q %.4g cc (%.5g, %.5g)\n",
                             top.tri, (unsigned long long)top.serial, m.circumradius,
                             m.quality, m.circumcenter.x, m.circumcenter.y);

            const auto walk = mesh.walk_toward(top.tri, m.circumcenter);
            if (walk.kind == TriMesh::WalkResult::Kind::exited) {
                std::ostringstream os;
                os << "adapt: line of sight left the fluid without a constrained edge"
                   << " (tri " << top.tri << " R " << m.circumradius << " q " << m.quality
                   << " cc (" << m.circumcenter.x << ", " << m.circumcenter.y
                   << ") exit tri " << walk.blocked_tri << " exit edge " << walk.blocking.a
                   << "-" << walk.blocking.b << ")";
                throw TopologyError(os.str());
            }

            Edge encroached{kGhostVertex, kGhostVertex};
            if (walk.kind == TriMesh::WalkResult::Kind::reached &&
                walk.loc.kind != TriMesh::Location::Kind::on_vertex) {
                // read-only insertion cavity of the circumcenter: a constrained
                // edge on its boundary whose diametral circle contains the
                // circumcenter must be split instead (the new point would
                // otherwise hug the boundary and leave unfixable slivers)
                std::set<TriId> seen{walk.loc.tri};
                std::vector<TriId> work{walk.loc.tri};
                Edge best{kGhostVertex, kGhostVertex};
                while (!work.empty()) {
                    const TriId t = work.back();
                    work.pop_back();
                    const auto& T = mesh.tri(t);
                    for (int e = 0; e < 3; ++e) {
                        const VertexId u = T.v[(e + 1) % 3];
                        const VertexId w = T.v[(e + 2) % 3];
                        if (mesh.is_constrained(u, w)) {
                            const Vec2 du = mesh.position(u) - m.circumcenter;
                            const Vec2 dw = mesh.position(w) - m.circumcenter;
                            if (dot(du, dw) < 0.0) {
                                Edge cand{std::min(u, w), std::max(u, w)};
                                if (best.a == kGhostVertex ||
                                    cand.a < best.a || (cand.a == best.a && cand.b < best.b))
                                    best = cand;
                            }
                            continue;  // constrained edges bound the cavity
                        }
                        const TriId nb = T.nbr[e];
                        if (nb == kNoTriangle || mesh.tri_is_ghost(nb)) continue;
                        if (seen.count(nb)) continue;
                        if (mesh.in_disk(nb, m.circumcenter)) {
                            seen.insert(nb);
                            work.push_back(nb);
                        }
                    }
                }
                encroached = best;
            }

            if (walk.kind == TriMesh::WalkResult::Kind::reached && encroached.a == kGhostVertex) {
                if (walk.loc.kind == TriMesh::Location::Kind::on_vertex) {
                    skipped.insert(top.serial);
                    continue;
                }
                // free-surface triangles inside the alpha acceptance band are
                // repaired through their boundary (splits, coarsening, the
                // deletion rule): an interior insertion would materialize
                // particles in a region the alpha shape may only have claimed
                // transiently
                if (m.circumradius <= params.alpha_band * sf.eval(m.circumcenter) &&
                    has_free_surface_edge(mesh, domain, top.tri)) {
                    skipped.insert(top.serial);
                    continue;
                }
                VertexId v;
                try {
                    v = mesh.insert_point(m.circumcenter, top.tri, NodeRole::interior);
                } catch (const DuplicatePointError&) {
                    PFEM_ADAPT_TRACE("  duplicate -> skip\n");
                    skipped.insert(top.serial);
                    continue;
                }
                PFEM_ADAPT_TRACE("  inserted cc as v%u\n", v);
                grow_flags();
                for (TriId t : mesh.last_changed())
                    if (mesh.tri_alive(t) && !mesh.tri_is_ghost(t)) domain.is_fluid[t] = 1;
                result.inserted.push_back(v);
                ++result.circumcenter_insertions;
#ifndef NDEBUG
                for (const Edge& e : mesh.last_new_edges()) {
                    const double len = dist(mesh.position(e.a), mesh.position(e.b));
                    if (len < m.circumradius * (1.0 - 1e-9))
                        throw TopologyError("adapt: new edge shorter than split circumradius");
                }
#endif
                push_changed();
                continue;
            }

            // split the constrained edge hiding or encroached by the circumcenter
            const Edge blk =
                walk.kind == TriMesh::WalkResult::Kind::blocked ? walk.blocking : encroached;
            const Point2 pa = mesh.position(blk.a);
            const Point2 pb = mesh.position(blk.b);
            const Point2 mid = (pa + pb) * 0.5;
            VertexId ax = blk.a, bx = blk.b;
            if (ax > bx) std::swap(ax, bx);
            const bool was_temp = temp.count({ax, bx}) != 0;
            const NodeRole role = was_temp ? NodeRole::free_surface : NodeRole::wall;

            // capture side flags before the split rewrites the two triangles
            const auto near_side = mesh.find_directed_edge(blk.a, blk.b);
            if (!near_side) throw TopologyError("adapt: blocking edge vanished");
            const TriId t1 = near_side->first;
            const TriId t2 = mesh.tri(t1).nbr[near_side->second];
            const bool f1 = domain.fluid(t1);
            const bool f2 = t2 != kNoTriangle && !mesh.tri_is_ghost(t2) && domain.fluid(t2);

            PFEM_ADAPT_TRACE("  %s edge %u-%u, splitting\n",
                             walk.kind == TriMesh::WalkResult::Kind::blocked ? "blocked by"
                                                                             : "encroaches",
                             blk.a, blk.b);
            VertexId mvid;
            try {
                mvid = mesh.split_constrained_edge(Edge{blk.a, blk.b}, mid, role);
            } catch (const DegenerateGeometryError&) {
                // the far side of the edge can be a lens sliver thinner than
                // the midpoint rounding (near-collinear boundary chains);
                // retry with the point nudged toward the fluid side
                const auto& O = mesh.tri(top.tri);
                Point2 ocen{0, 0};
                for (VertexId w : O.v) ocen += mesh.position(w);
                ocen = ocen / 3.0;
                const int side = orient2d(pa, pb, ocen);
                // displacement 1e-9 of the edge length along the fluid-side normal
                const Vec2 offset = perp(pb - pa) * (side >= 0 ? 1.0 : -1.0) * 1e-9;
                try {
                    mvid = mesh.split_constrained_edge(Edge{blk.a, blk.b}, mid + offset, role);
                } catch (const DegenerateGeometryError&) {
                    PFEM_ADAPT_TRACE("  split degenerate twice -> skip\n");
                    skipped.insert(top.serial);
                    continue;
                }
            }
            if (was_temp) {
                temp.erase({ax, bx});
                temp.insert({std::min(blk.a, mvid), std::max(blk.a, mvid)});
                temp.insert({std::min(blk.b, mvid), std::max(blk.b, mvid)});
            }
            grow_flags();
            for (TriId t : mesh.last_changed()) {
                if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t)) continue;
                // side of the old edge decides the inherited fluid flag
                const auto& T = mesh.tri(t);
                int side = 0;
                for (VertexId w : T.v) {
                    if (w == blk.a || w == blk.b || w == mvid || w == kGhostVertex) continue;
                    side = orient2d(pa, pb, mesh.position(w));
                    if (side != 0) break;
                }
                domain.is_fluid[t] = (side > 0 ? f1 : f2) ? 1 : 0;
            }
            result.inserted.push_back(mvid);
            ++result.boundary_splits;
            push_changed();

            // crowding cleanup around the new boundary node
            const double radius = dist(pa, mid);
            bool again = true;
            std::set<VertexId> attempted;
            while (again) {
                again = false;
                for (TriId t : mesh.star(mvid)) {
                    if (mesh.tri_is_ghost(t)) continue;
                    const auto& T = mesh.tri(t);
                    for (VertexId w : T.v) {
                        if (w == mvid || w == kGhostVertex) continue;
                        if (mesh.role(w) != NodeRole::interior) continue;
                        if (attempted.count(w)) continue;
                        if (dist(mesh.position(w), mesh.position(mvid)) >= radius) continue;
                        bool fluid_adjacent = false;
                        for (TriId s : mesh.star(w))
                            if (!mesh.tri_is_ghost(s) && domain.fluid(s)) fluid_adjacent = true;
                        attempted.insert(w);
                        if (!fluid_adjacent) continue;
                        const auto survivor = mesh.collapse_edge(Edge{w, mvid});
                        if (survivor) {
                            result.removed.push_back(w);
                            grow_flags();
                            push_changed();
                            again = true;
                        }
                        break;
                    }
                    if (again) break;
                }
            }

            // the offender may still hide its circumcenter behind another edge
            if (mesh.tri_alive(top.tri) && mesh.serial(top.tri) == top.serial)
                pq.push(PqEntry{m.circumradius, top.tri, top.serial});
        }

        drop_temp();
    } catch (...) {
        drop_temp();
        throw;
    }

    extract_boundary_loops(mesh, domain);
    detect_bubbles(mesh, domain);
    domain.fluid_volume = fluid_volume(domain, mesh);
    result.worst_quality_after = worst_fluid_quality(mesh, domain);
    return result;
}

} // namespace pfem
