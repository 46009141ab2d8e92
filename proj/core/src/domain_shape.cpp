#include "pfem/domain_shape.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace pfem {

namespace {

double shoelace(const TriMesh& mesh, const std::vector<VertexId>& vs) {
    double a2 = 0.0;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        const Point2 p = mesh.position(vs[k]);
        const Point2 q = mesh.position(vs[(k + 1) % vs.size()]);
        a2 += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a2;
}

} // namespace

void extract_boundary_loops(const TriMesh& mesh, FluidDomain& domain) {
    domain.loops.clear();

    // directed boundary edges (a -> b), fluid triangle on the left
    std::map<std::pair<VertexId, VertexId>, TriId> bedges;
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t) || !domain.fluid(t)) continue;
        const auto& T = mesh.tri(t);
        for (int e = 0; e < 3; ++e) {
            const TriId nb = T.nbr[e];
            const bool nb_fluid = nb != kNoTriangle && !mesh.tri_is_ghost(nb) && domain.fluid(nb);
            if (nb_fluid) continue;
            bedges.emplace(std::make_pair(T.v[(e + 1) % 3], T.v[(e + 2) % 3]), t);
        }
    }

    std::set<std::pair<VertexId, VertexId>> visited;
    for (const auto& [start, start_tri] : bedges) {
        if (visited.count(start)) continue;
        BoundaryLoop loop;
        VertexId a = start.first, b = start.second;
        TriId t = start_tri;
        const std::size_t guard = 4 * bedges.size() + 16;
        while (true) {
            if (loop.vertices.size() > guard)
                throw TopologyError("extract_boundary_loops: loop did not close");
            visited.insert({a, b});
            loop.vertices.push_back(a);
            loop.edge_kinds.push_back(mesh.is_constrained(a, b) ? EdgeKind::wall
                                                                : EdgeKind::free_surface);
            loop.edge_region.push_back(-1);
            loop.fluid_tris.push_back(t);

            // rotate around b through fluid triangles to the next boundary edge
            TriId tt = t;
            std::size_t fan_guard = mesh.triangle_capacity() + 8;
            while (true) {
                if (fan_guard-- == 0)
                    throw TopologyError("extract_boundary_loops: fan walk stalled");
                int ib = -1;
                const auto& TT = mesh.tri(tt);
                for (int i = 0; i < 3; ++i)
                    if (TT.v[i] == b) { ib = i; break; }
                if (ib < 0) throw TopologyError("extract_boundary_loops: lost pivot vertex");
                const VertexId out = TT.v[(ib + 1) % 3];
                const int cross = 3 - ib - ((ib + 1) % 3);
                const TriId nb = TT.nbr[cross];
                const bool nb_fluid =
                    nb != kNoTriangle && !mesh.tri_is_ghost(nb) && domain.fluid(nb);
                if (!nb_fluid) {
                    a = b;
                    b = out;
                    t = tt;
                    break;
                }
                tt = nb;
            }
            if (a == start.first && b == start.second) break;
        }
        loop.signed_area = shoelace(mesh, loop.vertices);
        bool all_wall = true;
        for (EdgeKind k : loop.edge_kinds) all_wall = all_wall && k == EdgeKind::wall;
        loop.label = all_wall ? LoopLabel::wall : LoopLabel::external_free_surface;
        domain.loops.push_back(std::move(loop));
    }
}

FluidDomain classify_fluid(const TriMesh& mesh, const AlphaCriterion& crit) {
    if (crit.alpha == nullptr)
        throw DomainError("classify_fluid: missing alpha size field");
    FluidDomain domain;
    domain.is_fluid.assign(mesh.triangle_capacity(), 0);
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t)) continue;
        const auto& T = mesh.tri(t);
        const TriMetrics m =
            tri_metrics(mesh.position(T.v[0]), mesh.position(T.v[1]), mesh.position(T.v[2]));
        const double alpha_x = crit.alpha->eval(m.circumcenter);
        domain.is_fluid[t] = (m.circumradius / alpha_x <= crit.threshold) ? 1 : 0;
    }
    extract_boundary_loops(mesh, domain);
    domain.fluid_volume = fluid_volume(domain, mesh);
    return domain;
}

void detect_bubbles(const TriMesh& mesh, FluidDomain& domain) {
    // connected components of non-fluid triangles (ghosts included) through
    // unconstrained shared edges; components containing a ghost are exterior
    std::vector<int> comp(mesh.triangle_capacity(), -2);  // -2 unvisited
    std::vector<char> comp_exterior;
    std::vector<double> comp_area;
    int ncomp = 0;

    for (TriId t0 = 0; t0 < mesh.triangle_capacity(); ++t0) {
        if (!mesh.tri_alive(t0) || comp[t0] != -2) continue;
        if (!mesh.tri_is_ghost(t0) && domain.fluid(t0)) continue;
        const int c = ncomp++;
        comp_exterior.push_back(0);
        comp_area.push_back(0.0);
        std::vector<TriId> work{t0};
        comp[t0] = c;
        while (!work.empty()) {
            const TriId t = work.back();
            work.pop_back();
            if (mesh.tri_is_ghost(t)) {
                comp_exterior[c] = 1;
            } else {
                const auto& T = mesh.tri(t);
                comp_area[c] += 0.5 * std::abs(signed_area2(mesh.position(T.v[0]),
                                                            mesh.position(T.v[1]),
                                                            mesh.position(T.v[2])));
            }
            const auto& T = mesh.tri(t);
            for (int e = 0; e < 3; ++e) {
                const TriId nb = T.nbr[e];
                if (nb == kNoTriangle || comp[nb] != -2) continue;
                if (!mesh.tri_alive(nb)) continue;
                if (!mesh.tri_is_ghost(nb) && domain.fluid(nb)) continue;
                const VertexId a = T.v[(e + 1) % 3];
                const VertexId b = T.v[(e + 2) % 3];
                if (mesh.is_constrained(a, b)) continue;  // walls seal cavities
                comp[nb] = c;
                work.push_back(nb);
            }
        }
    }

    // bubble candidates: enclosed components with at least one true fluid
    // interface edge (a fully wall-sealed void is a solid enclosure, not gas)
    std::vector<char> has_interface(static_cast<std::size_t>(ncomp), 0);
    std::vector<VertexId> min_vertex(static_cast<std::size_t>(ncomp), kGhostVertex);
    for (const BoundaryLoop& loop : domain.loops) {
        const std::size_t n = loop.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            const TriId ft = loop.fluid_tris[k];
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            // non-fluid side of this edge
            const auto& T = mesh.tri(ft);
            int e = -1;
            for (int j = 0; j < 3; ++j)
                if ((T.v[(j + 1) % 3] == a && T.v[(j + 2) % 3] == b)) { e = j; break; }
            if (e < 0) throw TopologyError("detect_bubbles: loop edge not on fluid triangle");
            const TriId other = T.nbr[e];
            const int c = comp[other];
            if (c < 0) throw TopologyError("detect_bubbles: unclassified non-fluid side");
            if (!comp_exterior[static_cast<std::size_t>(c)] &&
                loop.edge_kinds[k] == EdgeKind::free_surface) {
                has_interface[static_cast<std::size_t>(c)] = 1;
                min_vertex[static_cast<std::size_t>(c)] =
                    std::min({min_vertex[static_cast<std::size_t>(c)], a, b});
            }
        }
    }

    // deterministic ordinals: ascending minimal boundary vertex id
    std::vector<int> candidates;
    for (int c = 0; c < ncomp; ++c)
        if (!comp_exterior[static_cast<std::size_t>(c)] && has_interface[static_cast<std::size_t>(c)])
            candidates.push_back(c);
    std::sort(candidates.begin(), candidates.end(), [&](int l, int r) {
        return min_vertex[static_cast<std::size_t>(l)] < min_vertex[static_cast<std::size_t>(r)];
    });
    std::vector<int> ordinal(static_cast<std::size_t>(ncomp), -1);
    domain.bubble_volumes.clear();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        ordinal[static_cast<std::size_t>(candidates[i])] = static_cast<int>(i);
        domain.bubble_volumes.push_back(comp_area[static_cast<std::size_t>(candidates[i])]);
    }
    domain.bubble_count = static_cast<int>(candidates.size());

    // per-edge regions and loop labels
    for (BoundaryLoop& loop : domain.loops) {
        const std::size_t n = loop.vertices.size();
        bool all_bubble = n > 0, all_wall = n > 0;
        int the_bubble = -1;
        bool one_bubble = true;
        for (std::size_t k = 0; k < n; ++k) {
            const TriId ft = loop.fluid_tris[k];
            const auto& T = mesh.tri(ft);
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            int e = -1;
            for (int j = 0; j < 3; ++j)
                if ((T.v[(j + 1) % 3] == a && T.v[(j + 2) % 3] == b)) { e = j; break; }
            const TriId other = T.nbr[e];
            const int c = comp[other];
            const int ord = ordinal[static_cast<std::size_t>(c)];
            loop.edge_region[k] = ord;
            if (ord < 0) {
                all_bubble = false;
            } else {
                if (the_bubble < 0) the_bubble = ord;
                else if (the_bubble != ord) one_bubble = false;
            }
            all_wall = all_wall && loop.edge_kinds[k] == EdgeKind::wall;
        }
        if (all_bubble && one_bubble && the_bubble >= 0) {
            loop.label = LoopLabel::bubble;
            loop.bubble_index = the_bubble;
        } else if (all_wall) {
            loop.label = LoopLabel::wall;
            loop.bubble_index = -1;
        } else {
            loop.label = LoopLabel::external_free_surface;
            loop.bubble_index = -1;
        }
    }
}

LoopGeometry loop_geometry(const TriMesh& mesh, const BoundaryLoop& loop) {
    const std::size_t n = loop.vertices.size();
    if (n < 3) throw TopologyError("loop_geometry: loop with fewer than 3 vertices");

    // simple self-intersection audit on the polygon (non-adjacent edges)
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a0 = mesh.position(loop.vertices[i]);
        const Point2 a1 = mesh.position(loop.vertices[(i + 1) % n]);
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // adjacent around the seam
            const Point2 b0 = mesh.position(loop.vertices[j]);
            const Point2 b1 = mesh.position(loop.vertices[(j + 1) % n]);
            if (orient2d(a0, a1, b0) * orient2d(a0, a1, b1) < 0 &&
                orient2d(b0, b1, a0) * orient2d(b0, b1, a1) < 0)
                throw TopologyError("loop_geometry: self-intersecting loop");
        }
    }

    LoopGeometry g;
    g.enclosed_area = std::abs(shoelace(mesh, loop.vertices));
    g.outward_normals.resize(n);
    g.edge_lengths.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point2 a = mesh.position(loop.vertices[k]);
        const Point2 b = mesh.position(loop.vertices[(k + 1) % n]);
        const Vec2 d = b - a;
        const double len = norm(d);
        g.edge_lengths[k] = len;
        // fluid on the left of a->b: outward (away from fluid) is the right normal
        g.outward_normals[k] = len > 0 ? Vec2{d.y / len, -d.x / len} : Vec2{0, 0};
    }
    return g;
}

double fluid_volume(const FluidDomain& domain, const TriMesh& mesh) {
    double vol = 0.0;
    for (TriId t = 0; t < mesh.triangle_capacity(); ++t) {
        if (!mesh.tri_alive(t) || mesh.tri_is_ghost(t) || !domain.fluid(t)) continue;
        const auto& T = mesh.tri(t);
        vol += 0.5 * signed_area2(mesh.position(T.v[0]), mesh.position(T.v[1]),
                                  mesh.position(T.v[2]));
    }
    return vol;
}

} // namespace pfem
