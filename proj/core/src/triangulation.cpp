#include "pfem/triangulation.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <sstream>

namespace pfem {

namespace {

int role_rank(NodeRole r) {
    switch (r) {
        case NodeRole::control: return 3;
        case NodeRole::wall: return 2;
        case NodeRole::free_surface: return 1;
        case NodeRole::interior: return 0;
    }
    return 0;
}

// For points known to be collinear: strict lexicographic betweenness.
bool strictly_between_collinear(Point2 p, Point2 a, Point2 b) {
    auto lex_less = [](Point2 u, Point2 v) {
        return u.x < v.x || (u.x == v.x && u.y < v.y);
    };
    if (lex_less(a, b)) return lex_less(a, p) && lex_less(p, b);
    if (lex_less(b, a)) return lex_less(b, p) && lex_less(p, a);
    return false;
}

bool proper_cross(Point2 a, Point2 b, Point2 c, Point2 d) {
    return orient2d(a, b, c) * orient2d(a, b, d) < 0 &&
           orient2d(c, d, a) * orient2d(c, d, b) < 0;
}

} // namespace

// ---------------------------------------------------------------------------
// small internals

std::uint64_t TriMesh::ckey(VertexId a, VertexId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

VertexId TriMesh::new_vertex(Point2 p, NodeRole role) {
    pos_.push_back(p);
    role_.push_back(role);
    v_alive_.push_back(1);
    v_constraint_degree_.push_back(0);
    v2t_.push_back(kNoTriangle);
    ++alive_vertices_;
    return static_cast<VertexId>(pos_.size() - 1);
}

TriId TriMesh::new_tri(VertexId a, VertexId b, VertexId c) {
    TriId t;
    if (!free_list_.empty()) {
        t = free_list_.back();
        free_list_.pop_back();
    } else {
        t = static_cast<TriId>(tris_.size());
        tris_.emplace_back();
    }
    Triangle& T = tris_[t];
    T.v = {a, b, c};
    T.nbr = {kNoTriangle, kNoTriangle, kNoTriangle};
    T.alive = true;
    T.serial = next_serial_++;
    for (VertexId v : T.v)
        if (v != kGhostVertex) v2t_[v] = t;
    last_changed_.push_back(t);
    return t;
}

void TriMesh::kill_tri(TriId t) {
    tris_[t].alive = false;
    free_list_.push_back(t);
}

void TriMesh::bump(TriId t) {
    tris_[t].serial = next_serial_++;
    last_changed_.push_back(t);
}

int TriMesh::local_index(TriId t, VertexId v) const {
    const Triangle& T = tris_[t];
    for (int i = 0; i < 3; ++i)
        if (T.v[i] == v) return i;
    return -1;
}

int TriMesh::local_edge(TriId t, VertexId a, VertexId b) const {
    const int ia = local_index(t, a);
    const int ib = local_index(t, b);
    if (ia < 0 || ib < 0) return -1;
    return 3 - ia - ib;
}

void TriMesh::set_nbr(TriId t, int e, TriId n) { tris_[t].nbr[e] = n; }

void TriMesh::link(TriId t, int e, TriId u, int f) {
    tris_[t].nbr[e] = u;
    tris_[u].nbr[f] = t;
}

bool TriMesh::tri_is_ghost(TriId t) const {
    const Triangle& T = tris_[t];
    return T.v[0] == kGhostVertex || T.v[1] == kGhostVertex || T.v[2] == kGhostVertex;
}

TriId TriMesh::neighbor(TriId t, int e) const {
    const TriId n = tris_[t].nbr[e];
    if (n == kNoTriangle || tri_is_ghost(n)) return kNoTriangle;
    return n;
}

std::vector<TriId> TriMesh::real_triangles() const {
    std::vector<TriId> out;
    for (TriId t = 0; t < tris_.size(); ++t)
        if (tris_[t].alive && !tri_is_ghost(t)) out.push_back(t);
    return out;
}

std::size_t TriMesh::real_triangle_count() const {
    std::size_t n = 0;
    for (TriId t = 0; t < tris_.size(); ++t)
        if (tris_[t].alive && !tri_is_ghost(t)) ++n;
    return n;
}

bool TriMesh::is_constrained(VertexId a, VertexId b) const {
    if (a == kGhostVertex || b == kGhostVertex) return false;
    return constrained_.count(ckey(a, b)) != 0;
}

void TriMesh::set_constrained(VertexId a, VertexId b, bool on) {
    const auto key = ckey(a, b);
    if (on) {
        if (!edge_exists(a, b))
            throw Error("set_constrained: edge is not in the mesh");
        if (constrained_.insert(key).second) {
            ++v_constraint_degree_[a];
            ++v_constraint_degree_[b];
        }
    } else {
        if (constrained_.erase(key)) {
            --v_constraint_degree_[a];
            --v_constraint_degree_[b];
        }
    }
}

std::vector<Edge> TriMesh::constrained_edges_sorted() const {
    std::vector<Edge> out;
    out.reserve(constrained_.size());
    for (std::uint64_t key : constrained_)
        out.push_back(Edge{static_cast<VertexId>(key >> 32),
                           static_cast<VertexId>(key & 0xFFFFFFFFu)});
    std::sort(out.begin(), out.end(), [](Edge l, Edge r) {
        return l.a < r.a || (l.a == r.a && l.b < r.b);
    });
    return out;
}

std::vector<TriId> TriMesh::star(VertexId v) const {
    std::vector<TriId> ring;
    const TriId t0 = v2t_[v];
    if (t0 == kNoTriangle || !tris_[t0].alive) return ring;
    TriId t = t0;
    const std::size_t guard = tris_.size() + 8;
    do {
        ring.push_back(t);
        const int i = local_index(t, v);
        if (i < 0) throw TopologyError("star: v2t does not contain vertex");
        t = tris_[t].nbr[(i + 1) % 3];
        if (t == kNoTriangle) throw TopologyError("star: open fan");
        if (ring.size() > guard) throw TopologyError("star: unterminated fan");
    } while (t != t0);
    return ring;
}

bool TriMesh::vertex_on_hull(VertexId v) const {
    for (TriId t : star(v))
        if (tri_is_ghost(t)) return true;
    return false;
}

std::optional<std::pair<TriId, int>> TriMesh::find_directed_edge(VertexId a, VertexId b) const {
    if (v2t_[a] == kNoTriangle) return std::nullopt;
    for (TriId t : star(a)) {
        const int i = local_index(t, a);
        if (tris_[t].v[(i + 1) % 3] == b) return std::make_pair(t, (i + 2) % 3);
    }
    return std::nullopt;
}

bool TriMesh::edge_exists(VertexId a, VertexId b) const {
    return find_directed_edge(a, b).has_value();
}

bool TriMesh::in_disk(TriId t, Point2 p) const {
    const Triangle& T = tris_[t];
    int g = -1;
    for (int i = 0; i < 3; ++i)
        if (T.v[i] == kGhostVertex) { g = i; break; }
    if (g < 0) {
        return incircle(pos_[T.v[0]], pos_[T.v[1]], pos_[T.v[2]], p) > 0;
    }
    const Point2 x = pos_[T.v[(g + 1) % 3]];
    const Point2 y = pos_[T.v[(g + 2) % 3]];
    const int o = orient2d(x, y, p);
    if (o > 0) return true;
    if (o < 0) return false;
    return strictly_between_collinear(p, x, y);
}

// ---------------------------------------------------------------------------
// point location

TriMesh::Location TriMesh::classify_point_in_tri(TriId t, Point2 p) const {
    const Triangle& T = tris_[t];
    int o[3];
    for (int j = 0; j < 3; ++j)
        o[j] = orient2d(pos_[T.v[(j + 1) % 3]], pos_[T.v[(j + 2) % 3]], p);

    Location loc;
    int zeros = 0, z1 = -1, z2 = -1;
    for (int j = 0; j < 3; ++j) {
        if (o[j] < 0) { loc.kind = Location::Kind::outside; loc.tri = t; return loc; }
        if (o[j] == 0) { (zeros == 0 ? z1 : z2) = j; ++zeros; }
    }
    if (zeros == 0) {
        loc.kind = Location::Kind::inside;
        loc.tri = t;
    } else if (zeros == 1) {
        loc.kind = Location::Kind::on_edge;
        loc.tri = t;
        loc.edge = z1;
        const TriId nb = tris_[t].nbr[z1];
        if (nb != kNoTriangle && !tri_is_ghost(nb) && nb < t) {
            loc.tri = nb;
            loc.edge = local_edge(nb, T.v[(z1 + 1) % 3], T.v[(z1 + 2) % 3]);
        }
    } else {
        loc.kind = Location::Kind::on_vertex;
        loc.vertex = T.v[3 - z1 - z2];
        TriId best = kNoTriangle;
        for (TriId s : star(loc.vertex))
            if (!tri_is_ghost(s) && (best == kNoTriangle || s < best)) best = s;
        loc.tri = best;
    }
    return loc;
}

TriMesh::Location TriMesh::brute_locate(Point2 p) const {
    for (TriId t = 0; t < tris_.size(); ++t) {
        if (!tris_[t].alive || tri_is_ghost(t)) continue;
        const Location loc = classify_point_in_tri(t, p);
        if (loc.kind != Location::Kind::outside) return loc;
    }
    for (TriId t = 0; t < tris_.size(); ++t) {
        if (!tris_[t].alive || !tri_is_ghost(t)) continue;
        if (in_disk(t, p)) {
            Location loc;
            loc.kind = Location::Kind::outside;
            loc.tri = t;
            return loc;
        }
    }
    throw LocationError("locate: point matches no triangle and no hull wedge");
}

TriMesh::Location TriMesh::locate(Point2 p, TriId hint) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
        throw DomainError("locate: non-finite point");

    TriId t = kNoTriangle;
    if (hint != kNoTriangle && hint < tris_.size() && tris_[hint].alive) t = hint;
    if (t == kNoTriangle) {
        for (TriId s = 0; s < tris_.size(); ++s)
            if (tris_[s].alive && !tri_is_ghost(s)) { t = s; break; }
    }
    if (t == kNoTriangle) throw LocationError("locate: empty mesh");
    if (tri_is_ghost(t)) {
        const int g = local_index(t, kGhostVertex);
        t = tris_[t].nbr[g];
    }

    TriId prev = kNoTriangle;
    std::size_t steps = 3 * tris_.size() + 32;
    while (steps-- > 0) {
        if (tri_is_ghost(t)) {
            if (in_disk(t, p)) {
                Location loc;
                loc.kind = Location::Kind::outside;
                loc.tri = t;
                return loc;
            }
            return brute_locate(p);
        }
        const Triangle& T = tris_[t];
        int o[3];
        bool any_neg = false;
        for (int j = 0; j < 3; ++j) {
            o[j] = orient2d(pos_[T.v[(j + 1) % 3]], pos_[T.v[(j + 2) % 3]], p);
            any_neg = any_neg || o[j] < 0;
        }
        if (!any_neg) return classify_point_in_tri(t, p);

        int pick = -1;
        for (int j = 0; j < 3; ++j) {
            if (o[j] < 0 && T.nbr[j] != prev) { pick = j; break; }
        }
        if (pick < 0) {
            for (int j = 0; j < 3; ++j)
                if (o[j] < 0) { pick = j; break; }
        }
        prev = t;
        t = T.nbr[pick];
        if (t == kNoTriangle) throw TopologyError("locate: missing neighbor");
    }
    return brute_locate(p);
}

TriMesh::WalkResult TriMesh::walk_toward(TriId from, Point2 target) const {
    WalkResult res;
    if (!tris_[from].alive || tri_is_ghost(from))
        throw Error("walk_toward: invalid start triangle");

    const Triangle& F = tris_[from];
    const Point2 s{(pos_[F.v[0]].x + pos_[F.v[1]].x + pos_[F.v[2]].x) / 3.0,
                   (pos_[F.v[0]].y + pos_[F.v[1]].y + pos_[F.v[2]].y) / 3.0};

    // orient with a symbolic tilt: exact zeros count as +1, so the march
    // never passes exactly through a vertex
    auto side = [&](Point2 v) {
        const int o = orient2d(s, target, v);
        return o == 0 ? 1 : o;
    };

    TriId t = from;
    int entry = -1;
    std::size_t steps = 3 * tris_.size() + 32;
    while (steps-- > 0) {
        const Triangle& T = tris_[t];
        const Location loc = classify_point_in_tri(t, target);
        if (loc.kind != Location::Kind::outside) {
            res.kind = WalkResult::Kind::reached;
            res.loc = loc;
            return res;
        }
        int exit = -1;
        for (int j = 0; j < 3; ++j) {
            if (j == entry) continue;
            const VertexId u = T.v[(j + 1) % 3];
            const VertexId w = T.v[(j + 2) % 3];
            if (orient2d(pos_[u], pos_[w], target) < 0 &&
                side(pos_[u]) > 0 && side(pos_[w]) < 0) {
                exit = j;
                break;
            }
        }
        if (exit < 0) {
            for (int j = 0; j < 3; ++j) {
                if (j == entry) continue;
                const VertexId u = T.v[(j + 1) % 3];
                const VertexId w = T.v[(j + 2) % 3];
                if (orient2d(pos_[u], pos_[w], target) < 0) { exit = j; break; }
            }
        }
        if (exit < 0) throw TopologyError("walk_toward: no exit edge");

        const VertexId u = T.v[(exit + 1) % 3];
        const VertexId w = T.v[(exit + 2) % 3];
        if (is_constrained(u, w)) {
            res.kind = WalkResult::Kind::blocked;
            res.blocking = Edge{u, w};
            res.blocked_tri = t;
            return res;
        }
        const TriId nxt = T.nbr[exit];
        if (nxt == kNoTriangle || tri_is_ghost(nxt)) {
            res.kind = WalkResult::Kind::exited;
            res.blocking = Edge{u, w};
            res.blocked_tri = t;
            return res;
        }
        entry = local_edge(nxt, u, w);
        t = nxt;
    }
    throw TopologyError("walk_toward: march did not terminate");
}

// ---------------------------------------------------------------------------
// flips

void TriMesh::flip(TriId t, int e) {
    const TriId u_id = tris_[t].nbr[e];
    Triangle& T = tris_[t];
    Triangle& U = tris_[u_id];

    const VertexId p = T.v[e];
    const VertexId a = T.v[(e + 1) % 3];
    const VertexId b = T.v[(e + 2) % 3];
    const int f = local_edge(u_id, a, b);
    const VertexId q = U.v[f];

    const TriId n_bp = T.nbr[(e + 1) % 3];  // across (b, p)
    const TriId n_pa = T.nbr[(e + 2) % 3];  // across (p, a)
    const TriId n_aq = U.nbr[(f + 1) % 3];  // across (a, q)... far cycle (q, b, a)
    const TriId n_qb = U.nbr[(f + 2) % 3];

    // Far triangle stores (q, b, a): edge (f+1) spans (U.v[f+2], U.v[f]) which
    // is (a, q); edge (f+2) spans (U.v[f], U.v[f+1]) = (q, b).

    // T := (p, a, q), U := (p, q, b)
    T.v = {p, a, q};
    U.v = {p, q, b};
    T.nbr[0] = n_aq;   // opposite p: (a, q)
    T.nbr[1] = u_id;   // opposite a: (q, p)
    T.nbr[2] = n_pa;   // opposite q: (p, a)
    U.nbr[0] = n_qb;   // opposite p: (q, b)
    U.nbr[1] = n_bp;   // opposite q: (b, p)
    U.nbr[2] = t;      // opposite b: (p, q)

    if (n_aq != kNoTriangle) set_nbr(n_aq, local_edge(n_aq, a, q), t);
    if (n_bp != kNoTriangle) set_nbr(n_bp, local_edge(n_bp, b, p), u_id);
    // n_pa keeps pointing at t, n_qb at u_id

    if (v2t_[b] == t) v2t_[b] = u_id;
    if (v2t_[a] == u_id) v2t_[a] = t;
    if (p != kGhostVertex) v2t_[p] = t;
    if (q != kGhostVertex) v2t_[q] = t;

    bump(t);
    bump(u_id);
}

void TriMesh::delaunay_flip_pass(std::vector<std::pair<TriId, std::uint64_t>>& stack) {
    // Entries are (triangle, serial-at-push); stale entries are skipped.
    // Each flip re-pushes the two rewritten triangles, so every affected
    // edge is rechecked from at least one side.
    std::size_t guard = 100 * (tris_.size() + 64);
    while (!stack.empty()) {
        if (guard-- == 0)
            throw TopologyError("delaunay_flip_pass: flip cascade did not terminate");
        const auto [t, ser] = stack.back();
        stack.pop_back();
        if (t >= tris_.size() || !tris_[t].alive || tris_[t].serial != ser) continue;
        if (tri_is_ghost(t)) continue;
        for (int e = 0; e < 3; ++e) {
            const TriId nb = tris_[t].nbr[e];
            if (nb == kNoTriangle || tri_is_ghost(nb)) continue;
            const VertexId u = tris_[t].v[(e + 1) % 3];
            const VertexId w = tris_[t].v[(e + 2) % 3];
            if (is_constrained(u, w)) continue;
            const int f = local_edge(nb, u, w);
            const VertexId q = tris_[nb].v[f];
            if (incircle(pos_[tris_[t].v[0]], pos_[tris_[t].v[1]], pos_[tris_[t].v[2]],
                         pos_[q]) > 0) {
                flip(t, e);
                stack.emplace_back(t, tris_[t].serial);
                stack.emplace_back(nb, tris_[nb].serial);
                break;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// insertion

VertexId TriMesh::cavity_insert(Point2 p, TriId seed, VertexId vp) {
    // Bowyer-Watson cavity over reals and ghosts; used only while the mesh
    // has no constrained edges (initial build), where the cavity is a disk.
    assert(constrained_.empty());

    std::vector<TriId> dead;
    std::vector<char> is_dead(tris_.size(), 0);
    std::vector<TriId> work{seed};
    is_dead[seed] = 1;
    while (!work.empty()) {
        const TriId t = work.back();
        work.pop_back();
        dead.push_back(t);
        for (int e = 0; e < 3; ++e) {
            const TriId nb = tris_[t].nbr[e];
            if (nb == kNoTriangle || is_dead[nb]) continue;
            if (in_disk(nb, p)) {
                is_dead[nb] = 1;
                work.push_back(nb);
            }
        }
    }

    // boundary directed edges (x -> y) with their outer neighbor
    struct Bnd { VertexId y; TriId outer; };
    std::map<VertexId, Bnd> ring;
    for (const TriId t : dead) {
        const Triangle& T = tris_[t];
        for (int e = 0; e < 3; ++e) {
            const TriId nb = T.nbr[e];
            if (nb == kNoTriangle) throw TopologyError("cavity_insert: open adjacency");
            if (is_dead[nb]) continue;
            const VertexId x = T.v[(e + 1) % 3];
            const VertexId y = T.v[(e + 2) % 3];
            if (!ring.emplace(x, Bnd{y, nb}).second)
                throw TopologyError("cavity_insert: cavity boundary is not a single ring");
        }
    }
    if (ring.empty()) throw TopologyError("cavity_insert: empty cavity boundary");
    // every vertex of a dead triangle must be on the ring (no orphans)
    for (const TriId t : dead)
        for (const VertexId v : tris_[t].v)
            if (v != kGhostVertex && ring.find(v) == ring.end())
                throw TopologyError("cavity_insert: orphaned vertex inside cavity");

    for (const TriId t : dead) kill_tri(t);

    std::map<VertexId, TriId> made;  // x -> new triangle (x, y, vp)
    for (const auto& [x, bnd] : ring) made[x] = new_tri(x, bnd.y, vp);
    for (const auto& [x, bnd] : ring) {
        const TriId tn = made[x];
        link(tn, local_edge(tn, x, bnd.y), bnd.outer, local_edge(bnd.outer, x, bnd.y));
        const auto it = made.find(bnd.y);
        if (it == made.end()) throw TopologyError("cavity_insert: broken ring");
        const TriId tnext = it->second;
        // spoke (y, vp) shared between (x, y, vp) and (y, z, vp)
        link(tn, local_edge(tn, bnd.y, vp), tnext, local_edge(tnext, bnd.y, vp));
    }

    v2t_[vp] = made.begin()->second;
    for (const auto& [x, bnd] : ring)
        if (x != kGhostVertex) v2t_[x] = made[x];

    last_new_edges_.clear();
    for (const auto& [x, bnd] : ring)
        if (x != kGhostVertex) last_new_edges_.push_back(Edge{vp, x});
    return vp;
}

VertexId TriMesh::structural_edge_split(TriId t1, int e1, Point2 at, NodeRole role) {
    const VertexId w1 = tris_[t1].v[e1];
    const VertexId a = tris_[t1].v[(e1 + 1) % 3];
    const VertexId b = tris_[t1].v[(e1 + 2) % 3];
    const TriId t2 = tris_[t1].nbr[e1];
    if (t2 == kNoTriangle) throw TopologyError("edge_split: missing neighbor");
    const int f = local_edge(t2, a, b);
    const VertexId w2 = tris_[t2].v[f];  // may be the ghost

    if (orient2d(pos_[a], at, pos_[w1]) <= 0 || orient2d(at, pos_[b], pos_[w1]) <= 0) {
        if (std::getenv("PFEM_TRACE_ADAPT"))
            std::fprintf(stderr,
                         "   near-wedge reject: a=%u b=%u w1=%u w2=%u o1=%d o2=%d\n", a, b, w1,
                         w2, orient2d(pos_[a], at, pos_[w1]), orient2d(at, pos_[b], pos_[w1]));
        throw DegenerateGeometryError("edge_split: split point not strictly inside the near wedge");
    }
    if (w2 != kGhostVertex) {
        if (orient2d(pos_[b], at, pos_[w2]) <= 0 || orient2d(at, pos_[a], pos_[w2]) <= 0) {
            if (std::getenv("PFEM_TRACE_ADAPT"))
                std::fprintf(stderr,
                             "   far-wedge reject: a=%u b=%u w1=%u w2=%u o1=%d o2=%d\n", a, b,
                             w1, w2, orient2d(pos_[b], at, pos_[w2]),
                             orient2d(at, pos_[a], pos_[w2]));
            throw DegenerateGeometryError("edge_split: split point not strictly inside the far wedge");
        }
    }

    const TriId n_bw1 = tris_[t1].nbr[(e1 + 1) % 3];  // across (b, w1)
    const TriId n_w1a = tris_[t1].nbr[(e1 + 2) % 3];  // across (w1, a)
    const TriId n_aw2 = tris_[t2].nbr[(f + 1) % 3];   // across (a, w2): far cycle (w2, b, a)
    const TriId n_w2b = tris_[t2].nbr[(f + 2) % 3];   // across (w2, b)

    const VertexId m = new_vertex(at, role);

    kill_tri(t1);
    kill_tri(t2);

    const TriId ta = new_tri(w1, a, m);
    const TriId tb = new_tri(w1, m, b);
    const TriId ua = new_tri(w2, m, a);
    const TriId ub = new_tri(w2, b, m);

    auto relink = [&](TriId x, VertexId u, VertexId v, TriId y) {
        const int ex = local_edge(x, u, v);
        if (y == kNoTriangle) { tris_[x].nbr[ex] = kNoTriangle; return; }
        const int ey = local_edge(y, u, v);
        tris_[x].nbr[ex] = y;
        tris_[y].nbr[ey] = x;
    };
    relink(ta, w1, m, tb);
    relink(ua, w2, m, ub);
    relink(ta, a, m, ua);
    relink(tb, m, b, ub);
    relink(tb, b, w1, n_bw1);
    relink(ta, w1, a, n_w1a);
    relink(ua, a, w2, n_aw2);
    relink(ub, w2, b, n_w2b);

    v2t_[m] = ta;
    v2t_[a] = ta;
    v2t_[b] = tb;
    if (w1 != kGhostVertex) v2t_[w1] = ta;
    if (w2 != kGhostVertex) v2t_[w2] = ua;

    last_new_edges_.clear();
    last_new_edges_.push_back(Edge{m, a});
    last_new_edges_.push_back(Edge{m, b});
    if (w1 != kGhostVertex) last_new_edges_.push_back(Edge{m, w1});
    if (w2 != kGhostVertex) last_new_edges_.push_back(Edge{m, w2});
    return m;
}

VertexId TriMesh::insert_point(Point2 p, TriId hint, NodeRole role) {
    last_changed_.clear();
    const Location loc = locate(p, hint);
    if (loc.kind == Location::Kind::outside)
        throw LocationError("insert_point: point outside the triangulated domain");
    if (loc.kind == Location::Kind::on_vertex)
        throw DuplicatePointError("insert_point: coincides with an existing vertex");

    const TriId t = loc.tri;
    double longest = 0.0;
    for (int j = 0; j < 3; ++j)
        longest = std::max(longest, dist(pos_[tris_[t].v[j]], pos_[tris_[t].v[(j + 1) % 3]]));
    const double tol = 1e-12 * longest;
    for (int j = 0; j < 3; ++j)
        if (dist(p, pos_[tris_[t].v[j]]) <= tol)
            throw DuplicatePointError("insert_point: within duplicate tolerance of an existing vertex");

    if (loc.kind == Location::Kind::on_edge) {
        const VertexId u = tris_[t].v[(loc.edge + 1) % 3];
        const VertexId w = tris_[t].v[(loc.edge + 2) % 3];
        if (is_constrained(u, w)) return split_constrained_edge(Edge{u, w}, p, role);
        const VertexId m = structural_edge_split(t, loc.edge, p, role);
        std::vector<std::pair<TriId, std::uint64_t>> stack;
        for (TriId s : star(m)) stack.emplace_back(s, tris_[s].serial);
        delaunay_flip_pass(stack);
        return m;
    }

    // near-constrained-edge snap: split instead of creating a sliver beside it
    for (int j = 0; j < 3; ++j) {
        const VertexId u = tris_[t].v[(j + 1) % 3];
        const VertexId w = tris_[t].v[(j + 2) % 3];
        if (!is_constrained(u, w)) continue;
        const Vec2 d = pos_[w] - pos_[u];
        const double tt = dot(p - pos_[u], d) / norm2(d);
        if (tt <= 0.0 || tt >= 1.0) continue;
        const Point2 proj = pos_[u] + d * tt;
        if (dist(p, proj) <= tol)
            return split_constrained_edge(Edge{u, w}, proj, role);
    }

    // 1 -> 3 split
    const VertexId a = tris_[t].v[0], b = tris_[t].v[1], c = tris_[t].v[2];
    const TriId n_ab = tris_[t].nbr[2];
    const TriId n_bc = tris_[t].nbr[0];
    const TriId n_ca = tris_[t].nbr[1];

    const VertexId vp = new_vertex(p, role);
    kill_tri(t);
    const TriId t0 = new_tri(a, b, vp);
    const TriId t1 = new_tri(b, c, vp);
    const TriId t2 = new_tri(c, a, vp);

    auto relink = [&](TriId x, VertexId u, VertexId v, TriId y) {
        const int ex = local_edge(x, u, v);
        if (y == kNoTriangle) { tris_[x].nbr[ex] = kNoTriangle; return; }
        const int ey = local_edge(y, u, v);
        tris_[x].nbr[ex] = y;
        tris_[y].nbr[ey] = x;
    };
    relink(t0, a, b, n_ab);
    relink(t1, b, c, n_bc);
    relink(t2, c, a, n_ca);
    relink(t0, b, vp, t1);
    relink(t1, c, vp, t2);
    relink(t2, a, vp, t0);

    v2t_[vp] = t0;
    v2t_[a] = t0;
    v2t_[b] = t0;
    v2t_[c] = t1;

    last_new_edges_.clear();
    last_new_edges_.push_back(Edge{vp, a});
    last_new_edges_.push_back(Edge{vp, b});
    last_new_edges_.push_back(Edge{vp, c});

    std::vector<std::pair<TriId, std::uint64_t>> stack{
        {t0, tris_[t0].serial}, {t1, tris_[t1].serial}, {t2, tris_[t2].serial}};
    delaunay_flip_pass(stack);
    return vp;
}

VertexId TriMesh::split_constrained_edge(Edge e, Point2 at, NodeRole role) {
    last_changed_.clear();
    if (!is_constrained(e.a, e.b))
        throw Error("split_constrained_edge: edge is not constrained");
    auto de = find_directed_edge(e.a, e.b);
    if (!de) throw TopologyError("split_constrained_edge: edge not found in mesh");
    if (tri_is_ghost(de->first)) {
        de = find_directed_edge(e.b, e.a);  // the near side must be real
        if (!de || tri_is_ghost(de->first))
            throw TopologyError("split_constrained_edge: no real triangle on the edge");
    }

    set_constrained(e.a, e.b, false);
    VertexId m;
    try {
        m = structural_edge_split(de->first, de->second, at, role);
    } catch (...) {
        set_constrained(e.a, e.b, true);
        throw;
    }
    set_constrained(e.a, m, true);
    set_constrained(m, e.b, true);

    std::vector<std::pair<TriId, std::uint64_t>> stack;
    for (TriId s : star(m)) stack.emplace_back(s, tris_[s].serial);
    delaunay_flip_pass(stack);
    return m;
}

// ---------------------------------------------------------------------------
// collapse

std::optional<VertexId> TriMesh::collapse_edge(Edge e) {
    last_changed_.clear();
    const VertexId u = e.a, v = e.b;
    if (u == v || u >= pos_.size() || v >= pos_.size()) return std::nullopt;
    if (!v_alive_[u] || !v_alive_[v]) return std::nullopt;
    if (!edge_exists(u, v)) return std::nullopt;

    if (role_[u] == NodeRole::control && role_[v] == NodeRole::control) return std::nullopt;

    const int ru = role_rank(role_[u]);
    const int rv = role_rank(role_[v]);
    VertexId s, d;  // survivor, dying
    if (ru > rv) { s = u; d = v; }
    else if (rv > ru) { s = v; d = u; }
    else { s = std::min(u, v); d = std::max(u, v); }
    if (role_[d] == NodeRole::control) return std::nullopt;

    // a vertex carrying constrained edges may only die along its chain;
    // merging an unconstrained vertex INTO a chain vertex leaves the chain intact
    if (v_constraint_degree_[d] > 0 && !is_constrained(u, v)) return std::nullopt;

    // a hull vertex may only merge along a hull edge into another hull vertex
    if (vertex_on_hull(d)) {
        bool uv_hull_edge = false;
        for (TriId t : star(d)) {
            if (!tri_is_ghost(t)) continue;
            const int g = local_index(t, kGhostVertex);
            const VertexId x = tris_[t].v[(g + 1) % 3];
            const VertexId y = tris_[t].v[(g + 2) % 3];
            if ((x == u && y == v) || (x == v && y == u)) uv_hull_edge = true;
        }
        if (!uv_hull_edge || !vertex_on_hull(s)) return std::nullopt;
    }

    const std::vector<TriId> star_d = star(d);
    std::vector<TriId> dying, substituted;
    for (TriId t : star_d) {
        if (local_index(t, s) >= 0) dying.push_back(t);
        else substituted.push_back(t);
    }
    if (dying.empty()) return std::nullopt;

    // splice sanity: the neighbors being re-joined must survive
    for (TriId t : dying) {
        const int id_ = local_index(t, d);
        const int is_ = local_index(t, s);
        const TriId A = tris_[t].nbr[id_];
        const TriId B = tris_[t].nbr[is_];
        if (A == kNoTriangle || B == kNoTriangle) return std::nullopt;
        for (TriId dt : dying)
            if (A == dt || B == dt) return std::nullopt;
    }

    // collapsing along a free-surface chain moves the survivor to the edge
    // midpoint: the leading-order area bias of cutting the chain kink then
    // cancels instead of accumulating over the surface-particle conveyor
    const bool midpoint_merge =
        role_[u] == NodeRole::free_surface && role_[v] == NodeRole::free_surface;
    const Point2 s_pos =
        midpoint_merge ? (pos_[u] + pos_[v]) * 0.5 : pos_[s];

    // inversion guard on every surviving real triangle around both endpoints
    auto guarded = [&](TriId t) {
        if (tri_is_ghost(t)) return true;
        Point2 q[3];
        for (int i = 0; i < 3; ++i) {
            const VertexId w = tris_[t].v[i];
            q[i] = (w == d || w == s) ? s_pos : pos_[w];
        }
        return orient2d(q[0], q[1], q[2]) > 0;
    };
    for (TriId t : substituted)
        if (!guarded(t)) return std::nullopt;
    if (midpoint_merge) {
        for (TriId t : star(s)) {
            bool is_dying = false;
            for (TriId dt : dying) is_dying |= dt == t;
            if (!is_dying && !guarded(t)) return std::nullopt;
        }
    }

    // execute: substitute d -> s
    pos_[s] = s_pos;
    for (TriId t : substituted) {
        tris_[t].v[local_index(t, d)] = s;
        bump(t);
    }
    if (midpoint_merge)
        for (TriId t : star(s))
            if (tris_[t].alive) bump(t);

    // splice out the dying triangles
    std::vector<TriId> spliced;
    for (TriId t : dying) {
        const int id_ = local_index(t, d);
        const int is_ = local_index(t, s);
        const TriId A = tris_[t].nbr[id_];  // shares edge (s, o)
        const TriId B = tris_[t].nbr[is_];  // shared edge (d, o), now (s, o)
        const int io = 3 - id_ - is_;
        const VertexId o = tris_[t].v[io];
        int ea = -1, eb = -1;
        for (int j = 0; j < 3; ++j) {
            if (tris_[A].nbr[j] == t) ea = j;
            if (tris_[B].nbr[j] == t) eb = j;
        }
        if (ea < 0 || eb < 0) throw TopologyError("collapse_edge: asymmetric adjacency");
        tris_[A].nbr[ea] = B;
        tris_[B].nbr[eb] = A;
        kill_tri(t);
        spliced.push_back(A);
        spliced.push_back(B);
        if (o != kGhostVertex) v2t_[o] = A;  // A spans edge (s, o)
    }
    v2t_[s] = kNoTriangle;
    for (TriId t : substituted)
        if (tris_[t].alive) { v2t_[s] = t; break; }
    if (v2t_[s] == kNoTriangle) {
        for (TriId t : spliced)
            if (tris_[t].alive && local_index(t, s) >= 0) { v2t_[s] = t; break; }
    }
    if (v2t_[s] == kNoTriangle) throw TopologyError("collapse_edge: survivor lost its fan");

    // retire the vertex, remap its constraints onto the survivor
    v_alive_[d] = 0;
    --alive_vertices_;
    v2t_[d] = kNoTriangle;
    std::vector<VertexId> cpartners;
    for (auto it = constrained_.begin(); it != constrained_.end();) {
        const VertexId a = static_cast<VertexId>(*it >> 32);
        const VertexId b = static_cast<VertexId>(*it & 0xFFFFFFFFu);
        if (a == d || b == d) {
            cpartners.push_back(a == d ? b : a);
            --v_constraint_degree_[a];
            --v_constraint_degree_[b];
            it = constrained_.erase(it);
        } else {
            ++it;
        }
    }
    std::sort(cpartners.begin(), cpartners.end());
    for (VertexId w : cpartners) {
        if (w == s) continue;  // the collapsed edge itself
        if (constrained_.insert(ckey(s, w)).second) {
            ++v_constraint_degree_[s];
            ++v_constraint_degree_[w];
        }
    }

    // restore the constrained Delaunay property around the survivor
    std::vector<std::pair<TriId, std::uint64_t>> stack;
    for (TriId t : star(s)) stack.emplace_back(t, tris_[t].serial);
    delaunay_flip_pass(stack);
    return s;
}

// ---------------------------------------------------------------------------
// build

TriMesh TriMesh::build_cdt(const ParticleSet& points, const std::vector<Edge>& constraints) {
    const std::size_t n = points.size();
    if (n < 3) throw DegenerateGeometryError("build_cdt: need at least 3 points");

    TriMesh mesh;
    mesh.pos_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 p = points.positions[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DomainError("build_cdt: non-finite point coordinate");
        mesh.new_vertex(p, points.roles.empty() ? NodeRole::interior : points.roles[i]);
    }

    // duplicate detection: sorted sweep at 1e-12 of the cloud diagonal
    {
        Point2 lo = mesh.pos_[0], hi = mesh.pos_[0];
        for (const Point2& p : mesh.pos_) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
        }
        const double diag = dist(lo, hi);
        const double tol = 1e-12 * std::max(diag, 1e-300);
        std::vector<VertexId> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<VertexId>(i);
        std::sort(order.begin(), order.end(), [&](VertexId a, VertexId b) {
            const Point2 pa = mesh.pos_[a], pb = mesh.pos_[b];
            return pa.x < pb.x || (pa.x == pb.x && pa.y < pb.y);
        });
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (mesh.pos_[order[j]].x - mesh.pos_[order[i]].x > tol) break;
                if (dist(mesh.pos_[order[i]], mesh.pos_[order[j]]) <= tol) {
                    std::ostringstream os;
                    os << "build_cdt: duplicate points " << order[i] << " and " << order[j];
                    throw DuplicatePointError(os.str());
                }
            }
        }
    }

    // seed triangle: first two points plus the first non-collinear third
    VertexId v0 = 0, v1 = 1, v2 = kGhostVertex;
    for (VertexId k = 2; k < n; ++k) {
        const int o = orient2d(mesh.pos_[v0], mesh.pos_[v1], mesh.pos_[k]);
        if (o != 0) {
            v2 = k;
            if (o < 0) std::swap(v0, v1);
            break;
        }
    }
    if (v2 == kGhostVertex)
        throw DegenerateGeometryError("build_cdt: all points are collinear");

    const TriId t0 = mesh.new_tri(v0, v1, v2);
    const TriId g01 = mesh.new_tri(v1, v0, kGhostVertex);
    const TriId g12 = mesh.new_tri(v2, v1, kGhostVertex);
    const TriId g20 = mesh.new_tri(v0, v2, kGhostVertex);
    auto relink = [&](TriId x, VertexId a, VertexId b, TriId y) {
        const int ex = mesh.local_edge(x, a, b);
        const int ey = mesh.local_edge(y, a, b);
        mesh.tris_[x].nbr[ex] = y;
        mesh.tris_[y].nbr[ey] = x;
    };
    relink(t0, v0, v1, g01);
    relink(t0, v1, v2, g12);
    relink(t0, v2, v0, g20);
    relink(g01, v0, kGhostVertex, g20);
    relink(g01, v1, kGhostVertex, g12);
    relink(g12, v2, kGhostVertex, g20);
    mesh.v2t_[v0] = t0;
    mesh.v2t_[v1] = t0;
    mesh.v2t_[v2] = t0;

    TriId hint = t0;
    for (VertexId k = 2; k < n; ++k) {
        if (k == v0 || k == v1 || k == v2) continue;
        const Point2 p = mesh.pos_[k];
        const Location loc = mesh.locate(p, hint);
        if (loc.kind == Location::Kind::on_vertex)
            throw DuplicatePointError("build_cdt: duplicate point (on vertex)");
        TriId seed = loc.tri;
        if (!mesh.in_disk(seed, p)) {
            bool found = false;
            for (int j = 0; j < 3 && !found; ++j) {
                const TriId nb = mesh.tris_[seed].nbr[j];
                if (nb != kNoTriangle && mesh.in_disk(nb, p)) { seed = nb; found = true; }
            }
            if (!found) throw TopologyError("build_cdt: no in-disk seed triangle");
        }
        mesh.cavity_insert(p, seed, k);
        hint = mesh.v2t_[k];
    }

    for (const Edge& c : constraints) {
        if (c.a >= n || c.b >= n || c.a == c.b)
            throw Error("build_cdt: invalid constraint vertex ids");
        mesh.insert_constraint(c.a, c.b);
    }

    mesh.last_changed_.clear();
    return mesh;
}

// ---------------------------------------------------------------------------
// constraint insertion (build time)

void TriMesh::insert_constraint(VertexId i, VertexId j) {
    VertexId cur = i;
    std::size_t outer_guard = vertex_capacity() + 8;
    while (cur != j) {
        if (outer_guard-- == 0)
            throw TopologyError("insert_constraint: did not converge");
        if (edge_exists(cur, j)) {
            set_constrained(cur, j, true);
            break;
        }

        const Point2 pc = pos_[cur];
        const Point2 pj = pos_[j];

        // wedge triangle around cur whose cone contains the segment
        TriId wedge = kNoTriangle;
        VertexId left = kGhostVertex, right = kGhostVertex;
        VertexId vertex_hit = kGhostVertex;
        for (TriId t : star(cur)) {
            if (tri_is_ghost(t)) continue;
            const int ic = local_index(t, cur);
            const VertexId a = tris_[t].v[(ic + 1) % 3];
            const VertexId b = tris_[t].v[(ic + 2) % 3];
            const int oa = orient2d(pc, pj, pos_[a]);
            const int ob = orient2d(pc, pj, pos_[b]);
            if (oa == 0 && dot(pos_[a] - pc, pj - pc) > 0) { vertex_hit = a; break; }
            if (ob == 0 && dot(pos_[b] - pc, pj - pc) > 0) { vertex_hit = b; break; }
            // a is the CCW-first corner: the contained ray has a to its right
            if (oa < 0 && ob > 0 && orient2d(pos_[a], pos_[b], pj) < 0) {
                wedge = t;
                left = b;
                right = a;
                break;
            }
        }
        if (vertex_hit != kGhostVertex) {
            if (!edge_exists(cur, vertex_hit))
                throw TopologyError("insert_constraint: on-segment vertex not adjacent");
            set_constrained(cur, vertex_hit, true);
            cur = vertex_hit;
            continue;
        }
        if (wedge == kNoTriangle)
            throw TopologyError("insert_constraint: no wedge triangle toward target");

        // collect the run of crossing edges until j or an on-segment vertex
        std::deque<Edge> crossing;
        VertexId stop = kGhostVertex;
        {
            VertexId l = left, r = right;
            std::size_t guard = 4 * tris_.size() + 16;
            while (true) {
                if (guard-- == 0)
                    throw TopologyError("insert_constraint: crossing march stalled");
                if (is_constrained(l, r))
                    throw ConstraintConflictError(
                        "insert_constraint: crosses an existing constrained edge");
                crossing.push_back(Edge{l, r});
                const auto de = find_directed_edge(l, r);  // far-side triangle
                if (!de) throw TopologyError("insert_constraint: lost crossing edge");
                const TriId tn = de->first;
                const VertexId c = tris_[tn].v[de->second];
                if (c == kGhostVertex)
                    throw TopologyError("insert_constraint: crossing march left the hull");
                if (c == j) { stop = j; break; }
                const int oc = orient2d(pc, pj, pos_[c]);
                if (oc == 0) { stop = c; break; }
                if (oc > 0) l = c; else r = c;
            }
        }

        // flip the crossing edges away until the carved edge appears
        std::vector<Edge> fresh;
        std::size_t guard = (crossing.size() + 16) * (crossing.size() + 16) * 8 + 4096;
        const Point2 ps = pos_[stop];
        while (!crossing.empty()) {
            if (guard-- == 0)
                throw TopologyError("insert_constraint: flip-away stalled");
            const Edge uw = crossing.front();
            crossing.pop_front();
            const auto de = find_directed_edge(uw.a, uw.b);
            if (!de) continue;  // already flipped away
            const TriId t = de->first;
            const int e = de->second;
            const VertexId p = tris_[t].v[e];
            const TriId t2 = tris_[t].nbr[e];
            const int f = local_edge(t2, uw.a, uw.b);
            const VertexId q = tris_[t2].v[f];
            if (p == kGhostVertex || q == kGhostVertex) {
                crossing.push_back(uw);
                continue;
            }
            // flippable only when the surrounding quad is strictly convex
            if (orient2d(pos_[p], pos_[uw.a], pos_[q]) <= 0 ||
                orient2d(pos_[p], pos_[q], pos_[uw.b]) <= 0) {
                crossing.push_back(uw);
                continue;
            }
            flip(t, e);
            if (proper_cross(pc, ps, pos_[p], pos_[q]))
                crossing.push_back(Edge{p, q});
            else
                fresh.push_back(Edge{p, q});
        }

        if (!edge_exists(cur, stop))
            throw TopologyError("insert_constraint: carved edge missing after flips");
        set_constrained(cur, stop, true);

        std::vector<std::pair<TriId, std::uint64_t>> stack;
        for (const Edge& ne : fresh) {
            const auto de = find_directed_edge(ne.a, ne.b);
            if (!de) continue;
            stack.emplace_back(de->first, tris_[de->first].serial);
        }
        delaunay_flip_pass(stack);

        cur = stop;
    }
}

// ---------------------------------------------------------------------------
// audit

void TriMesh::audit(bool check_delaunay) const {
    for (TriId t = 0; t < tris_.size(); ++t) {
        const Triangle& T = tris_[t];
        if (!T.alive) continue;
        int ghosts_here = 0;
        for (int i = 0; i < 3; ++i) {
            if (T.v[i] == kGhostVertex) { ++ghosts_here; continue; }
            if (T.v[i] >= pos_.size() || !v_alive_[T.v[i]])
                throw TopologyError("audit: triangle references dead vertex");
        }
        if (ghosts_here > 1) throw TopologyError("audit: triangle with multiple ghost vertices");

        if (ghosts_here == 0) {
            if (orient2d(pos_[T.v[0]], pos_[T.v[1]], pos_[T.v[2]]) <= 0)
                throw TopologyError("audit: non-CCW triangle");
        } else {
            const int g = local_index(t, kGhostVertex);
            const TriId real_nb = T.nbr[g];
            if (real_nb == kNoTriangle || tri_is_ghost(real_nb))
                throw TopologyError("audit: ghost real edge lacks a real neighbor");
            for (int e = 0; e < 3; ++e) {
                if (e == g) continue;
                if (!tri_is_ghost(T.nbr[e]))
                    throw TopologyError("audit: ghost side neighbor is not a ghost");
            }
        }
        for (int e = 0; e < 3; ++e) {
            const TriId nb = T.nbr[e];
            if (nb == kNoTriangle) throw TopologyError("audit: open adjacency");
            if (!tris_[nb].alive) throw TopologyError("audit: dead neighbor");
            const VertexId a = T.v[(e + 1) % 3];
            const VertexId b = T.v[(e + 2) % 3];
            const int f = local_edge(nb, a, b);
            if (f < 0) throw TopologyError("audit: neighbor does not share edge");
            if (tris_[nb].nbr[f] != t) throw TopologyError("audit: asymmetric adjacency");
        }
    }

    for (VertexId v = 0; v < pos_.size(); ++v) {
        if (!v_alive_[v]) continue;
        const TriId t = v2t_[v];
        if (t == kNoTriangle || !tris_[t].alive || local_index(t, v) < 0)
            throw TopologyError("audit: bad v2t");
    }

    for (const Edge& e : constrained_edges_sorted()) {
        if (!v_alive_[e.a] || !v_alive_[e.b])
            throw TopologyError("audit: constrained edge on dead vertex");
        if (!edge_exists(e.a, e.b))
            throw TopologyError("audit: constrained edge missing from mesh");
    }

    if (!check_delaunay) return;

    for (TriId t = 0; t < tris_.size(); ++t) {
        if (!tris_[t].alive || tri_is_ghost(t)) continue;
        const Triangle& T = tris_[t];
        for (int e = 0; e < 3; ++e) {
            const TriId nb = T.nbr[e];
            if (nb < t) continue;  // each edge once
            if (tri_is_ghost(nb)) continue;
            const VertexId a = T.v[(e + 1) % 3];
            const VertexId b = T.v[(e + 2) % 3];
            if (is_constrained(a, b)) continue;
            const int f = local_edge(nb, a, b);
            const VertexId q = tris_[nb].v[f];
            if (incircle(pos_[T.v[0]], pos_[T.v[1]], pos_[T.v[2]], pos_[q]) > 0)
                throw TopologyError("audit: local Delaunay violation");
        }
    }
}

} // namespace pfem
