#pragma once

#include "pfem/geometry.hpp"
#include "pfem/particle_set.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

namespace pfem {

using TriId = std::uint32_t;
inline constexpr TriId kNoTriangle = 0xFFFFFFFFu;
inline constexpr VertexId kGhostVertex = 0xFFFFFFFFu;

struct Edge {
    VertexId a = kGhostVertex;
    VertexId b = kGhostVertex;
    Edge() = default;
    Edge(VertexId a_, VertexId b_) : a(a_), b(b_) {}
    Edge normalized() const { return a <= b ? *this : Edge{b, a}; }
    bool operator==(const Edge&) const = default;
};

/// Constrained Delaunay triangulation of a point cloud.
///
/// The triangulation always covers the convex hull of its vertices; hull
/// edges are backed by combinatorial ghost triangles (one vertex equal to
/// kGhostVertex) so that every edge has two incident triangles and vertex
/// fans are closed. Ghosts never appear in the public triangle listing.
///
/// Single-writer: mutate from one thread at a time; const queries may run
/// concurrently between mutations.
class TriMesh {
public:
    struct Triangle {
        std::array<VertexId, 3> v{kGhostVertex, kGhostVertex, kGhostVertex};
        // nbr[i] is the triangle across the edge opposite v[i],
        // i.e. the edge (v[i+1], v[i+2]).
        std::array<TriId, 3> nbr{kNoTriangle, kNoTriangle, kNoTriangle};
        std::uint64_t serial = 0;
        bool alive = false;
    };

    struct Location {
        enum class Kind { inside, on_edge, on_vertex, outside };
        Kind kind = Kind::outside;
        TriId tri = kNoTriangle;   // containing real triangle (lowest id on ties);
                                   // for `outside` a ghost triangle near the exit
        int edge = -1;             // local edge index of `tri` for on_edge
        VertexId vertex = kGhostVertex;  // coincident vertex for on_vertex
    };

    struct WalkResult {
        enum class Kind { reached, blocked, exited };
        Kind kind = Kind::exited;
        Location loc;              // valid when reached
        Edge blocking;             // first constrained edge hit when blocked
        TriId blocked_tri = kNoTriangle;  // triangle on the near side of it
    };

    /// Constrained Delaunay triangulation of the cloud. Throws
    /// DuplicatePointError, DegenerateGeometryError (all collinear) or
    /// ConstraintConflictError (crossing constraints).
    static TriMesh build_cdt(const ParticleSet& points,
                             const std::vector<Edge>& constraints);

    // ---- vertices -----------------------------------------------------
    std::size_t vertex_capacity() const { return pos_.size(); }
    std::size_t vertex_count() const { return alive_vertices_; }
    bool vertex_alive(VertexId v) const { return v_alive_[v] != 0; }
    Point2 position(VertexId v) const { return pos_[v]; }
    NodeRole role(VertexId v) const { return role_[v]; }
    void set_role(VertexId v, NodeRole r) { role_[v] = r; }
    /// Deform support only (previous-step interpolation background); no
    /// mesh validity is maintained after moving vertices.
    void set_position(VertexId v, Point2 p) { pos_[v] = p; }
    bool vertex_on_hull(VertexId v) const;
    int vertex_constraint_degree(VertexId v) const { return v_constraint_degree_[v]; }

    // ---- triangles ----------------------------------------------------
    std::size_t triangle_capacity() const { return tris_.size(); }
    const Triangle& tri(TriId t) const { return tris_[t]; }
    bool tri_alive(TriId t) const { return tris_[t].alive; }
    bool tri_is_ghost(TriId t) const;
    /// Neighbor across local edge e, kNoTriangle when it is a ghost.
    TriId neighbor(TriId t, int e) const;
    std::vector<TriId> real_triangles() const;  // alive, ascending id
    std::size_t real_triangle_count() const;
    std::uint64_t serial(TriId t) const { return tris_[t].serial; }
    std::uint64_t serial_counter() const { return next_serial_; }

    // ---- constrained edges ---------------------------------------------
    bool is_constrained(VertexId a, VertexId b) const;
    /// Marks an existing mesh edge as constrained (or clears the mark).
    void set_constrained(VertexId a, VertexId b, bool on);
    std::vector<Edge> constrained_edges_sorted() const;

    // ---- queries --------------------------------------------------------
    Location locate(Point2 p, TriId hint = kNoTriangle) const;
    /// March from the interior of `from` toward `target`: reports the
    /// containing triangle, the first blocking constrained edge, or hull exit.
    WalkResult walk_toward(TriId from, Point2 target) const;
    /// Triangles around v in CCW order (ghosts included), deterministic start.
    std::vector<TriId> star(VertexId v) const;
    /// Triangle having the directed edge a->b, if the edge exists.
    std::optional<std::pair<TriId, int>> find_directed_edge(VertexId a, VertexId b) const;
    bool edge_exists(VertexId a, VertexId b) const;
    /// Circumdisk membership used by insertion; exposed for audits.
    bool in_disk(TriId t, Point2 p) const;

    // ---- operations ------------------------------------------------------
    /// Inserts p, restoring the constrained Delaunay property. Points within
    /// 1e-12 of the located triangle's scale of an existing vertex raise
    /// DuplicatePointError; points outside the hull raise LocationError.
    /// Points on (or within 1e-12 of the local scale of) a constrained edge
    /// split it into two constrained sub-edges.
    VertexId insert_point(Point2 p, TriId hint = kNoTriangle,
                          NodeRole role = NodeRole::interior);
    /// Splits constrained edge e at `at`, producing two constrained
    /// sub-edges through the new vertex.
    VertexId split_constrained_edge(Edge e, Point2 at,
                                    NodeRole role = NodeRole::free_surface);
    /// Collapses edge (a,b); the survivor is chosen by role priority
    /// control > wall > free_surface > interior (ties: lower id). Returns the
    /// survivor, or nullopt when the collapse is rejected (inversion, both
    /// endpoints control, off-chain constrained endpoint, hull rule).
    std::optional<VertexId> collapse_edge(Edge e);

    /// Triangles created or rewritten by the last mutating operation.
    const std::vector<TriId>& last_changed() const { return last_changed_; }
    /// New mesh edges incident to the vertex created by the last insert/split
    /// (endpoint pairs), for refinement length assertions.
    const std::vector<Edge>& last_new_edges() const { return last_new_edges_; }

    /// Full-mesh consistency audit; throws TopologyError on violation.
    void audit(bool check_delaunay = true) const;

private:
    std::vector<Point2> pos_;
    std::vector<NodeRole> role_;
    std::vector<std::uint8_t> v_alive_;
    std::vector<int> v_constraint_degree_;
    std::vector<TriId> v2t_;
    std::vector<Triangle> tris_;
    std::vector<TriId> free_list_;
    std::unordered_set<std::uint64_t> constrained_;
    std::size_t alive_vertices_ = 0;
    std::uint64_t next_serial_ = 1;
    std::vector<TriId> last_changed_;
    std::vector<Edge> last_new_edges_;

    static std::uint64_t ckey(VertexId a, VertexId b);
    VertexId new_vertex(Point2 p, NodeRole role);
    TriId new_tri(VertexId a, VertexId b, VertexId c);
    void kill_tri(TriId t);
    void set_nbr(TriId t, int e, TriId n);
    int local_index(TriId t, VertexId v) const;
    int local_edge(TriId t, VertexId a, VertexId b) const;  // edge opposite index
    void link(TriId t, int e, TriId u, int f);
    void bump(TriId t);

    Location classify_point_in_tri(TriId t, Point2 p) const;
    VertexId cavity_insert(Point2 p, TriId seed, VertexId vp);
    VertexId structural_edge_split(TriId t1, int e1, Point2 at, NodeRole role);
    void delaunay_flip_pass(std::vector<std::pair<TriId, std::uint64_t>>& stack);
    void flip(TriId t, int e);
    void insert_constraint(VertexId i, VertexId j);
    Location brute_locate(Point2 p) const;

    friend class TriMeshTestAccess;
};

} // namespace pfem
