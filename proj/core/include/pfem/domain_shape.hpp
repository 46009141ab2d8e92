#pragma once

#include "pfem/size_field.hpp"
#include "pfem/triangulation.hpp"

#include <vector>

namespace pfem {

enum class LoopLabel : std::uint8_t { wall, external_free_surface, bubble };
enum class EdgeKind : std::uint8_t { wall, free_surface };

/// Closed boundary walk with the fluid on the left of the travel direction.
/// External loops run counterclockwise (positive signed area); loops around
/// holes run clockwise. Edge k joins vertices[k] -> vertices[(k+1) % n].
struct BoundaryLoop {
    LoopLabel label = LoopLabel::external_free_surface;
    std::vector<VertexId> vertices;
    std::vector<EdgeKind> edge_kinds;   // wall edges are the constrained ones
    std::vector<int> edge_region;       // non-fluid side: -1 exterior, else bubble ordinal
    std::vector<TriId> fluid_tris;      // fluid-side triangle per edge
    double signed_area = 0.0;           // shoelace in walk order
    int bubble_index = -1;              // set when label == bubble
};

struct FluidDomain {
    std::vector<std::uint8_t> is_fluid;  // indexed by triangle id (capacity-sized)
    std::vector<BoundaryLoop> loops;
    int bubble_count = 0;
    std::vector<double> bubble_volumes;
    double fluid_volume = 0.0;

    bool fluid(TriId t) const { return t < is_fluid.size() && is_fluid[t] != 0; }
};

struct AlphaCriterion {
    double threshold = 1.2;
    const SizeField* alpha = nullptr;  // alpha(x) := h(x)
};

/// Alpha-shape classification: a triangle is fluid when its circumradius
/// satisfies R_e / alpha(x_e) <= threshold, x_e the circumcenter. Extracts
/// boundary loops; bubble labeling is completed by detect_bubbles.
FluidDomain classify_fluid(const TriMesh& mesh, const AlphaCriterion& crit);

/// Flood-fills non-fluid triangles through unconstrained shared edges;
/// components that reach the hull (ghost layer) are exterior, enclosed ones
/// become bubbles ordered by their minimal boundary vertex id. Fills
/// edge_region, loop labels, bubble volumes.
void detect_bubbles(const TriMesh& mesh, FluidDomain& domain);

/// Re-extracts loops from the current is_fluid flags (used after adaptation);
/// resets bubble labeling, which detect_bubbles then restores.
void extract_boundary_loops(const TriMesh& mesh, FluidDomain& domain);

struct LoopGeometry {
    double enclosed_area = 0.0;              // positive
    std::vector<Vec2> outward_normals;       // unit, out of the fluid, per edge
    std::vector<double> edge_lengths;
};

/// Area, outward normals and lengths of a closed loop. Throws TopologyError
/// on a self-intersecting loop.
LoopGeometry loop_geometry(const TriMesh& mesh, const BoundaryLoop& loop);

/// Sum of fluid triangle areas. Agrees with the signed sum of loop areas.
double fluid_volume(const FluidDomain& domain, const TriMesh& mesh);

} // namespace pfem
