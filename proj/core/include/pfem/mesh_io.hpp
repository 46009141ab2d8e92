#pragma once

#include "pfem/domain_shape.hpp"
#include "pfem/flow_solver.hpp"
#include "pfem/triangulation.hpp"

#include <iosfwd>

namespace pfem {

/// ASCII mesh snapshot: a header line, a vertex table (id x y role ux uy p)
/// and a triangle table (v0 v1 v2 fluid). Vertex ids are the stable mesh ids.
void write_mesh_snapshot(std::ostream& os, const TriMesh& mesh, const FluidDomain& domain,
                         const FlowState& state);

/// Boundary loops as CSV polylines: loop id, label, vertex id, x, y.
void write_loops_csv(std::ostream& os, const TriMesh& mesh, const FluidDomain& domain);

} // namespace pfem
