#pragma once

#include "pfem/domain_shape.hpp"
#include "pfem/size_field.hpp"
#include "pfem/triangulation.hpp"

#include <cstdint>
#include <vector>

namespace pfem {

struct RefineParams {
    double gamma_min = 0.35;      // quality floor r_e / R_e
    double size_ratio = 1.0;      // element oversized when R_e > size_ratio * h(x_e)
    // circumradius band (in units of h) inside which the alpha shape accepts
    // triangles; free-surface triangles in this band never receive interior
    // insertions, so transiently claimed air cannot be materialized
    double alpha_band = 1.2;
    double collapse_ratio = 0.6;  // edge too short when length < collapse_ratio * h(mid)
    // No insertion when R_e < r_min_exempt; negative means 0.5 * h_fs.
    double r_min_exempt = -1.0;
    // Termination cap: max_iteration_factor * initial fluid element count.
    std::size_t max_iteration_factor = 50;
};

struct AdaptResult {
    std::vector<VertexId> inserted;
    std::vector<VertexId> removed;
    int circumcenter_insertions = 0;
    int boundary_splits = 0;
    int collapses = 0;
    double worst_quality_before = 1.0;
    double worst_quality_after = 1.0;
};

struct Offender {
    double circumradius = 0.0;
    TriId tri = kNoTriangle;
    std::uint64_t serial = 0;
};

/// Fluid triangles failing the quality or size criterion (and above the
/// insertion-exemption radius), worst (largest circumradius) first; ties by
/// lower triangle id.
std::vector<Offender> worklist(const TriMesh& mesh, const FluidDomain& domain,
                               const SizeField& sf, const RefineParams& params);

/// One coarsening sweep: collapses fluid edges shorter than
/// collapse_ratio * h(midpoint), shortest first. Returns (removed, survivor)
/// pairs in execution order.
std::vector<std::pair<VertexId, VertexId>> coarsen(TriMesh& mesh, FluidDomain& domain,
                                                   const SizeField& sf,
                                                   const RefineParams& params);

/// Quality- and size-driven adaptation of the fluid region: coarsening
/// followed by circumcenter refinement with boundary-edge splitting when a
/// circumcenter is hidden behind a constrained edge. Free-surface edges are
/// constrained for the duration of the pass. Loops and bubble labels in
/// `domain` are re-extracted before returning.
AdaptResult adapt(TriMesh& mesh, FluidDomain& domain, const SizeField& sf,
                  const RefineParams& params);

} // namespace pfem
