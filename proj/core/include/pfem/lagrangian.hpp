#pragma once

#include "pfem/domain_shape.hpp"
#include "pfem/flow_solver.hpp"
#include "pfem/particle_set.hpp"
#include "pfem/size_field.hpp"
#include "pfem/triangulation.hpp"

#include <functional>
#include <span>
#include <vector>

namespace pfem {

struct WallSegment {
    Point2 a;
    Point2 b;
    Vec2 outward_normal;  // unit, pointing out of the fluid side
};

struct WallGeometry {
    std::vector<WallSegment> segments;
    std::vector<VertexId> control_nodes;

    /// Nearest wall segment within `tol` of x, or -1.
    int on_segment(Point2 x, double tol) const;
    /// Snaps x exactly onto segment s (axis-aligned segments snap the fixed
    /// coordinate bit-exactly).
    Point2 snap(Point2 x, int s) const;
};

/// Explicit position update x += u * dt for every non-control particle.
void advance_positions(ParticleSet& particles, double dt);

/// One classical fourth-order Runge-Kutta step of an analytic velocity field
/// (kinematic scenarios); control nodes stay put.
void advance_positions_rk4(ParticleSet& particles,
                           const std::function<Vec2(Point2, double)>& field, double t,
                           double dt);

struct ReprojectResult {
    int corrected = 0;
};

/// Moves every particle whose previous->current segment crossed a wall back
/// to the first intersection, snaps it onto the wall, zeroes the normal
/// velocity component and marks it a wall node. Rechecked once against the
/// remaining walls (corner case).
ReprojectResult reproject_wall_crossers(ParticleSet& particles,
                                        std::span<const Point2> previous_positions,
                                        const WallGeometry& walls, double h_fs);

/// Velocities for freshly inserted nodes by linear interpolation on the
/// previous step's deformed mesh; positions outside the old fluid fall back
/// to the nearest old node within twice the local target size, farther
/// raises ProjectionError (a domain-detection bug tripwire).
std::vector<Vec2> project_fields(std::span<const VertexId> new_nodes,
                                 const TriMesh& old_mesh, const FluidDomain& old_domain,
                                 const FlowState& old_state,
                                 const ParticleSet& new_particles, const SizeField& sf);

} // namespace pfem
