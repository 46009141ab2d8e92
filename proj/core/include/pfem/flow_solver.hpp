#pragma once

#include "pfem/domain_shape.hpp"
#include "pfem/triangulation.hpp"

#include <Eigen/Sparse>

#include <utility>
#include <vector>

namespace pfem {

struct PhysicalParams {
    double rho = 1000.0;   // fluid density
    double mu = 1.0e-3;    // dynamic viscosity
    Vec2 gravity{0.0, -9.81};
    double sigma_st = 0.0;     // surface tension coefficient on cavity interfaces
    double rho_cavity = 0.0;   // density of the unresolved fluid inside bubbles
    double p_ext = 0.0;        // exterior pressure on the external free surface
    bool surface_tension_external = false;  // apply kappa*sigma on external loops
    bool wall_no_slip = false;              // pin wall nodes fully (wall-model variant)
};

struct FlowState {
    std::vector<Vec2> velocity;          // per vertex slot
    std::vector<double> pressure;        // per vertex slot
    std::vector<double> bubble_pressure; // per bubble ordinal

    void resize(std::size_t n) {
        velocity.resize(n, Vec2{});
        pressure.resize(n, 0.0);
    }
};

struct SolveReport {
    double linear_residual = 0.0;  // achieved relative residual of the solve
    double divergence_l2 = 0.0;    // sqrt(sum_e A_e (div u)_e^2)
    std::vector<double> bubble_flux;  // discrete boundary flux per bubble
    int picard_iterations = 1;
    bool pressure_pinned = false;
    VertexId pinned_vertex = kGhostVertex;
};

/// Signed curvature at each loop vertex: the inverse radius of the circle
/// through (previous, vertex, next), positive when the osculating center
/// lies on the non-fluid side (a circular bubble has kappa = +1/R).
/// Collinear triples give 0.
std::vector<double> loop_curvature(const TriMesh& mesh, const BoundaryLoop& loop);

/// Staged assembly of the Lagrangian incompressible step. Exposed so the
/// boundary-condition stages can be exercised in isolation; assemble_and_solve
/// is the one-call entry point.
class FlowAssembler {
public:
    enum class NodeKind : std::uint8_t {
        not_fluid,   // no degrees of freedom (not part of the fluid mesh)
        free,        // two velocity dofs
        tangential,  // one velocity dof along the wall tangent (slip)
        pinned,      // velocity fixed to zero (control node, corner, no-slip wall)
    };
    struct NodeDofs {
        NodeKind kind = NodeKind::not_fluid;
        Vec2 tangent;       // unit, valid for tangential nodes
        Vec2 wall_normal;   // unit, valid for tangential nodes
        int u_dof = -1;     // first velocity dof (x or tangential)
        int p_dof = -1;     // pressure dof (every fluid node has one)
    };

    FlowAssembler(const TriMesh& mesh, const FluidDomain& domain,
                  const PhysicalParams& phys, double dt);

    /// Momentum (mass, viscous, pressure gradient, body force) and PSPG
    /// continuity over the fluid triangles.
    void add_momentum_and_continuity(const FlowState& prev);
    /// Exterior-pressure traction on external free-surface edges (plus the
    /// optional external kappa*sigma term).
    void add_free_surface_traction();
    /// Cavity traction (buoyancy + surface tension + multiplier) on bubble
    /// interface edges and one discrete flux constraint row per bubble.
    void add_bubble_conditions();

    std::pair<FlowState, SolveReport> solve(const FlowState& prev);

    const NodeDofs& node_dofs(VertexId v) const { return dofs_[v]; }
    int velocity_dof_count() const { return n_udofs_; }
    int pressure_dof_count() const { return n_pdofs_; }
    int bubble_count() const { return n_bubbles_; }
    int system_size() const { return n_udofs_ + n_pdofs_ + n_bubbles_; }
    const std::vector<Eigen::Triplet<double>>& triplets() const { return triplets_; }
    const Eigen::VectorXd& rhs() const { return rhs_; }

private:
    const TriMesh& mesh_;
    const FluidDomain& domain_;
    const PhysicalParams& phys_;
    double dt_;
    std::vector<NodeDofs> dofs_;
    int n_udofs_ = 0;
    int n_pdofs_ = 0;
    int n_bubbles_ = 0;
    std::vector<Eigen::Triplet<double>> triplets_;
    Eigen::VectorXd rhs_;
    bool needs_pressure_pin_ = false;
    VertexId pin_vertex_ = kGhostVertex;

    void classify_nodes();
    // per-node velocity test/trial directions (1 or 2 of them)
    int node_directions(VertexId v, Vec2 dir[2], int dof[2]) const;
    void add_u_u(VertexId a, VertexId b, double cxx, double cyy);
    void add_u_u_block(VertexId a, VertexId b, const double m[2][2]);
    void add_u_scalar_col(VertexId a, Vec2 coeff, int col);
    void add_scalar_row_u(int row, VertexId b, Vec2 coeff);
    void add_rhs_u(VertexId a, Vec2 f);
};

/// One backward-Euler Lagrangian step: assembles the PSPG-stabilized system
/// with slip walls, free-surface traction and per-bubble incompressibility
/// multipliers, and solves it with a sparse direct factorization.
std::pair<FlowState, SolveReport> assemble_and_solve(const TriMesh& mesh,
                                                     const FluidDomain& domain,
                                                     const FlowState& prev,
                                                     const PhysicalParams& phys, double dt);

} // namespace pfem
