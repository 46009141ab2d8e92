#include "pfem/flow_solver.hpp"
#include "pfem/error.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pfem {

namespace {
constexpr double kParallelTol = 0.99984769515639127;  // cos(1 degree)
}

std::vector<double> loop_curvature(const TriMesh& mesh, const BoundaryLoop& loop) {
    const std::size_t n = loop.vertices.size();
    if (n < 3) throw TopologyError("loop_curvature: loop with fewer than 3 vertices");
    std::vector<double> kappa(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const Point2 p = mesh.position(loop.vertices[(k + n - 1) % n]);
        const Point2 q = mesh.position(loop.vertices[k]);
        const Point2 r = mesh.position(loop.vertices[(k + 1) % n]);
        const double area2 = signed_area2(p, q, r);
        if (area2 == 0.0) continue;
        const double l1 = dist(p, q), l2 = dist(q, r), l3 = dist(r, p);
        // fluid travels with the region on its left, so a right turn means
        // the osculating center sits on the non-fluid side: kappa > 0
        kappa[k] = -2.0 * area2 / (l1 * l2 * l3);
    }
    return kappa;
}

FlowAssembler::FlowAssembler(const TriMesh& mesh, const FluidDomain& domain,
                             const PhysicalParams& phys, double dt)
    : mesh_(mesh), domain_(domain), phys_(phys), dt_(dt) {
    if (dt_ <= 0.0) throw DomainError("flow solve: dt must be positive");
    classify_nodes();
}

void FlowAssembler::classify_nodes() {
    const std::size_t nv = mesh_.vertex_capacity();
    dofs_.assign(nv, NodeDofs{});

    // fluid nodes = vertices of fluid triangles
    std::vector<char> is_fluid_node(nv, 0);
    for (TriId t = 0; t < mesh_.triangle_capacity(); ++t) {
        if (!mesh_.tri_alive(t) || mesh_.tri_is_ghost(t) || !domain_.fluid(t)) continue;
        for (VertexId v : mesh_.tri(t).v) is_fluid_node[v] = 1;
    }

    // wall directions per node, from wall-kind boundary edges
    struct WallInfo {
        int n_dirs = 0;
        Vec2 normal[2];
    };
    std::vector<WallInfo> wall(nv);
    bool any_external_free_surface = false;
    for (const BoundaryLoop& loop : domain_.loops) {
        const std::size_t n = loop.vertices.size();
        for (std::size_t k = 0; k < n; ++k) {
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            if (loop.edge_kinds[k] == EdgeKind::free_surface) {
                if (loop.edge_region[k] < 0) any_external_free_surface = true;
                continue;
            }
            const Vec2 d = mesh_.position(b) - mesh_.position(a);
            const double len = norm(d);
            if (len == 0.0) continue;
            const Vec2 nrm{d.y / len, -d.x / len};
            for (VertexId v : {a, b}) {
                WallInfo& wi = wall[v];
                bool merged = false;
                for (int i = 0; i < wi.n_dirs && i < 2; ++i) {
                    if (std::abs(dot(wi.normal[i], nrm)) >= kParallelTol) merged = true;
                }
                if (!merged) {
                    if (wi.n_dirs < 2) wi.normal[wi.n_dirs] = nrm;
                    ++wi.n_dirs;
                }
            }
        }
    }
    needs_pressure_pin_ = !any_external_free_surface;

    int u = 0, p = 0;
    for (VertexId v = 0; v < nv; ++v) {
        if (!is_fluid_node[v] || !mesh_.vertex_alive(v)) continue;
        NodeDofs& nd = dofs_[v];
        nd.p_dof = p++;
        const bool is_control = mesh_.role(v) == NodeRole::control;
        const WallInfo& wi = wall[v];
        if (is_control || wi.n_dirs >= 2 || (phys_.wall_no_slip && wi.n_dirs > 0)) {
            nd.kind = NodeKind::pinned;
            continue;
        }
        if (wi.n_dirs == 1) {
            nd.kind = NodeKind::tangential;
            nd.wall_normal = wi.normal[0];
            nd.tangent = perp(wi.normal[0]);
            nd.u_dof = u;
            u += 1;
            continue;
        }
        nd.kind = NodeKind::free;
        nd.u_dof = u;
        u += 2;
    }
    n_udofs_ = u;
    n_pdofs_ = p;
    n_bubbles_ = domain_.bubble_count;
    if (n_pdofs_ == 0) throw SolverError("flow solve: empty fluid domain");

    if (needs_pressure_pin_) {
        for (VertexId v = 0; v < nv; ++v)
            if (dofs_[v].p_dof >= 0) { pin_vertex_ = v; break; }
    }

    rhs_ = Eigen::VectorXd::Zero(system_size());
}

int FlowAssembler::node_directions(VertexId v, Vec2 dir[2], int dof[2]) const {
    const NodeDofs& nd = dofs_[v];
    switch (nd.kind) {
        case NodeKind::free:
            dir[0] = {1, 0};
            dir[1] = {0, 1};
            dof[0] = nd.u_dof;
            dof[1] = nd.u_dof + 1;
            return 2;
        case NodeKind::tangential:
            dir[0] = nd.tangent;
            dof[0] = nd.u_dof;
            return 1;
        default:
            return 0;
    }
}

void FlowAssembler::add_u_u(VertexId a, VertexId b, double cxx, double cyy) {
    Vec2 da[2], db[2];
    int fa[2], fb[2];
    const int na = node_directions(a, da, fa);
    const int nb = node_directions(b, db, fb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double val = cxx * da[i].x * db[j].x + cyy * da[i].y * db[j].y;
            if (val != 0.0) triplets_.emplace_back(fa[i], fb[j], val);
        }
}

void FlowAssembler::add_u_u_block(VertexId a, VertexId b, const double m[2][2]) {
    Vec2 da[2], db[2];
    int fa[2], fb[2];
    const int na = node_directions(a, da, fa);
    const int nb = node_directions(b, db, fb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < nb; ++j) {
            const double val = da[i].x * (m[0][0] * db[j].x + m[0][1] * db[j].y) +
                               da[i].y * (m[1][0] * db[j].x + m[1][1] * db[j].y);
            if (val != 0.0) triplets_.emplace_back(fa[i], fb[j], val);
        }
}

void FlowAssembler::add_u_scalar_col(VertexId a, Vec2 coeff, int col) {
    Vec2 da[2];
    int fa[2];
    const int na = node_directions(a, da, fa);
    for (int i = 0; i < na; ++i) {
        const double val = dot(da[i], coeff);
        if (val != 0.0) triplets_.emplace_back(fa[i], col, val);
    }
}

void FlowAssembler::add_scalar_row_u(int row, VertexId b, Vec2 coeff) {
    Vec2 db[2];
    int fb[2];
    const int nb = node_directions(b, db, fb);
    for (int j = 0; j < nb; ++j) {
        const double val = dot(db[j], coeff);
        if (val != 0.0) triplets_.emplace_back(row, fb[j], val);
    }
}

void FlowAssembler::add_rhs_u(VertexId a, Vec2 f) {
    Vec2 da[2];
    int fa[2];
    const int na = node_directions(a, da, fa);
    for (int i = 0; i < na; ++i) rhs_[fa[i]] += dot(da[i], f);
}

void FlowAssembler::add_momentum_and_continuity(const FlowState& prev) {
    const int pbase = n_udofs_;
    const double rho = phys_.rho, mu = phys_.mu;
    const Vec2 g = phys_.gravity;

    for (TriId t = 0; t < mesh_.triangle_capacity(); ++t) {
        if (!mesh_.tri_alive(t) || mesh_.tri_is_ghost(t) || !domain_.fluid(t)) continue;
        const auto& T = mesh_.tri(t);
        const Point2 x0 = mesh_.position(T.v[0]);
        const Point2 x1 = mesh_.position(T.v[1]);
        const Point2 x2 = mesh_.position(T.v[2]);
        const double area = 0.5 * signed_area2(x0, x1, x2);
        if (!(area > 0.0) || !std::isfinite(area)) {
            std::ostringstream os;
            os << "assembly: non-positive or non-finite area in element " << t;
            throw AssemblyError(os.str());
        }

        double bg[3], cg[3];
        const Point2 xs[3] = {x0, x1, x2};
        for (int i = 0; i < 3; ++i) {
            const Point2 xj = xs[(i + 1) % 3];
            const Point2 xk = xs[(i + 2) % 3];
            bg[i] = (xj.y - xk.y) / (2.0 * area);
            cg[i] = (xk.x - xj.x) / (2.0 * area);
        }

        const TriMetrics m = tri_metrics(x0, x1, x2);
        const double he = 2.0 * m.circumradius;
        const double tau = 1.0 / std::hypot(2.0 * rho / dt_, 12.0 * mu / (he * he));
        if (!std::isfinite(tau)) {
            std::ostringstream os;
            os << "assembly: non-finite stabilization in element " << t;
            throw AssemblyError(os.str());
        }

        for (int i = 0; i < 3; ++i) {
            const VertexId a = T.v[i];
            for (int j = 0; j < 3; ++j) {
                const VertexId b = T.v[j];
                const Vec2 ub_prev = b < prev.velocity.size() ? prev.velocity[b] : Vec2{};

                // lumped mass: grid-scale velocity modes that a consistent
                // matrix sustains would froth the free surface
                const double mass = i == j ? rho / dt_ * area / 3.0 : 0.0;
                if (mass != 0.0) add_u_u(a, b, mass, mass);
                // full stress form 2 mu eps(u):eps(v): the natural boundary
                // condition is then the true traction sigma . n
                const double visc[2][2] = {
                    {mu * area * (2.0 * bg[i] * bg[j] + cg[i] * cg[j]),
                     mu * area * (cg[i] * bg[j])},
                    {mu * area * (bg[i] * cg[j]),
                     mu * area * (bg[i] * bg[j] + 2.0 * cg[i] * cg[j])}};
                add_u_u_block(a, b, visc);
                if (mass != 0.0) add_rhs_u(a, ub_prev * mass);

                add_u_scalar_col(a, Vec2{bg[i], cg[i]} * (-area / 3.0),
                                 pbase + dofs_[b].p_dof);

                add_scalar_row_u(pbase + dofs_[a].p_dof, b,
                                 Vec2{bg[j], cg[j]} * (area / 3.0));

                const double pp = tau * area * (bg[i] * bg[j] + cg[i] * cg[j]);
                triplets_.emplace_back(pbase + dofs_[a].p_dof, pbase + dofs_[b].p_dof, pp);
                const Vec2 pspg_u = Vec2{bg[i], cg[i]} * (tau * rho / dt_ * area / 3.0);
                add_scalar_row_u(pbase + dofs_[a].p_dof, b, pspg_u);
                rhs_[pbase + dofs_[a].p_dof] += dot(pspg_u, ub_prev);
            }
            add_rhs_u(a, g * (rho * area / 3.0));
            rhs_[pbase + dofs_[a].p_dof] += tau * area * rho * (bg[i] * g.x + cg[i] * g.y);
        }
    }
}

void FlowAssembler::add_free_surface_traction() {
    for (const BoundaryLoop& loop : domain_.loops) {
        const std::size_t n = loop.vertices.size();
        bool any_external_fs = false;
        for (std::size_t k = 0; k < n; ++k)
            any_external_fs |= loop.edge_kinds[k] == EdgeKind::free_surface &&
                               loop.edge_region[k] < 0;
        if (!any_external_fs) continue;

        std::vector<double> kappa;
        if (phys_.surface_tension_external && phys_.sigma_st > 0.0)
            kappa = loop_curvature(mesh_, loop);
        const LoopGeometry geo = loop_geometry(mesh_, loop);
        for (std::size_t k = 0; k < n; ++k) {
            if (loop.edge_kinds[k] != EdgeKind::free_surface) continue;
            if (loop.edge_region[k] >= 0) continue;  // bubble edges handled separately
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            const double len = geo.edge_lengths[k];
            const Vec2 nrm = geo.outward_normals[k];
            // traction -(p_ext - sigma kappa) n integrated against N_a, N_b
            const double qa = phys_.p_ext - (kappa.empty() ? 0.0 : phys_.sigma_st * kappa[k]);
            const double qb = phys_.p_ext -
                              (kappa.empty() ? 0.0 : phys_.sigma_st * kappa[(k + 1) % n]);
            add_rhs_u(a, nrm * (-len * (2.0 * qa + qb) / 6.0));
            add_rhs_u(b, nrm * (-len * (qa + 2.0 * qb) / 6.0));
        }
    }
}

void FlowAssembler::add_bubble_conditions() {
    if (n_bubbles_ == 0) return;
    const int bbase = n_udofs_ + n_pdofs_;
    const double g_y = phys_.gravity.y;

    for (const BoundaryLoop& loop : domain_.loops) {
        const std::size_t n = loop.vertices.size();
        bool touches_bubble = false;
        for (std::size_t k = 0; k < n; ++k) touches_bubble |= loop.edge_region[k] >= 0;
        if (!touches_bubble) continue;

        const std::vector<double> kappa = loop_curvature(mesh_, loop);
        const LoopGeometry geo = loop_geometry(mesh_, loop);
        for (std::size_t k = 0; k < n; ++k) {
            const int bub = loop.edge_region[k];
            if (bub < 0) continue;
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            const double len = geo.edge_lengths[k];
            const Vec2 nrm = geo.outward_normals[k];
            // explicit cavity pressure: rho_c g_y z - sigma kappa  (z up)
            const double qa =
                phys_.rho_cavity * g_y * mesh_.position(a).y - phys_.sigma_st * kappa[k];
            const double qb = phys_.rho_cavity * g_y * mesh_.position(b).y -
                              phys_.sigma_st * kappa[(k + 1) % n];
            add_rhs_u(a, nrm * (-len * (2.0 * qa + qb) / 6.0));
            add_rhs_u(b, nrm * (-len * (qa + 2.0 * qb) / 6.0));
            // the multiplier part of the traction goes to the matrix
            add_u_scalar_col(a, nrm * (len / 2.0), bbase + bub);
            add_u_scalar_col(b, nrm * (len / 2.0), bbase + bub);
            // flux constraint row: sum over edges of len * (u_a + u_b)/2 . n = 0
            add_scalar_row_u(bbase + bub, a, nrm * (len / 2.0));
            add_scalar_row_u(bbase + bub, b, nrm * (len / 2.0));
        }
    }
}

std::pair<FlowState, SolveReport> FlowAssembler::solve(const FlowState& prev) {
    const int pbase = n_udofs_;
    const int N = system_size();

    // pressure gauge for fully wall-bounded fluid: pin one pressure node
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(triplets_.size() + 1);
    const int pin_row = needs_pressure_pin_ ? pbase + dofs_[pin_vertex_].p_dof : -1;
    for (const auto& tr : triplets_) {
        if (tr.row() == pin_row) continue;
        trips.push_back(tr);
    }
    if (pin_row >= 0) {
        trips.emplace_back(pin_row, pin_row, 1.0);
        rhs_[pin_row] = 0.0;
    }

    Eigen::SparseMatrix<double> A(N, N);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();

    for (int i = 0; i < rhs_.size(); ++i)
        if (!std::isfinite(rhs_[i])) throw AssemblyError("assembly: non-finite right-hand side");

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) {
        std::string cause = "sparse factorization failed";
        if (needs_pressure_pin_)
            cause += " (wall-bounded domain: check the pressure gauge and wall constraints)";
        else
            cause += " (check free-surface traction rows and wall constraints)";
        throw SolverError("flow solve: " + cause);
    }
    const Eigen::VectorXd x = lu.solve(rhs_);
    if (lu.info() != Eigen::Success) throw SolverError("flow solve: back substitution failed");

    const double bnorm = rhs_.norm();
    const double residual = bnorm > 0 ? (A * x - rhs_).norm() / bnorm : (A * x).norm();

    FlowState next = prev;
    next.resize(mesh_.vertex_capacity());
    for (VertexId v = 0; v < mesh_.vertex_capacity(); ++v) {
        const NodeDofs& nd = dofs_[v];
        if (nd.p_dof < 0) continue;  // not a fluid node: velocity untouched
        next.pressure[v] = x[pbase + nd.p_dof];
        switch (nd.kind) {
            case NodeKind::free:
                next.velocity[v] = Vec2{x[nd.u_dof], x[nd.u_dof + 1]};
                break;
            case NodeKind::tangential:
                next.velocity[v] = nd.tangent * x[nd.u_dof];
                break;
            case NodeKind::pinned:
                next.velocity[v] = Vec2{0, 0};
                break;
            default:
                break;
        }
    }
    next.bubble_pressure.assign(static_cast<std::size_t>(n_bubbles_), 0.0);
    for (int b = 0; b < n_bubbles_; ++b)
        next.bubble_pressure[static_cast<std::size_t>(b)] = x[n_udofs_ + n_pdofs_ + b];

    SolveReport report;
    report.linear_residual = residual;
    report.picard_iterations = 1;
    report.pressure_pinned = needs_pressure_pin_;
    report.pinned_vertex = pin_vertex_;

    double div2 = 0.0;
    for (TriId t = 0; t < mesh_.triangle_capacity(); ++t) {
        if (!mesh_.tri_alive(t) || mesh_.tri_is_ghost(t) || !domain_.fluid(t)) continue;
        const auto& T = mesh_.tri(t);
        const Point2 x0 = mesh_.position(T.v[0]);
        const Point2 x1 = mesh_.position(T.v[1]);
        const Point2 x2 = mesh_.position(T.v[2]);
        const double area = 0.5 * signed_area2(x0, x1, x2);
        const Point2 xs[3] = {x0, x1, x2};
        double div = 0.0;
        for (int i = 0; i < 3; ++i) {
            const Point2 xj = xs[(i + 1) % 3];
            const Point2 xk = xs[(i + 2) % 3];
            const Vec2 gradN{(xj.y - xk.y) / (2.0 * area), (xk.x - xj.x) / (2.0 * area)};
            div += dot(gradN, next.velocity[T.v[i]]);
        }
        div2 += area * div * div;
    }
    report.divergence_l2 = std::sqrt(div2);

    report.bubble_flux.assign(static_cast<std::size_t>(n_bubbles_), 0.0);
    for (const BoundaryLoop& loop : domain_.loops) {
        const std::size_t n = loop.vertices.size();
        bool touches = false;
        for (std::size_t k = 0; k < n; ++k) touches |= loop.edge_region[k] >= 0;
        if (!touches) continue;
        const LoopGeometry geo = loop_geometry(mesh_, loop);
        for (std::size_t k = 0; k < n; ++k) {
            const int bub = loop.edge_region[k];
            if (bub < 0) continue;
            const VertexId a = loop.vertices[k];
            const VertexId b = loop.vertices[(k + 1) % n];
            const Vec2 um = (next.velocity[a] + next.velocity[b]) * 0.5;
            report.bubble_flux[static_cast<std::size_t>(bub)] +=
                geo.edge_lengths[k] * dot(um, geo.outward_normals[k]);
        }
    }
    return {std::move(next), std::move(report)};
}

std::pair<FlowState, SolveReport> assemble_and_solve(const TriMesh& mesh,
                                                     const FluidDomain& domain,
                                                     const FlowState& prev,
                                                     const PhysicalParams& phys, double dt) {
    FlowAssembler assembler(mesh, domain, phys, dt);
    assembler.add_momentum_and_continuity(prev);
    assembler.add_free_surface_traction();
    assembler.add_bubble_conditions();
    return assembler.solve(prev);
}

} // namespace pfem
