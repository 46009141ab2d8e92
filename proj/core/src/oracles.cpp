#include "pfem/scenario.hpp"
#include "pfem/error.hpp"

#include <cmath>

namespace pfem {

double sloshing_wave_ratio(double t, double nu, double k, double g) {
    const double om = std::sqrt(k * g);
    const double a = 2.0 * nu * k * k;
    const double pre = 1.0 / (1.0 + 4.0 * nu * nu * k * k * k / g);
    return 1.0 - pre * (1.0 - std::exp(-a * t) * (std::cos(om * t) + a * std::sin(om * t) / om));
}

Vec2 vortex_velocity(Point2 x, double t, double period) {
    const double s = std::sin(2.0 * M_PI * t / period);
    const double sx = std::sin(M_PI * x.x);
    const double sy = std::sin(M_PI * x.y);
    return {std::sin(2.0 * M_PI * x.y) * sx * sx * s,
            -std::sin(2.0 * M_PI * x.x) * sy * sy * s};
}

std::optional<double> probe_pressure(const TriMesh& mesh, const FluidDomain& domain,
                                     const FlowState& state, Point2 location) {
    TriMesh::Location loc;
    try {
        loc = mesh.locate(location);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (loc.kind == TriMesh::Location::Kind::outside) return std::nullopt;

    // candidate triangles: the located one plus its neighbors for on-edge /
    // on-vertex hits; the lowest-id fluid candidate wins
    std::vector<TriId> candidates;
    if (loc.tri != kNoTriangle) candidates.push_back(loc.tri);
    if (loc.kind == TriMesh::Location::Kind::on_edge && loc.tri != kNoTriangle) {
        const TriId nb = mesh.neighbor(loc.tri, loc.edge);
        if (nb != kNoTriangle) candidates.push_back(nb);
    }
    if (loc.kind == TriMesh::Location::Kind::on_vertex && loc.vertex != kGhostVertex) {
        for (TriId t : mesh.star(loc.vertex))
            if (!mesh.tri_is_ghost(t)) candidates.push_back(t);
    }
    TriId best = kNoTriangle;
    for (TriId t : candidates)
        if (domain.fluid(t) && (best == kNoTriangle || t < best)) best = t;
    if (best == kNoTriangle) return std::nullopt;

    const auto& T = mesh.tri(best);
    const Point2 a = mesh.position(T.v[0]);
    const Point2 b = mesh.position(T.v[1]);
    const Point2 c = mesh.position(T.v[2]);
    const double den = signed_area2(a, b, c);
    const double wa = signed_area2(location, b, c) / den;
    const double wb = signed_area2(a, location, c) / den;
    const double wc = 1.0 - wa - wb;
    return wa * state.pressure[T.v[0]] + wb * state.pressure[T.v[1]] +
           wc * state.pressure[T.v[2]];
}

} // namespace pfem
