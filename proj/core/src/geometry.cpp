#include "pfem/geometry.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

TriMetrics tri_metrics(Point2 a, Point2 b, Point2 c) {
    const int orientation = orient2d(a, b, c);
    if (orientation == 0)
        throw DegenerateGeometryError("tri_metrics: collinear triangle");

    const Vec2 d1 = b - a;
    const Vec2 d2 = c - a;
    const double den = 2.0 * cross(d1, d2);
    const Vec2 rel{(norm2(d1) * d2.y - norm2(d2) * d1.y) / den,
                   (norm2(d2) * d1.x - norm2(d1) * d2.x) / den};

    TriMetrics m;
    m.signed_area = 0.5 * cross(d1, d2);
    const double area = std::abs(m.signed_area);
    const double s = 0.5 * (dist(a, b) + dist(b, c) + dist(c, a));
    m.inradius = area / s;

    if (std::isfinite(rel.x) && std::isfinite(rel.y)) {
        m.circumcenter = a + rel;
        m.circumradius = norm(rel);
        m.quality = m.inradius / m.circumradius;
        return m;
    }
    // sliver thinner than double precision (exact orientation nonzero, the
    // rounded area zero): saturate, anchor the "center" on the longest edge
    const double lab = dist(a, b), lbc = dist(b, c), lca = dist(c, a);
    if (lab >= lbc && lab >= lca) m.circumcenter = (a + b) * 0.5;
    else if (lbc >= lca) m.circumcenter = (b + c) * 0.5;
    else m.circumcenter = (c + a) * 0.5;
    m.circumradius = 1e300;
    m.quality = 0.0;
    return m;
}

namespace {

// Point p known to lie on the line through (u, v): is it within the segment?
bool on_segment_span(Point2 p, Point2 u, Point2 v) {
    return std::min(u.x, v.x) <= p.x && p.x <= std::max(u.x, v.x) &&
           std::min(u.y, v.y) <= p.y && p.y <= std::max(u.y, v.y);
}

double param_along(Point2 p, Point2 p0, Point2 p1) {
    const Vec2 d = p1 - p0;
    const double t = dot(p - p0, d) / norm2(d);
    return std::clamp(t, 0.0, 1.0);
}

} // namespace

std::optional<SegmentHit> segment_intersection(Point2 p0, Point2 p1,
                                               Point2 q0, Point2 q1) {
    if (p0 == p1) {
        if (q0 == q1) return (p0 == q0) ? std::optional<SegmentHit>({0.0, p0}) : std::nullopt;
        if (orient2d(q0, q1, p0) == 0 && on_segment_span(p0, q0, q1))
            return SegmentHit{0.0, p0};
        return std::nullopt;
    }

    const int o1 = orient2d(q0, q1, p0);
    const int o2 = orient2d(q0, q1, p1);
    const int o3 = orient2d(p0, p1, q0);
    const int o4 = orient2d(p0, p1, q1);

    std::optional<double> best;
    auto consider = [&](double t) {
        if (!best || t < *best) best = t;
    };

    // Proper interior crossing.
    if (o1 * o2 < 0 && o3 * o4 < 0) {
        const double d0 = signed_area2(q0, q1, p0);
        const double d1 = signed_area2(q0, q1, p1);
        consider(std::clamp(d0 / (d0 - d1), 0.0, 1.0));
    }
    // Endpoint-touching and collinear cases.
    if (o1 == 0 && on_segment_span(p0, q0, q1)) consider(0.0);
    if (o2 == 0 && on_segment_span(p1, q0, q1)) consider(1.0);
    if (o3 == 0 && on_segment_span(q0, p0, p1)) consider(param_along(q0, p0, p1));
    if (o4 == 0 && on_segment_span(q1, p0, p1)) consider(param_along(q1, p0, p1));

    if (!best) return std::nullopt;
    return SegmentHit{*best, p0 + (p1 - p0) * *best};
}

} // namespace pfem
