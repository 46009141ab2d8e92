#pragma once

#include <cmath>
#include <optional>

namespace pfem {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2 operator-() const { return {-x, -y}; }
    bool operator==(const Vec2&) const = default;
};

using Point2 = Vec2;

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm2(Vec2 a) { return dot(a, a); }
inline double norm(Vec2 a) { return std::sqrt(norm2(a)); }
inline double dist(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }  // +90 degree rotation

/// Exact sign of twice the signed area of triangle (a, b, c).
/// +1 when CCW, -1 when CW, 0 when exactly collinear. Filtered fast path
/// with an expansion-arithmetic exact fallback; throws DomainError on
/// non-finite input.
int orient2d(Point2 a, Point2 b, Point2 c);

/// Exact in-circumcircle test. Requires (a, b, c) in CCW order; returns +1
/// when d lies strictly inside the circumcircle of (a, b, c), -1 strictly
/// outside, 0 exactly on it.
int incircle(Point2 a, Point2 b, Point2 c, Point2 d);

/// Floating-point value of twice the signed area (not exact; use orient2d
/// for decisions).
inline double signed_area2(Point2 a, Point2 b, Point2 c) {
    return cross(b - a, c - a);
}

struct TriMetrics {
    Point2 circumcenter;
    double circumradius = 0.0;   // R_e
    double inradius = 0.0;       // r_e
    double quality = 0.0;        // gamma_e = r_e / R_e, in (0, 0.5]
    double signed_area = 0.0;    // > 0 for CCW input
};

/// Circumcenter, circumradius, inradius, quality ratio and area of a CCW
/// triangle. Throws DegenerateGeometryError when orient2d(a,b,c) == 0.
TriMetrics tri_metrics(Point2 a, Point2 b, Point2 c);

struct SegmentHit {
    double t = 0.0;   // parameter along p0->p1, in [0, 1]
    Point2 point;
};

/// Earliest intersection of segment p0->p1 with segment q0->q1, if any.
/// Collinear overlaps report the smallest valid t (first contact).
std::optional<SegmentHit> segment_intersection(Point2 p0, Point2 p1,
                                               Point2 q0, Point2 q1);

} // namespace pfem
