#pragma once

#include "pfem/geometry.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace pfem {

struct SizeFieldParams {
    double h_fs = 0.02;      // target size at the free surface
    double h_max = 0.08;     // cap far from the surface
    double gradation = 0.3;  // growth per unit distance
};

/// Target mesh size h(x) driven by distance to the advected free surface:
/// h(x) = min(h_max, h_fs + gradation * d(x, samples)), with the samples
/// being the free-surface vertices advected by u*dt. Immutable after build;
/// concurrent queries are safe.
class SizeField {
public:
    /// Advects each surface vertex by u*dt and indexes the result. An empty
    /// surface yields the uniform field h = h_max.
    static SizeField build_from_surface(std::span<const Point2> surface_vertices,
                                        std::span<const Vec2> velocities, double dt,
                                        const SizeFieldParams& params);
    static SizeField uniform(double h);

    double eval(Point2 x) const;
    /// Time-step bound h_fs / max_speed (+inf when the flow is at rest).
    double cfl_dt(double max_speed) const;

    bool is_uniform() const { return samples_.empty(); }
    const SizeFieldParams& params() const { return params_; }
    double h_fs() const { return params_.h_fs; }
    double h_max() const { return params_.h_max; }
    std::span<const Point2> samples() const { return samples_; }

    /// Distance from x to the nearest surface sample (+inf when uniform).
    double surface_distance(Point2 x) const;

private:
    struct Node {
        Point2 p;
        int left = -1;
        int right = -1;
        std::uint8_t axis = 0;
    };

    SizeFieldParams params_;
    std::vector<Point2> samples_;
    std::vector<Node> nodes_;
    int root_ = -1;

    int build_node(std::vector<std::uint32_t>& idx, std::size_t lo, std::size_t hi, int depth);
    void nearest(int node, Point2 q, double& best2) const;
};

} // namespace pfem
