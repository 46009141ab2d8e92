#include "pfem/size_field.hpp"
#include "pfem/error.hpp"

#include <algorithm>
#include <cmath>

namespace pfem {

SizeField SizeField::uniform(double h) {
    SizeField sf;
    sf.params_.h_fs = h;
    sf.params_.h_max = h;
    sf.params_.gradation = 0.0;
    return sf;
}

SizeField SizeField::build_from_surface(std::span<const Point2> surface_vertices,
                                        std::span<const Vec2> velocities, double dt,
                                        const SizeFieldParams& params) {
    if (dt < 0.0) throw DomainError("size field: negative advection dt");
    if (!(params.h_fs > 0.0) || params.h_fs > params.h_max || params.gradation < 0.0)
        throw DomainError("size field: invalid parameters");

    SizeField sf;
    sf.params_ = params;
    sf.samples_.reserve(surface_vertices.size());
    for (std::size_t i = 0; i < surface_vertices.size(); ++i) {
        const Vec2 u = i < velocities.size() ? velocities[i] : Vec2{};
        sf.samples_.push_back(surface_vertices[i] + u * dt);
    }
    if (sf.samples_.empty()) return sf;

    sf.nodes_.reserve(sf.samples_.size());
    std::vector<std::uint32_t> idx(sf.samples_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
    sf.root_ = sf.build_node(idx, 0, idx.size(), 0);
    return sf;
}

int SizeField::build_node(std::vector<std::uint32_t>& idx, std::size_t lo, std::size_t hi,
                          int depth) {
    if (lo >= hi) return -1;
    const std::uint8_t axis = static_cast<std::uint8_t>(depth % 2);
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                     idx.begin() + static_cast<std::ptrdiff_t>(mid),
                     idx.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::uint32_t a, std::uint32_t b) {
                         const Point2 pa = samples_[a], pb = samples_[b];
                         if (axis == 0)
                             return pa.x < pb.x ||
                                    (pa.x == pb.x && (pa.y < pb.y || (pa.y == pb.y && a < b)));
                         return pa.y < pb.y ||
                                (pa.y == pb.y && (pa.x < pb.x || (pa.x == pb.x && a < b)));
                     });
    Node node;
    node.p = samples_[idx[mid]];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int l = build_node(idx, lo, mid, depth + 1);
    const int r = build_node(idx, mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(self)].left = l;
    nodes_[static_cast<std::size_t>(self)].right = r;
    return self;
}

void SizeField::nearest(int node, Point2 q, double& best2) const {
    if (node < 0) return;
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    const double d2 = norm2(q - n.p);
    if (d2 < best2) best2 = d2;
    const double delta = n.axis == 0 ? q.x - n.p.x : q.y - n.p.y;
    const int near_child = delta <= 0.0 ? n.left : n.right;
    const int far_child = delta <= 0.0 ? n.right : n.left;
    nearest(near_child, q, best2);
    if (delta * delta < best2) nearest(far_child, q, best2);
}

double SizeField::surface_distance(Point2 x) const {
    if (samples_.empty()) return std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    nearest(root_, x, best2);
    return std::sqrt(best2);
}

double SizeField::eval(Point2 x) const {
    if (samples_.empty()) return params_.h_max;
    const double d = surface_distance(x);
    return std::min(params_.h_max, params_.h_fs + params_.gradation * d);
}

double SizeField::cfl_dt(double max_speed) const {
    if (max_speed < 0.0) throw DomainError("cfl_dt: negative speed");
    if (max_speed == 0.0) return std::numeric_limits<double>::infinity();
    return params_.h_fs / max_speed;
}

} // namespace pfem
