#pragma once

#include "pfem/geometry.hpp"

#include <cstdint>
#include <vector>

namespace pfem {

using VertexId = std::uint32_t;

/// Role of a node in the particle cloud. Control nodes are geometry (they
/// never move and never carry fluid velocity); the other roles are
/// reassigned every step from wall proximity and the detected boundary.
enum class NodeRole : std::uint8_t {
    interior = 0,
    wall = 1,
    free_surface = 2,
    control = 3,
};

inline const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::interior: return "interior";
        case NodeRole::wall: return "wall";
        case NodeRole::free_surface: return "free_surface";
        case NodeRole::control: return "control";
    }
    return "?";
}

struct ParticleSet {
    std::vector<Point2> positions;
    std::vector<Vec2> velocities;
    std::vector<NodeRole> roles;

    std::size_t size() const { return positions.size(); }

    VertexId add(Point2 x, Vec2 u = {}, NodeRole role = NodeRole::interior) {
        positions.push_back(x);
        velocities.push_back(u);
        roles.push_back(role);
        return static_cast<VertexId>(positions.size() - 1);
    }
};

} // namespace pfem
