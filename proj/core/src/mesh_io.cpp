#include "pfem/mesh_io.hpp"

#include <ostream>

namespace pfem {

void write_mesh_snapshot(std::ostream& os, const TriMesh& mesh, const FluidDomain& domain,
                         const FlowState& state) {
    os << "pfem-mesh 1\n";
    std::size_t nv = 0;
    for (VertexId v = 0; v < mesh.vertex_capacity(); ++v)
        if (mesh.vertex_alive(v)) ++nv;
    os << "vertices " << nv << "\n";
    os << "# id x y role ux uy p\n";
    os.precision(17);
    for (VertexId v = 0; v < mesh.vertex_capacity(); ++v) {
        if (!mesh.vertex_alive(v)) continue;
        const Point2 p = mesh.position(v);
        const Vec2 u = v < state.velocity.size() ? state.velocity[v] : Vec2{};
        const double pr = v < state.pressure.size() ? state.pressure[v] : 0.0;
        os << v << ' ' << p.x << ' ' << p.y << ' ' << to_string(mesh.role(v)) << ' ' << u.x
           << ' ' << u.y << ' ' << pr << "\n";
    }
    const auto tris = mesh.real_triangles();
    os << "triangles " << tris.size() << "\n";
    os << "# v0 v1 v2 fluid\n";
    for (TriId t : tris) {
        const auto& T = mesh.tri(t);
        os << T.v[0] << ' ' << T.v[1] << ' ' << T.v[2] << ' ' << (domain.fluid(t) ? 1 : 0)
           << "\n";
    }
}

void write_loops_csv(std::ostream& os, const TriMesh& mesh, const FluidDomain& domain) {
    os << "loop,label,vertex,x,y\n";
    os.precision(17);
    for (std::size_t l = 0; l < domain.loops.size(); ++l) {
        const BoundaryLoop& loop = domain.loops[l];
        const char* label = loop.label == LoopLabel::wall ? "wall"
                            : loop.label == LoopLabel::bubble ? "bubble"
                                                              : "external_free_surface";
        for (VertexId v : loop.vertices) {
            const Point2 p = mesh.position(v);
            os << l << ',' << label << ',' << v << ',' << p.x << ',' << p.y << "\n";
        }
    }
}

} // namespace pfem
