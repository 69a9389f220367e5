#pragma once

#include "grid.hpp"
#include "mesh.hpp"

namespace deltet
{
    /// Zero crossing of the linear interpolant between (p1, s1) and (p2, s2):
    /// (s2 p1 - s1 p2) / (s2 - s1).
    inline Vec3 crossing_point(const Vec3 & p1, double s1, const Vec3 & p2, double s2)
    {
        return (s2 * p1 - s1 * p2) / (s2 - s1);
    }

    /// Mesh vertex on active edge (i, j), using the directional signed
    /// distances of both endpoints.
    Vec3 edge_vertex(const PointSet & ps, int i, int j);

    /// Marching Tetrahedra. Vertex k of the result lies on active edge k of
    /// active_edges(grid, ps); faces are ordered by emitting tet and point
    /// from the negative side to the positive side.
    SurfaceMesh marching_tets(const TetGrid & grid, const PointSet & ps, Exec exec = Exec::parallel);

    /// Connected component (through shared edges) with the most faces; ties go
    /// to the component holding the smallest vertex index.
    SurfaceMesh largest_component(const SurfaceMesh & mesh);

    /// Convenience: marching_tets followed by largest_component.
    SurfaceMesh extract_surface(const TetGrid & grid, const PointSet & ps, Exec exec = Exec::parallel);
}
