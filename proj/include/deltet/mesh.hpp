#pragma once

#include "common.hpp"

#include <vector>

namespace deltet
{
    /// Triangle mesh. When produced by extraction, `vertex_edges[v]` is the
    /// grid edge (i < j) that generated vertex v and `face_tets[f]` the tet
    /// that emitted face f; both are empty for imported meshes.
    struct SurfaceMesh
    {
        std::vector<Vec3> vertices;
        std::vector<Tri> faces;
        std::vector<EdgeKey> vertex_edges;
        std::vector<int> face_tets;

        std::size_t num_vertices() const { return vertices.size(); }
        std::size_t num_faces() const { return faces.size(); }
        bool empty() const { return faces.empty(); }

        /// Unnormalized normal (twice the area vector).
        Vec3 face_normal(std::size_t f) const
        {
            const Tri & t = faces[f];
            return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
        }

        double face_area(std::size_t f) const { return 0.5 * face_normal(f).norm(); }

        double total_area() const;

        /// Axis-aligned bounds of the vertices; both zero for an empty mesh.
        std::array<Vec3, 2> bounds() const;
    };

    struct MeshTopology
    {
        std::size_t boundary_edges = 0;     // edges with one incident face
        std::size_t nonmanifold_edges = 0;  // edges with more than two
        std::size_t misoriented_edges = 0;  // interior edges traversed twice in the same direction
        std::size_t nonmanifold_vertices = 0;  // vertex fans that are not a single cycle
        std::size_t edges = 0;
        std::size_t components = 0;  // by shared edges
        long long euler = 0;         // V - E + F over referenced vertices

        bool closed_manifold() const
        {
            return boundary_edges == 0 && nonmanifold_edges == 0 && misoriented_edges == 0 && nonmanifold_vertices == 0;
        }
    };

    MeshTopology analyze_topology(const SurfaceMesh & mesh);

    /// Per-face component labels (faces connected through shared edges),
    /// numbered in order of first appearance. Returns the component count.
    std::size_t face_components(const SurfaceMesh & mesh, std::vector<int> & label);

    /// Keeps the given faces and the vertices they reference (in original
    /// relative order), carrying provenance along.
    SurfaceMesh submesh(const SurfaceMesh & mesh, const std::vector<std::uint8_t> & keep_face);
}
