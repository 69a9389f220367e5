#include "deltet/mesh.hpp"

#include <algorithm>
#include <numeric>

namespace deltet
{
    double SurfaceMesh::total_area() const
    {
        double a = 0.0;
        for (std::size_t f = 0; f < faces.size(); ++f)
        {
            a += face_area(f);
        }
        return a;
    }

    std::array<Vec3, 2> SurfaceMesh::bounds() const
    {
        if (vertices.empty())
        {
            return {Vec3::Zero(), Vec3::Zero()};
        }
        Vec3 lo = vertices[0], hi = vertices[0];
        for (const Vec3 & v : vertices)
        {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        return {lo, hi};
    }

    namespace
    {
        struct HalfEdge
        {
            int a, b;  // sorted endpoints
            int face;
            bool forward;  // traversed a -> b by the face

            bool operator<(const HalfEdge & o) const
            {
                return std::tie(a, b, face) < std::tie(o.a, o.b, o.face);
            }
        };

        std::vector<HalfEdge> half_edges(const SurfaceMesh & mesh)
        {
            std::vector<HalfEdge> h;
            h.reserve(3 * mesh.faces.size());
            for (std::size_t f = 0; f < mesh.faces.size(); ++f)
            {
                const Tri & t = mesh.faces[f];
                for (int k = 0; k < 3; ++k)
                {
                    const int u = t[k], v = t[(k + 1) % 3];
                    h.push_back({std::min(u, v), std::max(u, v), static_cast<int>(f), u < v});
                }
            }
            std::sort(h.begin(), h.end());
            return h;
        }

        int find(std::vector<int> & parent, int x)
        {
            while (parent[x] != x)
            {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            return x;
        }

        void unite(std::vector<int> & parent, int a, int b)
        {
            a = find(parent, a);
            b = find(parent, b);
            if (a != b)
            {
                parent[std::max(a, b)] = std::min(a, b);
            }
        }
    }

    std::size_t face_components(const SurfaceMesh & mesh, std::vector<int> & label)
    {
        const auto h = half_edges(mesh);
        std::vector<int> parent(mesh.faces.size());
        std::iota(parent.begin(), parent.end(), 0);
        for (std::size_t k = 1; k < h.size(); ++k)
        {
            if (h[k].a == h[k - 1].a && h[k].b == h[k - 1].b)
            {
                unite(parent, h[k].face, h[k - 1].face);
            }
        }
        label.assign(mesh.faces.size(), -1);
        std::vector<int> root_label(mesh.faces.size(), -1);
        int next = 0;
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        {
            const int r = find(parent, static_cast<int>(f));
            if (root_label[r] < 0)
            {
                root_label[r] = next++;
            }
            label[f] = root_label[r];
        }
        return static_cast<std::size_t>(next);
    }

    MeshTopology analyze_topology(const SurfaceMesh & mesh)
    {
        MeshTopology topo;
        const auto h = half_edges(mesh);
        for (std::size_t k = 0; k < h.size();)
        {
            std::size_t e = k;
            int fwd = 0;
            while (e < h.size() && h[e].a == h[k].a && h[e].b == h[k].b)
            {
                fwd += h[e].forward;
                ++e;
            }
            const std::size_t count = e - k;
            ++topo.edges;
            if (count == 1)
            {
                ++topo.boundary_edges;
            }
            else if (count > 2)
            {
                ++topo.nonmanifold_edges;
            }
            else if (fwd != 1)
            {
                ++topo.misoriented_edges;
            }
            k = e;
        }

        // Vertex fans: the faces around v, linked through their edges at v,
        // must form exactly one cycle (or one chain when on a boundary).
        std::vector<std::vector<int>> vertex_faces(mesh.vertices.size());
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
            for (int v : mesh.faces[f])
                vertex_faces[v].push_back(static_cast<int>(f));
        std::size_t used = 0;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            const auto & fs = vertex_faces[v];
            if (fs.empty())
            {
                continue;
            }
            ++used;
            // Union faces around v that share an edge (v, w).
            std::vector<std::pair<int, int>> spokes;  // (other vertex, local face)
            for (std::size_t k = 0; k < fs.size(); ++k)
                for (int w : mesh.faces[fs[k]])
                    if (w != static_cast<int>(v))
                        spokes.push_back({w, static_cast<int>(k)});
            std::sort(spokes.begin(), spokes.end());
            std::vector<int> parent(fs.size());
            std::iota(parent.begin(), parent.end(), 0);
            for (std::size_t k = 1; k < spokes.size(); ++k)
                if (spokes[k].first == spokes[k - 1].first)
                    unite(parent, spokes[k].second, spokes[k - 1].second);
            int roots = 0;
            for (std::size_t k = 0; k < fs.size(); ++k)
                roots += find(parent, static_cast<int>(k)) == static_cast<int>(k);
            if (roots != 1)
            {
                ++topo.nonmanifold_vertices;
            }
        }

        std::vector<int> label;
        topo.components = face_components(mesh, label);
        topo.euler = static_cast<long long>(used) - static_cast<long long>(topo.edges)
                     + static_cast<long long>(mesh.faces.size());
        return topo;
    }

    SurfaceMesh submesh(const SurfaceMesh & mesh, const std::vector<std::uint8_t> & keep_face)
    {
        SurfaceMesh out;
        std::vector<int> remap(mesh.vertices.size(), -1);
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
            if (keep_face[f])
                for (int v : mesh.faces[f])
                    remap[v] = 0;
        for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
        {
            if (remap[v] < 0)
            {
                continue;
            }
            remap[v] = static_cast<int>(out.vertices.size());
            out.vertices.push_back(mesh.vertices[v]);
            if (!mesh.vertex_edges.empty())
            {
                out.vertex_edges.push_back(mesh.vertex_edges[v]);
            }
        }
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        {
            if (!keep_face[f])
            {
                continue;
            }
            const Tri & t = mesh.faces[f];
            out.faces.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
            if (!mesh.face_tets.empty())
            {
                out.face_tets.push_back(mesh.face_tets[f]);
            }
        }
        return out;
    }
}
