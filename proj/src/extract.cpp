#include "deltet/extract.hpp"

#include "deltet/shfield.hpp"

#include <algorithm>
#include <bit>
#include <limits>

namespace deltet
{
    namespace
    {
        constexpr int kLocalEdge[4][4] = {{-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};

        // For a lone vertex k, the other three in an order making (k, i, j, l)
        // an even permutation.
        constexpr int kLoneRest[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

        bool odd_permutation(const std::array<int, 4> & p)
        {
            int inversions = 0;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    inversions += p[i] > p[j];
            return inversions & 1;
        }

        int negative_mask(const TetGrid & grid, const PointSet & ps, std::size_t t)
        {
            int mask = 0;
            for (int k = 0; k < 4; ++k)
            {
                mask |= is_negative(ps.sdf[grid.tets[t][k]]) ? (1 << k) : 0;
            }
            return mask;
        }

        int triangle_count(int mask)
        {
            const int n = std::popcount(static_cast<unsigned>(mask));
            return n == 0 || n == 4 ? 0 : (n == 2 ? 2 : 1);
        }

        // Emits the faces of tet t into out (1 or 2 triangles); `vertex_of`
        // maps grid edges to mesh vertices.
        int emit(const TetGrid & grid, std::size_t t, int mask, const std::vector<int> & vertex_of, Tri * out)
        {
            const auto & te = grid.tet_edges[t];
            auto vert = [&](int a, int b) { return vertex_of[te[kLocalEdge[a][b]]]; };
            const int n = std::popcount(static_cast<unsigned>(mask));
            if (n == 1 || n == 3)
            {
                // The lone vertex is the one whose sign differs from the other three.
                const int lone_mask = n == 1 ? mask : (~mask & 0xF);
                const int k = std::countr_zero(static_cast<unsigned>(lone_mask));
                const int i = kLoneRest[k][0], j = kLoneRest[k][1], l = kLoneRest[k][2];
                if (n == 1)
                {
                    out[0] = {vert(k, i), vert(k, j), vert(k, l)};
                }
                else
                {
                    out[0] = {vert(k, i), vert(k, l), vert(k, j)};
                }
                return 1;
            }
            if (n != 2)
            {
                return 0;
            }
            int neg[2], pos[2], an = 0, ap = 0;
            for (int k = 0; k < 4; ++k)
            {
                if (mask & (1 << k))
                    neg[an++] = k;
                else
                    pos[ap++] = k;
            }
            const int a = neg[0], b = neg[1];
            int c = pos[0], d = pos[1];
            if (odd_permutation({a, b, c, d}))
            {
                std::swap(c, d);
            }
            const int ac = vert(a, c), ad = vert(a, d), bd = vert(b, d), bc = vert(b, c);
            // Diagonal through the vertex of the smallest grid edge.
            const int e_ac = te[kLocalEdge[a][c]], e_ad = te[kLocalEdge[a][d]];
            const int e_bd = te[kLocalEdge[b][d]], e_bc = te[kLocalEdge[b][c]];
            const int smallest = std::min({e_ac, e_ad, e_bd, e_bc});
            if (smallest == e_ac || smallest == e_bd)
            {
                out[0] = {ac, ad, bd};
                out[1] = {ac, bd, bc};
            }
            else
            {
                out[0] = {ac, ad, bc};
                out[1] = {ad, bd, bc};
            }
            return 2;
        }
    }

    Vec3 edge_vertex(const PointSet & ps, int i, int j)
    {
        const double si = sh::directional_sdf(ps, i, j);
        const double sj = sh::directional_sdf(ps, j, i);
        return crossing_point(ps.positions[i], si, ps.positions[j], sj);
    }

    SurfaceMesh marching_tets(const TetGrid & grid, const PointSet & ps, Exec exec)
    {
        const ActiveEdgeSet active = active_edges(grid, ps);
        SurfaceMesh mesh;
        const auto nv = static_cast<std::ptrdiff_t>(active.size());
        mesh.vertex_edges = active.edges;
        mesh.vertices.resize(active.size());
        std::vector<int> vertex_of(grid.num_edges(), -1);
        for (std::ptrdiff_t k = 0; k < nv; ++k)
        {
            vertex_of[active.grid_edge[k]] = static_cast<int>(k);
        }

        const auto nt = static_cast<std::ptrdiff_t>(grid.num_tets());
        std::vector<int> offset(grid.num_tets() + 1, 0);
        if (exec == Exec::parallel)
        {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t k = 0; k < nv; ++k)
            {
                mesh.vertices[k] = edge_vertex(ps, active.edges[k][0], active.edges[k][1]);
            }
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                offset[t + 1] = triangle_count(negative_mask(grid, ps, t));
            }
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                offset[t + 1] += offset[t];
            }
            mesh.faces.resize(offset[nt]);
            mesh.face_tets.resize(offset[nt]);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                if (offset[t + 1] == offset[t])
                {
                    continue;
                }
                const int n = emit(grid, t, negative_mask(grid, ps, t), vertex_of, mesh.faces.data() + offset[t]);
                for (int k = 0; k < n; ++k)
                {
                    mesh.face_tets[offset[t] + k] = static_cast<int>(t);
                }
            }
        }
        else
        {
            for (std::ptrdiff_t k = 0; k < nv; ++k)
            {
                mesh.vertices[k] = edge_vertex(ps, active.edges[k][0], active.edges[k][1]);
            }
            Tri tris[2];
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                const int n = emit(grid, t, negative_mask(grid, ps, t), vertex_of, tris);
                for (int k = 0; k < n; ++k)
                {
                    mesh.faces.push_back(tris[k]);
                    mesh.face_tets.push_back(static_cast<int>(t));
                }
            }
        }
        return mesh;
    }

    SurfaceMesh largest_component(const SurfaceMesh & mesh)
    {
        if (mesh.faces.empty())
        {
            return mesh;
        }
        std::vector<int> label;
        const std::size_t n = face_components(mesh, label);
        if (n == 1)
        {
            return mesh;
        }
        std::vector<std::size_t> size(n, 0);
        std::vector<int> min_vertex(n, std::numeric_limits<int>::max());
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        {
            ++size[label[f]];
            for (int v : mesh.faces[f])
                min_vertex[label[f]] = std::min(min_vertex[label[f]], v);
        }
        std::size_t best = 0;
        for (std::size_t c = 1; c < n; ++c)
        {
            if (size[c] > size[best] || (size[c] == size[best] && min_vertex[c] < min_vertex[best]))
            {
                best = c;
            }
        }
        std::vector<std::uint8_t> keep(mesh.faces.size());
        for (std::size_t f = 0; f < mesh.faces.size(); ++f)
        {
            keep[f] = label[f] == static_cast<int>(best);
        }
        return submesh(mesh, keep);
    }

    SurfaceMesh extract_surface(const TetGrid & grid, const PointSet & ps, Exec exec)
    {
        return largest_component(marching_tets(grid, ps, exec));
    }
}
