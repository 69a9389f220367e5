#pragma once

#include "point_set.hpp"

#include <optional>
#include <span>
#include <vector>

namespace deltet
{
    /// Delaunay tetrahedralization of a point set.
    ///
    /// Tets are positively oriented (predicates::orient3d > 0) and sorted by
    /// their sorted vertex tuple. `neighbors[t][k]` is the tet across the face
    /// opposite local vertex k, or -1 on the convex hull. Edges are the
    /// deduplicated (i < j) pairs in lexicographic order; `tet_edges` indexes
    /// them with the local edge order (0,1) (0,2) (0,3) (1,2) (1,3) (2,3).
    struct TetGrid
    {
        std::vector<Tet> tets;
        std::vector<Tet> neighbors;
        std::vector<Vec3> points;
        std::vector<EdgeKey> edges;
        std::vector<std::array<int, 6>> tet_edges;

        // Vertex adjacency (CSR, sorted neighbor lists).
        std::vector<int> adjacency_offsets;
        std::vector<int> adjacency;

        // Per vertex: index of its first (i < j) edge, and where its upper
        // neighbors start inside its adjacency list.
        std::vector<int> edge_begin;
        std::vector<int> upper_begin;

        // Edge -> incident tets (CSR).
        std::vector<int> edge_tet_offsets;
        std::vector<int> edge_tets;

        std::uint64_t generation = 0;

        std::size_t num_points() const { return points.size(); }
        std::size_t num_tets() const { return tets.size(); }
        std::size_t num_edges() const { return edges.size(); }

        std::span<const int> vertex_neighbors(int i) const
        {
            return {adjacency.data() + adjacency_offsets[i],
                    static_cast<std::size_t>(adjacency_offsets[i + 1] - adjacency_offsets[i])};
        }

        std::span<const int> tets_of_edge(int e) const
        {
            return {edge_tets.data() + edge_tet_offsets[e],
                    static_cast<std::size_t>(edge_tet_offsets[e + 1] - edge_tet_offsets[e])};
        }

        /// Edge index of (i, j) in either order, or -1.
        int edge_id(int i, int j) const;

        /// Signed volume of tet t from the stored points.
        double volume(std::size_t t) const;
    };

    inline constexpr std::array<std::array<int, 2>, 6> kTetEdgeLocal = {{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

    /// Incremental Bowyer-Watson on exact predicates. Throws degenerate-input
    /// for fewer than 4 points, coplanar input or duplicate points.
    TetGrid delaunay(const PointSet & ps);

    /// Same, on raw positions; `generation` is stored verbatim.
    TetGrid delaunay(std::span<const Vec3> points, std::uint64_t generation = 0);

    /// sdf == 0 counts as positive.
    inline bool is_negative(double s) { return s < 0.0; }

    struct ActiveEdgeSet
    {
        std::vector<EdgeKey> edges;       // i < j, lexicographic
        std::vector<int> grid_edge;       // index into TetGrid::edges
        std::vector<std::uint8_t> first_negative;  // 1 when edges[k][0] is the negative endpoint

        std::size_t size() const { return edges.size(); }
        bool empty() const { return edges.empty(); }
    };

    /// Throws stale-grid when the grid was built from another generation.
    void check_generation(const TetGrid & grid, const PointSet & ps);

    ActiveEdgeSet active_edges(const TetGrid & grid, const PointSet & ps);

    /// Per-point flag: incident to at least one active edge.
    std::vector<std::uint8_t> active_points(const TetGrid & grid, const PointSet & ps);

    /// Per-point flag: vertex of a convex-hull face.
    std::vector<std::uint8_t> hull_points(const TetGrid & grid);

    struct Location
    {
        int tet = -1;
        std::array<double, 4> bary{};
    };

    constexpr double kBaryEps = 1e-10;

    /// Stochastic visibility walk from `hint`, falling back to a scan of all
    /// tets. Returns nullopt when x lies outside the convex hull.
    std::optional<Location> locate(const TetGrid & grid, const Vec3 & x, int hint = 0, std::uint64_t seed = 0);

    /// Reference: linear scan over all tets.
    std::optional<Location> locate_brute_force(const TetGrid & grid, const Vec3 & x);

    /// Barycentric coordinates of x with respect to tet t.
    std::array<double, 4> barycentric(const TetGrid & grid, int t, const Vec3 & x);
}
