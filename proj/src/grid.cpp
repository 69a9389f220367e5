#include "deltet/grid.hpp"

#include "deltet/predicates.hpp"
#include "deltet/rng.hpp"

#include <Eigen/LU>

#include <limits>

namespace deltet
{
    void check_generation(const TetGrid & grid, const PointSet & ps)
    {
        if (grid.generation != ps.generation || grid.num_points() != ps.size())
        {
            throw Error(ErrorKind::stale_grid,
                        "grid generation " + std::to_string(grid.generation) + " does not match point set generation "
                            + std::to_string(ps.generation));
        }
    }

    ActiveEdgeSet active_edges(const TetGrid & grid, const PointSet & ps)
    {
        check_generation(grid, ps);
        ActiveEdgeSet out;
        for (std::size_t e = 0; e < grid.edges.size(); ++e)
        {
            const auto [i, j] = grid.edges[e];
            const bool ni = is_negative(ps.sdf[i]);
            const bool nj = is_negative(ps.sdf[j]);
            if (ni != nj)
            {
                out.edges.push_back(grid.edges[e]);
                out.grid_edge.push_back(static_cast<int>(e));
                out.first_negative.push_back(ni ? 1 : 0);
            }
        }
        return out;
    }

    std::vector<std::uint8_t> active_points(const TetGrid & grid, const PointSet & ps)
    {
        check_generation(grid, ps);
        std::vector<std::uint8_t> active(ps.size(), 0);
        for (const auto & [i, j] : grid.edges)
        {
            if (is_negative(ps.sdf[i]) != is_negative(ps.sdf[j]))
            {
                active[i] = 1;
                active[j] = 1;
            }
        }
        return active;
    }

    std::vector<std::uint8_t> hull_points(const TetGrid & grid)
    {
        std::vector<std::uint8_t> hull(grid.num_points(), 0);
        for (std::size_t t = 0; t < grid.num_tets(); ++t)
            for (int k = 0; k < 4; ++k)
                if (grid.neighbors[t][k] < 0)
                    for (int j = 0; j < 4; ++j)
                        if (j != k)
                            hull[grid.tets[t][j]] = 1;
        return hull;
    }

    std::array<double, 4> barycentric(const TetGrid & grid, int t, const Vec3 & x)
    {
        const Tet & v = grid.tets[t];
        const Vec3 & a = grid.points[v[0]];
        const Vec3 & b = grid.points[v[1]];
        const Vec3 & c = grid.points[v[2]];
        const Vec3 & d = grid.points[v[3]];
        // Solve [b-a c-a d-a] w = x - a.
        Mat3 m;
        m.col(0) = b - a;
        m.col(1) = c - a;
        m.col(2) = d - a;
        const Vec3 w = m.partialPivLu().solve(x - a);
        return {1.0 - w.sum(), w.x(), w.y(), w.z()};
    }

    namespace
    {
        double min_coeff(const std::array<double, 4> & b)
        {
            return std::min(std::min(b[0], b[1]), std::min(b[2], b[3]));
        }
    }

    std::optional<Location> locate_brute_force(const TetGrid & grid, const Vec3 & x)
    {
        int best = -1;
        double best_min = -std::numeric_limits<double>::infinity();
        std::array<double, 4> best_bary{};
        for (std::size_t t = 0; t < grid.num_tets(); ++t)
        {
            const auto b = barycentric(grid, static_cast<int>(t), x);
            const double m = min_coeff(b);
            if (m > best_min)
            {
                best_min = m;
                best = static_cast<int>(t);
                best_bary = b;
            }
            if (m >= 0.0)
            {
                break;
            }
        }
        if (best < 0 || best_min < -kBaryEps)
        {
            return std::nullopt;
        }
        return Location{best, best_bary};
    }

    std::optional<Location> locate(const TetGrid & grid, const Vec3 & x, int hint, std::uint64_t seed)
    {
        if (grid.num_tets() == 0)
        {
            return std::nullopt;
        }
        int t = (hint >= 0 && static_cast<std::size_t>(hint) < grid.num_tets()) ? hint : 0;
        const CounterRng rng(seed);
        const std::size_t limit = 32 + 8 * static_cast<std::size_t>(std::cbrt(static_cast<double>(grid.num_tets())) + 1.0) * 8;
        for (std::size_t step = 0; step < limit; ++step)
        {
            const auto b = barycentric(grid, t, x);
            if (min_coeff(b) >= -kBaryEps)
            {
                return Location{t, b};
            }
            // Step across a random face that x lies beyond.
            const int k0 = static_cast<int>(rng.bits(step) & 3U);
            int next = -2;
            for (int f = 0; f < 4; ++f)
            {
                const int k = (k0 + f) & 3;
                if (b[k] < -kBaryEps)
                {
                    next = grid.neighbors[t][k];
                    if (next >= 0)
                    {
                        break;
                    }
                }
            }
            if (next < 0)
            {
                break;
            }
            t = next;
        }
        return locate_brute_force(grid, x);
    }
}
