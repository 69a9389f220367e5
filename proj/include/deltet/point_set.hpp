#pragma once

#include "common.hpp"

#include <span>
#include <vector>

namespace deltet
{
    /// Number of SH coefficients for degree d: (d + 1)^2.
    constexpr int sh_count(int degree) { return (degree + 1) * (degree + 1); }

    /// The optimized representation: positions, base signed distances and
    /// per-point SH coefficients (point-major, `coeffs_per_point()` each).
    struct PointSet
    {
        std::vector<Vec3> positions;
        std::vector<double> sdf;
        std::vector<double> sh;
        int degree = 0;

        // Bumped whenever positions or the point count change; a TetGrid
        // records the value it was built from.
        std::uint64_t generation = 0;

        std::size_t size() const { return positions.size(); }
        bool empty() const { return positions.empty(); }
        int coeffs_per_point() const { return sh_count(degree); }

        std::span<double> coeffs(std::size_t i)
        {
            const auto q = static_cast<std::size_t>(coeffs_per_point());
            return {sh.data() + i * q, q};
        }

        std::span<const double> coeffs(std::size_t i) const
        {
            const auto q = static_cast<std::size_t>(coeffs_per_point());
            return {sh.data() + i * q, q};
        }

        void touch() { ++generation; }

        /// Throws invalid-argument when lengths disagree or values are not finite.
        void validate() const;

        /// Appends a point with the given parameters (q coefficients).
        void push_back(const Vec3 & p, double s, std::span<const double> c);
    };

    /// n points uniformly distributed in the ball of `radius`; sdf is -0.1
    /// inside |p| < 0.5 and +0.1 elsewhere; SH coefficients zero.
    PointSet init_points(std::size_t n, double radius, std::uint64_t seed, int degree = 0);

    constexpr double kDuplicateEps = 1e-7;

    /// Moves points closer than `eps` to an earlier point by deterministic
    /// hash-seeded jitter. Returns the input unchanged (bitwise) when already
    /// separated.
    PointSet perturb_duplicates(const PointSet & ps, double eps = kDuplicateEps, std::uint64_t seed = 0);

    /// Number of points moved by the last call on this thread (diagnostics).
    std::size_t last_perturbed_count();
}
