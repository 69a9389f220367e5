#pragma once

#include "common.hpp"

namespace deltet::predicates
{
    /// Sign of det[b - a, c - a, d - a]: positive when d lies on the side of
    /// plane (a, b, c) that (b - a) x (c - a) points to.
    /// Filtered floating-point evaluation with an exact rational fallback.
    int orient3d(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d);

    /// Positive when e lies strictly inside the circumsphere of (a, b, c, d),
    /// assuming orient3d(a, b, c, d) > 0; zero when cospherical.
    int insphere(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d, const Vec3 & e);

    /// Sign of det[b - a, c - a] for 2D points (x, y).
    int orient2d(double ax, double ay, double bx, double by, double cx, double cy);

    /// Number of times the exact fallback was taken (diagnostics).
    std::uint64_t exact_fallback_count();

    /// Plain floating-point determinants, unfiltered.
    double orient3d_fast(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d);
}
