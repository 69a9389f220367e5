#pragma once

#include "point_set.hpp"

#include <span>

// Real orthonormal spherical harmonics without the Condon-Shortley phase,
// packed at index l*l + l + m. Directions use theta from +z and
// phi = atan2(y, x).
namespace deltet::sh
{
    constexpr int kMaxDegree = 8;
    constexpr int kMaxCoeffs = sh_count(kMaxDegree);

    struct Angles
    {
        double theta = 0.0;
        double phi = 0.0;
    };

    constexpr int index(int l, int m) { return l * l + l + m; }

    /// Polar/azimuthal angles of pj - pi. Throws degenerate-direction when the
    /// points coincide. phi is folded into (-pi, pi].
    Angles direction_angles(const Vec3 & pi, const Vec3 & pj);

    /// Basis values Y[0..q) at a unit direction.
    void basis(int degree, const Vec3 & u, double * y);

    /// Basis values plus the ambient gradient of their polynomial form, which
    /// agrees with the spherical gradient after tangent projection.
    void basis_with_gradient(int degree, const Vec3 & u, double * y, Vec3 * dy);

    void basis(int degree, const Angles & a, double * y);

    Vec3 to_direction(const Angles & a);

    /// Sum c_lm Y_lm(theta, phi). Throws invalid-argument when c.size() != q.
    double eval(int degree, const Angles & a, std::span<const double> c);

    /// Value of the expansion along d (any length > 0) and its gradient with
    /// respect to d.
    double eval_with_gradient(int degree, const Vec3 & d, std::span<const double> c, Vec3 & grad_d);

    // Gate arguments are clamped here so that 1 + tanh stays strictly inside (0, 2).
    constexpr double kGateClamp = 15.0;

    /// 1 + tanh(x), evaluated as 2 sigmoid(2x).
    double gate(double x);

    /// d gate / dx; zero where the argument is clamped.
    double gate_derivative(double x);

    /// (1 + tanh(x)) * s with the sign of s always preserved.
    double modulate(double s, double x);

    /// Directional signed distance of point i along the edge towards j.
    double directional_sdf(const PointSet & ps, int i, int j);
}
