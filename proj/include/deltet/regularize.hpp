#pragma once

#include "grid.hpp"
#include "mesh.hpp"

namespace deltet
{
    struct Sphere
    {
        Vec3 center = Vec3::Zero();
        double radius = 0.0;
    };

    /// Tets with |det| below this fraction of (longest edge)^3 are degenerate.
    constexpr double kDegenerateVolumeRatio = 1e-12;

    /// Throws degenerate-tet for (near-)flat input.
    Sphere circumsphere(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d);

    struct TetMoments
    {
        double volume = 0.0;
        Vec3 circumcenter = Vec3::Zero();
        double radius = 0.0;
        double sx = 0.0, sy = 0.0, sz = 0.0;
        double m_st = 0.0;  // shell moment (2/5) V R^2
        double m_t = 0.0;   // principal-moment sum (1/5) V (Sx + Sy + Sz)
    };

    TetMoments tet_moments(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d);

    /// |M_ST - M_T|. Throws degenerate-tet.
    double odt_energy(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d);

    /// Energy and its gradient with respect to the four vertices; returns
    /// false (leaving outputs untouched) for degenerate tets.
    bool odt_energy(const std::array<Vec3, 4> & v, double & energy, std::array<Vec3, 4> & grad);

    enum class DegeneratePolicy
    {
        penalty,  // 1e3 x median energy, zero gradient
        error,
    };

    struct OdtOptions
    {
        bool active_only = false;  // restrict to tets touching active points
        DegeneratePolicy degenerate = DegeneratePolicy::penalty;
    };

    /// Sum of tet energies. When `grad` is given it is resized to the point
    /// count and receives dL/dp (overwritten).
    double odt_loss(const TetGrid & grid, const PointSet & ps, const OdtOptions & options = {}, std::vector<Vec3> * grad = nullptr,
                    Exec exec = Exec::parallel);

    /// Interior angles at a, b, c. Zero-area triangles get (0, 0, pi) with pi
    /// at the vertex opposite the longest edge.
    std::array<double, 3> triangle_angles(const Vec3 & a, const Vec3 & b, const Vec3 & c);

    /// Sum over faces of (1/3) sum_i (theta_i - pi/3)^2. `grad` receives dL/dv
    /// per mesh vertex (overwritten).
    double fairness_loss(const SurfaceMesh & mesh, std::vector<Vec3> * grad = nullptr, Exec exec = Exec::parallel);

    /// Binary cross-entropy between sigmoid(s_a) and [s_b >= 0], summed over
    /// both orientations of every active edge. `grad` receives dL/ds per point
    /// (overwritten).
    double sign_loss(const PointSet & ps, const ActiveEdgeSet & edges, std::vector<double> * grad = nullptr);

    /// log(1 + exp(x)) without overflow.
    double softplus(double x);

    double sigmoid(double x);
}
