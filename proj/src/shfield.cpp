#include "deltet/shfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace deltet::sh
{
    namespace
    {
        struct Normalization
        {
            // k[l][m] = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!), times sqrt(2) for m > 0.
            double k[kMaxDegree + 1][kMaxDegree + 1];

            Normalization()
            {
                for (int l = 0; l <= kMaxDegree; ++l)
                {
                    for (int m = 0; m <= l; ++m)
                    {
                        double ratio = 1.0;
                        for (int f = l - m + 1; f <= l + m; ++f)
                        {
                            ratio /= f;
                        }
                        k[l][m] = std::sqrt((2 * l + 1) / (4.0 * std::numbers::pi) * ratio);
                        if (m > 0)
                        {
                            k[l][m] *= std::numbers::sqrt2;
                        }
                    }
                }
            }
        };

        const Normalization & norm()
        {
            static const Normalization n;
            return n;
        }

        void check_degree(int degree)
        {
            if (degree < 0 || degree > kMaxDegree)
            {
                throw Error(ErrorKind::invalid_argument, "SH degree " + std::to_string(degree) + " out of range");
            }
        }

        // Shared evaluation. P[l][m] is the associated Legendre function with
        // the (1 - z^2)^(m/2) factor removed; the azimuthal part is carried by
        // Re/Im (x + iy)^m, which keeps everything polynomial in (x, y, z).
        template <bool Grad>
        void evaluate(int degree, const Vec3 & u, double * y, Vec3 * dy)
        {
            check_degree(degree);
            const double x = u.x(), yy = u.y(), z = u.z();
            const auto & k = norm().k;

            double A[kMaxDegree + 1], B[kMaxDegree + 1];
            A[0] = 1.0;
            B[0] = 0.0;
            for (int m = 1; m <= degree; ++m)
            {
                A[m] = x * A[m - 1] - yy * B[m - 1];
                B[m] = x * B[m - 1] + yy * A[m - 1];
            }

            double P[kMaxDegree + 1][kMaxDegree + 1];
            double dP[kMaxDegree + 1][kMaxDegree + 1];
            double pmm = 1.0;
            for (int m = 0; m <= degree; ++m)
            {
                if (m > 0)
                {
                    pmm *= 2 * m - 1;
                }
                P[m][m] = pmm;
                dP[m][m] = 0.0;
                if (m + 1 <= degree)
                {
                    P[m + 1][m] = (2 * m + 1) * z * pmm;
                    dP[m + 1][m] = (2 * m + 1) * pmm;
                }
                for (int l = m + 2; l <= degree; ++l)
                {
                    P[l][m] = ((2 * l - 1) * z * P[l - 1][m] - (l + m - 1) * P[l - 2][m]) / (l - m);
                    if constexpr (Grad)
                    {
                        dP[l][m] = ((2 * l - 1) * (P[l - 1][m] + z * dP[l - 1][m]) - (l + m - 1) * dP[l - 2][m]) / (l - m);
                    }
                }
            }

            for (int l = 0; l <= degree; ++l)
            {
                y[index(l, 0)] = k[l][0] * P[l][0];
                if constexpr (Grad)
                {
                    dy[index(l, 0)] = Vec3(0.0, 0.0, k[l][0] * dP[l][0]);
                }
                for (int m = 1; m <= l; ++m)
                {
                    const double c = k[l][m];
                    y[index(l, m)] = c * P[l][m] * A[m];
                    y[index(l, -m)] = c * P[l][m] * B[m];
                    if constexpr (Grad)
                    {
                        // d(A_m)/dx = m A_{m-1}, d(A_m)/dy = -m B_{m-1},
                        // d(B_m)/dx = m B_{m-1}, d(B_m)/dy = m A_{m-1}.
                        const double p = c * P[l][m];
                        dy[index(l, m)] = Vec3(p * m * A[m - 1], -p * m * B[m - 1], c * dP[l][m] * A[m]);
                        dy[index(l, -m)] = Vec3(p * m * B[m - 1], p * m * A[m - 1], c * dP[l][m] * B[m]);
                    }
                }
            }
        }
    }

    Angles direction_angles(const Vec3 & pi, const Vec3 & pj)
    {
        const Vec3 d = pj - pi;
        if (d.squaredNorm() == 0.0)
        {
            throw Error(ErrorKind::degenerate_direction, "direction between coincident points");
        }
        Angles a;
        a.theta = std::atan2(std::hypot(d.x(), d.y()), d.z());
        a.phi = std::atan2(d.y(), d.x());
        if (a.phi <= -std::numbers::pi)
        {
            a.phi = std::numbers::pi;
        }
        return a;
    }

    Vec3 to_direction(const Angles & a)
    {
        const double st = std::sin(a.theta);
        return {st * std::cos(a.phi), st * std::sin(a.phi), std::cos(a.theta)};
    }

    void basis(int degree, const Vec3 & u, double * y) { evaluate<false>(degree, u, y, nullptr); }

    void basis_with_gradient(int degree, const Vec3 & u, double * y, Vec3 * dy) { evaluate<true>(degree, u, y, dy); }

    void basis(int degree, const Angles & a, double * y) { basis(degree, to_direction(a), y); }

    double eval(int degree, const Angles & a, std::span<const double> c)
    {
        check_degree(degree);
        if (c.size() != static_cast<std::size_t>(sh_count(degree)))
        {
            throw Error(ErrorKind::invalid_argument, "expected " + std::to_string(sh_count(degree)) + " SH coefficients, got "
                                                         + std::to_string(c.size()));
        }
        double y[kMaxCoeffs];
        basis(degree, a, y);
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k)
        {
            s += c[k] * y[k];
        }
        return s;
    }

    double eval_with_gradient(int degree, const Vec3 & d, std::span<const double> c, Vec3 & grad_d)
    {
        const double r = d.norm();
        const Vec3 u = d / r;
        double y[kMaxCoeffs];
        Vec3 dy[kMaxCoeffs];
        basis_with_gradient(degree, u, y, dy);
        double s = 0.0;
        Vec3 g = Vec3::Zero();
        for (std::size_t k = 0; k < c.size(); ++k)
        {
            s += c[k] * y[k];
            g += c[k] * dy[k];
        }
        // du/dd = (I - u u^T) / r
        grad_d = (g - u * u.dot(g)) / r;
        return s;
    }

    double gate(double x)
    {
        const double t = std::clamp(x, -kGateClamp, kGateClamp);
        return 2.0 / (1.0 + std::exp(-2.0 * t));
    }

    double gate_derivative(double x)
    {
        if (x <= -kGateClamp || x >= kGateClamp)
        {
            return 0.0;
        }
        const double g = gate(x);
        return g * (2.0 - g);
    }

    double modulate(double s, double x)
    {
        const double v = gate(x) * s;
        if (v == 0.0 && s != 0.0)
        {
            // Underflow for subnormal s; keep the sign.
            return std::copysign(std::numeric_limits<double>::denorm_min(), s);
        }
        return v;
    }

    double directional_sdf(const PointSet & ps, int i, int j)
    {
        const Vec3 d = ps.positions[j] - ps.positions[i];
        if (d.squaredNorm() == 0.0)
        {
            throw Error(ErrorKind::degenerate_direction, "edge between coincident points");
        }
        if (ps.degree == 0)
        {
            return modulate(ps.sdf[i], ps.sh[i] * norm().k[0][0]);
        }
        double y[kMaxCoeffs];
        basis(ps.degree, Vec3(d / d.norm()), y);
        const auto c = ps.coeffs(i);
        double x = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k)
        {
            x += c[k] * y[k];
        }
        return modulate(ps.sdf[i], x);
    }
}
