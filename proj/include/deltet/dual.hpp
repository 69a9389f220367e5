#pragma once

#include <array>
#include <cmath>

namespace deltet
{
    /// Forward-mode dual number with N tangent directions.
    template <int N>
    struct Dual
    {
        double v = 0.0;
        std::array<double, N> d{};

        Dual() = default;
        Dual(double value) : v(value) {}

        static Dual variable(double value, int k)
        {
            Dual x(value);
            x.d[k] = 1.0;
            return x;
        }

        Dual & operator+=(const Dual & o)
        {
            v += o.v;
            for (int k = 0; k < N; ++k)
                d[k] += o.d[k];
            return *this;
        }

        Dual & operator-=(const Dual & o)
        {
            v -= o.v;
            for (int k = 0; k < N; ++k)
                d[k] -= o.d[k];
            return *this;
        }

        Dual & operator*=(const Dual & o)
        {
            for (int k = 0; k < N; ++k)
                d[k] = d[k] * o.v + v * o.d[k];
            v *= o.v;
            return *this;
        }

        Dual & operator/=(const Dual & o)
        {
            const double inv = 1.0 / o.v;
            const double q = v * inv;
            for (int k = 0; k < N; ++k)
                d[k] = (d[k] - q * o.d[k]) * inv;
            v = q;
            return *this;
        }
    };

    template <int N> Dual<N> operator+(Dual<N> a, const Dual<N> & b) { return a += b; }
    template <int N> Dual<N> operator-(Dual<N> a, const Dual<N> & b) { return a -= b; }
    template <int N> Dual<N> operator*(Dual<N> a, const Dual<N> & b) { return a *= b; }
    template <int N> Dual<N> operator/(Dual<N> a, const Dual<N> & b) { return a /= b; }
    template <int N> Dual<N> operator+(Dual<N> a, double b) { a.v += b; return a; }
    template <int N> Dual<N> operator-(Dual<N> a, double b) { a.v -= b; return a; }
    template <int N> Dual<N> operator+(double a, Dual<N> b) { b.v += a; return b; }
    template <int N> Dual<N> operator-(double a, const Dual<N> & b) { return Dual<N>(a) - b; }

    template <int N>
    Dual<N> operator*(Dual<N> a, double b)
    {
        a.v *= b;
        for (double & x : a.d)
            x *= b;
        return a;
    }

    template <int N> Dual<N> operator*(double a, Dual<N> b) { return b * a; }
    template <int N> Dual<N> operator/(Dual<N> a, double b) { return a * (1.0 / b); }

    template <int N>
    Dual<N> operator-(Dual<N> a)
    {
        a.v = -a.v;
        for (double & x : a.d)
            x = -x;
        return a;
    }

    template <int N>
    Dual<N> sqrt(const Dual<N> & a)
    {
        Dual<N> r(std::sqrt(a.v));
        const double s = r.v > 0.0 ? 0.5 / r.v : 0.0;
        for (int k = 0; k < N; ++k)
            r.d[k] = a.d[k] * s;
        return r;
    }

    template <int N>
    Dual<N> abs(const Dual<N> & a)
    {
        return a.v < 0.0 ? -a : a;
    }

    inline double value_of(double x) { return x; }
    template <int N> double value_of(const Dual<N> & x) { return x.v; }

    /// Three-component vector over any scalar type (used with Dual).
    template <class T>
    struct V3
    {
        T x, y, z;

        V3 operator+(const V3 & o) const { return {x + o.x, y + o.y, z + o.z}; }
        V3 operator-(const V3 & o) const { return {x - o.x, y - o.y, z - o.z}; }
        V3 operator*(const T & s) const { return {x * s, y * s, z * s}; }
        T dot(const V3 & o) const { return x * o.x + y * o.y + z * o.z; }
        V3 cross(const V3 & o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
        T squared_norm() const { return dot(*this); }
    };
}
