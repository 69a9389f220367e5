#pragma once

#include "common.hpp"

#include <cstdint>
#include <random>

namespace deltet
{
    /// Stateless 64-bit mixer (splitmix64 finalizer).
    constexpr std::uint64_t mix64(std::uint64_t x)
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b)
    {
        return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
    }

    /// Maps 64 random bits to [0, 1).
    constexpr double to_unit(std::uint64_t bits)
    {
        return static_cast<double>(bits >> 11) * 0x1.0p-53;
    }

    /// Counter-based stream: value k of stream `key` is a pure function of
    /// (key, k), so sampling is independent of evaluation order.
    class CounterRng
    {
    public:
        explicit CounterRng(std::uint64_t key) : key_(mix64(key)) {}

        double uniform(std::uint64_t counter) const { return to_unit(hash_combine(key_, counter)); }
        std::uint64_t bits(std::uint64_t counter) const { return hash_combine(key_, counter); }

    private:
        std::uint64_t key_;
    };

    /// Sequential engine with portable uniform conversion (std distributions
    /// are implementation-defined; this one is not).
    class Rng
    {
    public:
        explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

        double uniform() { return to_unit(engine_()); }
        double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
        std::uint64_t bits() { return engine_(); }
        std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n; }

        Vec3 in_unit_ball()
        {
            for (;;)
            {
                Vec3 p(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
                if (p.squaredNorm() <= 1.0)
                {
                    return p;
                }
            }
        }

        Vec3 on_unit_sphere()
        {
            for (;;)
            {
                Vec3 p = in_unit_ball();
                double n = p.norm();
                if (n > 1e-3)
                {
                    return p / n;
                }
            }
        }

        std::mt19937_64 & engine() { return engine_; }

    private:
        std::mt19937_64 engine_;
    };
}
