#include "deltet/point_set.hpp"

#include "deltet/rng.hpp"

#include <cmath>
#include <unordered_map>

namespace deltet
{
    namespace
    {
        thread_local std::size_t t_last_perturbed = 0;

        struct CellKey
        {
            std::int64_t x, y, z;
            bool operator==(const CellKey &) const = default;
        };

        struct CellHash
        {
            std::size_t operator()(const CellKey & k) const
            {
                return static_cast<std::size_t>(hash_combine(hash_combine(static_cast<std::uint64_t>(k.x),
                                                                          static_cast<std::uint64_t>(k.y)),
                                                             static_cast<std::uint64_t>(k.z)));
            }
        };
    }

    void PointSet::validate() const
    {
        const std::size_t n = positions.size();
        if (degree < 0)
        {
            throw Error(ErrorKind::invalid_argument, "negative SH degree");
        }
        if (sdf.size() != n || sh.size() != n * static_cast<std::size_t>(coeffs_per_point()))
        {
            throw Error(ErrorKind::invalid_argument, "point set arrays have inconsistent lengths");
        }
        for (std::size_t i = 0; i < n; ++i)
        {
            if (!positions[i].allFinite() || !std::isfinite(sdf[i]))
            {
                throw Error(ErrorKind::invalid_argument, "non-finite point or sdf at index " + std::to_string(i));
            }
        }
        for (double c : sh)
        {
            if (!std::isfinite(c))
            {
                throw Error(ErrorKind::invalid_argument, "non-finite SH coefficient");
            }
        }
    }

    void PointSet::push_back(const Vec3 & p, double s, std::span<const double> c)
    {
        positions.push_back(p);
        sdf.push_back(s);
        sh.insert(sh.end(), c.begin(), c.end());
    }

    PointSet init_points(std::size_t n, double radius, std::uint64_t seed, int degree)
    {
        if (n < 4)
        {
            throw Error(ErrorKind::invalid_argument, "init_points needs at least 4 points");
        }
        if (!(radius > 0.0) || degree < 0)
        {
            throw Error(ErrorKind::invalid_argument, "init_points needs a positive radius and degree >= 0");
        }
        PointSet ps;
        ps.degree = degree;
        ps.positions.reserve(n);
        ps.sdf.reserve(n);
        Rng rng(seed);
        for (std::size_t i = 0; i < n; ++i)
        {
            Vec3 p = radius * rng.in_unit_ball();
            ps.positions.push_back(p);
            ps.sdf.push_back(p.norm() < 0.5 ? -0.1 : 0.1);
        }
        ps.sh.assign(n * static_cast<std::size_t>(sh_count(degree)), 0.0);
        return ps;
    }

    PointSet perturb_duplicates(const PointSet & ps, double eps, std::uint64_t seed)
    {
        if (!(eps > 0.0))
        {
            throw Error(ErrorKind::invalid_argument, "perturb_duplicates needs eps > 0");
        }
        PointSet out = ps;
        t_last_perturbed = 0;

        const double inv = 1.0 / eps;
        auto cell_of = [&](const Vec3 & p) {
            return CellKey{static_cast<std::int64_t>(std::floor(p.x() * inv)),
                           static_cast<std::int64_t>(std::floor(p.y() * inv)),
                           static_cast<std::int64_t>(std::floor(p.z() * inv))};
        };

        std::unordered_map<CellKey, std::vector<int>, CellHash> cells;
        cells.reserve(out.size() * 2);

        auto too_close = [&](const Vec3 & p) {
            const CellKey c = cell_of(p);
            for (std::int64_t dx = -1; dx <= 1; ++dx)
                for (std::int64_t dy = -1; dy <= 1; ++dy)
                    for (std::int64_t dz = -1; dz <= 1; ++dz)
                    {
                        auto it = cells.find({c.x + dx, c.y + dy, c.z + dz});
                        if (it == cells.end())
                        {
                            continue;
                        }
                        for (int j : it->second)
                        {
                            if ((out.positions[j] - p).squaredNorm() < eps * eps)
                            {
                                return true;
                            }
                        }
                    }
            return false;
        };

        const CounterRng rng(hash_combine(seed, 0x70657274ULL));
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            Vec3 p = out.positions[i];
            if (too_close(p))
            {
                const Vec3 origin = p;
                for (std::uint64_t attempt = 0;; ++attempt)
                {
                    const std::uint64_t base = (static_cast<std::uint64_t>(i) << 20) ^ (attempt << 2);
                    // Uniform direction via normalized Gaussian-free rejection on the counter stream.
                    Vec3 dir;
                    for (std::uint64_t k = 0;; ++k)
                    {
                        dir = Vec3(2.0 * rng.uniform(base * 16 + 3 * k) - 1.0,
                                   2.0 * rng.uniform(base * 16 + 3 * k + 1) - 1.0,
                                   2.0 * rng.uniform(base * 16 + 3 * k + 2) - 1.0);
                        const double n2 = dir.squaredNorm();
                        if (n2 > 1e-4 && n2 <= 1.0)
                        {
                            dir /= std::sqrt(n2);
                            break;
                        }
                    }
                    const double scale = 1.0 + static_cast<double>(attempt) / 8.0;
                    const double r = eps * scale * (1.0 + rng.uniform(base * 16 + 15));
                    p = origin + r * dir;
                    if (!too_close(p))
                    {
                        break;
                    }
                }
                out.positions[i] = p;
                ++t_last_perturbed;
            }
            cells[cell_of(p)].push_back(static_cast<int>(i));
        }
        if (t_last_perturbed > 0)
        {
            out.touch();
        }
        return out;
    }

    std::size_t last_perturbed_count()
    {
        return t_last_perturbed;
    }
}
