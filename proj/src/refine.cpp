#include "deltet/refine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>

namespace deltet
{
    std::vector<int> passive_points(const TetGrid & grid, const PointSet & ps)
    {
        const auto active = active_points(grid, ps);
        std::vector<int> out;
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            if (active[i])
                continue;
            const auto nb = grid.vertex_neighbors(static_cast<int>(i));
            if (std::none_of(nb.begin(), nb.end(), [&](int j) { return active[j] != 0; }))
                out.push_back(static_cast<int>(i));
        }
        return out;
    }

    std::array<int, 3> VoxelImportance::cell(std::size_t idx) const
    {
        const auto r = static_cast<std::size_t>(resolution);
        return {static_cast<int>(idx % r), static_cast<int>((idx / r) % r), static_cast<int>(idx / (r * r))};
    }

    std::size_t VoxelImportance::voxel_of(const Vec3 & p) const
    {
        std::array<int, 3> c{};
        for (int k = 0; k < 3; ++k)
        {
            const double t = (p[k] - box.lo[k]) / (box.hi[k] - box.lo[k]);
            c[k] = std::clamp(static_cast<int>(std::floor(t * resolution)), 0, resolution - 1);
        }
        return index(c[0], c[1], c[2]);
    }

    Aabb VoxelImportance::voxel_bounds(std::size_t idx) const
    {
        const auto c = cell(idx);
        const Vec3 size = (box.hi - box.lo) / resolution;
        Aabb b;
        b.lo = box.lo + Vec3(c[0] * size.x(), c[1] * size.y(), c[2] * size.z());
        b.hi = b.lo + size;
        return b;
    }

    void VoxelImportance::normalize()
    {
        const double total = std::accumulate(h.begin(), h.end(), 0.0);
        rho.assign(h.size(), 0.0);
        if (total > 0.0)
        {
            for (std::size_t i = 0; i < h.size(); ++i)
                rho[i] = h[i] / total;
        }
    }

    namespace
    {
        VoxelImportance empty_importance(Aabb box, int resolution)
        {
            if (resolution < 1)
            {
                throw Error(ErrorKind::invalid_argument, "importance resolution must be at least 1");
            }
            if (!(box.lo.array() <= box.hi.array()).all())
            {
                throw Error(ErrorKind::invalid_argument, "importance box is empty");
            }
            const double pad = 1e-9 * std::max(1.0, (box.hi - box.lo).maxCoeff());
            for (int k = 0; k < 3; ++k)
            {
                if (box.hi[k] - box.lo[k] < pad)
                {
                    box.lo[k] -= pad;
                    box.hi[k] += pad;
                }
            }
            VoxelImportance imp;
            imp.box = box;
            imp.resolution = resolution;
            const auto n = static_cast<std::size_t>(resolution) * resolution * resolution;
            imp.h.assign(n, 0.0);
            imp.rho.assign(n, 0.0);
            return imp;
        }
    }

    VoxelImportance build_importance(std::span<const SampleError> samples, const Aabb & box, int resolution)
    {
        VoxelImportance imp = empty_importance(box, resolution);
        std::vector<double> sum(imp.size(), 0.0);
        std::vector<std::size_t> count(imp.size(), 0);
        for (const SampleError & s : samples)
        {
            const std::size_t v = imp.voxel_of(s.position);
            sum[v] += s.error;
            ++count[v];
        }
        bool any = false;
        for (std::size_t v = 0; v < imp.size(); ++v)
        {
            if (count[v] > 0)
            {
                imp.h[v] = sum[v] / static_cast<double>(count[v]);
                any = any || imp.h[v] > 0.0;
            }
        }
        if (!any)
        {
            for (std::size_t v = 0; v < imp.size(); ++v)
                imp.h[v] = count[v] > 0 ? 1.0 : 0.0;
        }
        imp.normalize();
        return imp;
    }

    BuiltinImportance parse_importance(const std::string & name)
    {
        if (name == "uniform")
            return BuiltinImportance::uniform;
        if (name == "axis_cubic" || name == "axis-cubic")
            return BuiltinImportance::axis_cubic;
        if (name == "radial")
            return BuiltinImportance::radial;
        throw Error(ErrorKind::invalid_argument, "unknown importance '" + name + "' (expected uniform, axis_cubic or radial)");
    }

    const char * to_string(BuiltinImportance kind)
    {
        switch (kind)
        {
        case BuiltinImportance::uniform: return "uniform";
        case BuiltinImportance::axis_cubic: return "axis_cubic";
        case BuiltinImportance::radial: return "radial";
        }
        return "?";
    }

    bool triangle_box_overlap(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Aabb & box)
    {
        const Vec3 center = box.center();
        const Vec3 half = 0.5 * (box.hi - box.lo);
        const Vec3 v[3] = {a - center, b - center, c - center};
        const Vec3 e[3] = {v[1] - v[0], v[2] - v[1], v[0] - v[2]};
        auto separated = [&](const Vec3 & axis) {
            if (axis.squaredNorm() == 0.0)
                return false;
            const double p0 = axis.dot(v[0]), p1 = axis.dot(v[1]), p2 = axis.dot(v[2]);
            const double r = half.dot(axis.cwiseAbs());
            return std::min({p0, p1, p2}) > r || std::max({p0, p1, p2}) < -r;
        };
        for (int k = 0; k < 3; ++k)
        {
            if (separated(Vec3::Unit(k)))
                return false;
        }
        if (separated(e[0].cross(e[1])))
            return false;
        for (const Vec3 & edge : e)
        {
            for (int k = 0; k < 3; ++k)
            {
                if (separated(Vec3::Unit(k).cross(edge)))
                    return false;
            }
        }
        return true;
    }

    VoxelImportance builtin_importance(BuiltinImportance kind, const SurfaceMesh & mesh, int resolution, bool mask_to_mesh)
    {
        if (mesh.empty())
        {
            throw Error(ErrorKind::invalid_argument, "builtin importance needs a nonempty mesh");
        }
        const auto bounds = mesh.bounds();
        Aabb box;
        box.lo = bounds[0];
        box.hi = bounds[1];
        VoxelImportance imp = empty_importance(box, resolution);
        for (std::size_t v = 0; v < imp.size(); ++v)
        {
            const Vec3 p = imp.center(v);
            switch (kind)
            {
            case BuiltinImportance::uniform: imp.h[v] = 1.0; break;
            case BuiltinImportance::axis_cubic: imp.h[v] = std::pow(std::abs(p.y() - 1.0), 3); break;
            case BuiltinImportance::radial: imp.h[v] = p.squaredNorm(); break;
            }
        }
        if (mask_to_mesh)
        {
            std::vector<std::uint8_t> hit(imp.size(), 0);
            const Vec3 size = (imp.box.hi - imp.box.lo) / resolution;
            for (std::size_t f = 0; f < mesh.num_faces(); ++f)
            {
                const Tri & t = mesh.faces[f];
                const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
                std::array<int, 3> lo{}, hi{};
                for (int k = 0; k < 3; ++k)
                {
                    const double mn = std::min({a[k], b[k], c[k]}), mx = std::max({a[k], b[k], c[k]});
                    lo[k] = std::clamp(static_cast<int>(std::floor((mn - imp.box.lo[k]) / size[k])), 0, resolution - 1);
                    hi[k] = std::clamp(static_cast<int>(std::floor((mx - imp.box.lo[k]) / size[k])), 0, resolution - 1);
                }
                for (int z = lo[2]; z <= hi[2]; ++z)
                    for (int y = lo[1]; y <= hi[1]; ++y)
                        for (int x = lo[0]; x <= hi[0]; ++x)
                        {
                            const std::size_t v = imp.index(x, y, z);
                            if (!hit[v] && triangle_box_overlap(a, b, c, imp.voxel_bounds(v)))
                                hit[v] = 1;
                        }
            }
            for (std::size_t v = 0; v < imp.size(); ++v)
                if (!hit[v])
                    imp.h[v] = 0.0;
        }
        imp.normalize();
        return imp;
    }

    std::vector<std::size_t> multinomial(std::size_t trials, std::span<const double> rho, Rng & rng)
    {
        std::vector<std::size_t> counts(rho.size(), 0);
        double mass = 0.0;
        for (double p : rho)
            mass += p;
        std::size_t last = rho.size();
        for (std::size_t i = 0; i < rho.size(); ++i)
            if (rho[i] > 0.0)
                last = i;
        std::size_t left = trials;
        for (std::size_t i = 0; i < rho.size() && left > 0; ++i)
        {
            if (rho[i] <= 0.0)
                continue;
            const double p = std::min(1.0, rho[i] / mass);
            mass -= rho[i];
            if (i == last || p >= 1.0)
            {
                counts[i] = left;
                left = 0;
                break;
            }
            std::binomial_distribution<std::size_t> draw(left, p);
            counts[i] = draw(rng.engine());
            left -= counts[i];
        }
        return counts;
    }

    namespace
    {
        // Convex weights of a located point: clamps round-off negatives.
        std::array<double, 4> convex(std::array<double, 4> b)
        {
            double sum = 0.0;
            for (double & x : b)
            {
                x = std::max(x, 0.0);
                sum += x;
            }
            for (double & x : b)
                x /= sum;
            return b;
        }
    }

    ResampleResult resample(const PointSet & ps, const TetGrid & grid, const VoxelImportance & importance, std::size_t k,
                            std::uint64_t seed)
    {
        check_generation(grid, ps);
        ResampleResult result;
        const auto passive = passive_points(grid, ps);
        std::vector<std::uint8_t> drop(ps.size(), 0);
        for (int i : passive)
            drop[i] = 1;
        PointSet & out = result.points;
        out.degree = ps.degree;
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            if (!drop[i])
            {
                out.push_back(ps.positions[i], ps.sdf[i], ps.coeffs(i));
                result.kept.push_back(static_cast<int>(i));
            }
        }
        result.removed = passive.size();

        Rng rng(seed);
        const bool has_mass = std::any_of(importance.rho.begin(), importance.rho.end(), [](double p) { return p > 0.0; });
        std::vector<std::size_t> counts;
        if (has_mass)
        {
            counts = multinomial(k, importance.rho, rng);
        }

        Vec3 centroid = Vec3::Zero();
        for (const Vec3 & p : grid.points)
            centroid += p;
        centroid /= static_cast<double>(grid.num_points());

        const int q = ps.coeffs_per_point();
        std::vector<double> coeffs(q);
        int hint = 0;
        auto add_point = [&](const std::function<Vec3()> & draw) {
            Vec3 p = draw();
            auto loc = locate(grid, p, hint, rng.bits());
            for (int attempt = 0; !loc && attempt < kHullRetries; ++attempt)
            {
                p = draw();
                loc = locate(grid, p, hint, rng.bits());
            }
            if (!loc)
            {
                // Pull toward the centroid until inside the hull, then jitter
                // along the segment.
                ++result.clamped;
                double t_in = 0.0, t_out = 1.0;
                for (int it = 0; it < 40; ++it)
                {
                    const double t = 0.5 * (t_in + t_out);
                    if (locate(grid, centroid + t * (p - centroid), hint, 0))
                        t_in = t;
                    else
                        t_out = t;
                }
                p = centroid + t_in * (1.0 - 1e-3 * rng.uniform()) * (p - centroid);
                loc = locate(grid, p, hint, 0);
                if (!loc)
                {
                    p = centroid;
                    loc = locate(grid, p, hint, 0);
                }
                if (!loc)
                {
                    throw Error(ErrorKind::internal, "cannot place a resampled point inside the hull");
                }
            }
            hint = loc->tet;
            const Tet & tet = grid.tets[loc->tet];
            const auto w = convex(loc->bary);
            double s = 0.0;
            std::fill(coeffs.begin(), coeffs.end(), 0.0);
            for (int a = 0; a < 4; ++a)
            {
                s += w[a] * ps.sdf[tet[a]];
                const auto c = ps.coeffs(tet[a]);
                for (int j = 0; j < q; ++j)
                    coeffs[j] += w[a] * c[j];
            }
            out.push_back(p, s, coeffs);
            ++result.added;
        };

        if (has_mass)
        {
            for (std::size_t v = 0; v < counts.size(); ++v)
            {
                const std::size_t n = counts[v];
                if (n == 0)
                    continue;
                const Aabb vb = importance.voxel_bounds(v);
                const int m = std::max(1, static_cast<int>(std::ceil(std::cbrt(static_cast<double>(n)))));
                const auto strata = static_cast<std::size_t>(m) * m * m;
                std::vector<std::size_t> order(strata);
                std::iota(order.begin(), order.end(), 0);
                std::shuffle(order.begin(), order.end(), rng.engine());
                for (std::size_t j = 0; j < n; ++j)
                {
                    const std::size_t cell = order[j % strata];
                    const Vec3 cell_lo(static_cast<double>(cell % m), static_cast<double>((cell / m) % m), static_cast<double>(cell / (m * m)));
                    const Vec3 size = (vb.hi - vb.lo) / m;
                    bool first = true;
                    add_point([&] {
                        // Later draws after a hull miss sample the whole voxel.
                        const Vec3 u(rng.uniform(), rng.uniform(), rng.uniform());
                        const Vec3 p = first ? Vec3(vb.lo + (cell_lo + u).cwiseProduct(size))
                                             : Vec3(vb.lo + u.cwiseProduct(vb.hi - vb.lo));
                        first = false;
                        return p;
                    });
                }
            }
        }
        else if (k > 0)
        {
            const Aabb & b = importance.box;
            for (std::size_t j = 0; j < k; ++j)
            {
                add_point([&] {
                    return Vec3(rng.uniform(b.lo.x(), b.hi.x()), rng.uniform(b.lo.y(), b.hi.y()), rng.uniform(b.lo.z(), b.hi.z()));
                });
            }
        }

        out = perturb_duplicates(out);
        out.generation = ps.generation + 1;
        return result;
    }
}
