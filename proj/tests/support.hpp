#pragma once

#include "deltet/grid.hpp"
#include "deltet/mesh.hpp"
#include "deltet/rng.hpp"

#include <functional>

namespace deltet::testing
{
    inline PointSet make_points(std::vector<Vec3> pts, std::vector<double> sdf = {}, int degree = 0)
    {
        PointSet ps;
        ps.degree = degree;
        ps.positions = std::move(pts);
        ps.sdf = sdf.empty() ? std::vector<double>(ps.positions.size(), 1.0) : std::move(sdf);
        ps.sh.assign(ps.positions.size() * sh_count(degree), 0.0);
        return ps;
    }

    /// Uniform points in [-r, r]^3 plus the 8 box corners, with sdf from f.
    inline PointSet cube_points(std::size_t n, double r, std::uint64_t seed, const std::function<double(const Vec3 &)> & f,
                                int degree = 0, double sh_scale = 0.0)
    {
        Rng rng(seed);
        std::vector<Vec3> pts;
        for (int c = 0; c < 8; ++c)
        {
            pts.push_back(Vec3(c & 1 ? r : -r, c & 2 ? r : -r, c & 4 ? r : -r));
        }
        while (pts.size() < n)
        {
            pts.push_back(Vec3(rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)));
        }
        PointSet ps = make_points(std::move(pts), {}, degree);
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            ps.sdf[i] = f(ps.positions[i]);
        }
        for (double & c : ps.sh)
        {
            c = sh_scale * rng.uniform(-1.0, 1.0);
        }
        return ps;
    }

    inline double sphere_sdf(const Vec3 & p, double r = 0.5) { return p.norm() - r; }

    inline double torus_sdf(const Vec3 & p, double R = 0.5, double r = 0.2)
    {
        const double q = std::hypot(p.x(), p.y()) - R;
        return std::hypot(q, p.z()) - r;
    }

    /// Signed volume enclosed by a closed mesh (divergence theorem).
    inline double enclosed_volume(const SurfaceMesh & m)
    {
        double v = 0.0;
        for (const Tri & t : m.faces)
        {
            v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
        }
        return v;
    }

    /// Axis-aligned box surface, 8 vertices, 12 outward faces, offset by `base`.
    inline void append_box(SurfaceMesh & m, const Vec3 & lo, const Vec3 & hi)
    {
        const int base = static_cast<int>(m.vertices.size());
        for (int c = 0; c < 8; ++c)
        {
            m.vertices.push_back(Vec3(c & 1 ? hi.x() : lo.x(), c & 2 ? hi.y() : lo.y(), c & 4 ? hi.z() : lo.z()));
        }
        const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
        for (const auto & q : quads)
        {
            m.faces.push_back({base + q[0], base + q[1], base + q[2]});
            m.faces.push_back({base + q[0], base + q[2], base + q[3]});
        }
    }
}
