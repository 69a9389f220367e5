#pragma once

#include "mesh.hpp"

#include <limits>
#include <vector>

namespace deltet
{
    struct Aabb
    {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

        void expand(const Vec3 & p)
        {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }

        void expand(const Aabb & b)
        {
            lo = lo.cwiseMin(b.lo);
            hi = hi.cwiseMax(b.hi);
        }

        bool overlaps(const Aabb & b) const { return (lo.array() <= b.hi.array()).all() && (b.lo.array() <= hi.array()).all(); }

        double squared_distance(const Vec3 & p) const
        {
            const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(0.0);
            return d.squaredNorm();
        }

        Vec3 center() const { return 0.5 * (lo + hi); }
    };

    /// Binary bounding volume hierarchy over boxes (median split on the
    /// longest axis of the centroid bounds; deterministic).
    class Bvh
    {
    public:
        Bvh() = default;
        explicit Bvh(const std::vector<Aabb> & boxes);

        bool empty() const { return nodes_.empty(); }

        /// Calls f(primitive) for every primitive whose box overlaps `box`.
        template <class F>
        void overlap(const Aabb & box, F && f) const
        {
            if (nodes_.empty())
                return;
            int stack[128];
            int top = 0;
            stack[top++] = 0;
            while (top > 0)
            {
                const Node & n = nodes_[stack[--top]];
                if (!n.box.overlaps(box))
                    continue;
                if (n.count > 0)
                {
                    for (int k = 0; k < n.count; ++k)
                        f(prims_[n.first + k]);
                }
                else
                {
                    stack[top++] = n.first;
                    stack[top++] = n.first + 1;
                }
            }
        }

        /// Nearest-primitive search; dist(prim) returns a squared distance.
        /// `best` carries the current bound in and the result out.
        template <class F>
        int nearest(const Vec3 & p, F && dist, double & best) const
        {
            int best_prim = -1;
            if (nodes_.empty())
                return best_prim;
            std::pair<double, int> stack[128];
            int top = 0;
            stack[top++] = {nodes_[0].box.squared_distance(p), 0};
            while (top > 0)
            {
                const auto [bound, id] = stack[--top];
                if (bound > best)
                    continue;
                const Node & n = nodes_[id];
                if (n.count > 0)
                {
                    for (int k = 0; k < n.count; ++k)
                    {
                        const int prim = prims_[n.first + k];
                        const double d = dist(prim);
                        if (d < best || (d == best && prim < best_prim))
                        {
                            best = d;
                            best_prim = prim;
                        }
                    }
                }
                else
                {
                    const double da = nodes_[n.first].box.squared_distance(p);
                    const double db = nodes_[n.first + 1].box.squared_distance(p);
                    // Visit the closer child first.
                    if (da < db)
                    {
                        stack[top++] = {db, n.first + 1};
                        stack[top++] = {da, n.first};
                    }
                    else
                    {
                        stack[top++] = {da, n.first};
                        stack[top++] = {db, n.first + 1};
                    }
                }
            }
            return best_prim;
        }

        /// Calls f(primitive) for every primitive whose box the ray o + t d,
        /// t in [0, tmax], passes through.
        template <class F>
        void ray(const Vec3 & o, const Vec3 & d, double tmax, F && f) const
        {
            if (nodes_.empty())
                return;
            const Vec3 inv = d.cwiseInverse();
            int stack[128];
            int top = 0;
            stack[top++] = 0;
            while (top > 0)
            {
                const Node & n = nodes_[stack[--top]];
                const Vec3 t0 = (n.box.lo - o).cwiseProduct(inv);
                const Vec3 t1 = (n.box.hi - o).cwiseProduct(inv);
                const double tn = std::max(t0.cwiseMin(t1).maxCoeff(), 0.0);
                const double tf = std::min(t0.cwiseMax(t1).minCoeff(), tmax);
                if (tn > tf)
                    continue;
                if (n.count > 0)
                {
                    for (int k = 0; k < n.count; ++k)
                        f(prims_[n.first + k]);
                }
                else
                {
                    stack[top++] = n.first;
                    stack[top++] = n.first + 1;
                }
            }
        }

    private:
        struct Node
        {
            Aabb box;
            int first = 0;  // leaf: first primitive slot; inner: left child
            int count = 0;  // > 0 for leaves
        };

        std::vector<Node> nodes_;
        std::vector<int> prims_;
    };

    struct ClosestPoint
    {
        Vec3 point = Vec3::Zero();
        std::array<double, 3> bary{};  // weights of the triangle's vertices
    };

    /// Closest point on triangle (a, b, c) to p.
    ClosestPoint closest_point_on_triangle(const Vec3 & p, const Vec3 & a, const Vec3 & b, const Vec3 & c);

    /// Moller-Trumbore; returns t >= 0 of the hit, or a negative value.
    double ray_triangle(const Vec3 & o, const Vec3 & d, const Vec3 & a, const Vec3 & b, const Vec3 & c);

    /// Triangle mesh with a BVH: closest-point and inside queries.
    class MeshIndex
    {
    public:
        MeshIndex() = default;
        explicit MeshIndex(const SurfaceMesh & mesh);

        const SurfaceMesh & mesh() const { return mesh_; }
        const Bvh & bvh() const { return bvh_; }

        struct Hit
        {
            int face = -1;
            ClosestPoint cp;
            double squared_distance = std::numeric_limits<double>::infinity();
        };

        Hit closest(const Vec3 & p) const;

        /// Ray parity, majority over three fixed directions. Meaningful for
        /// closed meshes.
        bool inside(const Vec3 & p) const;

    private:
        int crossings(const Vec3 & p, const Vec3 & d) const;

        SurfaceMesh mesh_;
        Bvh bvh_;
    };
}
