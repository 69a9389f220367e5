#include "deltet/bvh.hpp"

#include <algorithm>
#include <numeric>

namespace deltet
{
    namespace
    {
        constexpr int kLeafSize = 4;
    }

    Bvh::Bvh(const std::vector<Aabb> & boxes)
    {
        if (boxes.empty())
        {
            return;
        }
        prims_.resize(boxes.size());
        std::iota(prims_.begin(), prims_.end(), 0);
        std::vector<Vec3> centers(boxes.size());
        for (std::size_t i = 0; i < boxes.size(); ++i)
        {
            centers[i] = boxes[i].center();
        }
        nodes_.reserve(2 * boxes.size() / kLeafSize + 2);
        nodes_.push_back({});

        struct Task
        {
            int node, begin, end;
        };
        std::vector<Task> tasks{{0, 0, static_cast<int>(boxes.size())}};
        while (!tasks.empty())
        {
            const Task task = tasks.back();
            tasks.pop_back();
            Aabb box, cbox;
            for (int k = task.begin; k < task.end; ++k)
            {
                box.expand(boxes[prims_[k]]);
                cbox.expand(centers[prims_[k]]);
            }
            nodes_[task.node].box = box;
            const int n = task.end - task.begin;
            if (n <= kLeafSize)
            {
                nodes_[task.node].first = task.begin;
                nodes_[task.node].count = n;
                continue;
            }
            int axis = 0;
            (cbox.hi - cbox.lo).maxCoeff(&axis);
            const int mid = task.begin + n / 2;
            std::nth_element(prims_.begin() + task.begin, prims_.begin() + mid, prims_.begin() + task.end, [&](int a, int b) {
                const double ca = centers[a][axis], cb = centers[b][axis];
                return ca < cb || (ca == cb && a < b);
            });
            const int left = static_cast<int>(nodes_.size());
            nodes_.push_back({});
            nodes_.push_back({});
            nodes_[task.node].first = left;
            nodes_[task.node].count = 0;
            tasks.push_back({left, task.begin, mid});
            tasks.push_back({left + 1, mid, task.end});
        }
    }

    ClosestPoint closest_point_on_triangle(const Vec3 & p, const Vec3 & a, const Vec3 & b, const Vec3 & c)
    {
        // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
        const Vec3 ab = b - a, ac = c - a, ap = p - a;
        const double d1 = ab.dot(ap), d2 = ac.dot(ap);
        if (d1 <= 0.0 && d2 <= 0.0)
            return {a, {1, 0, 0}};
        const Vec3 bp = p - b;
        const double d3 = ab.dot(bp), d4 = ac.dot(bp);
        if (d3 >= 0.0 && d4 <= d3)
            return {b, {0, 1, 0}};
        const double vc = d1 * d4 - d3 * d2;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        {
            const double v = d1 / (d1 - d3);
            return {a + v * ab, {1 - v, v, 0}};
        }
        const Vec3 cp = p - c;
        const double d5 = ab.dot(cp), d6 = ac.dot(cp);
        if (d6 >= 0.0 && d5 <= d6)
            return {c, {0, 0, 1}};
        const double vb = d5 * d2 - d1 * d6;
        if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        {
            const double w = d2 / (d2 - d6);
            return {a + w * ac, {1 - w, 0, w}};
        }
        const double va = d3 * d6 - d5 * d4;
        if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        {
            const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return {b + w * (c - b), {0, 1 - w, w}};
        }
        const double denom = 1.0 / (va + vb + vc);
        const double v = vb * denom, w = vc * denom;
        return {a + ab * v + ac * w, {1 - v - w, v, w}};
    }

    double ray_triangle(const Vec3 & o, const Vec3 & d, const Vec3 & a, const Vec3 & b, const Vec3 & c)
    {
        const Vec3 e1 = b - a, e2 = c - a;
        const Vec3 pv = d.cross(e2);
        const double det = e1.dot(pv);
        if (det == 0.0)
            return -1.0;
        const double inv = 1.0 / det;
        const Vec3 tv = o - a;
        const double u = tv.dot(pv) * inv;
        if (u < 0.0 || u > 1.0)
            return -1.0;
        const Vec3 qv = tv.cross(e1);
        const double v = d.dot(qv) * inv;
        if (v < 0.0 || u + v > 1.0)
            return -1.0;
        const double t = e2.dot(qv) * inv;
        return t >= 0.0 ? t : -1.0;
    }

    MeshIndex::MeshIndex(const SurfaceMesh & mesh) : mesh_(mesh)
    {
        std::vector<Aabb> boxes(mesh.num_faces());
        for (std::size_t f = 0; f < mesh.num_faces(); ++f)
        {
            for (int v : mesh.faces[f])
            {
                boxes[f].expand(mesh.vertices[v]);
            }
        }
        bvh_ = Bvh(boxes);
    }

    MeshIndex::Hit MeshIndex::closest(const Vec3 & p) const
    {
        Hit hit;
        double best = std::numeric_limits<double>::infinity();
        hit.face = bvh_.nearest(
            p,
            [&](int f) {
                const Tri & t = mesh_.faces[f];
                return (closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]).point - p)
                    .squaredNorm();
            },
            best);
        if (hit.face >= 0)
        {
            const Tri & t = mesh_.faces[hit.face];
            hit.cp = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]);
            hit.squared_distance = best;
        }
        return hit;
    }

    int MeshIndex::crossings(const Vec3 & p, const Vec3 & d) const
    {
        int count = 0;
        bvh_.ray(p, d, std::numeric_limits<double>::infinity(), [&](int f) {
            const Tri & t = mesh_.faces[f];
            if (ray_triangle(p, d, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]]) >= 0.0)
            {
                ++count;
            }
        });
        return count;
    }

    bool MeshIndex::inside(const Vec3 & p) const
    {
        static const Vec3 dirs[3] = {Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259).normalized(),
                                     Vec3(-0.2672612419124244, 0.8017837257372732, -0.5345224838248488).normalized(),
                                     Vec3(0.7071067811865476, -0.3015113445777636, 0.6396021490668313).normalized()};
        int votes = 0;
        for (const Vec3 & d : dirs)
        {
            votes += crossings(p, d) & 1;
        }
        return votes >= 2;
    }
}
