#include "deltet/metrics.hpp"

#include "deltet/bvh.hpp"
#include "deltet/predicates.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace deltet
{
    using predicates::orient2d;
    using predicates::orient3d;

    namespace
    {
        constexpr int kLeafSize = 8;

        bool closer(const PointTree::Neighbor & a, const PointTree::Neighbor & b)
        {
            return a.squared_distance < b.squared_distance ||
                   (a.squared_distance == b.squared_distance && a.index < b.index);
        }

        double box_distance(const Vec3 & lo, const Vec3 & hi, const Vec3 & q)
        {
            return (lo - q).cwiseMax(q - hi).cwiseMax(0.0).squaredNorm();
        }

        void require_nonempty(std::size_t a, std::size_t b, const char * what)
        {
            if (a == 0 || b == 0)
                throw Error(ErrorKind::invalid_argument, std::string(what) + ": empty point set");
        }

        std::vector<Vec3> positions_of(std::span<const OrientedPoint> pts)
        {
            std::vector<Vec3> out(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i)
                out[i] = pts[i].position;
            return out;
        }

        double mean(const std::vector<double> & xs)
        {
            double s = 0.0;
            for (double x : xs)
                s += x;
            return s / static_cast<double>(xs.size());
        }

        double chamfer_trees(const PointTree & ta, const PointTree & tb, Exec exec)
        {
            const double ab = mean(nearest_distances(tb, ta.points(), exec));
            const double ba = mean(nearest_distances(ta, tb.points(), exec));
            return 0.5 * (ab + ba);
        }

        double f1_trees(const PointTree & ta, const PointTree & tb, double threshold, Exec exec)
        {
            const std::vector<double> da = nearest_distances(tb, ta.points(), exec);
            const std::vector<double> db = nearest_distances(ta, tb.points(), exec);
            const auto tp = static_cast<double>(std::count_if(da.begin(), da.end(), [&](double d) { return d <= threshold; }));
            const double fp = static_cast<double>(da.size()) - tp;
            const auto fn = static_cast<double>(std::count_if(db.begin(), db.end(), [&](double d) { return d > threshold; }));
            return 2.0 * tp / (2.0 * tp + fp + fn);
        }

        // 2D helpers on a projection that drops one axis.
        struct Plane2
        {
            int u = 0, v = 1;

            explicit Plane2(const Vec3 & normal)
            {
                int drop = 0;
                normal.cwiseAbs().maxCoeff(&drop);
                u = (drop + 1) % 3;
                v = (drop + 2) % 3;
            }

            int orient(const Vec3 & a, const Vec3 & b, const Vec3 & c) const
            {
                return orient2d(a[u], a[v], b[u], b[v], c[u], c[v]);
            }
        };

        bool on_segment_2d(const Plane2 & pl, const Vec3 & p, const Vec3 & q, const Vec3 & x)
        {
            // x collinear with pq; check the bounding interval.
            auto inside = [](double a, double b, double t) { return std::min(a, b) <= t && t <= std::max(a, b); };
            return inside(p[pl.u], q[pl.u], x[pl.u]) && inside(p[pl.v], q[pl.v], x[pl.v]);
        }

        bool segments_intersect_2d(const Plane2 & pl, const Vec3 & p1, const Vec3 & p2, const Vec3 & q1, const Vec3 & q2)
        {
            const int d1 = pl.orient(q1, q2, p1), d2 = pl.orient(q1, q2, p2);
            const int d3 = pl.orient(p1, p2, q1), d4 = pl.orient(p1, p2, q2);
            if (d1 * d2 < 0 && d3 * d4 < 0)
                return true;
            return (d1 == 0 && on_segment_2d(pl, q1, q2, p1)) || (d2 == 0 && on_segment_2d(pl, q1, q2, p2)) ||
                   (d3 == 0 && on_segment_2d(pl, p1, p2, q1)) || (d4 == 0 && on_segment_2d(pl, p1, p2, q2));
        }

        bool point_in_triangle_2d(const Plane2 & pl, const Vec3 & p, const Vec3 & a, const Vec3 & b, const Vec3 & c)
        {
            const int o1 = pl.orient(a, b, p), o2 = pl.orient(b, c, p), o3 = pl.orient(c, a, p);
            return (o1 >= 0 && o2 >= 0 && o3 >= 0) || (o1 <= 0 && o2 <= 0 && o3 <= 0);
        }

        bool segment_triangle_2d(const Plane2 & pl, const Vec3 & p, const Vec3 & q, const Vec3 & a, const Vec3 & b, const Vec3 & c)
        {
            return point_in_triangle_2d(pl, p, a, b, c) || point_in_triangle_2d(pl, q, a, b, c) ||
                   segments_intersect_2d(pl, p, q, a, b) || segments_intersect_2d(pl, p, q, b, c) ||
                   segments_intersect_2d(pl, p, q, c, a);
        }

        bool segment_triangle(const Vec3 & p, const Vec3 & q, const Vec3 & a, const Vec3 & b, const Vec3 & c)
        {
            const int s1 = orient3d(a, b, c, p), s2 = orient3d(a, b, c, q);
            if (s1 * s2 > 0)
                return false;
            if (s1 == 0 && s2 == 0)
                return segment_triangle_2d(Plane2((b - a).cross(c - a)), p, q, a, b, c);
            const int o1 = orient3d(p, q, a, b), o2 = orient3d(p, q, b, c), o3 = orient3d(p, q, c, a);
            return (o1 >= 0 && o2 >= 0 && o3 >= 0) || (o1 <= 0 && o2 <= 0 && o3 <= 0);
        }
    }

    PointTree::PointTree(std::vector<Vec3> points) : points_(std::move(points))
    {
        order_.resize(points_.size());
        for (std::size_t i = 0; i < order_.size(); ++i)
            order_[i] = static_cast<int>(i);
        if (!points_.empty())
            build(0, static_cast<int>(points_.size()));
    }

    int PointTree::build(int begin, int end)
    {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        Node n;
        n.begin = begin;
        n.end = end;
        n.lo = n.hi = points_[order_[begin]];
        for (int k = begin + 1; k < end; ++k)
        {
            n.lo = n.lo.cwiseMin(points_[order_[k]]);
            n.hi = n.hi.cwiseMax(points_[order_[k]]);
        }
        if (end - begin > kLeafSize)
        {
            int axis = 0;
            (n.hi - n.lo).maxCoeff(&axis);
            const int mid = begin + (end - begin) / 2;
            std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, [&](int a, int b) {
                const double pa = points_[a][axis], pb = points_[b][axis];
                return pa < pb || (pa == pb && a < b);
            });
            n.axis = axis;
            n.split = points_[order_[mid]][axis];
            n.left = build(begin, mid);
            n.right = build(mid, end);
        }
        nodes_[id] = n;
        return id;
    }

    void PointTree::nearest_rec(int id, const Vec3 & q, Neighbor & best) const
    {
        const Node & n = nodes_[id];
        if (box_distance(n.lo, n.hi, q) > best.squared_distance)
            return;
        if (n.axis < 0)
        {
            for (int k = n.begin; k < n.end; ++k)
            {
                const Neighbor c{order_[k], (points_[order_[k]] - q).squaredNorm()};
                if (closer(c, best))
                    best = c;
            }
            return;
        }
        const bool left_first = q[n.axis] < n.split;
        nearest_rec(left_first ? n.left : n.right, q, best);
        nearest_rec(left_first ? n.right : n.left, q, best);
    }

    PointTree::Neighbor PointTree::nearest(const Vec3 & q) const
    {
        if (points_.empty())
            throw Error(ErrorKind::invalid_argument, "nearest: empty point set");
        Neighbor best{-1, std::numeric_limits<double>::infinity()};
        nearest_rec(0, q, best);
        return best;
    }

    void PointTree::knn_rec(int id, const Vec3 & q, std::size_t k, int skip, std::vector<Neighbor> & heap) const
    {
        const Node & n = nodes_[id];
        if (heap.size() == k && box_distance(n.lo, n.hi, q) > heap.front().squared_distance)
            return;
        if (n.axis < 0)
        {
            for (int j = n.begin; j < n.end; ++j)
            {
                const int idx = order_[j];
                if (idx == skip)
                    continue;
                const Neighbor c{idx, (points_[idx] - q).squaredNorm()};
                if (heap.size() < k)
                {
                    heap.push_back(c);
                    std::push_heap(heap.begin(), heap.end(), closer);
                }
                else if (closer(c, heap.front()))
                {
                    std::pop_heap(heap.begin(), heap.end(), closer);
                    heap.back() = c;
                    std::push_heap(heap.begin(), heap.end(), closer);
                }
            }
            return;
        }
        const bool left_first = q[n.axis] < n.split;
        knn_rec(left_first ? n.left : n.right, q, k, skip, heap);
        knn_rec(left_first ? n.right : n.left, q, k, skip, heap);
    }

    std::vector<PointTree::Neighbor> PointTree::knn(const Vec3 & q, std::size_t k, int skip) const
    {
        std::vector<Neighbor> heap;
        if (k == 0 || points_.empty())
            return heap;
        heap.reserve(k);
        knn_rec(0, q, k, skip, heap);
        std::sort_heap(heap.begin(), heap.end(), closer);
        return heap;
    }

    std::vector<double> nearest_distances(const PointTree & tree, std::span<const Vec3> queries, Exec exec)
    {
        std::vector<double> d(queries.size());
        const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            d[i] = std::sqrt(tree.nearest(queries[i]).squared_distance);
        return d;
    }

    double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, Exec exec)
    {
        require_nonempty(a.size(), b.size(), "chamfer");
        const PointTree ta(std::vector<Vec3>(a.begin(), a.end()));
        const PointTree tb(std::vector<Vec3>(b.begin(), b.end()));
        return chamfer_trees(ta, tb, exec);
    }

    double f1_score(std::span<const Vec3> a, std::span<const Vec3> b, double threshold, Exec exec)
    {
        require_nonempty(a.size(), b.size(), "f1_score");
        if (!(threshold >= 0.0))
            throw Error(ErrorKind::invalid_argument, "f1_score: negative threshold");
        const PointTree ta(std::vector<Vec3>(a.begin(), a.end()));
        const PointTree tb(std::vector<Vec3>(b.begin(), b.end()));
        return f1_trees(ta, tb, threshold, exec);
    }

    std::vector<OrientedPoint> oriented(const std::vector<SurfaceSample> & samples)
    {
        std::vector<OrientedPoint> out(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i)
            out[i] = {samples[i].position, samples[i].normal};
        return out;
    }

    std::vector<OrientedPoint> edge_points(std::span<const OrientedPoint> samples, std::size_t k, double dot_threshold, Exec exec)
    {
        if (k == 0 || samples.size() < k + 1)
            throw Error(ErrorKind::invalid_argument, "edge_points: need at least k + 1 points");
        const PointTree tree(positions_of(samples));
        std::vector<std::uint8_t> edge(samples.size(), 0);
        const auto n = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
        for (std::ptrdiff_t i = 0; i < n; ++i)
        {
            const auto nb = tree.knn(samples[i].position, k, static_cast<int>(i));
            double dot = 0.0;
            for (const auto & x : nb)
                dot += samples[i].normal.dot(samples[x.index].normal);
            edge[i] = dot / static_cast<double>(nb.size()) < dot_threshold;
        }
        std::vector<OrientedPoint> out;
        for (std::size_t i = 0; i < samples.size(); ++i)
            if (edge[i])
                out.push_back(samples[i]);
        return out;
    }

    TriangleShape triangle_shape(const Vec3 & a, const Vec3 & b, const Vec3 & c)
    {
        TriangleShape s;
        const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
        const double area = 0.5 * (b - a).cross(c - a).norm();
        if (!(area > 0.0) || !std::isfinite(area))
        {
            s.degenerate = true;
            s.aspect_ratio = s.radius_ratio = std::numeric_limits<double>::infinity();
            s.min_angle = 0.0;
            return s;
        }
        const double lmax = std::max({la, lb, lc});
        s.aspect_ratio = lmax * lmax / (2.0 * area);
        const double semi = 0.5 * (la + lb + lc);
        s.radius_ratio = la * lb * lc * semi / (8.0 * area * area);
        auto angle = [](const Vec3 & u, const Vec3 & v) { return std::atan2(u.cross(v).norm(), u.dot(v)); };
        const double m = std::min({angle(b - a, c - a), angle(c - b, a - b), angle(a - c, b - c)});
        s.min_angle = m * 180.0 / std::numbers::pi;
        return s;
    }

    TriangleQuality triangle_quality(const SurfaceMesh & mesh)
    {
        if (mesh.empty())
            throw Error(ErrorKind::invalid_argument, "triangle_quality: empty mesh");
        std::size_t ar = 0, rr = 0, sa = 0;
        for (const Tri & t : mesh.faces)
        {
            const TriangleShape s = triangle_shape(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
            ar += s.degenerate || s.aspect_ratio > 4.0;
            rr += s.degenerate || s.radius_ratio > 4.0;
            sa += s.degenerate || s.min_angle < 10.0;
        }
        const double f = 100.0 / static_cast<double>(mesh.num_faces());
        return {f * static_cast<double>(ar), f * static_cast<double>(rr), f * static_cast<double>(sa)};
    }

    bool triangles_intersect(const Vec3 & a0, const Vec3 & a1, const Vec3 & a2, const Vec3 & b0, const Vec3 & b1, const Vec3 & b2)
    {
        const int sb0 = orient3d(a0, a1, a2, b0), sb1 = orient3d(a0, a1, a2, b1), sb2 = orient3d(a0, a1, a2, b2);
        if ((sb0 > 0 && sb1 > 0 && sb2 > 0) || (sb0 < 0 && sb1 < 0 && sb2 < 0))
            return false;
        const int sa0 = orient3d(b0, b1, b2, a0), sa1 = orient3d(b0, b1, b2, a1), sa2 = orient3d(b0, b1, b2, a2);
        if ((sa0 > 0 && sa1 > 0 && sa2 > 0) || (sa0 < 0 && sa1 < 0 && sa2 < 0))
            return false;
        if (sb0 == 0 && sb1 == 0 && sb2 == 0)
        {
            const Plane2 pl((a1 - a0).cross(a2 - a0));
            const Vec3 * A[3] = {&a0, &a1, &a2};
            const Vec3 * B[3] = {&b0, &b1, &b2};
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (segments_intersect_2d(pl, *A[i], *A[(i + 1) % 3], *B[j], *B[(j + 1) % 3]))
                        return true;
            return point_in_triangle_2d(pl, a0, b0, b1, b2) || point_in_triangle_2d(pl, b0, a0, a1, a2);
        }
        return segment_triangle(a0, a1, b0, b1, b2) || segment_triangle(a1, a2, b0, b1, b2) ||
               segment_triangle(a2, a0, b0, b1, b2) || segment_triangle(b0, b1, a0, a1, a2) ||
               segment_triangle(b1, b2, a0, a1, a2) || segment_triangle(b2, b0, a0, a1, a2);
    }

    std::vector<std::uint8_t> self_intersecting_faces(const SurfaceMesh & mesh, Exec exec)
    {
        const std::size_t nf = mesh.num_faces();
        std::vector<std::uint8_t> hit(nf, 0);
        if (nf == 0)
            return hit;
        std::vector<Aabb> boxes(nf);
        for (std::size_t f = 0; f < nf; ++f)
            for (int v : mesh.faces[f])
                boxes[f].expand(mesh.vertices[v]);
        const Bvh bvh(boxes);
        const auto n = static_cast<std::ptrdiff_t>(nf);
#pragma omp parallel for schedule(dynamic, 64) if (exec == Exec::parallel)
        for (std::ptrdiff_t f = 0; f < n; ++f)
        {
            const Tri & a = mesh.faces[f];
            bool found = false;
            bvh.overlap(boxes[f], [&](int g) {
                if (found || g == f)
                    return;
                const Tri & b = mesh.faces[g];
                for (int x : a)
                    for (int y : b)
                        if (x == y)
                            return;
                found = triangles_intersect(mesh.vertices[a[0]], mesh.vertices[a[1]], mesh.vertices[a[2]], mesh.vertices[b[0]],
                                            mesh.vertices[b[1]], mesh.vertices[b[2]]);
            });
            hit[f] = found;
        }
        return hit;
    }

    double self_intersections(const SurfaceMesh & mesh, Exec exec)
    {
        if (mesh.empty())
            return 0.0;
        const auto hit = self_intersecting_faces(mesh, exec);
        const auto count = static_cast<double>(std::count(hit.begin(), hit.end(), std::uint8_t{1}));
        return 100.0 * count / static_cast<double>(mesh.num_faces());
    }

    namespace
    {
        NormalConsistency normal_consistency_tree(std::span<const OrientedPoint> a, std::span<const OrientedPoint> b,
                                                  const PointTree & tb, Exec exec)
        {
            std::vector<double> dots(a.size());
            const auto n = static_cast<std::ptrdiff_t>(a.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
            for (std::ptrdiff_t i = 0; i < n; ++i)
            {
                const int j = tb.nearest(a[i].position).index;
                dots[i] = std::min(1.0, std::abs(a[i].normal.dot(b[j].normal)));
            }
            const double cos5 = std::cos(5.0 * std::numbers::pi / 180.0);
            NormalConsistency r;
            std::size_t off = 0;
            for (double d : dots)
            {
                r.nc += d;
                off += d < cos5;
            }
            r.nc /= static_cast<double>(dots.size());
            r.in5 = 100.0 * static_cast<double>(off) / static_cast<double>(dots.size());
            return r;
        }
    }

    NormalConsistency normal_consistency(std::span<const OrientedPoint> a, std::span<const OrientedPoint> b, Exec exec)
    {
        require_nonempty(a.size(), b.size(), "normal_consistency");
        const PointTree tb(positions_of(b));
        return normal_consistency_tree(a, b, tb, exec);
    }

    namespace
    {
        double one_sided(const SurfaceMesh & from, const MeshIndex & to, std::size_t samples, std::uint64_t seed, Exec exec)
        {
            std::vector<Vec3> pts = from.vertices;
            for (const SurfaceSample & s : sample_surface(from, samples, seed))
                pts.push_back(s.position);
            std::vector<double> d(pts.size());
            const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
            for (std::ptrdiff_t i = 0; i < n; ++i)
                d[i] = to.closest(pts[i]).squared_distance;
            return std::sqrt(*std::max_element(d.begin(), d.end()));
        }
    }

    double hausdorff(const SurfaceMesh & a, const SurfaceMesh & b, std::size_t samples, std::uint64_t seed, Exec exec)
    {
        if (a.empty() || b.empty())
            throw Error(ErrorKind::invalid_argument, "hausdorff: empty mesh");
        const MeshIndex ia(a), ib(b);
        return std::max(one_sided(a, ib, samples, seed, exec), one_sided(b, ia, samples, seed, exec));
    }

    MetricReport evaluate_meshes(const SurfaceMesh & pred, const SurfaceMesh & gt, const MetricOptions & options)
    {
        const auto sp = oriented(sample_surface(pred, options.samples, options.seed));
        const auto sg = oriented(sample_surface(gt, options.samples, options.seed));
        const PointTree tp(positions_of(sp)), tg(positions_of(sg));

        MetricReport r;
        r.cd = chamfer_trees(tp, tg, options.exec);
        r.f1 = f1_trees(tp, tg, options.f1_threshold, options.exec);

        const auto ep = edge_points(sp, options.edge_neighbors, options.edge_dot_threshold, options.exec);
        const auto eg = edge_points(sg, options.edge_neighbors, options.edge_dot_threshold, options.exec);
        if (ep.empty() && eg.empty())
        {
            r.ecd = 0.0;
            r.ef1 = 1.0;
        }
        else if (ep.empty() || eg.empty())
        {
            r.ecd = std::numeric_limits<double>::infinity();
            r.ef1 = 0.0;
        }
        else
        {
            const PointTree tep(positions_of(ep)), teg(positions_of(eg));
            r.ecd = chamfer_trees(tep, teg, options.exec);
            r.ef1 = f1_trees(tep, teg, options.f1_threshold, options.exec);
        }

        const NormalConsistency nc = normal_consistency_tree(sp, sg, tg, options.exec);
        r.nc = nc.nc;
        r.in5 = nc.in5;
        const TriangleQuality q = triangle_quality(pred);
        r.ar4 = q.ar4;
        r.rr4 = q.rr4;
        r.sa10 = q.sa10;
        r.si = self_intersections(pred, options.exec);
        r.v_count = pred.num_vertices();
        r.f_count = pred.num_faces();
        return r;
    }

    void write_metrics_csv(std::ostream & out, const MetricReport & r)
    {
        char buf[512];
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%zu,%zu\n", r.cd, r.f1, r.ecd, r.ef1,
                      r.nc, r.in5, r.ar4, r.rr4, r.sa10, r.si, r.v_count, r.f_count);
        out << "cd,f1,ecd,ef1,nc,in5,ar4,rr4,sa10,si,v_count,f_count\n" << buf;
    }
}
