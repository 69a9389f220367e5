#pragma once

#include "mesh.hpp"
#include "supervise.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace deltet
{
    /// Exact nearest-neighbor queries over a fixed 3D point set (kd-tree,
    /// median split on the widest axis). Ties go to the lower index.
    class PointTree
    {
    public:
        PointTree() = default;
        explicit PointTree(std::vector<Vec3> points);

        std::size_t size() const { return points_.size(); }
        const std::vector<Vec3> & points() const { return points_; }

        struct Neighbor
        {
            int index = -1;
            double squared_distance = 0.0;
        };

        Neighbor nearest(const Vec3 & q) const;

        /// The k nearest points sorted by (distance, index); `skip` excludes
        /// one index (the query itself when querying the tree's own points).
        std::vector<Neighbor> knn(const Vec3 & q, std::size_t k, int skip = -1) const;

    private:
        struct Node
        {
            int begin = 0, end = 0;  // range into order_
            int left = -1, right = -1;
            int axis = -1;  // -1 for leaves
            double split = 0.0;
            Vec3 lo, hi;
        };

        int build(int begin, int end);
        void nearest_rec(int node, const Vec3 & q, Neighbor & best) const;
        void knn_rec(int node, const Vec3 & q, std::size_t k, int skip, std::vector<Neighbor> & heap) const;

        std::vector<Vec3> points_;
        std::vector<int> order_;
        std::vector<Node> nodes_;
    };

    /// Distance from every query point to its nearest point in `tree`.
    std::vector<double> nearest_distances(const PointTree & tree, std::span<const Vec3> queries, Exec exec = Exec::parallel);

    /// 0.5 (mean_a d(a, B) + mean_b d(b, A)), unsquared. Throws invalid-argument on empty input.
    double chamfer(std::span<const Vec3> a, std::span<const Vec3> b, Exec exec = Exec::parallel);

    constexpr double kF1Threshold = 0.001;

    /// 2TP / (2TP + FP + FN): TP counts points of a within `threshold` of b,
    /// FP the remaining points of a, FN the points of b farther than
    /// `threshold` from a.
    double f1_score(std::span<const Vec3> a, std::span<const Vec3> b, double threshold = kF1Threshold, Exec exec = Exec::parallel);

    struct OrientedPoint
    {
        Vec3 position = Vec3::Zero();
        Vec3 normal = Vec3::Zero();
    };

    std::vector<OrientedPoint> oriented(const std::vector<SurfaceSample> & samples);

    constexpr std::size_t kEdgeNeighbors = 10;
    constexpr double kEdgeDotThreshold = 0.2;

    /// Points whose mean normal dot product with their k nearest neighbors
    /// falls below `dot_threshold`. Throws invalid-argument with fewer than
    /// k + 1 points.
    std::vector<OrientedPoint> edge_points(std::span<const OrientedPoint> samples, std::size_t k = kEdgeNeighbors,
                                           double dot_threshold = kEdgeDotThreshold, Exec exec = Exec::parallel);

    struct TriangleShape
    {
        double aspect_ratio = 0.0;  // longest edge / shortest altitude
        double radius_ratio = 0.0;  // circumradius / (2 inradius)
        double min_angle = 0.0;     // degrees
        bool degenerate = false;
    };

    TriangleShape triangle_shape(const Vec3 & a, const Vec3 & b, const Vec3 & c);

    struct TriangleQuality
    {
        double ar4 = 0.0;   // % with aspect ratio > 4
        double rr4 = 0.0;   // % with radius ratio > 4
        double sa10 = 0.0;  // % with min angle < 10 degrees
    };

    /// Degenerate triangles count toward all three percentages. Throws
    /// invalid-argument for an empty mesh.
    TriangleQuality triangle_quality(const SurfaceMesh & mesh);

    /// Exact test (orientation predicates); touching counts as intersecting.
    bool triangles_intersect(const Vec3 & a0, const Vec3 & a1, const Vec3 & a2, const Vec3 & b0, const Vec3 & b1, const Vec3 & b2);

    /// Faces intersecting some face they share no vertex with.
    std::vector<std::uint8_t> self_intersecting_faces(const SurfaceMesh & mesh, Exec exec = Exec::parallel);

    /// 100 * intersecting faces / faces; 0 for an empty mesh.
    double self_intersections(const SurfaceMesh & mesh, Exec exec = Exec::parallel);

    struct NormalConsistency
    {
        double nc = 0.0;   // mean |n_a . n_b| over nearest pairs
        double in5 = 0.0;  // % of pairs whose unoriented angle exceeds 5 degrees
    };

    /// Pairs each point of a with its nearest point of b. Throws invalid-argument on empty input.
    NormalConsistency normal_consistency(std::span<const OrientedPoint> a, std::span<const OrientedPoint> b, Exec exec = Exec::parallel);

    /// Two-sided Hausdorff distance estimated from the vertices plus `samples`
    /// area-uniform points of each mesh, each measured exactly against the
    /// other mesh's triangles. Throws invalid-argument for an empty mesh.
    double hausdorff(const SurfaceMesh & a, const SurfaceMesh & b, std::size_t samples = 20000, std::uint64_t seed = 0,
                     Exec exec = Exec::parallel);

    struct MetricReport
    {
        double cd = 0.0;
        double f1 = 0.0;
        double ecd = 0.0;
        double ef1 = 0.0;
        double nc = 0.0;
        double in5 = 0.0;
        double ar4 = 0.0;
        double rr4 = 0.0;
        double sa10 = 0.0;
        double si = 0.0;
        std::size_t v_count = 0;
        std::size_t f_count = 0;
    };

    struct MetricOptions
    {
        std::size_t samples = 100000;
        std::uint64_t seed = 0;
        double f1_threshold = kF1Threshold;
        std::size_t edge_neighbors = kEdgeNeighbors;
        double edge_dot_threshold = kEdgeDotThreshold;
        Exec exec = Exec::parallel;
    };

    /// Full suite for a predicted mesh against ground truth. Both meshes are
    /// sampled with the same seed. ECD / EF1 when neither sample set has
    /// edge points: 0 / 1; when exactly one has none: +inf / 0.
    MetricReport evaluate_meshes(const SurfaceMesh & pred, const SurfaceMesh & gt, const MetricOptions & options = {});

    /// Header row plus one value row, in MetricReport field order.
    void write_metrics_csv(std::ostream & out, const MetricReport & report);
}
