#pragma once

#include "bvh.hpp"
#include "grid.hpp"
#include "rng.hpp"
#include "supervise.hpp"

#include <span>
#include <string>

namespace deltet
{
    /// Points that are not active and have no active neighbor, ascending.
    std::vector<int> passive_points(const TetGrid & grid, const PointSet & ps);

    /// Importance over an r^3 voxelization of a box: h per voxel and the
    /// normalized distribution rho = h / sum(h).
    struct VoxelImportance
    {
        Aabb box;
        int resolution = 32;
        std::vector<double> h;
        std::vector<double> rho;

        std::size_t size() const { return h.size(); }
        std::size_t index(int ix, int iy, int iz) const
        {
            return (static_cast<std::size_t>(iz) * resolution + iy) * resolution + ix;
        }
        std::array<int, 3> cell(std::size_t idx) const;
        /// Voxel containing p (clamped to the grid).
        std::size_t voxel_of(const Vec3 & p) const;
        Aabb voxel_bounds(std::size_t idx) const;
        Vec3 center(std::size_t idx) const { return voxel_bounds(idx).center(); }

        /// Recomputes rho from h; all zeros when h is.
        void normalize();
    };

    constexpr int kDefaultImportanceResolution = 32;

    /// h(g) = mean error of the samples inside g (0 for empty voxels). When
    /// every error is zero, rho is uniform over occupied voxels.
    VoxelImportance build_importance(std::span<const SampleError> samples, const Aabb & box,
                                     int resolution = kDefaultImportanceResolution);

    enum class BuiltinImportance
    {
        uniform,     // 1
        axis_cubic,  // |p_y - 1|^3
        radial,      // |p|^2
    };

    BuiltinImportance parse_importance(const std::string & name);
    const char * to_string(BuiltinImportance kind);

    /// h evaluated at voxel centers over the mesh bounding box. With
    /// `mask_to_mesh`, voxels the mesh does not intersect get h = 0.
    VoxelImportance builtin_importance(BuiltinImportance kind, const SurfaceMesh & mesh,
                                       int resolution = kDefaultImportanceResolution, bool mask_to_mesh = true);

    /// Separating-axis triangle/box overlap test.
    bool triangle_box_overlap(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Aabb & box);

    /// Multinomial(K, rho) by sequential conditional binomials.
    std::vector<std::size_t> multinomial(std::size_t trials, std::span<const double> rho, Rng & rng);

    struct ResampleResult
    {
        PointSet points;
        std::vector<int> kept;  // old index of each retained point; new points follow
        std::size_t removed = 0;
        std::size_t added = 0;
        std::size_t clamped = 0;  // new points pulled into the hull after failed retries
    };

    constexpr int kHullRetries = 8;

    /// Removes passive points and adds K points distributed by `importance`
    /// (stratified within each voxel), initializing s and c by barycentric
    /// interpolation in the containing tet of `grid`.
    ResampleResult resample(const PointSet & ps, const TetGrid & grid, const VoxelImportance & importance, std::size_t k,
                            std::uint64_t seed);
}
