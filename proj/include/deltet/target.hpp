#pragma once

#include "bvh.hpp"

#include <memory>
#include <string>

namespace deltet
{
    /// Supervision shape: signed distance (negative inside), unit outward
    /// normal of the closest surface point, and that normal's Jacobian with
    /// respect to the query point.
    class Target
    {
    public:
        virtual ~Target() = default;

        virtual double sdf(const Vec3 & p) const = 0;
        virtual Vec3 normal(const Vec3 & p) const = 0;
        virtual Mat3 normal_jacobian(const Vec3 & p) const = 0;
        virtual Aabb bounds() const = 0;
        virtual std::string describe() const = 0;

        /// Closest surface point.
        virtual Vec3 project(const Vec3 & p) const { return p - sdf(p) * normal(p); }
    };

    using TargetPtr = std::shared_ptr<const Target>;

    TargetPtr make_sphere(const Vec3 & center, double radius);
    TargetPtr make_box(const Vec3 & center, const Vec3 & half_extents);
    /// Ring in the plane through `center` orthogonal to z.
    TargetPtr make_torus(const Vec3 & center, double major, double minor);
    TargetPtr make_union(TargetPtr a, TargetPtr b);
    TargetPtr make_intersection(TargetPtr a, TargetPtr b);
    TargetPtr make_difference(TargetPtr a, TargetPtr b);

    /// Watertight triangle mesh; sign by ray parity, normals from the closest face.
    TargetPtr make_mesh_target(const SurfaceMesh & mesh);

    /// Parses "sphere", "torus", "box", "csg" (sphere-box union) or
    /// "mesh:<path>" into a target normalized to the [-0.9, 0.9]^3 setup.
    TargetPtr parse_target(const std::string & spec);
}
