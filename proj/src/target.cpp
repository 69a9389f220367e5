#include "deltet/target.hpp"

#include "deltet/dual.hpp"
#include "deltet/io.hpp"

#include <sstream>

namespace deltet
{
    namespace
    {
        using D3 = Dual<3>;

        V3<D3> variables(const Vec3 & p)
        {
            return {D3::variable(p.x(), 0), D3::variable(p.y(), 1), D3::variable(p.z(), 2)};
        }

        // Normal and Jacobian from a normal field written once over a scalar type.
        template <class F>
        Mat3 jacobian_of(const Vec3 & p, F && field)
        {
            const V3<D3> n = field(variables(p));
            Mat3 j;
            for (int c = 0; c < 3; ++c)
            {
                j(0, c) = n.x.d[c];
                j(1, c) = n.y.d[c];
                j(2, c) = n.z.d[c];
            }
            return j;
        }

        template <class T>
        V3<T> normalized(const V3<T> & v)
        {
            using std::sqrt;
            const T len = sqrt(v.squared_norm());
            return v * (T(1.0) / len);
        }

        class SphereTarget final : public Target
        {
        public:
            SphereTarget(const Vec3 & c, double r) : c_(c), r_(r) {}

            double sdf(const Vec3 & p) const override { return (p - c_).norm() - r_; }

            Vec3 normal(const Vec3 & p) const override
            {
                const Vec3 d = p - c_;
                const double n = d.norm();
                return n > 0.0 ? Vec3(d / n) : Vec3(0, 0, 1);
            }

            Mat3 normal_jacobian(const Vec3 & p) const override
            {
                const Vec3 d = p - c_;
                const double n = d.norm();
                if (n == 0.0)
                    return Mat3::Zero();
                const Vec3 u = d / n;
                return (Mat3::Identity() - u * u.transpose()) / n;
            }

            Aabb bounds() const override { return {c_.array() - r_, c_.array() + r_}; }

            std::string describe() const override
            {
                std::ostringstream os;
                os << "sphere(r=" << r_ << ")";
                return os.str();
            }

        private:
            Vec3 c_;
            double r_;
        };

        class BoxTarget final : public Target
        {
        public:
            BoxTarget(const Vec3 & c, const Vec3 & h) : c_(c), h_(h) {}

            double sdf(const Vec3 & p) const override
            {
                const Vec3 q = (p - c_).cwiseAbs() - h_;
                return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
            }

            Vec3 normal(const Vec3 & p) const override
            {
                Mat3 j;
                return normal_and_jacobian(p, j);
            }

            Mat3 normal_jacobian(const Vec3 & p) const override
            {
                Mat3 j;
                normal_and_jacobian(p, j);
                return j;
            }

            Aabb bounds() const override { return {c_ - h_, c_ + h_}; }

            std::string describe() const override { return "box"; }

        private:
            Vec3 normal_and_jacobian(const Vec3 & p, Mat3 & j) const
            {
                const Vec3 d = p - c_;
                const Vec3 s(d.x() < 0 ? -1.0 : 1.0, d.y() < 0 ? -1.0 : 1.0, d.z() < 0 ? -1.0 : 1.0);
                const Vec3 q = d.cwiseAbs() - h_;
                const Vec3 o = q.cwiseMax(0.0);
                const double len = o.norm();
                if (len > 0.0)
                {
                    const Vec3 n = s.cwiseProduct(o) / len;
                    Mat3 mask = Mat3::Zero();
                    for (int k = 0; k < 3; ++k)
                        mask(k, k) = q[k] > 0.0 ? 1.0 : 0.0;
                    j = (Mat3::Identity() - n * n.transpose()) * mask / len;
                    return n;
                }
                int k = 0;
                q.maxCoeff(&k);
                Vec3 n = Vec3::Zero();
                n[k] = s[k];
                j.setZero();
                return n;
            }

            Vec3 c_, h_;
        };

        class TorusTarget final : public Target
        {
        public:
            TorusTarget(const Vec3 & c, double R, double r) : c_(c), R_(R), r_(r) {}

            double sdf(const Vec3 & p) const override
            {
                const Vec3 d = p - c_;
                return std::hypot(std::hypot(d.x(), d.y()) - R_, d.z()) - r_;
            }

            Vec3 normal(const Vec3 & p) const override
            {
                const auto n = field(V3<double>{p.x(), p.y(), p.z()});
                return {n.x, n.y, n.z};
            }

            Mat3 normal_jacobian(const Vec3 & p) const override
            {
                return jacobian_of(p, [this](const V3<D3> & x) { return field(x); });
            }

            Aabb bounds() const override
            {
                const double e = R_ + r_;
                return {c_ - Vec3(e, e, r_), c_ + Vec3(e, e, r_)};
            }

            std::string describe() const override
            {
                std::ostringstream os;
                os << "torus(R=" << R_ << ", r=" << r_ << ")";
                return os.str();
            }

        private:
            template <class T>
            V3<T> field(const V3<T> & p) const
            {
                using std::sqrt;
                const T x = p.x - c_.x(), y = p.y - c_.y(), z = p.z - c_.z();
                const T rho = sqrt(x * x + y * y);
                if (value_of(rho) == 0.0)
                {
                    return {T(0.0), T(0.0), T(value_of(z) < 0 ? -1.0 : 1.0)};
                }
                const T qx = rho - R_;
                const V3<T> g{qx * x / rho, qx * y / rho, z};
                if (value_of(g.squared_norm()) == 0.0)
                {
                    return {x / rho, y / rho, T(0.0)};
                }
                return normalized(g);
            }

            Vec3 c_;
            double R_, r_;
        };

        enum class CsgOp
        {
            union_,
            intersection,
            difference,
        };

        class CsgTarget final : public Target
        {
        public:
            CsgTarget(CsgOp op, TargetPtr a, TargetPtr b) : op_(op), a_(std::move(a)), b_(std::move(b)) {}

            double sdf(const Vec3 & p) const override
            {
                const double sa = a_->sdf(p), sb = b_->sdf(p);
                switch (op_)
                {
                case CsgOp::union_: return std::min(sa, sb);
                case CsgOp::intersection: return std::max(sa, sb);
                default: return std::max(sa, -sb);
                }
            }

            Vec3 normal(const Vec3 & p) const override
            {
                const auto [t, sign] = pick(p);
                return sign * t->normal(p);
            }

            Mat3 normal_jacobian(const Vec3 & p) const override
            {
                const auto [t, sign] = pick(p);
                return sign * t->normal_jacobian(p);
            }

            Aabb bounds() const override
            {
                Aabb box = a_->bounds();
                if (op_ == CsgOp::union_)
                    box.expand(b_->bounds());
                return box;
            }

            std::string describe() const override
            {
                const char * name = op_ == CsgOp::union_ ? "union" : (op_ == CsgOp::intersection ? "intersection" : "difference");
                return std::string(name) + "(" + a_->describe() + ", " + b_->describe() + ")";
            }

        private:
            std::pair<const Target *, double> pick(const Vec3 & p) const
            {
                const double sa = a_->sdf(p), sb = b_->sdf(p);
                switch (op_)
                {
                case CsgOp::union_: return {sa <= sb ? a_.get() : b_.get(), 1.0};
                case CsgOp::intersection: return {sa >= sb ? a_.get() : b_.get(), 1.0};
                default: return sa >= -sb ? std::pair{a_.get(), 1.0} : std::pair{b_.get(), -1.0};
                }
            }

            CsgOp op_;
            TargetPtr a_, b_;
        };

        class MeshTarget final : public Target
        {
        public:
            explicit MeshTarget(const SurfaceMesh & mesh) : index_(mesh)
            {
                if (mesh.empty())
                {
                    throw Error(ErrorKind::invalid_argument, "mesh target has no faces");
                }
                const auto b = mesh.bounds();
                box_ = {b[0], b[1]};
            }

            double sdf(const Vec3 & p) const override
            {
                const double d = std::sqrt(index_.closest(p).squared_distance);
                return index_.inside(p) ? -d : d;
            }

            Vec3 normal(const Vec3 & p) const override
            {
                const auto hit = index_.closest(p);
                return index_.mesh().face_normal(hit.face).normalized();
            }

            Mat3 normal_jacobian(const Vec3 &) const override { return Mat3::Zero(); }

            Vec3 project(const Vec3 & p) const override { return index_.closest(p).cp.point; }

            Aabb bounds() const override { return box_; }

            std::string describe() const override
            {
                return "mesh(" + std::to_string(index_.mesh().num_faces()) + " faces)";
            }

        private:
            MeshIndex index_;
            Aabb box_;
        };
    }

    TargetPtr make_sphere(const Vec3 & center, double radius) { return std::make_shared<SphereTarget>(center, radius); }

    TargetPtr make_box(const Vec3 & center, const Vec3 & half_extents)
    {
        return std::make_shared<BoxTarget>(center, half_extents);
    }

    TargetPtr make_torus(const Vec3 & center, double major, double minor)
    {
        return std::make_shared<TorusTarget>(center, major, minor);
    }

    TargetPtr make_union(TargetPtr a, TargetPtr b) { return std::make_shared<CsgTarget>(CsgOp::union_, std::move(a), std::move(b)); }

    TargetPtr make_intersection(TargetPtr a, TargetPtr b)
    {
        return std::make_shared<CsgTarget>(CsgOp::intersection, std::move(a), std::move(b));
    }

    TargetPtr make_difference(TargetPtr a, TargetPtr b)
    {
        return std::make_shared<CsgTarget>(CsgOp::difference, std::move(a), std::move(b));
    }

    TargetPtr make_mesh_target(const SurfaceMesh & mesh) { return std::make_shared<MeshTarget>(mesh); }

    TargetPtr parse_target(const std::string & spec)
    {
        if (spec == "sphere")
            return make_sphere(Vec3::Zero(), 1.0);
        if (spec == "small-sphere")
            return make_sphere(Vec3::Zero(), 0.6);
        if (spec == "torus")
            return make_torus(Vec3::Zero(), 0.6, 0.25);
        if (spec == "box")
            return make_box(Vec3::Zero(), Vec3(0.7, 0.55, 0.4));
        if (spec == "csg")
            return make_union(make_sphere(Vec3(-0.25, 0, 0), 0.5), make_box(Vec3(0.4, 0, 0), Vec3(0.35, 0.35, 0.35)));
        if (spec.rfind("mesh:", 0) == 0)
        {
            return make_mesh_target(normalize_mesh(import_mesh(spec.substr(5))));
        }
        throw Error(ErrorKind::invalid_argument, "unknown target '" + spec + "'");
    }
}
