#include "deltet/regularize.hpp"

#include "deltet/dual.hpp"

#include <algorithm>
#include <numbers>

namespace deltet
{
    namespace
    {
        template <class T>
        struct MomentsT
        {
            T volume, m_st, m_t, sx, sy, sz, r2;
            V3<T> center;
        };

        template <class T>
        bool moments(const V3<T> (&v)[4], MomentsT<T> & out)
        {
            const V3<T> a = v[1] - v[0], b = v[2] - v[0], c = v[3] - v[0];
            const V3<T> bc = b.cross(c), ca = c.cross(a), ab = a.cross(b);
            const T D = a.dot(bc);
            double longest = 0.0;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    longest = std::max(longest, value_of((v[j] - v[i]).squared_norm()));
            longest = std::sqrt(longest);
            if (!(std::abs(value_of(D)) > kDegenerateVolumeRatio * longest * longest * longest))
            {
                return false;
            }
            using std::abs;
            out.volume = abs(D) / 6.0;
            const V3<T> num = bc * a.squared_norm() + ca * b.squared_norm() + ab * c.squared_norm();
            const T inv = T(1.0) / (D * 2.0);
            out.center = v[0] + num * inv;
            out.r2 = (out.center - v[0]).squared_norm();

            T s[3] = {T(0.0), T(0.0), T(0.0)};
            for (int i = 0; i < 4; ++i)
            {
                const V3<T> r = v[i] - out.center;
                s[0] += r.x * r.x;
                s[1] += r.y * r.y;
                s[2] += r.z * r.z;
                for (int j = i + 1; j < 4; ++j)
                {
                    const V3<T> q = v[j] - out.center;
                    s[0] += r.x * q.x;
                    s[1] += r.y * q.y;
                    s[2] += r.z * q.z;
                }
            }
            out.sx = s[0];
            out.sy = s[1];
            out.sz = s[2];
            out.m_st = out.volume * out.r2 * 0.4;
            out.m_t = out.volume * (s[0] + s[1] + s[2]) * 0.2;
            return true;
        }

        V3<double> to_v3(const Vec3 & p) { return {p.x(), p.y(), p.z()}; }

        MomentsT<double> checked_moments(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
        {
            const V3<double> v[4] = {to_v3(a), to_v3(b), to_v3(c), to_v3(d)};
            MomentsT<double> m;
            if (!moments(v, m))
            {
                throw Error(ErrorKind::degenerate_tet, "tetrahedron is degenerate");
            }
            return m;
        }
    }

    Sphere circumsphere(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
    {
        const auto m = checked_moments(a, b, c, d);
        return {Vec3(m.center.x, m.center.y, m.center.z), std::sqrt(m.r2)};
    }

    TetMoments tet_moments(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
    {
        const auto m = checked_moments(a, b, c, d);
        TetMoments out;
        out.volume = m.volume;
        out.circumcenter = Vec3(m.center.x, m.center.y, m.center.z);
        out.radius = std::sqrt(m.r2);
        out.sx = m.sx;
        out.sy = m.sy;
        out.sz = m.sz;
        out.m_st = m.m_st;
        out.m_t = m.m_t;
        return out;
    }

    double odt_energy(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
    {
        const auto m = checked_moments(a, b, c, d);
        return std::abs(m.m_st - m.m_t);
    }

    bool odt_energy(const std::array<Vec3, 4> & v, double & energy, std::array<Vec3, 4> & grad)
    {
        using D12 = Dual<12>;
        V3<D12> dv[4];
        for (int i = 0; i < 4; ++i)
        {
            dv[i] = {D12::variable(v[i].x(), 3 * i), D12::variable(v[i].y(), 3 * i + 1), D12::variable(v[i].z(), 3 * i + 2)};
        }
        MomentsT<D12> m;
        if (!moments(dv, m))
        {
            return false;
        }
        const D12 e = abs(m.m_st - m.m_t);
        energy = e.v;
        for (int i = 0; i < 4; ++i)
        {
            grad[i] = Vec3(e.d[3 * i], e.d[3 * i + 1], e.d[3 * i + 2]);
        }
        return true;
    }

    double odt_loss(const TetGrid & grid, const PointSet & ps, const OdtOptions & options, std::vector<Vec3> * grad, Exec exec)
    {
        check_generation(grid, ps);
        const auto nt = static_cast<std::ptrdiff_t>(grid.num_tets());
        std::vector<std::uint8_t> use(grid.num_tets(), 1);
        if (options.active_only)
        {
            const auto active = active_points(grid, ps);
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                const Tet & v = grid.tets[t];
                use[t] = active[v[0]] || active[v[1]] || active[v[2]] || active[v[3]];
            }
        }
        std::vector<double> energy(grid.num_tets(), 0.0);
        std::vector<std::uint8_t> degenerate(grid.num_tets(), 0);
        std::vector<std::array<Vec3, 4>> tet_grad(grad ? grid.num_tets() : 0);

        auto body = [&](std::ptrdiff_t t) {
            if (!use[t])
            {
                return;
            }
            const Tet & v = grid.tets[t];
            const std::array<Vec3, 4> p = {grid.points[v[0]], grid.points[v[1]], grid.points[v[2]], grid.points[v[3]]};
            if (grad)
            {
                if (!odt_energy(p, energy[t], tet_grad[t]))
                {
                    degenerate[t] = 1;
                    tet_grad[t].fill(Vec3::Zero());
                }
            }
            else
            {
                const V3<double> dv[4] = {to_v3(p[0]), to_v3(p[1]), to_v3(p[2]), to_v3(p[3])};
                MomentsT<double> m;
                if (moments(dv, m))
                    energy[t] = std::abs(m.m_st - m.m_t);
                else
                    degenerate[t] = 1;
            }
        };
        if (exec == Exec::parallel)
        {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t t = 0; t < nt; ++t)
                body(t);
        }
        else
        {
            for (std::ptrdiff_t t = 0; t < nt; ++t)
                body(t);
        }

        const auto n_degenerate = std::count(degenerate.begin(), degenerate.end(), 1);
        if (n_degenerate > 0)
        {
            if (options.degenerate == DegeneratePolicy::error)
            {
                throw Error(ErrorKind::degenerate_tet, std::to_string(n_degenerate) + " degenerate tetrahedra in ODT loss");
            }
            std::vector<double> regular;
            for (std::ptrdiff_t t = 0; t < nt; ++t)
                if (use[t] && !degenerate[t])
                    regular.push_back(energy[t]);
            double median = 1.0;
            if (!regular.empty())
            {
                auto mid = regular.begin() + regular.size() / 2;
                std::nth_element(regular.begin(), mid, regular.end());
                median = *mid;
            }
            for (std::ptrdiff_t t = 0; t < nt; ++t)
                if (degenerate[t])
                    energy[t] = 1e3 * median;
        }

        double total = 0.0;
        for (double e : energy)
        {
            total += e;
        }
        if (grad)
        {
            grad->assign(grid.num_points(), Vec3::Zero());
            for (std::ptrdiff_t t = 0; t < nt; ++t)
            {
                if (!use[t])
                    continue;
                for (int k = 0; k < 4; ++k)
                    (*grad)[grid.tets[t][k]] += tet_grad[t][k];
            }
        }
        return total;
    }

    std::array<double, 3> triangle_angles(const Vec3 & a, const Vec3 & b, const Vec3 & c)
    {
        const Vec3 p[3] = {a, b, c};
        std::array<double, 3> ang{};
        for (int k = 0; k < 3; ++k)
        {
            const Vec3 u = p[(k + 1) % 3] - p[k];
            const Vec3 v = p[(k + 2) % 3] - p[k];
            const double s = u.cross(v).norm();
            if (s == 0.0)
            {
                // Limit convention: the largest angle opens to pi.
                const double len[3] = {(b - c).squaredNorm(), (c - a).squaredNorm(), (a - b).squaredNorm()};
                const int big = static_cast<int>(std::max_element(len, len + 3) - len);
                ang = {0.0, 0.0, 0.0};
                ang[big] = std::numbers::pi;
                return ang;
            }
            ang[k] = std::atan2(s, u.dot(v));
        }
        return ang;
    }

    double fairness_loss(const SurfaceMesh & mesh, std::vector<Vec3> * grad, Exec exec)
    {
        constexpr double third_pi = std::numbers::pi / 3.0;
        const auto nf = static_cast<std::ptrdiff_t>(mesh.num_faces());
        std::vector<double> value(mesh.num_faces());
        std::vector<std::array<Vec3, 3>> face_grad(grad ? mesh.num_faces() : 0);

        auto body = [&](std::ptrdiff_t f) {
            const Tri & t = mesh.faces[f];
            const Vec3 p[3] = {mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
            const auto ang = triangle_angles(p[0], p[1], p[2]);
            double e = 0.0;
            for (double a : ang)
                e += squared(a - third_pi);
            value[f] = e / 3.0;
            if (!grad)
                return;
            auto & g = face_grad[f];
            g = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
            for (int k = 0; k < 3; ++k)
            {
                const Vec3 u = p[(k + 1) % 3] - p[k];
                const Vec3 v = p[(k + 2) % 3] - p[k];
                const double s = u.cross(v).norm();
                if (s == 0.0)
                {
                    g = {Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
                    return;
                }
                // d(angle)/du = -(v - (u.v / |u|^2) u) / |u x v|, symmetric in v.
                const double w = 2.0 / 3.0 * (ang[k] - third_pi);
                const Vec3 du = -(v - u * (u.dot(v) / u.squaredNorm())) / s;
                const Vec3 dv = -(u - v * (u.dot(v) / v.squaredNorm())) / s;
                g[(k + 1) % 3] += w * du;
                g[(k + 2) % 3] += w * dv;
                g[k] -= w * (du + dv);
            }
        };
        if (exec == Exec::parallel)
        {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t f = 0; f < nf; ++f)
                body(f);
        }
        else
        {
            for (std::ptrdiff_t f = 0; f < nf; ++f)
                body(f);
        }
        double total = 0.0;
        for (double v : value)
            total += v;
        if (grad)
        {
            grad->assign(mesh.num_vertices(), Vec3::Zero());
            for (std::ptrdiff_t f = 0; f < nf; ++f)
                for (int k = 0; k < 3; ++k)
                    (*grad)[mesh.faces[f][k]] += face_grad[f][k];
        }
        return total;
    }

    double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

    double sigmoid(double x)
    {
        if (x >= 0.0)
            return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    }

    double sign_loss(const PointSet & ps, const ActiveEdgeSet & edges, std::vector<double> * grad)
    {
        if (grad)
        {
            grad->assign(ps.size(), 0.0);
        }
        double total = 0.0;
        for (const auto & [i, j] : edges.edges)
        {
            for (const auto & [a, b] : {std::pair{i, j}, std::pair{j, i}})
            {
                const double s = ps.sdf[a];
                const double target = is_negative(ps.sdf[b]) ? 0.0 : 1.0;
                // -[t log sigma(s) + (1 - t) log(1 - sigma(s))] = softplus(s) - t s
                total += softplus(s) - target * s;
                if (grad)
                {
                    (*grad)[a] += sigmoid(s) - target;
                }
            }
        }
        return total;
    }
}
