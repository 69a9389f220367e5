#include <doctest.h>

#include "deltet/diff.hpp"
#include "deltet/extract.hpp"
#include "deltet/regularize.hpp"
#include "support.hpp"

#include <numbers>

using namespace deltet;
using namespace deltet::testing;
using std::numbers::pi;

namespace
{
    // Circumcenter from the linear system 2 (v_i - v_0) . c = |v_i|^2 - |v_0|^2.
    Vec3 circumcenter_oracle(const std::array<Vec3, 4> & v)
    {
        Mat3 a;
        Vec3 b;
        for (int i = 1; i < 4; ++i)
        {
            a.row(i - 1) = 2.0 * (v[i] - v[0]).transpose();
            b[i - 1] = v[i].squaredNorm() - v[0].squaredNorm();
        }
        return a.fullPivLu().solve(b);
    }

    // M_T - M_ST = (8/5) V |centroid - circumcenter|^2 (parallel-axis argument).
    double odt_oracle(const std::array<Vec3, 4> & v)
    {
        const double vol = std::abs((v[1] - v[0]).dot((v[2] - v[0]).cross(v[3] - v[0]))) / 6.0;
        const Vec3 g = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        return 1.6 * vol * (g - circumcenter_oracle(v)).squaredNorm();
    }

    std::array<Vec3, 4> regular_tet(double alpha)
    {
        return {Vec3(alpha, alpha, alpha), Vec3(alpha, -alpha, -alpha), Vec3(-alpha, alpha, -alpha), Vec3(-alpha, -alpha, alpha)};
    }

    const std::array<Vec3, 4> kCornerTet{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)};

    Mat3 random_rotation(Rng & rng)
    {
        Eigen::Quaterniond q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        return q.normalized().toRotationMatrix();
    }

    double energy(const std::array<Vec3, 4> & v) { return odt_energy(v[0], v[1], v[2], v[3]); }
}

TEST_CASE("circumsphere")
{
    auto s = circumsphere(Vec3(1, 1, 1), Vec3(1, -1, -1), Vec3(-1, 1, -1), Vec3(-1, -1, 1));
    CHECK(s.center.norm() < 1e-15);
    CHECK(s.radius == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
    s = circumsphere(kCornerTet[0], kCornerTet[1], kCornerTet[2], kCornerTet[3]);
    CHECK((s.center - Vec3(0.5, 0.5, 0.5)).norm() < 1e-15);
    CHECK(s.radius == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
    const Vec3 t(3, -2, 0.5);
    const auto st = circumsphere(kCornerTet[0] + t, kCornerTet[1] + t, kCornerTet[2] + t, kCornerTet[3] + t);
    CHECK((st.center - s.center - t).norm() < 1e-14);
    CHECK(st.radius == doctest::Approx(s.radius).epsilon(1e-14));

    Rng rng(4);
    for (int k = 0; k < 100; ++k)
    {
        std::array<Vec3, 4> v;
        for (auto & p : v)
            p = rng.in_unit_ball();
        const auto c = circumsphere(v[0], v[1], v[2], v[3]);
        for (const auto & p : v)
            CHECK((p - c.center).norm() == doctest::Approx(c.radius).epsilon(1e-9));
    }
    CHECK_THROWS_AS(circumsphere(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)), Error);
}

TEST_CASE("odt energy values")
{
    // Corner tet: V = 1/6, R^2 = 3/4, Sx = Sy = Sz = 1.
    const auto m = tet_moments(kCornerTet[0], kCornerTet[1], kCornerTet[2], kCornerTet[3]);
    CHECK(m.volume == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(m.sx == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.sy == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.sz == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m.m_st == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(m.m_t == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(std::abs(energy(kCornerTet) - 0.05) < 1e-12);
    CHECK(std::abs(odt_oracle(kCornerTet) - 0.05) < 1e-12);

    // Regular tet: Sx = Sy = Sz = 2 alpha^2, M_ST = M_T = (6/5) V alpha^2.
    for (double alpha : {0.1, 1.0, 3.0})
    {
        const auto r = regular_tet(alpha);
        const auto mr = tet_moments(r[0], r[1], r[2], r[3]);
        CHECK(mr.sx == doctest::Approx(2 * alpha * alpha));
        CHECK(mr.m_st == doctest::Approx(1.2 * mr.volume * alpha * alpha));
        CHECK(std::abs(energy(r)) < 1e-12);
    }
    CHECK_THROWS_AS(odt_energy(Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)), Error);
}

TEST_CASE("odt energy invariants")
{
    Rng rng(10);
    for (int k = 0; k < 100; ++k)
    {
        std::array<Vec3, 4> v;
        for (auto & p : v)
            p = rng.in_unit_ball();
        const double e = energy(v);
        CHECK(e >= 0.0);
        CHECK(e == doctest::Approx(odt_oracle(v)).epsilon(1e-8));

        const Mat3 rot = random_rotation(rng);
        const Vec3 t = 3.0 * rng.in_unit_ball();
        std::array<Vec3, 4> moved, scaled;
        const double s = rng.uniform(0.2, 5.0);
        for (int i = 0; i < 4; ++i)
        {
            moved[i] = rot * v[i] + t;
            scaled[i] = s * v[i];
        }
        CHECK(energy(moved) == doctest::Approx(e).epsilon(1e-9));
        CHECK(energy(scaled) == doctest::Approx(std::pow(s, 5) * e).epsilon(1e-10));
        const std::array<Vec3, 4> perm{v[2], v[0], v[3], v[1]};
        CHECK(energy(perm) == doctest::Approx(e).epsilon(1e-10));
    }

    // Flattening path: energy grows as the apex descends.
    double prev = 0.0;
    for (double hgt : {1.0, 0.5, 0.2, 0.1, 0.05, 0.01})
    {
        const std::array<Vec3, 4> v{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, 0.9, 0), Vec3(0.5, 0.3, hgt)};
        const double e = energy(v);
        CHECK(e > prev);
        prev = e;
    }
}

TEST_CASE("odt gradient")
{
    Rng rng(12);
    for (int k = 0; k < 50; ++k)
    {
        std::array<Vec3, 4> v;
        for (auto & p : v)
            p = rng.in_unit_ball();
        double e;
        std::array<Vec3, 4> g;
        REQUIRE(odt_energy(v, e, g));
        CHECK(e == doctest::Approx(energy(v)).epsilon(1e-14));
        const double h = 1e-6;
        for (int i = 0; i < 4; ++i)
            for (int c = 0; c < 3; ++c)
            {
                auto vp = v, vm = v;
                vp[i][c] += h;
                vm[i][c] -= h;
                const double fd = (energy(vp) - energy(vm)) / (2 * h);
                CHECK(g[i][c] == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
            }
    }
}

TEST_CASE("odt loss")
{
    const auto r = regular_tet(0.5);
    PointSet one = make_points({r.begin(), r.end()});
    CHECK(std::abs(odt_loss(delaunay(one), one)) < 1e-12);

    // A regular tet and a corner tet, disjoint: additive.
    std::vector<Vec3> pts(r.begin(), r.end());
    for (const Vec3 & p : kCornerTet)
        pts.push_back(p + Vec3(5, 0, 0));
    PointSet two = make_points(pts);
    TetGrid g = delaunay(two);
    // The hull of the union has extra tets; evaluate only the two of interest.
    double sum = 0.0;
    for (std::size_t t = 0; t < g.num_tets(); ++t)
    {
        const Tet & v = g.tets[t];
        const bool all_a = std::all_of(v.begin(), v.end(), [](int i) { return i < 4; });
        const bool all_b = std::all_of(v.begin(), v.end(), [](int i) { return i >= 4; });
        if (all_a || all_b)
            sum += odt_energy(g.points[v[0]], g.points[v[1]], g.points[v[2]], g.points[v[3]]);
    }
    CHECK(sum == doctest::Approx(0.05).epsilon(1e-12));

    SUBCASE("rigid invariance, serial/parallel agreement, gradient assembly")
    {
        PointSet ps = cube_points(200, 1.0, 3, [](const Vec3 & p) { return sphere_sdf(p); });
        const TetGrid grid = delaunay(ps);
        std::vector<Vec3> gs, gp;
        const double ls = odt_loss(grid, ps, {}, &gs, Exec::serial);
        const double lp = odt_loss(grid, ps, {}, &gp, Exec::parallel);
        CHECK(ls == lp);
        CHECK(gs == gp);
        double direct = 0.0;
        for (std::size_t t = 0; t < grid.num_tets(); ++t)
        {
            const Tet & v = grid.tets[t];
            direct += odt_energy(grid.points[v[0]], grid.points[v[1]], grid.points[v[2]], grid.points[v[3]]);
        }
        CHECK(ls == doctest::Approx(direct).epsilon(1e-13));

        Rng rng(1);
        const Mat3 rot = random_rotation(rng);
        PointSet moved = ps;
        for (Vec3 & p : moved.positions)
            p = rot * p + Vec3(0.3, -1, 2);
        CHECK(odt_loss(with_positions(grid, moved), moved) == doctest::Approx(ls).epsilon(1e-9));

        OdtOptions active;
        active.active_only = true;
        const double la = odt_loss(grid, ps, active);
        CHECK(la > 0.0);
        CHECK(la <= ls);
    }
}

TEST_CASE("fairness loss")
{
    SurfaceMesh eq;
    eq.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.5, std::sqrt(3.0) / 2, 0)};
    eq.faces = {{0, 1, 2}};
    CHECK(fairness_loss(eq) < 1e-30);

    SurfaceMesh right;
    right.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)};
    right.faces = {{0, 1, 2}};
    CHECK(fairness_loss(right) == doctest::Approx(pi * pi / 72).epsilon(1e-14));
    right.faces.push_back({1, 3, 2});
    CHECK(fairness_loss(right) == doctest::Approx(2 * pi * pi / 72).epsilon(1e-14));

    SurfaceMesh flat;
    flat.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    flat.faces = {{0, 1, 2}};
    const auto ang = triangle_angles(flat.vertices[0], flat.vertices[1], flat.vertices[2]);
    CHECK(ang[1] == pi);
    CHECK(fairness_loss(flat) == doctest::Approx(2 * pi * pi / 9));

    SUBCASE("scale and rigid invariance, gradient")
    {
        const PointSet ps = cube_points(1500, 1.0, 5, [](const Vec3 & p) { return torus_sdf(p); });
        SurfaceMesh m = marching_tets(delaunay(ps), ps);
        std::vector<Vec3> g, gpar;
        const double l = fairness_loss(m, &g, Exec::serial);
        CHECK(fairness_loss(m, &gpar, Exec::parallel) == l);
        CHECK(g == gpar);
        SurfaceMesh s = m;
        for (Vec3 & v : s.vertices)
            v = 2.5 * v + Vec3(1, 2, 3);
        CHECK(fairness_loss(s) == doctest::Approx(l).epsilon(1e-10));
        const double h = 1e-6;
        for (int v = 0; v < 60; ++v)
            for (int c = 0; c < 3; ++c)
            {
                SurfaceMesh mp = m, mm = m;
                mp.vertices[v][c] += h;
                mm.vertices[v][c] -= h;
                const double fd = (fairness_loss(mp) - fairness_loss(mm)) / (2 * h);
                CHECK(g[v][c] == doctest::Approx(fd).epsilon(1e-5).scale(1e-2));
            }
    }
    SUBCASE("gradient descent on a free triangle reaches equilateral")
    {
        SurfaceMesh t;
        t.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0.9, 0.15, 0.05)};
        t.faces = {{0, 1, 2}};
        std::vector<Vec3> g;
        int steps = 0;
        for (; steps < 10000; ++steps)
        {
            fairness_loss(t, &g);
            const auto a = triangle_angles(t.vertices[0], t.vertices[1], t.vertices[2]);
            double defect = 0.0;
            for (double x : a)
                defect = std::max(defect, std::abs(x - pi / 3));
            if (defect < 1e-3)
                break;
            for (int k = 0; k < 3; ++k)
                t.vertices[k] -= 0.05 * g[k];
        }
        CHECK(steps < 10000);
    }
}

TEST_CASE("sign loss")
{
    PointSet ps = make_points({Vec3(0, 0, 0), Vec3(1, 0, 0)}, {0.0, -1.0});
    ActiveEdgeSet e;
    e.edges = {{0, 1}};
    e.grid_edge = {0};
    e.first_negative = {0};
    // Orientation (0 -> 1): sigma(0) vs target 0 gives ln 2.
    // Orientation (1 -> 0): sigma(-1) vs target 1 gives softplus(1).
    CHECK(sign_loss(ps, e) == doctest::Approx(std::log(2.0) + std::log1p(std::exp(1.0))).epsilon(1e-15));
    CHECK(softplus(0.0) == doctest::Approx(0.6931471805599453));
    CHECK(softplus(5.0) - 0.0 == doctest::Approx(5.0067153484891));
    CHECK(softplus(800.0) == 800.0);
    CHECK(sign_loss(ps, ActiveEdgeSet{}) == 0.0);

    SUBCASE("gradient only touches active points")
    {
        PointSet big = cube_points(300, 1.0, 2, [](const Vec3 & p) { return sphere_sdf(p); });
        const TetGrid g = delaunay(big);
        const auto active = active_edges(g, big);
        std::vector<double> grad;
        const double l = sign_loss(big, active, &grad);
        CHECK(l > 0.0);
        const auto ap = active_points(g, big);
        const double h = 1e-6;
        for (std::size_t i = 0; i < big.size(); ++i)
        {
            if (!ap[i])
            {
                CHECK(grad[i] == 0.0);
                continue;
            }
            PointSet p = big, m = big;
            p.sdf[i] += h;
            m.sdf[i] -= h;
            const double fd = (sign_loss(p, active) - sign_loss(m, active)) / (2 * h);
            CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}
