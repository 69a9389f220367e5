#include "deltet/extract.hpp"
#include "deltet/refine.hpp"

#include "support.hpp"

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

using namespace deltet;
using namespace deltet::testing;

namespace
{
    std::vector<int> passive_oracle(const TetGrid & grid, const PointSet & ps)
    {
        std::vector<std::uint8_t> active(ps.size(), 0);
        for (const EdgeKey & e : grid.edges)
        {
            if (is_negative(ps.sdf[e[0]]) != is_negative(ps.sdf[e[1]]))
                active[e[0]] = active[e[1]] = 1;
        }
        std::vector<int> out;
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            bool near = active[i];
            for (const EdgeKey & e : grid.edges)
            {
                if ((e[0] == static_cast<int>(i) && active[e[1]]) || (e[1] == static_cast<int>(i) && active[e[0]]))
                    near = true;
            }
            if (!near)
                out.push_back(static_cast<int>(i));
        }
        return out;
    }

    VoxelImportance box_importance(const Aabb & box, int r, std::vector<double> h)
    {
        VoxelImportance imp;
        imp.box = box;
        imp.resolution = r;
        imp.h = std::move(h);
        imp.normalize();
        return imp;
    }

    Aabb unit_box(double r = 1.0)
    {
        Aabb b;
        b.lo = Vec3::Constant(-r);
        b.hi = Vec3::Constant(r);
        return b;
    }
}

TEST_CASE("passive points: small configurations")
{
    SUBCASE("same sign everywhere")
    {
        const PointSet ps = cube_points(60, 1.0, 1, [](const Vec3 &) { return 0.3; });
        const TetGrid g = delaunay(ps);
        CHECK(passive_points(g, ps).size() == ps.size());
    }
    SUBCASE("single tet with one negative vertex")
    {
        const PointSet ps = make_points({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}, {-1, 1, 1, 1});
        CHECK(passive_points(delaunay(ps), ps).empty());
    }
    SUBCASE("chain with a far vertex")
    {
        // Five stacked, slightly jittered triangles twisted by 60 degrees per
        // layer; only vertex 0 is negative. Its 1-ring reaches layer 2, so
        // the last vertex of layer 4 is the only one with no active neighbor.
        Rng rng(1);
        std::vector<Vec3> pts;
        std::vector<double> sdf;
        for (int l = 0; l < 5; ++l)
        {
            for (int a = 0; a < 3; ++a)
            {
                const double t = 2.0944 * a + 1.0472 * l;
                pts.push_back(Vec3(l + 0.01 * rng.uniform(), std::cos(t) + 0.01 * rng.uniform(), std::sin(t)));
                sdf.push_back(l == 0 && a == 0 ? -1.0 : 1.0);
            }
        }
        const PointSet ps = make_points(pts, sdf);
        const TetGrid g = delaunay(ps);
        CHECK(passive_points(g, ps) == passive_oracle(g, ps));
        CHECK(passive_points(g, ps) == std::vector<int>{14});
    }
}

TEST_CASE("passive points: property against the adjacency oracle")
{
    for (std::uint64_t seed = 0; seed < 6; ++seed)
    {
        const PointSet ps = cube_points(300, 1.0, seed, [](const Vec3 & p) { return sphere_sdf(p, 0.4); });
        const TetGrid g = delaunay(ps);
        const auto passive = passive_points(g, ps);
        CHECK(passive == passive_oracle(g, ps));
        CHECK(std::is_sorted(passive.begin(), passive.end()));
    }
}

TEST_CASE("importance: construction from sample errors")
{
    const Aabb box = unit_box();
    SUBCASE("one voxel")
    {
        std::vector<SampleError> s = {{Vec3(0.1, 0.1, 0.1), 2.0}, {Vec3(0.11, 0.12, 0.13), 4.0}};
        const VoxelImportance imp = build_importance(s, box, 4);
        const std::size_t v = imp.voxel_of(Vec3(0.1, 0.1, 0.1));
        for (std::size_t i = 0; i < imp.size(); ++i)
            CHECK(imp.rho[i] == (i == v ? 1.0 : 0.0));
        CHECK(imp.h[v] == doctest::Approx(3.0));
    }
    SUBCASE("two voxels with mean errors 1 and 3")
    {
        std::vector<SampleError> s = {{Vec3(-0.9, -0.9, -0.9), 0.5}, {Vec3(-0.8, -0.9, -0.9), 1.5}, {Vec3(0.9, 0.9, 0.9), 3.0}};
        const VoxelImportance imp = build_importance(s, box, 4);
        CHECK(imp.rho[imp.voxel_of(Vec3(-0.9, -0.9, -0.9))] == doctest::Approx(0.25));
        CHECK(imp.rho[imp.voxel_of(Vec3(0.9, 0.9, 0.9))] == doctest::Approx(0.75));
    }
    SUBCASE("equal and zero errors give uniform mass on occupied voxels")
    {
        for (double e : {0.0, 0.7})
        {
            std::vector<SampleError> s = {{Vec3(-0.9, 0, 0), e}, {Vec3(0.9, 0, 0), e}, {Vec3(0, 0.9, 0), e}};
            const VoxelImportance imp = build_importance(s, box, 8);
            double total = 0.0;
            for (std::size_t i = 0; i < imp.size(); ++i)
            {
                total += imp.rho[i];
                if (imp.rho[i] > 0)
                    CHECK(imp.rho[i] == doctest::Approx(1.0 / 3.0));
            }
            CHECK(total == doctest::Approx(1.0));
        }
    }
    SUBCASE("permutation invariance")
    {
        Rng rng(4);
        std::vector<SampleError> s;
        for (int k = 0; k < 2000; ++k)
            s.push_back({Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform()});
        const VoxelImportance a = build_importance(s, box, 6);
        std::reverse(s.begin(), s.end());
        std::rotate(s.begin(), s.begin() + 777, s.end());
        const VoxelImportance b = build_importance(s, box, 6);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a.rho[i] == doctest::Approx(b.rho[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(build_importance({}, box, 0), Error);
}

TEST_CASE("importance: built-in functions")
{
    SurfaceMesh big;
    append_box(big, Vec3(-2.5, -2.5, -2.5), Vec3(2.5, 2.5, 2.5));

    const VoxelImportance radial = builtin_importance(BuiltinImportance::radial, big, 5, false);
    const std::size_t at1 = radial.voxel_of(Vec3(1, 0, 0)), at2 = radial.voxel_of(Vec3(2, 0, 0));
    REQUIRE(radial.center(at1).isApprox(Vec3(1, 0, 0)));
    REQUIRE(radial.center(at2).isApprox(Vec3(2, 0, 0)));
    CHECK(radial.h[at2] == doctest::Approx(4.0 * radial.h[at1]));

    const VoxelImportance cubic = builtin_importance(BuiltinImportance::axis_cubic, big, 5, false);
    const std::size_t y1 = cubic.voxel_of(Vec3(0, 1, 0));
    REQUIRE(cubic.center(y1).y() == doctest::Approx(1.0));
    CHECK(cubic.h[y1] < 1e-12);
    CHECK(cubic.h[cubic.voxel_of(Vec3(0, -1, 0))] == doctest::Approx(8.0));

    // Uniform on a shell: positive exactly on voxels the triangles touch.
    const PointSet ps = cube_points(3000, 1.0, 2, [](const Vec3 & p) { return sphere_sdf(p, 0.6); });
    const SurfaceMesh shell = marching_tets(delaunay(ps), ps);
    const VoxelImportance uni = builtin_importance(BuiltinImportance::uniform, shell, 12);
    std::size_t positive = 0;
    for (std::size_t v = 0; v < uni.size(); ++v)
    {
        bool hit = false;
        for (const Tri & t : shell.faces)
            hit = hit || triangle_box_overlap(shell.vertices[t[0]], shell.vertices[t[1]], shell.vertices[t[2]], uni.voxel_bounds(v));
        CHECK((uni.rho[v] > 0.0) == hit);
        positive += uni.rho[v] > 0.0;
    }
    CHECK(positive > 0);
    CHECK(positive < uni.size());
    // The voxel at the shell center is empty.
    CHECK(uni.rho[uni.voxel_of(0.5 * (shell.bounds()[0] + shell.bounds()[1]))] == 0.0);

    CHECK(parse_importance("radial") == BuiltinImportance::radial);
    CHECK(std::string(to_string(BuiltinImportance::axis_cubic)) == "axis_cubic");
    CHECK_THROWS_AS(parse_importance("blue"), Error);
}

TEST_CASE("triangle/box overlap against point sampling")
{
    Rng rng(5);
    Aabb box;
    box.lo = Vec3(0, 0, 0);
    box.hi = Vec3(1, 1, 1);
    int agree_hit = 0;
    for (int k = 0; k < 500; ++k)
    {
        const Vec3 a(rng.uniform(-1, 2), rng.uniform(-1, 2), rng.uniform(-1, 2));
        const Vec3 b = a + 0.6 * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const Vec3 c = a + 0.6 * Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        bool sampled = false;
        for (int i = 0; i <= 40 && !sampled; ++i)
            for (int j = 0; i + j <= 40 && !sampled; ++j)
            {
                const Vec3 p = a + (b - a) * (i / 40.0) + (c - a) * (j / 40.0);
                sampled = (p.array() >= box.lo.array()).all() && (p.array() <= box.hi.array()).all();
            }
        const bool sat = triangle_box_overlap(a, b, c, box);
        // Sampling can only miss overlaps, never invent them.
        if (sampled)
        {
            CHECK(sat);
            ++agree_hit;
        }
    }
    CHECK(agree_hit > 20);
    CHECK(!triangle_box_overlap(Vec3(2, 2, 2), Vec3(3, 2, 2), Vec3(2, 3, 2), box));
    CHECK(triangle_box_overlap(Vec3(-1, 0.5, -1), Vec3(3, 0.5, -1), Vec3(-1, 0.5, 3), box));
}

TEST_CASE("multinomial: totals and binomial marginals")
{
    Rng rng(6);
    const std::vector<double> rho = {0.1, 0.0, 0.2, 0.3, 0.4};
    const std::size_t trials = 10000;
    const auto counts = multinomial(trials, rho, rng);
    REQUIRE(counts.size() == rho.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < rho.size(); ++i)
    {
        total += counts[i];
        const double mean = trials * rho[i], sd = std::sqrt(trials * rho[i] * (1 - rho[i]));
        CHECK(std::abs(static_cast<double>(counts[i]) - mean) <= 4.0 * sd);
    }
    CHECK(total == trials);
    CHECK(counts[1] == 0);
    CHECK(multinomial(0, rho, rng) == std::vector<std::size_t>(rho.size(), 0));
}

TEST_CASE("resample: concentrated and split importance")
{
    const PointSet ps = cube_points(400, 1.0, 7, [](const Vec3 & p) { return sphere_sdf(p, 0.5); });
    const TetGrid g = delaunay(ps);

    SUBCASE("one voxel receives every point")
    {
        std::vector<double> h(4 * 4 * 4, 0.0);
        VoxelImportance imp = box_importance(unit_box(), 4, h);
        const std::size_t v = imp.voxel_of(Vec3(0.3, -0.3, 0.3));
        imp.h[v] = 1.0;
        imp.normalize();
        const ResampleResult r = resample(ps, g, imp, 100, 1);
        CHECK(r.added == 100);
        const Aabb vb = imp.voxel_bounds(v);
        for (std::size_t i = r.kept.size(); i < r.points.size(); ++i)
        {
            const Vec3 & p = r.points.positions[i];
            CHECK((p.array() >= vb.lo.array() - 1e-6).all());
            CHECK((p.array() <= vb.hi.array() + 1e-6).all());
        }
    }
    SUBCASE("two voxels with half the mass each")
    {
        std::vector<double> h(2 * 2 * 2, 0.0);
        VoxelImportance imp = box_importance(unit_box(), 2, h);
        const std::size_t a = imp.voxel_of(Vec3(-0.5, -0.5, -0.5)), b = imp.voxel_of(Vec3(0.5, 0.5, 0.5));
        imp.h[a] = imp.h[b] = 1.0;
        imp.normalize();
        const ResampleResult r = resample(ps, g, imp, 10000, 2);
        std::size_t na = 0, nb = 0;
        for (std::size_t i = r.kept.size(); i < r.points.size(); ++i)
        {
            const std::size_t v = imp.voxel_of(r.points.positions[i]);
            na += v == a;
            nb += v == b;
        }
        CHECK(na + nb == 10000);
        CHECK(std::abs(static_cast<double>(na) - 5000.0) <= 4.0 * 50.0);
    }
}

TEST_CASE("resample: count, removal and interpolation invariants")
{
    for (std::uint64_t seed = 0; seed < 4; ++seed)
    {
        const PointSet ps =
            cube_points(500, 1.0, 10 + seed, [](const Vec3 & p) { return torus_sdf(p, 0.5, 0.2); }, 2, 0.5);
        const TetGrid g = delaunay(ps);
        const auto passive = passive_points(g, ps);
        const auto flags = active_points(g, ps);
        VoxelImportance imp = builtin_importance(BuiltinImportance::radial, marching_tets(g, ps), 8);
        const std::size_t k = 300;
        const ResampleResult r = resample(ps, g, imp, k, seed);

        CHECK(r.points.size() == ps.size() - passive.size() + k);
        CHECK(r.removed == passive.size());
        CHECK(r.points.generation == ps.generation + 1);

        std::set<int> kept(r.kept.begin(), r.kept.end());
        for (int i : passive)
            CHECK(kept.count(i) == 0);
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            if (kept.count(static_cast<int>(i)) == 0)
            {
                CHECK(!flags[i]);
                for (int j : g.vertex_neighbors(static_cast<int>(i)))
                    CHECK(!flags[j]);
            }
        }
        for (std::size_t n = 0; n < r.kept.size(); ++n)
            CHECK(r.points.sdf[n] == ps.sdf[r.kept[n]]);

        // New values lie in the range of the containing tet's values.
        const int q = ps.coeffs_per_point();
        for (std::size_t n = r.kept.size(); n < r.points.size(); ++n)
        {
            const auto loc = locate_brute_force(g, r.points.positions[n]);
            REQUIRE(loc);
            const Tet & t = g.tets[loc->tet];
            double lo = 1e300, hi = -1e300;
            for (int a : t)
                lo = std::min(lo, ps.sdf[a]), hi = std::max(hi, ps.sdf[a]);
            // Duplicate perturbation can move a point across a tet face by
            // a negligible amount; allow for that in the bound.
            CHECK(r.points.sdf[n] >= lo - 1e-6);
            CHECK(r.points.sdf[n] <= hi + 1e-6);
            for (int j = 0; j < q; ++j)
            {
                double clo = 1e300, chi = -1e300;
                for (int a : t)
                    clo = std::min(clo, ps.coeffs(a)[j]), chi = std::max(chi, ps.coeffs(a)[j]);
                CHECK(r.points.coeffs(n)[j] >= clo - 1e-6);
                CHECK(r.points.coeffs(n)[j] <= chi + 1e-6);
            }
        }
        CHECK_NOTHROW(delaunay(r.points));
    }
}

TEST_CASE("resample: a point placed on a grid point inherits its values")
{
    const PointSet ps = cube_points(200, 1.0, 3, [](const Vec3 & p) { return sphere_sdf(p, 0.5); }, 1, 0.8);
    const TetGrid g = delaunay(ps);
    const auto flags = active_points(g, ps);
    int src = -1;
    for (std::size_t i = 8; i < ps.size() && src < 0; ++i)
        if (flags[i])
            src = static_cast<int>(i);
    REQUIRE(src >= 0);

    Aabb point_box;
    point_box.lo = point_box.hi = ps.positions[src];
    const VoxelImportance imp = box_importance(point_box, 1, {1.0});
    const ResampleResult r = resample(ps, g, imp, 1, 4);
    REQUIRE(r.added == 1);
    const std::size_t n = r.points.size() - 1;
    CHECK((r.points.positions[n] - ps.positions[src]).norm() < 1e-6);
    CHECK(r.points.sdf[n] == ps.sdf[src]);
    for (int j = 0; j < ps.coeffs_per_point(); ++j)
        CHECK(r.points.coeffs(n)[j] == ps.coeffs(src)[j]);
}

TEST_CASE("resample: no importance mass falls back to the box")
{
    const PointSet ps = cube_points(100, 1.0, 8, [](const Vec3 & p) { return sphere_sdf(p, 0.5); });
    const TetGrid g = delaunay(ps);
    const VoxelImportance imp = box_importance(unit_box(0.5), 2, std::vector<double>(8, 0.0));
    const ResampleResult r = resample(ps, g, imp, 50, 1);
    CHECK(r.added == 50);
    for (std::size_t n = r.kept.size(); n < r.points.size(); ++n)
        CHECK((r.points.positions[n].array().abs() <= 0.5 + 1e-6).all());
}
