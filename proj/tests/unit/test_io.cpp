#include "deltet/extract.hpp"
#include "deltet/io.hpp"
#include "deltet/metrics.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace deltet;
using namespace deltet::testing;

namespace
{
    std::string temp_path(const std::string & name)
    {
        return (std::filesystem::temp_directory_path() / ("deltet_test_" + name)).string();
    }

    PointSet random_set(std::size_t n, int degree, std::uint64_t seed)
    {
        Rng rng(seed);
        std::vector<Vec3> pts;
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back(Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
        PointSet ps = make_points(std::move(pts), {}, degree);
        for (double & s : ps.sdf)
            s = rng.uniform(-1, 1);
        for (double & c : ps.sh)
            c = rng.uniform(-1, 1);
        return ps;
    }

    template <class T>
    bool same_bits(const std::vector<T> & a, const std::vector<T> & b)
    {
        return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
    }

    // Half-precision spacing at |x| (normal range), from the exponent.
    double half_ulp(double x)
    {
        const double ax = std::abs(x);
        if (ax < std::ldexp(1.0, -14))
            return std::ldexp(1.0, -24);
        return std::ldexp(1.0, std::ilogb(ax) - 10);
    }
}

TEST_CASE("twv: payload size formula over a parameter grid")
{
    for (std::size_t n : {0u, 1u, 7u, 1000u})
        for (int d : {0, 1, 2, 3})
            for (Precision p : {Precision::f16, Precision::f32, Precision::f64})
                for (bool drop : {false, true})
                {
                    const PointSet ps = random_set(n, d, n + 10 * d);
                    const auto bytes = encode(ps, p, drop);
                    const std::size_t b = p == Precision::f16 ? 2 : p == Precision::f32 ? 4 : 8;
                    const std::size_t q = static_cast<std::size_t>((d + 1) * (d + 1)) - (drop ? 1 : 0);
                    CHECK(bytes.size() - kTwvHeaderSize == b * (4 + q) * n);
                    CHECK(twv_payload_size(n, d, p, drop) == b * (4 + q) * n);
                }
    CHECK(twv_payload_size(1000, 1, Precision::f32, false) == 32000);
    CHECK(encode(PointSet{}, Precision::f32).size() == kTwvHeaderSize);
}

TEST_CASE("twv: header layout")
{
    const PointSet ps = random_set(3, 1, 1);
    const auto bytes = encode(ps, Precision::f32, true);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "TWV1");
    CHECK(bytes[4] == (1 | 4));
    CHECK(bytes[5] == 1);
    CHECK(bytes[6] == 3);
    for (int k = 7; k < 14; ++k)
        CHECK(bytes[k] == 0);
    const TwvHeader h = decode_header(bytes);
    CHECK(h.precision == Precision::f32);
    CHECK(h.drop_l0);
    CHECK(h.stored_coeffs() == 3);
}

TEST_CASE("twv: f64 and f32 roundtrips are bitwise")
{
    const PointSet ps = random_set(257, 2, 3);
    const PointSet d64 = decode(encode(ps, Precision::f64));
    CHECK(same_bits(d64.positions, ps.positions));
    CHECK(same_bits(d64.sdf, ps.sdf));
    CHECK(same_bits(d64.sh, ps.sh));
    CHECK(d64.degree == 2);

    // f32: values already representable in single precision survive exactly.
    PointSet single = ps;
    for (Vec3 & p : single.positions)
        for (int k = 0; k < 3; ++k)
            p[k] = static_cast<float>(p[k]);
    for (double & s : single.sdf)
        s = static_cast<float>(s);
    for (double & c : single.sh)
        c = static_cast<float>(c);
    const PointSet d32 = decode(encode(single, Precision::f32));
    CHECK(same_bits(d32.positions, single.positions));
    CHECK(same_bits(d32.sdf, single.sdf));
    CHECK(same_bits(d32.sh, single.sh));
    // And a second pass is a fixed point.
    CHECK(encode(d32, Precision::f32) == encode(single, Precision::f32));
}

TEST_CASE("twv: f16 error within half an ulp, drop_l0 restores zero")
{
    const PointSet ps = random_set(500, 1, 4);
    const PointSet h = decode(encode(ps, Precision::f16, true));
    for (std::size_t i = 0; i < ps.size(); ++i)
    {
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(h.positions[i][k] - ps.positions[i][k]) <= 0.5 * half_ulp(ps.positions[i][k]));
        CHECK(std::abs(h.sdf[i] - ps.sdf[i]) <= 0.5 * half_ulp(ps.sdf[i]));
        CHECK(h.sh[4 * i] == 0.0);
        for (int k = 1; k < 4; ++k)
            CHECK(std::abs(h.sh[4 * i + k] - ps.sh[4 * i + k]) <= 0.5 * half_ulp(ps.sh[4 * i + k]));
    }
    CHECK(from_half(to_half(1.0)) == 1.0);
    CHECK(from_half(to_half(65504.0)) == 65504.0);
    CHECK(std::isinf(from_half(to_half(65520.0))));
    CHECK(from_half(to_half(1.0 + std::ldexp(1.0, -11))) == 1.0);  // tie to even
    CHECK(from_half(to_half(std::ldexp(1.0, -24))) == std::ldexp(1.0, -24));
}

TEST_CASE("twv: malformed input raises io errors")
{
    const auto good = encode(random_set(4, 1, 5), Precision::f32);
    auto check_io = [](std::vector<std::uint8_t> bytes) {
        try
        {
            (void)decode(bytes);
            FAIL("expected an error");
        }
        catch (const Error & e)
        {
            CHECK(e.kind() == ErrorKind::io);
        }
    };
    check_io({});
    auto magic = good;
    magic[0] = 'X';
    check_io(magic);
    auto truncated = good;
    truncated.pop_back();
    check_io(truncated);
    auto extra = good;
    extra.push_back(0);
    check_io(extra);
    auto flags = good;
    flags[4] = 3;
    check_io(flags);
    flags[4] = 0x81;
    check_io(flags);
}

TEST_CASE("twv: file roundtrip")
{
    const PointSet ps = random_set(50, 2, 6);
    const std::string path = temp_path("rt.twv");
    write_twv(path, ps, Precision::f64);
    const PointSet back = read_twv(path);
    CHECK(same_bits(back.sdf, ps.sdf));
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_twv(temp_path("missing.twv")), Error);
}

TEST_CASE("trim: closed-form cases")
{
    PointSet same = make_points({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}, {1, 1, 1, 1});
    CHECK(trim_inactive(same, delaunay(same)).size() == 0);

    PointSet one = make_points({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}, {-1, 1, 1, 1});
    CHECK(trim_inactive(one, delaunay(one)).size() == 4);

    // Octahedral shell of negative points around a deep negative center,
    // inside a positive cube.
    std::vector<Vec3> pts = {Vec3(0, 0, 0)};
    std::vector<double> sdf = {-1.0};
    for (int a = 0; a < 3; ++a)
        for (double s : {-0.5, 0.5})
        {
            Vec3 p = Vec3::Zero();
            p[a] = s;
            pts.push_back(p);
            sdf.push_back(-0.2);
        }
    for (int c = 0; c < 8; ++c)
    {
        pts.push_back(Vec3(c & 1 ? 2 : -2, c & 2 ? 2 : -2, c & 4 ? 2 : -2));
        sdf.push_back(1.0);
    }
    const PointSet shell = make_points(pts, sdf);
    const TetGrid grid = delaunay(shell);
    // Brute force: the center is adjacent only to shell points.
    for (int j : grid.vertex_neighbors(0))
        CHECK(shell.sdf[j] < 0.0);
    const PointSet trimmed = trim_inactive(shell, grid);
    CHECK(trimmed.size() == pts.size() - 1);
    for (const Vec3 & p : trimmed.positions)
        CHECK(!p.isZero(0.0));
    CHECK(trimmed.generation == shell.generation + 1);
}

TEST_CASE("trim: retriangulated extraction stays close")
{
    for (std::uint64_t seed : {1, 2})
    {
        const PointSet ps = cube_points(3000, 1.0, seed, [](const Vec3 & p) { return torus_sdf(p); }, 1, 0.1);
        const SurfaceMesh full = extract_surface(delaunay(ps), ps);
        const PointSet trimmed = trim_inactive(ps, delaunay(ps));
        CHECK(trimmed.size() < ps.size());
        const PointSet back = decode(encode(trimmed, Precision::f32));
        const SurfaceMesh mesh = extract_surface(delaunay(back), back);
        CHECK(hausdorff(full, mesh) < 1e-2);
    }
}

TEST_CASE("mesh export: OBJ layout, OBJ and PLY roundtrips")
{
    SurfaceMesh tri;
    tri.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    tri.faces = {{0, 1, 2}};
    const std::string obj = temp_path("tri.obj");
    export_mesh(tri, obj);
    std::ifstream in(obj);
    int v = 0, f = 0;
    for (std::string line; std::getline(in, line);)
    {
        v += line.rfind("v ", 0) == 0;
        f += line.rfind("f ", 0) == 0;
    }
    CHECK(v == 3);
    CHECK(f == 1);

    const PointSet ps = cube_points(1500, 1.0, 3, [](const Vec3 & p) { return sphere_sdf(p, 0.6); });
    const SurfaceMesh m = extract_surface(delaunay(ps), ps);
    for (const char * ext : {".obj", ".ply"})
    {
        const std::string path = temp_path(std::string("rt") + ext);
        export_mesh(m, path);
        const SurfaceMesh back = import_mesh(path);
        CHECK(back.faces == m.faces);
        CHECK(same_bits(back.vertices, m.vertices));
        std::filesystem::remove(path);
    }
    std::filesystem::remove(obj);
    CHECK_THROWS_AS(mesh_format_for("mesh.stl"), Error);
}

TEST_CASE("mesh export: large PLY header counts")
{
    SurfaceMesh m;
    for (int k = 0; k < 9000; ++k)
        append_box(m, Vec3(k, 0, 0), Vec3(k + 0.5, 1, 1));
    REQUIRE(m.num_faces() > 100000);
    const std::string path = temp_path("big.ply");
    export_mesh(m, path);
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t nv = 0, nf = 0;
    while (std::getline(in, line) && line != "end_header")
    {
        std::sscanf(line.c_str(), "element vertex %zu", &nv);
        std::sscanf(line.c_str(), "element face %zu", &nf);
    }
    CHECK(nv == m.num_vertices());
    CHECK(nf == m.num_faces());
    const SurfaceMesh back = import_mesh(path);
    CHECK(back.num_faces() == m.num_faces());
    std::filesystem::remove(path);
}

TEST_CASE("mesh import: polygons, negative indices, degenerate faces, ascii PLY")
{
    const std::string obj = temp_path("poly.obj");
    {
        std::ofstream out(obj);
        out << "# quad and a degenerate face\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\n";
        out << "f 1/1/1 2/1/1 3/1/1 4/1/1\nf -4 -3 -3\nf 1 2 1\n";
    }
    ImportReport report;
    const SurfaceMesh m = import_mesh(obj, &report);
    CHECK(m.num_faces() == 2);
    CHECK(report.fan_triangulated == 1);
    CHECK(report.dropped_degenerate == 2);
    std::filesystem::remove(obj);

    const std::string ply = temp_path("ascii.ply");
    {
        std::ofstream out(ply);
        out << "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
               "property uchar red\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
               "0 0 0 255\n1 0 0 0\n1 1 0 0\n0 1 0 0\n4 0 1 2 3\n";
    }
    const SurfaceMesh p = import_mesh(ply, &report);
    CHECK(p.num_faces() == 2);
    CHECK(p.vertices[2] == Vec3(1, 1, 0));
    std::filesystem::remove(ply);

    const std::string bad = temp_path("bad.obj");
    {
        std::ofstream out(bad);
        out << "v 0 0 0\nf 1 2 3\n";
    }
    CHECK_THROWS_AS(import_mesh(bad), Error);
    std::filesystem::remove(bad);
}

TEST_CASE("mesh normalize: bounding box fits the unit cube margin")
{
    SurfaceMesh m;
    append_box(m, Vec3(3, 4, 5), Vec3(7, 5, 6));
    const SurfaceMesh n = normalize_mesh(m);
    const auto b = n.bounds();
    CHECK((b[1] - b[0]).maxCoeff() == doctest::Approx(1.8));
    CHECK((b[0] + b[1]).norm() == doctest::Approx(0.0).epsilon(1e-12));
}
