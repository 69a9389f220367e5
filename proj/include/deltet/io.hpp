#pragma once

#include "grid.hpp"
#include "mesh.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace deltet
{
    enum class Precision : std::uint8_t
    {
        f16 = 0,
        f32 = 1,
        f64 = 2,
    };

    std::size_t scalar_bytes(Precision p);
    Precision parse_precision(const std::string & s);

    // Layout: "TWV1", flags (bits 0-1 precision, bit 2 l=0 band dropped),
    // degree (u8), point count (u64 LE), then point-major scalars
    // (x, y, z, s, stored SH coefficients), little-endian.
    constexpr std::size_t kTwvHeaderSize = 14;

    struct TwvHeader
    {
        Precision precision = Precision::f32;
        bool drop_l0 = false;
        int degree = 0;
        std::uint64_t count = 0;

        int stored_coeffs() const { return sh_count(degree) - (drop_l0 ? 1 : 0); }
    };

    /// B (4 + q_stored) N.
    std::size_t twv_payload_size(std::uint64_t n, int degree, Precision p, bool drop_l0);

    std::vector<std::uint8_t> encode(const PointSet & ps, Precision p, bool drop_l0 = false);

    TwvHeader decode_header(std::span<const std::uint8_t> bytes);

    /// Throws io on malformed input. Dropped l=0 coefficients decode as 0.
    PointSet decode(std::span<const std::uint8_t> bytes);

    void write_twv(const std::string & path, const PointSet & ps, Precision p, bool drop_l0 = false);
    PointSet read_twv(const std::string & path);

    /// Keeps exactly the points incident to an active edge.
    PointSet trim_inactive(const PointSet & ps, const TetGrid & grid);

    /// IEEE binary16 conversion, round to nearest even.
    std::uint16_t to_half(double x);
    double from_half(std::uint16_t h);

    enum class MeshFormat
    {
        obj,
        ply,
    };

    /// Format from the file extension (.obj / .ply); throws io otherwise.
    MeshFormat mesh_format_for(const std::string & path);

    /// ASCII OBJ or binary little-endian PLY (double coordinates).
    void export_mesh(const SurfaceMesh & mesh, const std::string & path, MeshFormat format);
    void export_mesh(const SurfaceMesh & mesh, const std::string & path);

    struct ImportReport
    {
        std::size_t fan_triangulated = 0;   // polygons with more than 3 corners
        std::size_t dropped_degenerate = 0;  // faces with repeated or collinear corners
    };

    /// OBJ or PLY (ascii / binary little-endian) triangle mesh.
    SurfaceMesh import_mesh(const std::string & path, ImportReport * report = nullptr);

    /// Uniformly scales and centers the mesh so its bounding box fits [-0.9, 0.9]^3.
    SurfaceMesh normalize_mesh(SurfaceMesh mesh);

    std::vector<std::uint8_t> read_file(const std::string & path);
    void write_file(const std::string & path, std::span<const std::uint8_t> bytes);
}
