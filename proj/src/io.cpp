#include "deltet/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace deltet
{
    static_assert(std::endian::native == std::endian::little, "little-endian host assumed for byte I/O");

    std::size_t scalar_bytes(Precision p)
    {
        switch (p)
        {
        case Precision::f16: return 2;
        case Precision::f32: return 4;
        case Precision::f64: return 8;
        }
        throw Error(ErrorKind::invalid_argument, "unknown precision");
    }

    Precision parse_precision(const std::string & s)
    {
        if (s == "f16")
            return Precision::f16;
        if (s == "f32")
            return Precision::f32;
        if (s == "f64")
            return Precision::f64;
        throw Error(ErrorKind::invalid_argument, "unknown precision '" + s + "' (expected f16, f32 or f64)");
    }

    std::size_t twv_payload_size(std::uint64_t n, int degree, Precision p, bool drop_l0)
    {
        const int q = sh_count(degree) - (drop_l0 ? 1 : 0);
        return scalar_bytes(p) * static_cast<std::size_t>(4 + q) * static_cast<std::size_t>(n);
    }

    std::uint16_t to_half(double x)
    {
        const std::uint16_t sign = std::signbit(x) ? 0x8000 : 0;
        if (std::isnan(x))
            return sign | 0x7e00;
        const double a = std::fabs(x);
        if (a >= 65520.0)
            return sign | 0x7c00;
        if (a < std::ldexp(1.0, -14))
        {
            // Subnormal: multiples of 2^-24. A result of 1024 is the smallest normal.
            return sign | static_cast<std::uint16_t>(std::nearbyint(std::ldexp(a, 24)));
        }
        int e;
        const double m = std::frexp(a, &e);  // a = m 2^e, m in [0.5, 1)
        const double frac = std::nearbyint((2.0 * m - 1.0) * 1024.0);
        const int bits = ((e - 1 + 15) << 10) + static_cast<int>(frac);
        return sign | static_cast<std::uint16_t>(std::min(bits, 0x7c00));
    }

    double from_half(std::uint16_t h)
    {
        const double sign = (h & 0x8000) ? -1.0 : 1.0;
        const int e = (h >> 10) & 0x1f;
        const int m = h & 0x3ff;
        if (e == 0)
            return sign * std::ldexp(m, -24);
        if (e == 31)
            return m == 0 ? sign * INFINITY : NAN;
        return sign * std::ldexp(1024 + m, e - 25);
    }

    namespace
    {
        class Writer
        {
        public:
            explicit Writer(std::vector<std::uint8_t> & out) : out_(out) {}

            template <class T>
            void put(T v)
            {
                std::uint8_t b[sizeof(T)];
                std::memcpy(b, &v, sizeof(T));
                out_.insert(out_.end(), b, b + sizeof(T));
            }

            void scalar(double v, Precision p)
            {
                switch (p)
                {
                case Precision::f16: put(to_half(v)); break;
                case Precision::f32: put(static_cast<float>(v)); break;
                case Precision::f64: put(v); break;
                }
            }

        private:
            std::vector<std::uint8_t> & out_;
        };

        class Reader
        {
        public:
            explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

            template <class T>
            T get()
            {
                if (pos_ + sizeof(T) > in_.size())
                {
                    throw Error(ErrorKind::io, "truncated input");
                }
                T v;
                std::memcpy(&v, in_.data() + pos_, sizeof(T));
                pos_ += sizeof(T);
                return v;
            }

            double scalar(Precision p)
            {
                switch (p)
                {
                case Precision::f16: return from_half(get<std::uint16_t>());
                case Precision::f32: return get<float>();
                case Precision::f64: return get<double>();
                }
                return 0.0;
            }

            std::size_t remaining() const { return in_.size() - pos_; }

        private:
            std::span<const std::uint8_t> in_;
            std::size_t pos_ = 0;
        };
    }

    std::vector<std::uint8_t> encode(const PointSet & ps, Precision p, bool drop_l0)
    {
        ps.validate();
        if (ps.degree > 255)
        {
            throw Error(ErrorKind::invalid_argument, "degree does not fit the format");
        }
        std::vector<std::uint8_t> out;
        out.reserve(kTwvHeaderSize + twv_payload_size(ps.size(), ps.degree, p, drop_l0));
        Writer w(out);
        out.insert(out.end(), {'T', 'W', 'V', '1'});
        w.put(static_cast<std::uint8_t>(static_cast<std::uint8_t>(p) | (drop_l0 ? 0x4 : 0x0)));
        w.put(static_cast<std::uint8_t>(ps.degree));
        w.put(static_cast<std::uint64_t>(ps.size()));
        const int q = ps.coeffs_per_point();
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            for (int k = 0; k < 3; ++k)
                w.scalar(ps.positions[i][k], p);
            w.scalar(ps.sdf[i], p);
            const auto c = ps.coeffs(i);
            for (int k = drop_l0 ? 1 : 0; k < q; ++k)
                w.scalar(c[k], p);
        }
        return out;
    }

    TwvHeader decode_header(std::span<const std::uint8_t> bytes)
    {
        if (bytes.size() < kTwvHeaderSize || std::memcmp(bytes.data(), "TWV1", 4) != 0)
        {
            throw Error(ErrorKind::io, "not a TWV1 file");
        }
        Reader r(bytes.subspan(4));
        const auto flags = r.get<std::uint8_t>();
        TwvHeader h;
        if ((flags & 0x3) > 2 || (flags & ~0x7) != 0)
        {
            throw Error(ErrorKind::io, "invalid TWV flags");
        }
        h.precision = static_cast<Precision>(flags & 0x3);
        h.drop_l0 = (flags & 0x4) != 0;
        h.degree = r.get<std::uint8_t>();
        h.count = r.get<std::uint64_t>();
        return h;
    }

    PointSet decode(std::span<const std::uint8_t> bytes)
    {
        const TwvHeader h = decode_header(bytes);
        const std::size_t payload = bytes.size() - kTwvHeaderSize;
        const std::size_t per_point = scalar_bytes(h.precision) * static_cast<std::size_t>(4 + h.stored_coeffs());
        if (h.count > payload / per_point || payload != twv_payload_size(h.count, h.degree, h.precision, h.drop_l0))
        {
            throw Error(ErrorKind::io, "TWV payload size does not match header");
        }
        Reader r(bytes.subspan(kTwvHeaderSize));
        PointSet ps;
        ps.degree = h.degree;
        const int q = sh_count(h.degree);
        ps.positions.resize(h.count);
        ps.sdf.resize(h.count);
        ps.sh.assign(h.count * q, 0.0);
        for (std::size_t i = 0; i < h.count; ++i)
        {
            for (int k = 0; k < 3; ++k)
                ps.positions[i][k] = r.scalar(h.precision);
            ps.sdf[i] = r.scalar(h.precision);
            auto c = ps.coeffs(i);
            for (int k = h.drop_l0 ? 1 : 0; k < q; ++k)
                c[k] = r.scalar(h.precision);
        }
        return ps;
    }

    std::vector<std::uint8_t> read_file(const std::string & path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
            throw Error(ErrorKind::io, "cannot open '" + path + "'");
        }
        return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    }

    void write_file(const std::string & path, std::span<const std::uint8_t> bytes)
    {
        std::ofstream out(path, std::ios::binary);
        out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out)
        {
            throw Error(ErrorKind::io, "cannot write '" + path + "'");
        }
    }

    void write_twv(const std::string & path, const PointSet & ps, Precision p, bool drop_l0)
    {
        write_file(path, encode(ps, p, drop_l0));
    }

    PointSet read_twv(const std::string & path) { return decode(read_file(path)); }

    PointSet trim_inactive(const PointSet & ps, const TetGrid & grid)
    {
        const auto active = active_points(grid, ps);
        PointSet out;
        out.degree = ps.degree;
        for (std::size_t i = 0; i < ps.size(); ++i)
        {
            if (active[i])
            {
                out.push_back(ps.positions[i], ps.sdf[i], ps.coeffs(i));
            }
        }
        out.generation = ps.generation + 1;
        return out;
    }

    MeshFormat mesh_format_for(const std::string & path)
    {
        auto ends_with = [&](const char * ext) {
            const std::size_t n = std::strlen(ext);
            if (path.size() < n)
                return false;
            for (std::size_t k = 0; k < n; ++k)
                if (std::tolower(static_cast<unsigned char>(path[path.size() - n + k])) != ext[k])
                    return false;
            return true;
        };
        if (ends_with(".obj"))
            return MeshFormat::obj;
        if (ends_with(".ply"))
            return MeshFormat::ply;
        throw Error(ErrorKind::io, "unsupported mesh extension for '" + path + "' (expected .obj or .ply)");
    }

    void export_mesh(const SurfaceMesh & mesh, const std::string & path) { export_mesh(mesh, path, mesh_format_for(path)); }

    void export_mesh(const SurfaceMesh & mesh, const std::string & path, MeshFormat format)
    {
        if (format == MeshFormat::obj)
        {
            std::ofstream out(path);
            if (!out)
                throw Error(ErrorKind::io, "cannot write '" + path + "'");
            out.precision(17);
            for (const Vec3 & v : mesh.vertices)
                out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
            for (const Tri & f : mesh.faces)
                out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
            if (!out)
                throw Error(ErrorKind::io, "write failed for '" + path + "'");
            return;
        }
        std::ostringstream header;
        header << "ply\nformat binary_little_endian 1.0\nelement vertex " << mesh.num_vertices()
               << "\nproperty double x\nproperty double y\nproperty double z\nelement face " << mesh.num_faces()
               << "\nproperty list uchar int vertex_indices\nend_header\n";
        std::vector<std::uint8_t> bytes;
        const std::string h = header.str();
        bytes.insert(bytes.end(), h.begin(), h.end());
        Writer w(bytes);
        for (const Vec3 & v : mesh.vertices)
            for (int k = 0; k < 3; ++k)
                w.put(v[k]);
        for (const Tri & f : mesh.faces)
        {
            w.put(static_cast<std::uint8_t>(3));
            for (int k = 0; k < 3; ++k)
                w.put(static_cast<std::int32_t>(f[k]));
        }
        write_file(path, bytes);
    }

    namespace
    {
        void add_polygon(SurfaceMesh & mesh, const std::vector<int> & poly, ImportReport & report)
        {
            if (poly.size() < 3)
            {
                ++report.dropped_degenerate;
                return;
            }
            if (poly.size() > 3)
            {
                ++report.fan_triangulated;
            }
            for (std::size_t k = 1; k + 1 < poly.size(); ++k)
            {
                const Tri t{poly[0], poly[k], poly[k + 1]};
                for (int v : t)
                    if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size())
                        throw Error(ErrorKind::io, "face index out of range");
                if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
                {
                    ++report.dropped_degenerate;
                    continue;
                }
                mesh.faces.push_back(t);
                if (mesh.face_normal(mesh.faces.size() - 1).squaredNorm() == 0.0)
                {
                    mesh.faces.pop_back();
                    ++report.dropped_degenerate;
                }
            }
        }

        SurfaceMesh import_obj(const std::string & path, ImportReport & report)
        {
            std::ifstream in(path);
            if (!in)
                throw Error(ErrorKind::io, "cannot open '" + path + "'");
            SurfaceMesh mesh;
            std::vector<std::vector<int>> polys;
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line))
            {
                ++lineno;
                std::istringstream ls(line);
                std::string tag;
                if (!(ls >> tag))
                    continue;
                if (tag == "v")
                {
                    Vec3 v;
                    if (!(ls >> v.x() >> v.y() >> v.z()))
                        throw Error(ErrorKind::io, path + ":" + std::to_string(lineno) + ": malformed vertex");
                    mesh.vertices.push_back(v);
                }
                else if (tag == "f")
                {
                    std::vector<int> poly;
                    std::string tok;
                    while (ls >> tok)
                    {
                        int idx = 0;
                        try
                        {
                            idx = std::stoi(tok.substr(0, tok.find('/')));
                        }
                        catch (const std::exception &)
                        {
                            throw Error(ErrorKind::io, path + ":" + std::to_string(lineno) + ": malformed face");
                        }
                        poly.push_back(idx < 0 ? static_cast<int>(mesh.vertices.size()) + idx : idx - 1);
                    }
                    polys.push_back(std::move(poly));
                }
            }
            for (const auto & p : polys)
                add_polygon(mesh, p, report);
            return mesh;
        }

        enum class PlyType
        {
            i8, u8, i16, u16, i32, u32, f32, f64,
        };

        PlyType ply_type(const std::string & s)
        {
            if (s == "char" || s == "int8") return PlyType::i8;
            if (s == "uchar" || s == "uint8") return PlyType::u8;
            if (s == "short" || s == "int16") return PlyType::i16;
            if (s == "ushort" || s == "uint16") return PlyType::u16;
            if (s == "int" || s == "int32") return PlyType::i32;
            if (s == "uint" || s == "uint32") return PlyType::u32;
            if (s == "float" || s == "float32") return PlyType::f32;
            if (s == "double" || s == "float64") return PlyType::f64;
            throw Error(ErrorKind::io, "unknown PLY type '" + s + "'");
        }

        struct PlyProperty
        {
            std::string name;
            PlyType type;
            bool list = false;
            PlyType count_type = PlyType::u8;
        };

        struct PlyElement
        {
            std::string name;
            std::size_t count = 0;
            std::vector<PlyProperty> props;
        };

        double read_binary(Reader & r, PlyType t)
        {
            switch (t)
            {
            case PlyType::i8: return r.get<std::int8_t>();
            case PlyType::u8: return r.get<std::uint8_t>();
            case PlyType::i16: return r.get<std::int16_t>();
            case PlyType::u16: return r.get<std::uint16_t>();
            case PlyType::i32: return r.get<std::int32_t>();
            case PlyType::u32: return r.get<std::uint32_t>();
            case PlyType::f32: return r.get<float>();
            case PlyType::f64: return r.get<double>();
            }
            return 0.0;
        }

        SurfaceMesh import_ply(const std::string & path, ImportReport & report)
        {
            const auto bytes = read_file(path);
            const std::string text(bytes.begin(), bytes.end());
            const std::size_t end = text.find("end_header");
            if (text.rfind("ply", 0) != 0 || end == std::string::npos)
                throw Error(ErrorKind::io, "'" + path + "' is not a PLY file");
            const std::size_t body = text.find('\n', end) + 1;
            std::istringstream hs(text.substr(0, end));
            std::string line, format;
            std::vector<PlyElement> elements;
            while (std::getline(hs, line))
            {
                std::istringstream ls(line);
                std::string tag;
                ls >> tag;
                if (tag == "format")
                    ls >> format;
                else if (tag == "element")
                {
                    PlyElement e;
                    ls >> e.name >> e.count;
                    elements.push_back(e);
                }
                else if (tag == "property")
                {
                    if (elements.empty())
                        throw Error(ErrorKind::io, "PLY property before element");
                    PlyProperty p;
                    std::string t;
                    ls >> t;
                    if (t == "list")
                    {
                        std::string ct, it;
                        ls >> ct >> it >> p.name;
                        p.list = true;
                        p.count_type = ply_type(ct);
                        p.type = ply_type(it);
                    }
                    else
                    {
                        p.type = ply_type(t);
                        ls >> p.name;
                    }
                    elements.back().props.push_back(p);
                }
            }
            const bool ascii = format == "ascii";
            if (!ascii && format != "binary_little_endian")
                throw Error(ErrorKind::io, "unsupported PLY format '" + format + "'");

            SurfaceMesh mesh;
            std::vector<std::vector<int>> polys;
            Reader r(std::span<const std::uint8_t>(bytes).subspan(body));
            std::istringstream as(ascii ? text.substr(body) : std::string());
            auto next = [&](PlyType t) -> double {
                if (!ascii)
                    return read_binary(r, t);
                double v;
                if (!(as >> v))
                    throw Error(ErrorKind::io, "truncated PLY data");
                return v;
            };
            for (const PlyElement & e : elements)
            {
                for (std::size_t k = 0; k < e.count; ++k)
                {
                    Vec3 v = Vec3::Zero();
                    std::vector<int> poly;
                    for (const PlyProperty & p : e.props)
                    {
                        if (p.list)
                        {
                            const auto n = static_cast<std::size_t>(next(p.count_type));
                            for (std::size_t j = 0; j < n; ++j)
                                poly.push_back(static_cast<int>(next(p.type)));
                        }
                        else
                        {
                            const double x = next(p.type);
                            if (p.name == "x")
                                v.x() = x;
                            else if (p.name == "y")
                                v.y() = x;
                            else if (p.name == "z")
                                v.z() = x;
                        }
                    }
                    if (e.name == "vertex")
                        mesh.vertices.push_back(v);
                    else if (e.name == "face")
                        polys.push_back(std::move(poly));
                }
            }
            for (const auto & p : polys)
                add_polygon(mesh, p, report);
            return mesh;
        }
    }

    SurfaceMesh import_mesh(const std::string & path, ImportReport * report)
    {
        ImportReport local;
        ImportReport & rep = report ? *report : local;
        return mesh_format_for(path) == MeshFormat::obj ? import_obj(path, rep) : import_ply(path, rep);
    }

    SurfaceMesh normalize_mesh(SurfaceMesh mesh)
    {
        if (mesh.vertices.empty())
            return mesh;
        const auto [lo, hi] = mesh.bounds();
        const double extent = (hi - lo).maxCoeff();
        if (extent <= 0.0)
            throw Error(ErrorKind::degenerate_input, "mesh has zero extent");
        const Vec3 center = 0.5 * (lo + hi);
        const double scale = 1.8 / extent;
        for (Vec3 & v : mesh.vertices)
            v = (v - center) * scale;
        return mesh;
    }
}
