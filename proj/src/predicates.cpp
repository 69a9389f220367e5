#include "deltet/predicates.hpp"

#include <gmpxx.h>

#include <atomic>
#include <cmath>

namespace deltet::predicates
{
    namespace
    {
        constexpr double kEps = 0x1.0p-53;
        // Shewchuk's first-stage bounds, widened by 4x.
        constexpr double kO2ErrA = 4.0 * (3.0 + 16.0 * kEps) * kEps;
        constexpr double kO3ErrA = 4.0 * (7.0 + 56.0 * kEps) * kEps;
        constexpr double kIspErrA = 4.0 * (16.0 + 224.0 * kEps) * kEps;

        std::atomic<std::uint64_t> g_exact_count{0};

        template <typename T>
        T orient3d_expr(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
        {
            // det[a - d; b - d; c - d]
            T adx = T(a.x()) - T(d.x()), bdx = T(b.x()) - T(d.x()), cdx = T(c.x()) - T(d.x());
            T ady = T(a.y()) - T(d.y()), bdy = T(b.y()) - T(d.y()), cdy = T(c.y()) - T(d.y());
            T adz = T(a.z()) - T(d.z()), bdz = T(b.z()) - T(d.z()), cdz = T(c.z()) - T(d.z());
            return T(adz * (bdx * cdy - cdx * bdy)) + T(bdz * (cdx * ady - adx * cdy)) + T(cdz * (adx * bdy - bdx * ady));
        }

        template <typename T>
        T insphere_expr(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d, const Vec3 & e)
        {
            T aex = T(a.x()) - T(e.x()), bex = T(b.x()) - T(e.x()), cex = T(c.x()) - T(e.x()), dex = T(d.x()) - T(e.x());
            T aey = T(a.y()) - T(e.y()), bey = T(b.y()) - T(e.y()), cey = T(c.y()) - T(e.y()), dey = T(d.y()) - T(e.y());
            T aez = T(a.z()) - T(e.z()), bez = T(b.z()) - T(e.z()), cez = T(c.z()) - T(e.z()), dez = T(d.z()) - T(e.z());
            T ab = aex * bey - bex * aey;
            T bc = bex * cey - cex * bey;
            T cd = cex * dey - dex * cey;
            T da = dex * aey - aex * dey;
            T ac = aex * cey - cex * aey;
            T bd = bex * dey - dex * bey;
            T abc = aez * bc - bez * ac + cez * ab;
            T bcd = bez * cd - cez * bd + dez * bc;
            T cda = cez * da + dez * ac + aez * cd;
            T dab = dez * ab + aez * bd + bez * da;
            T alift = aex * aex + aey * aey + aez * aez;
            T blift = bex * bex + bey * bey + bez * bez;
            T clift = cex * cex + cey * cey + cez * cez;
            T dlift = dex * dex + dey * dey + dez * dez;
            return T(dlift * abc - clift * dab) + T(blift * cda - alift * bcd);
        }

        int sign_of(const mpq_class & v) { return sgn(v); }
        int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

        int orient3d_exact(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
        {
            g_exact_count.fetch_add(1, std::memory_order_relaxed);
            return sign_of(orient3d_expr<mpq_class>(a, b, c, d));
        }

        int insphere_exact(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d, const Vec3 & e)
        {
            g_exact_count.fetch_add(1, std::memory_order_relaxed);
            return sign_of(insphere_expr<mpq_class>(a, b, c, d, e));
        }
    }

    double orient3d_fast(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
    {
        return -orient3d_expr<double>(a, b, c, d);
    }

    int orient3d(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d)
    {
        const double adx = a.x() - d.x(), bdx = b.x() - d.x(), cdx = c.x() - d.x();
        const double ady = a.y() - d.y(), bdy = b.y() - d.y(), cdy = c.y() - d.y();
        const double adz = a.z() - d.z(), bdz = b.z() - d.z(), cdz = c.z() - d.z();
        const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
        const double cdxady = cdx * ady, adxcdy = adx * cdy;
        const double adxbdy = adx * bdy, bdxady = bdx * ady;
        const double det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady);
        const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * std::abs(adz)
                               + (std::abs(cdxady) + std::abs(adxcdy)) * std::abs(bdz)
                               + (std::abs(adxbdy) + std::abs(bdxady)) * std::abs(cdz);
        const double bound = kO3ErrA * permanent;
        if (det > bound || -det > bound)
        {
            return -sign_of(det);
        }
        return -orient3d_exact(a, b, c, d);
    }

    int insphere(const Vec3 & a, const Vec3 & b, const Vec3 & c, const Vec3 & d, const Vec3 & e)
    {
        const double aex = a.x() - e.x(), bex = b.x() - e.x(), cex = c.x() - e.x(), dex = d.x() - e.x();
        const double aey = a.y() - e.y(), bey = b.y() - e.y(), cey = c.y() - e.y(), dey = d.y() - e.y();
        const double aez = a.z() - e.z(), bez = b.z() - e.z(), cez = c.z() - e.z(), dez = d.z() - e.z();

        const double aexbey = aex * bey, bexaey = bex * aey;
        const double bexcey = bex * cey, cexbey = cex * bey;
        const double cexdey = cex * dey, dexcey = dex * cey;
        const double dexaey = dex * aey, aexdey = aex * dey;
        const double aexcey = aex * cey, cexaey = cex * aey;
        const double bexdey = bex * dey, dexbey = dex * bey;
        const double ab = aexbey - bexaey, bc = bexcey - cexbey, cd = cexdey - dexcey;
        const double da = dexaey - aexdey, ac = aexcey - cexaey, bd = bexdey - dexbey;

        const double abc = aez * bc - bez * ac + cez * ab;
        const double bcd = bez * cd - cez * bd + dez * bc;
        const double cda = cez * da + dez * ac + aez * cd;
        const double dab = dez * ab + aez * bd + bez * da;

        const double alift = aex * aex + aey * aey + aez * aez;
        const double blift = bex * bex + bey * bey + bez * bez;
        const double clift = cex * cex + cey * cey + cez * cez;
        const double dlift = dex * dex + dey * dey + dez * dez;

        const double det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd);

        const double aezp = std::abs(aez), bezp = std::abs(bez), cezp = std::abs(cez), dezp = std::abs(dez);
        const double aexbeyp = std::abs(aexbey), bexaeyp = std::abs(bexaey);
        const double bexceyp = std::abs(bexcey), cexbeyp = std::abs(cexbey);
        const double cexdeyp = std::abs(cexdey), dexceyp = std::abs(dexcey);
        const double dexaeyp = std::abs(dexaey), aexdeyp = std::abs(aexdey);
        const double aexceyp = std::abs(aexcey), cexaeyp = std::abs(cexaey);
        const double bexdeyp = std::abs(bexdey), dexbeyp = std::abs(dexbey);
        const double permanent =
            ((cexdeyp + dexceyp) * bezp + (dexbeyp + bexdeyp) * cezp + (bexceyp + cexbeyp) * dezp) * alift
          + ((dexaeyp + aexdeyp) * cezp + (aexceyp + cexaeyp) * dezp + (cexdeyp + dexceyp) * aezp) * blift
          + ((aexbeyp + bexaeyp) * dezp + (bexdeyp + dexbeyp) * aezp + (dexaeyp + aexdeyp) * bezp) * clift
          + ((bexceyp + cexbeyp) * aezp + (cexaeyp + aexceyp) * bezp + (aexbeyp + bexaeyp) * cezp) * dlift;
        const double bound = kIspErrA * permanent;
        if (det > bound || -det > bound)
        {
            return -sign_of(det);
        }
        return -insphere_exact(a, b, c, d, e);
    }

    int orient2d(double ax, double ay, double bx, double by, double cx, double cy)
    {
        const double left = (ax - cx) * (by - cy);
        const double right = (ay - cy) * (bx - cx);
        const double det = left - right;
        const double bound = kO2ErrA * (std::abs(left) + std::abs(right));
        if (det > bound || -det > bound)
        {
            return sign_of(det);
        }
        g_exact_count.fetch_add(1, std::memory_order_relaxed);
        mpq_class l = (mpq_class(ax) - mpq_class(cx)) * (mpq_class(by) - mpq_class(cy));
        mpq_class r = (mpq_class(ay) - mpq_class(cy)) * (mpq_class(bx) - mpq_class(cx));
        return sgn(mpq_class(l - r));
    }

    std::uint64_t exact_fallback_count()
    {
        return g_exact_count.load(std::memory_order_relaxed);
    }
}
