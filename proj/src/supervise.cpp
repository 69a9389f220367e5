#include "deltet/supervise.hpp"

#include "deltet/rng.hpp"

#include <algorithm>
#include <cmath>

namespace deltet
{
    void LossWeights::validate() const
    {
        for (double w : {occupancy, distance, normal, fairness, odt, sign})
        {
            if (!(w >= 0.0) || !std::isfinite(w))
            {
                throw Error(ErrorKind::invalid_argument, "loss weights must be finite and non-negative");
            }
        }
    }

    Vec3 sample_position(const SurfaceMesh & mesh, const SurfaceSample & s)
    {
        const Tri & t = mesh.faces[s.face];
        return s.bary[0] * mesh.vertices[t[0]] + s.bary[1] * mesh.vertices[t[1]] + s.bary[2] * mesh.vertices[t[2]];
    }

    std::vector<SurfaceSample> sample_surface(const SurfaceMesh & mesh, std::size_t n, std::uint64_t seed)
    {
        if (n == 0)
            return {};
        if (mesh.empty())
        {
            throw Error(ErrorKind::invalid_argument, "cannot sample an empty mesh");
        }
        std::vector<double> cdf(mesh.num_faces());
        double total = 0.0;
        for (std::size_t f = 0; f < mesh.num_faces(); ++f)
        {
            total += mesh.face_area(f);
            cdf[f] = total;
        }
        if (!(total > 0.0))
        {
            throw Error(ErrorKind::degenerate_input, "mesh has zero area");
        }
        const CounterRng rng(seed);
        std::vector<SurfaceSample> out(n);
        const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < count; ++k)
        {
            const auto c = static_cast<std::uint64_t>(k) * 3;
            const double u0 = rng.uniform(c) * total;
            const auto it = std::upper_bound(cdf.begin(), cdf.end(), u0);
            auto f = static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
            // Skip zero-area faces the search can land on at the upper end.
            while (f > 0 && mesh.face_area(f) == 0.0)
                --f;
            const double r1 = std::sqrt(rng.uniform(c + 1));
            const double u2 = rng.uniform(c + 2);
            SurfaceSample & s = out[k];
            s.face = f;
            s.bary = {1.0 - r1, r1 * (1.0 - u2), r1 * u2};
            s.position = sample_position(mesh, s);
            s.normal = mesh.face_normal(f).normalized();
        }
        return out;
    }

    namespace
    {
        double radical_inverse(std::uint64_t i, std::uint64_t base)
        {
            double f = 1.0, r = 0.0;
            while (i > 0)
            {
                f /= static_cast<double>(base);
                r += f * static_cast<double>(i % base);
                i /= base;
            }
            return r;
        }
    }

    std::vector<Vec3> interior_probes(const Target & target, std::size_t n, std::uint64_t seed)
    {
        const Aabb box = target.bounds();
        const Vec3 ext = box.hi - box.lo;
        Vec3 shift = Vec3::Zero();
        if (seed != 0)
        {
            const CounterRng rng(seed);
            shift = Vec3(rng.uniform(0), rng.uniform(1), rng.uniform(2));
        }
        auto wrap = [](double x) { return x >= 1.0 ? x - 1.0 : x; };
        std::vector<Vec3> out;
        out.reserve(n);
        const std::uint64_t limit = 1000 * static_cast<std::uint64_t>(n) + 1000;
        for (std::uint64_t i = 1; out.size() < n && i < limit; ++i)
        {
            const Vec3 u(wrap(radical_inverse(i, 2) + shift.x()), wrap(radical_inverse(i, 3) + shift.y()),
                         wrap(radical_inverse(i, 5) + shift.z()));
            const Vec3 p = box.lo + u.cwiseProduct(ext);
            if (target.sdf(p) < 0.0)
                out.push_back(p);
        }
        return out;
    }

    ReconLoss::ReconLoss(TargetPtr target, const LossWeights & weights, std::size_t samples, std::size_t probes)
        : target_(std::move(target)), weights_(weights), samples_(samples), probe_count_(probes)
    {
        if (!target_)
        {
            throw Error(ErrorKind::invalid_argument, "reconstruction loss needs a target");
        }
        weights_.validate();
        if (probes > 0 && weights_.occupancy > 0.0)
        {
            probes_ = interior_probes(*target_, probes);
        }
    }

    namespace
    {
        struct SampleContribution
        {
            double d2 = 0.0;
            double n2 = 0.0;
            Vec3 dx = Vec3::Zero();      // dL/dx, weights and 1/n applied
            Vec3 dn_e1 = Vec3::Zero();   // dL/de1
            Vec3 dn_e2 = Vec3::Zero();   // dL/de2
        };

        struct ProbeContribution
        {
            bool outside = false;
            double distance = 0.0;
            int face = -1;
            std::array<double, 3> bary{};
            Vec3 dir = Vec3::Zero();  // (q - cp) / d
        };

        template <class F>
        void run(Exec exec, std::ptrdiff_t n, F && body)
        {
            if (exec == Exec::parallel)
            {
#pragma omp parallel for schedule(static)
                for (std::ptrdiff_t k = 0; k < n; ++k)
                    body(k);
            }
            else
            {
                for (std::ptrdiff_t k = 0; k < n; ++k)
                    body(k);
            }
        }
    }

    std::vector<Vec3> ReconLoss::probes(std::uint64_t seed) const
    {
        if (seed == 0 || probes_.empty())
            return probes_;
        return interior_probes(*target_, probe_count_, seed);
    }

    ReconTerms ReconLoss::evaluate(const SurfaceMesh & mesh, std::uint64_t seed, std::vector<Vec3> * grad, Exec exec) const
    {
        return evaluate(mesh, mesh.empty() ? std::vector<SurfaceSample>{} : sample_surface(mesh, samples_, seed), probes(seed), grad,
                        exec);
    }

    ReconTerms ReconLoss::evaluate(const SurfaceMesh & mesh, const std::vector<SurfaceSample> & samples, std::vector<Vec3> * grad,
                                   Exec exec) const
    {
        return evaluate(mesh, samples, probes_, grad, exec);
    }

    ReconTerms ReconLoss::evaluate(const SurfaceMesh & mesh, const std::vector<SurfaceSample> & samples,
                                   const std::vector<Vec3> & probes, std::vector<Vec3> * grad, Exec exec) const
    {
        ReconTerms terms;
        if (grad)
            grad->assign(mesh.num_vertices(), Vec3::Zero());
        if (mesh.empty())
        {
            // Nothing enclosed: every probe is outside at an undefined distance.
            return terms;
        }

        const auto ns = static_cast<std::ptrdiff_t>(samples.size());
        if (ns > 0)
        {
            const double inv = 1.0 / static_cast<double>(ns);
            const double wd = weights_.distance * inv, wn = weights_.normal * inv;
            std::vector<SampleContribution> sc(samples.size());
            run(exec, ns, [&](std::ptrdiff_t k) {
                const SurfaceSample & s = samples[k];
                const Tri & t = mesh.faces[s.face];
                const Vec3 x = sample_position(mesh, s);
                const double d = target_->sdf(x);
                const Vec3 nt = target_->normal(x);
                const Vec3 e1 = mesh.vertices[t[1]] - mesh.vertices[t[0]];
                const Vec3 e2 = mesh.vertices[t[2]] - mesh.vertices[t[0]];
                const Vec3 big = e1.cross(e2);
                const double len = big.norm();
                SampleContribution & c = sc[k];
                c.d2 = d * d;
                if (len == 0.0)
                {
                    // Zero-area face: normal undefined, counts as maximally wrong.
                    c.n2 = 4.0;
                    c.dx = wd * 2.0 * d * nt;
                    return;
                }
                const Vec3 nf = big / len;
                const Vec3 diff = nf - nt;
                c.n2 = diff.squaredNorm();
                c.dx = wd * 2.0 * d * nt - wn * 2.0 * (target_->normal_jacobian(x).transpose() * diff);
                const Vec3 gn = wn * 2.0 * diff;
                const Vec3 gbig = (gn - nf * nf.dot(gn)) / len;
                c.dn_e1 = e2.cross(gbig);
                c.dn_e2 = gbig.cross(e1);
            });
            double d2 = 0.0, n2 = 0.0;
            for (std::ptrdiff_t k = 0; k < ns; ++k)
            {
                const SampleContribution & c = sc[k];
                d2 += c.d2;
                n2 += c.n2;
                if (grad)
                {
                    const Tri & t = mesh.faces[samples[k].face];
                    for (int a = 0; a < 3; ++a)
                        (*grad)[t[a]] += samples[k].bary[a] * c.dx;
                    (*grad)[t[1]] += c.dn_e1;
                    (*grad)[t[2]] += c.dn_e2;
                    (*grad)[t[0]] -= c.dn_e1 + c.dn_e2;
                }
            }
            terms.distance = wd * d2;
            terms.normal = wn * n2;
        }

        const auto np = static_cast<std::ptrdiff_t>(probes.size());
        if (np > 0 && weights_.occupancy > 0.0)
        {
            const MeshIndex index(mesh);
            std::vector<ProbeContribution> pc(probes.size());
            run(exec, np, [&](std::ptrdiff_t k) {
                const Vec3 & q = probes[k];
                if (index.inside(q))
                    return;
                const auto hit = index.closest(q);
                ProbeContribution & c = pc[k];
                c.outside = true;
                c.distance = std::sqrt(hit.squared_distance);
                c.face = hit.face;
                c.bary = hit.cp.bary;
                if (c.distance > 0.0)
                    c.dir = (q - hit.cp.point) / c.distance;
            });
            const double w = weights_.occupancy / static_cast<double>(np);
            double sum = 0.0;
            for (std::ptrdiff_t k = 0; k < np; ++k)
            {
                const ProbeContribution & c = pc[k];
                if (!c.outside)
                    continue;
                ++terms.probes_outside;
                sum += c.distance;
                if (grad)
                {
                    const Tri & t = mesh.faces[c.face];
                    for (int a = 0; a < 3; ++a)
                        (*grad)[t[a]] -= w * c.bary[a] * c.dir;
                }
            }
            terms.occupancy = w * sum;
        }
        return terms;
    }

    std::uint64_t ReconLoss::occupancy_signature(const SurfaceMesh & mesh) const
    {
        if (mesh.empty() || probes_.empty())
            return 0;
        const MeshIndex index(mesh);
        std::uint64_t h = 0;
        for (std::size_t k = 0; k < probes_.size(); ++k)
        {
            if (!index.inside(probes_[k]))
                h = hash_combine(h, k);
        }
        return h;
    }

    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, const std::vector<SurfaceSample> & samples, Exec exec)
    {
        return record_recon(tape, loss, samples, loss.probes(), exec);
    }

    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, const std::vector<SurfaceSample> & samples,
                            const std::vector<Vec3> & probes, Exec exec)
    {
        std::vector<Vec3> g;
        const ReconTerms terms = loss.evaluate(tape.mesh(), samples, probes, &g, exec);
        auto & adj = tape.vertex_adjoint();
        for (std::size_t i = 0; i < g.size(); ++i)
            adj[i] += g[i];
        tape.add("distance", terms.distance);
        tape.add("normal", terms.normal);
        tape.add("occupancy", terms.occupancy);
        return terms;
    }

    ReconTerms record_recon(Tape & tape, const ReconLoss & loss, std::uint64_t seed, Exec exec)
    {
        const SurfaceMesh & mesh = tape.mesh();
        return record_recon(tape, loss, mesh.empty() ? std::vector<SurfaceSample>{} : sample_surface(mesh, loss.samples(), seed),
                            loss.probes(seed), exec);
    }

    std::vector<SampleError> per_sample_error(const SurfaceMesh & mesh, const Target & target, std::size_t n, std::uint64_t seed)
    {
        const auto samples = sample_surface(mesh, n, seed);
        std::vector<SampleError> out(samples.size());
        const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < count; ++k)
        {
            const SurfaceSample & s = samples[k];
            out[k] = {s.position, std::abs(target.sdf(s.position)) + kNormalErrorWeight * (s.normal - target.normal(s.position)).norm()};
        }
        return out;
    }
}
