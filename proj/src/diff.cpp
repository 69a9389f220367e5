#include "deltet/diff.hpp"

#include "deltet/predicates.hpp"
#include "deltet/rng.hpp"
#include "deltet/shfield.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace deltet
{
    ParamGradients ParamGradients::zeros_like(const PointSet & ps)
    {
        ParamGradients g;
        g.d_positions.assign(ps.size(), Vec3::Zero());
        g.d_sdf.assign(ps.size(), 0.0);
        g.d_sh.assign(ps.sh.size(), 0.0);
        return g;
    }

    void ParamGradients::set_zero()
    {
        std::fill(d_positions.begin(), d_positions.end(), Vec3::Zero());
        std::fill(d_sdf.begin(), d_sdf.end(), 0.0);
        std::fill(d_sh.begin(), d_sh.end(), 0.0);
    }

    void ParamGradients::axpy(double a, const ParamGradients & other)
    {
        for (std::size_t i = 0; i < d_positions.size(); ++i)
            d_positions[i] += a * other.d_positions[i];
        for (std::size_t i = 0; i < d_sdf.size(); ++i)
            d_sdf[i] += a * other.d_sdf[i];
        for (std::size_t i = 0; i < d_sh.size(); ++i)
            d_sh[i] += a * other.d_sh[i];
    }

    bool ParamGradients::all_finite() const
    {
        auto finite = [](double x) { return std::isfinite(x); };
        return std::all_of(d_positions.begin(), d_positions.end(), [](const Vec3 & v) { return v.allFinite(); })
               && std::all_of(d_sdf.begin(), d_sdf.end(), finite) && std::all_of(d_sh.begin(), d_sh.end(), finite);
    }

    Tape::Tape(const PointSet & ps, const TetGrid & grid, const SurfaceMesh & mesh)
        : ps_(&ps), grid_(&grid), mesh_(&mesh), vertex_adjoint_(mesh.num_vertices(), Vec3::Zero()),
          direct_(ParamGradients::zeros_like(ps))
    {
        check_generation(grid, ps);
        if (mesh.vertex_edges.size() != mesh.num_vertices())
        {
            throw Error(ErrorKind::invalid_argument, "mesh lacks edge provenance");
        }
    }

    void Tape::add(const std::string & term, double value)
    {
        if (!std::isfinite(value))
        {
            throw Error(ErrorKind::nan_propagation, "loss term '" + term + "' is not finite");
        }
        terms_.emplace_back(term, value);
        value_ += value;
    }

    double Tape::term(const std::string & name) const
    {
        double v = 0.0;
        for (const auto & [n, x] : terms_)
            if (n == name)
                v += x;
        return v;
    }

    namespace
    {
        struct VertexContribution
        {
            Vec3 dpi = Vec3::Zero(), dpj = Vec3::Zero();
            double dsi = 0.0, dsj = 0.0;
            double xi_bar = 0.0, xj_bar = 0.0;
            bool ok = true;
        };

        // Directional SH argument x along d, its gradient w.r.t. d, and the basis at d.
        double sh_argument(const PointSet & ps, int i, const Vec3 & d, Vec3 & grad, double * y)
        {
            const int q = ps.coeffs_per_point();
            const auto c = ps.coeffs(i);
            Vec3 dy[sh::kMaxCoeffs];
            const double r = d.norm();
            const Vec3 u = d / r;
            sh::basis_with_gradient(ps.degree, u, y, dy);
            double x = 0.0;
            Vec3 g = Vec3::Zero();
            for (int k = 0; k < q; ++k)
            {
                x += c[k] * y[k];
                g += c[k] * dy[k];
            }
            grad = (g - u * u.dot(g)) / r;
            return x;
        }

        void vertex_backward(const PointSet & ps, const EdgeKey & e, const Vec3 & g, VertexContribution & out, double * yi,
                             double * yj)
        {
            const int i = e[0], j = e[1];
            const Vec3 & pi = ps.positions[i];
            const Vec3 & pj = ps.positions[j];
            const Vec3 d = pj - pi;
            Vec3 gxi, gxj;
            const double xi = sh_argument(ps, i, d, gxi, yi);
            const double xj = sh_argument(ps, j, Vec3(-d), gxj, yj);
            const double a = sh::modulate(ps.sdf[i], xi);
            const double b = sh::modulate(ps.sdf[j], xj);
            const double den = b - a;
            const double den2 = den * den;

            // v = (b pi - a pj) / (b - a)
            const double a_bar = g.dot(pi - pj) * b / den2;
            const double b_bar = g.dot(pj - pi) * a / den2;
            out.dpi = g * (b / den);
            out.dpj = g * (-a / den);

            out.dsi = a_bar * sh::gate(xi);
            out.dsj = b_bar * sh::gate(xj);
            out.xi_bar = a_bar * ps.sdf[i] * sh::gate_derivative(xi);
            out.xj_bar = b_bar * ps.sdf[j] * sh::gate_derivative(xj);
            // x_i depends on d = pj - pi, x_j on -d.
            out.dpj += out.xi_bar * gxi;
            out.dpi -= out.xi_bar * gxi;
            out.dpi += out.xj_bar * gxj;
            out.dpj -= out.xj_bar * gxj;
            out.ok = std::isfinite(den2) && den != 0.0 && out.dpi.allFinite() && out.dpj.allFinite() && std::isfinite(out.dsi)
                     && std::isfinite(out.dsj) && std::isfinite(out.xi_bar) && std::isfinite(out.xj_bar);
        }
    }

    ParamGradients backward(const Tape & tape, double seed, Exec exec)
    {
        const PointSet & ps = tape.points();
        const SurfaceMesh & mesh = tape.mesh();
        ParamGradients grad = ParamGradients::zeros_like(ps);
        grad.axpy(seed, tape.direct());

        const auto & adj = tape.vertex_adjoint();
        for (const Vec3 & g : adj)
        {
            if (!g.allFinite())
            {
                throw Error(ErrorKind::nan_propagation, "vertex adjoint is not finite");
            }
        }
        const auto nv = static_cast<std::ptrdiff_t>(mesh.num_vertices());
        const int q = ps.coeffs_per_point();
        std::vector<VertexContribution> contrib(mesh.num_vertices());
        std::vector<double> basis(2 * q * mesh.num_vertices());
        auto body = [&](std::ptrdiff_t v) {
            const Vec3 g = seed * adj[v];
            if (g.isZero(0.0))
            {
                return;
            }
            vertex_backward(ps, mesh.vertex_edges[v], g, contrib[v], &basis[2 * q * v], &basis[2 * q * v + q]);
        };
        if (exec == Exec::parallel)
        {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t v = 0; v < nv; ++v)
                body(v);
        }
        else
        {
            for (std::ptrdiff_t v = 0; v < nv; ++v)
                body(v);
        }

        // Fixed-order scatter keeps the result independent of the thread count.
        for (std::ptrdiff_t v = 0; v < nv; ++v)
        {
            const VertexContribution & c = contrib[v];
            if (!c.ok)
            {
                throw Error(ErrorKind::nan_propagation, "edge vertex backward produced a non-finite value at vertex " + std::to_string(v));
            }
            const auto [i, j] = mesh.vertex_edges[v];
            grad.d_positions[i] += c.dpi;
            grad.d_positions[j] += c.dpj;
            grad.d_sdf[i] += c.dsi;
            grad.d_sdf[j] += c.dsj;
            if (c.xi_bar != 0.0 || c.xj_bar != 0.0)
            {
                const double * yi = &basis[2 * q * v];
                const double * yj = yi + q;
                for (int k = 0; k < q; ++k)
                {
                    grad.d_sh[static_cast<std::size_t>(i) * q + k] += c.xi_bar * yi[k];
                    grad.d_sh[static_cast<std::size_t>(j) * q + k] += c.xj_bar * yj[k];
                }
            }
        }
        return grad;
    }

    void record_odt(Tape & tape, double weight, const OdtOptions & options, Exec exec)
    {
        std::vector<Vec3> g;
        const double v = odt_loss(tape.grid(), tape.points(), options, &g, exec);
        auto & d = tape.direct().d_positions;
        for (std::size_t i = 0; i < g.size(); ++i)
            d[i] += weight * g[i];
        tape.add("odt", weight * v);
    }

    void record_fairness(Tape & tape, double weight, Exec exec)
    {
        std::vector<Vec3> g;
        const double v = fairness_loss(tape.mesh(), &g, exec);
        auto & adj = tape.vertex_adjoint();
        for (std::size_t i = 0; i < g.size(); ++i)
            adj[i] += weight * g[i];
        tape.add("fairness", weight * v);
    }

    void record_sign(Tape & tape, double weight)
    {
        std::vector<double> g;
        const double v = sign_loss(tape.points(), active_edges(tape.grid(), tape.points()), &g);
        auto & d = tape.direct().d_sdf;
        for (std::size_t i = 0; i < g.size(); ++i)
            d[i] += weight * g[i];
        tape.add("sign", weight * v);
    }

    TetGrid with_positions(const TetGrid & grid, const PointSet & ps)
    {
        if (ps.size() != grid.num_points())
        {
            throw Error(ErrorKind::invalid_argument, "point count differs from grid");
        }
        TetGrid g = grid;
        g.points = ps.positions;
        g.generation = ps.generation;
        return g;
    }

    std::string FdReport::summary() const
    {
        std::ostringstream os;
        os.precision(3);
        auto line = [&](const char * name, const FdClassReport & r) {
            os << name << ": checked " << r.checked << ", skipped " << r.skipped << " (nonsmooth), max rel err "
               << std::scientific << r.max_rel_error << std::defaultfloat << "\n";
        };
        line("positions", positions);
        line("sdf", sdf);
        line("sh", sh);
        os << (pass ? "pass" : "FAIL");
        return os.str();
    }

    FdReport finite_diff_check(const LossFunction & f, const PointSet & ps, const ParamGradients & analytic,
                               const FdOptions & options)
    {
        FdReport report;
        const FdEvaluation base = f(ps);
        const double h = options.h;

        auto run_class = [&](ParamClass cls, std::size_t count, int components, FdClassReport & out) {
            auto analytic_of = [&](std::size_t idx, int comp) {
                switch (cls)
                {
                case ParamClass::position: return analytic.d_positions[idx][comp];
                case ParamClass::sdf: return analytic.d_sdf[idx];
                default: return analytic.d_sh[idx];
                }
            };
            auto param = [&](PointSet & p, std::size_t idx, int comp) -> double & {
                switch (cls)
                {
                case ParamClass::position: return p.positions[idx][comp];
                case ParamClass::sdf: return p.sdf[idx];
                default: return p.sh[idx];
                }
            };
            std::vector<std::size_t> order(count);
            std::iota(order.begin(), order.end(), 0);
            if (options.max_per_class > 0 && options.max_per_class < count)
            {
                std::shuffle(order.begin(), order.end(), Rng(options.seed).engine());
                order.resize(options.max_per_class);
                std::sort(order.begin(), order.end());
            }
            double scale = 0.0;
            for (std::size_t idx = 0; idx < count; ++idx)
                for (int comp = 0; comp < components; ++comp)
                    scale = std::max(scale, std::abs(analytic_of(idx, comp)));
            const double floor = std::max(options.abs_floor, options.rel_floor * scale);

            PointSet p = ps;
            for (std::size_t idx : order)
            {
                for (int comp = 0; comp < components; ++comp)
                {
                    double & x = param(p, idx, comp);
                    const double x0 = x;
                    x = x0 + h;
                    const FdEvaluation plus = f(p);
                    x = x0 - h;
                    const FdEvaluation minus = f(p);
                    x = x0;
                    FdEntry entry{cls, idx, comp, analytic_of(idx, comp), 0.0, 0.0, false};
                    if (plus.signature != base.signature || minus.signature != base.signature)
                    {
                        entry.skipped = true;
                        ++out.skipped;
                    }
                    else
                    {
                        entry.numeric = (plus.value - minus.value) / (2.0 * h);
                        const double denom = std::max({std::abs(entry.analytic), std::abs(entry.numeric), floor});
                        entry.rel_error = std::abs(entry.analytic - entry.numeric) / denom;
                        out.max_rel_error = std::max(out.max_rel_error, entry.rel_error);
                        ++out.checked;
                        if (!(entry.rel_error < options.tol))
                        {
                            report.pass = false;
                        }
                    }
                    report.entries.push_back(entry);
                }
            }
        };
        run_class(ParamClass::position, ps.size(), 3, report.positions);
        run_class(ParamClass::sdf, ps.size(), 1, report.sdf);
        run_class(ParamClass::sh, ps.sh.size(), 1, report.sh);
        return report;
    }
}
