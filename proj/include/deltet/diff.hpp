#pragma once

#include "grid.hpp"
#include "mesh.hpp"
#include "regularize.hpp"

#include <functional>
#include <string>
#include <utility>

namespace deltet
{
    struct ParamGradients
    {
        std::vector<Vec3> d_positions;
        std::vector<double> d_sdf;
        std::vector<double> d_sh;

        static ParamGradients zeros_like(const PointSet & ps);

        void set_zero();

        /// this += a * other
        void axpy(double a, const ParamGradients & other);

        bool all_finite() const;
    };

    /// One iteration's recorded loss. Terms add their value and either a
    /// mesh-vertex adjoint (dL/dv, mapped to parameters by backward) or a
    /// direct parameter gradient. Connectivity is frozen for the lifetime of
    /// the tape.
    class Tape
    {
    public:
        Tape(const PointSet & ps, const TetGrid & grid, const SurfaceMesh & mesh);

        const PointSet & points() const { return *ps_; }
        const TetGrid & grid() const { return *grid_; }
        const SurfaceMesh & mesh() const { return *mesh_; }

        void add(const std::string & term, double value);

        std::vector<Vec3> & vertex_adjoint() { return vertex_adjoint_; }
        const std::vector<Vec3> & vertex_adjoint() const { return vertex_adjoint_; }

        ParamGradients & direct() { return direct_; }
        const ParamGradients & direct() const { return direct_; }

        double value() const { return value_; }
        const std::vector<std::pair<std::string, double>> & terms() const { return terms_; }
        double term(const std::string & name) const;

    private:
        const PointSet * ps_;
        const TetGrid * grid_;
        const SurfaceMesh * mesh_;
        std::vector<Vec3> vertex_adjoint_;
        ParamGradients direct_;
        std::vector<std::pair<std::string, double>> terms_;
        double value_ = 0.0;
    };

    /// seed * dL/d(p, s, c). The mesh must come from marching_tets on the
    /// tape's grid and point set (vertex k on vertex_edges[k]). Throws
    /// nan-propagation when an intermediate is not finite.
    ParamGradients backward(const Tape & tape, double seed = 1.0, Exec exec = Exec::parallel);

    // Regularizer terms recorded with their weights.
    void record_odt(Tape & tape, double weight, const OdtOptions & options = {}, Exec exec = Exec::parallel);
    void record_fairness(Tape & tape, double weight, Exec exec = Exec::parallel);
    void record_sign(Tape & tape, double weight);

    /// Copy of `grid` with the points (and generation) of `ps`; the caller
    /// keeps the connectivity valid.
    TetGrid with_positions(const TetGrid & grid, const PointSet & ps);

    enum class ParamClass
    {
        position,
        sdf,
        sh,
    };

    struct FdEvaluation
    {
        double value = 0.0;
        std::uint64_t signature = 0;  // identifies the combinatorial state
    };

    using LossFunction = std::function<FdEvaluation(const PointSet &)>;

    struct FdOptions
    {
        double h = 1e-6;
        double tol = 1e-5;
        // Denominator floor: max(abs_floor, rel_floor * largest analytic |g| in the class).
        double abs_floor = 1e-8;
        double rel_floor = 1e-3;
        std::size_t max_per_class = 0;  // 0 checks every scalar
        std::uint64_t seed = 0;
    };

    struct FdEntry
    {
        ParamClass cls;
        std::size_t index;
        int component;
        double analytic;
        double numeric;
        double rel_error;
        bool skipped;  // perturbation changed the combinatorial state
    };

    struct FdClassReport
    {
        double max_rel_error = 0.0;
        std::size_t checked = 0;
        std::size_t skipped = 0;
    };

    struct FdReport
    {
        FdClassReport positions, sdf, sh;
        std::vector<FdEntry> entries;
        bool pass = true;

        std::string summary() const;
    };

    /// Central differences of f against `analytic`; parameters whose +-h
    /// perturbation changes f's signature are reported as skipped.
    FdReport finite_diff_check(const LossFunction & f, const PointSet & ps, const ParamGradients & analytic,
                               const FdOptions & options = {});
}
