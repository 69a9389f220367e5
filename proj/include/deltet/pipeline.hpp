#pragma once

#include "optim.hpp"
#include "refine.hpp"
#include "supervise.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <string>

namespace deltet
{
    /// Lower bound on the sdf of convex-hull points during fitting.
    constexpr double kHullSdf = 1e-3;

    struct OptimConfig
    {
        std::string target = "sphere";
        std::size_t initial_points = 8000;
        std::size_t target_points = 16000;
        double init_radius = 1.7320508075688772;  // sqrt(3)
        int sh_degree = 2;
        std::size_t main_iters = 5000;
        std::size_t late_iters = 2000;
        std::size_t rebuild_interval = 5;
        double lr_sdf = 0.002;
        double lr_pos = 0.0003;
        double lr_sh = 0.002;
        double weight_decay = 0.0;
        LossWeights weights;
        std::size_t samples = 5000;  // surface samples per iteration
        std::size_t probes = 2048;
        std::size_t refine_interval = 250;
        double refine_fraction = 0.125;
        int importance_resolution = kDefaultImportanceResolution;
        std::size_t max_empty = 50;  // consecutive empty extractions before giving up
        std::string snapshot;        // .twv written on divergence when set
        std::uint64_t seed = 0;
        Exec exec = Exec::parallel;

        /// Throws invalid-argument on out-of-range values.
        void validate() const;
    };

    /// Flat "key = value" text, '#' comments. Keys mirror OptimConfig fields;
    /// weights are w_occupancy, w_distance, w_normal, w_fairness, w_odt,
    /// w_sign. Unknown keys are errors.
    OptimConfig parse_config(const std::string & text, OptimConfig base = {});
    OptimConfig load_config(const std::string & path, OptimConfig base = {});
    void set_config_value(OptimConfig & cfg, const std::string & key, const std::string & value);

    enum class Stage
    {
        main,
        late,
    };

    struct HistoryRow
    {
        std::size_t iteration = 0;
        Stage stage = Stage::main;
        double total = 0.0;
        double distance = 0.0;
        double normal = 0.0;
        double occupancy = 0.0;
        double fairness = 0.0;
        double odt = 0.0;
        double sign = 0.0;
        std::size_t points = 0;
        std::size_t vertices = 0;
        std::size_t faces = 0;
    };

    /// Header: iteration,stage,total,distance,normal,occupancy,fairness,odt,sign,points,vertices,faces
    void write_history_csv(std::ostream & out, const std::vector<HistoryRow> & history);

    struct FitResult
    {
        PointSet points;
        TetGrid grid;
        SurfaceMesh mesh;  // largest component of the final extraction
        std::vector<HistoryRow> history;
        std::size_t refinements = 0;
        std::size_t rebuilds = 0;
    };

    using FitObserver = std::function<void(const HistoryRow &)>;

    /// Main stage (positions, s and c with all regularizers; positions move
    /// every rebuild_interval steps with the summed gradient, followed by
    /// refinement while below target_points and a Delaunay rebuild), then the
    /// late stage (frozen positions and grid; s and c with recon and sign
    /// terms). Throws diverged after max_empty consecutive empty extractions.
    FitResult fit(const TargetPtr & target, const OptimConfig & cfg, const FitObserver & observer = {});
    FitResult fit(const OptimConfig & cfg, const FitObserver & observer = {});
}
