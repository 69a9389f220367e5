#include "deltet/pipeline.hpp"

#include "deltet/extract.hpp"
#include "deltet/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace deltet
{
    void OptimConfig::validate() const
    {
        auto require = [](bool ok, const char * what) {
            if (!ok)
                throw Error(ErrorKind::invalid_argument, std::string("invalid config: ") + what);
        };
        require(initial_points >= 4, "initial_points must be at least 4");
        require(target_points >= 1, "target_points must be positive");
        require(init_radius > 0.0 && std::isfinite(init_radius), "init_radius must be positive");
        require(sh_degree >= 0 && sh_degree <= 8, "sh_degree must be in [0, 8]");
        require(rebuild_interval >= 1, "rebuild_interval must be at least 1");
        require(lr_sdf > 0.0 && lr_pos > 0.0 && lr_sh > 0.0, "learning rates must be positive");
        require(weight_decay >= 0.0, "weight_decay must be non-negative");
        require(refine_interval >= 1, "refine_interval must be at least 1");
        require(refine_fraction > 0.0 && refine_fraction <= 1.0, "refine_fraction must be in (0, 1]");
        require(importance_resolution >= 1, "importance_resolution must be positive");
        require(max_empty >= 1, "max_empty must be positive");
        weights.validate();
    }

    namespace
    {
        std::string trim(const std::string & s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        template <class T>
        T parse_number(const std::string & key, const std::string & value)
        {
            std::istringstream in(value);
            T x{};
            if (!(in >> x) || !(in >> std::ws).eof())
            {
                throw Error(ErrorKind::invalid_argument, "config key '" + key + "': cannot parse '" + value + "'");
            }
            return x;
        }
    }

    void set_config_value(OptimConfig & cfg, const std::string & key, const std::string & value)
    {
        auto size = [&](std::size_t & field) {
            const auto v = parse_number<long long>(key, value);
            if (v < 0)
                throw Error(ErrorKind::invalid_argument, "config key '" + key + "' must be non-negative");
            field = static_cast<std::size_t>(v);
        };
        auto real = [&](double & field) { field = parse_number<double>(key, value); };

        if (key == "target")
            cfg.target = value;
        else if (key == "initial_points")
            size(cfg.initial_points);
        else if (key == "target_points")
            size(cfg.target_points);
        else if (key == "init_radius")
            real(cfg.init_radius);
        else if (key == "sh_degree")
            cfg.sh_degree = parse_number<int>(key, value);
        else if (key == "main_iters")
            size(cfg.main_iters);
        else if (key == "late_iters")
            size(cfg.late_iters);
        else if (key == "rebuild_interval")
            size(cfg.rebuild_interval);
        else if (key == "lr_sdf")
            real(cfg.lr_sdf);
        else if (key == "lr_pos")
            real(cfg.lr_pos);
        else if (key == "lr_sh")
            real(cfg.lr_sh);
        else if (key == "weight_decay")
            real(cfg.weight_decay);
        else if (key == "samples")
            size(cfg.samples);
        else if (key == "probes")
            size(cfg.probes);
        else if (key == "refine_interval")
            size(cfg.refine_interval);
        else if (key == "refine_fraction")
            real(cfg.refine_fraction);
        else if (key == "importance_resolution")
            cfg.importance_resolution = parse_number<int>(key, value);
        else if (key == "max_empty")
            size(cfg.max_empty);
        else if (key == "snapshot")
            cfg.snapshot = value;
        else if (key == "seed")
            cfg.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "w_occupancy")
            real(cfg.weights.occupancy);
        else if (key == "w_distance")
            real(cfg.weights.distance);
        else if (key == "w_normal")
            real(cfg.weights.normal);
        else if (key == "w_fairness")
            real(cfg.weights.fairness);
        else if (key == "w_odt")
            real(cfg.weights.odt);
        else if (key == "w_sign")
            real(cfg.weights.sign);
        else
            throw Error(ErrorKind::invalid_argument, "unknown config key '" + key + "'");
    }

    OptimConfig parse_config(const std::string & text, OptimConfig base)
    {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.resize(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
            {
                throw Error(ErrorKind::invalid_argument, "config line " + std::to_string(lineno) + ": expected key = value");
            }
            set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        base.validate();
        return base;
    }

    OptimConfig load_config(const std::string & path, OptimConfig base)
    {
        std::ifstream in(path);
        if (!in)
        {
            throw Error(ErrorKind::io, "cannot open config '" + path + "'");
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), std::move(base));
    }

    void write_history_csv(std::ostream & out, const std::vector<HistoryRow> & history)
    {
        out << "iteration,stage,total,distance,normal,occupancy,fairness,odt,sign,points,vertices,faces\n";
        const auto old = out.precision(10);
        for (const HistoryRow & r : history)
        {
            out << r.iteration << ',' << (r.stage == Stage::main ? "main" : "late") << ',' << r.total << ',' << r.distance << ','
                << r.normal << ',' << r.occupancy << ',' << r.fairness << ',' << r.odt << ',' << r.sign << ',' << r.points << ','
                << r.vertices << ',' << r.faces << '\n';
        }
        out.precision(old);
    }

    namespace
    {
        class Fitter
        {
        public:
            Fitter(const TargetPtr & target, const OptimConfig & cfg, const FitObserver & observer)
                : target_(target), cfg_(cfg), observer_(observer), recon_(target, cfg.weights, cfg.samples, cfg.probes),
                  adam_pos_({0.9, 0.999, 1e-8, cfg.weight_decay}), adam_sdf_({0.9, 0.999, 1e-8, cfg.weight_decay}),
                  adam_sh_({0.9, 0.999, 1e-8, cfg.weight_decay})
            {
            }

            FitResult run()
            {
                ps_ = init_points(cfg_.initial_points, cfg_.init_radius, cfg_.seed, cfg_.sh_degree);
                grid_ = delaunay(ps_);
                hull_ = hull_points(grid_);
                clamp_hull();
                pos_accum_.assign(ps_.size(), Vec3::Zero());
                std::size_t next_refine = cfg_.refine_interval;

                for (std::size_t it = 0; it < cfg_.main_iters; ++it)
                {
                    const ParamGradients g = iterate(it, Stage::main);
                    for (std::size_t i = 0; i < ps_.size(); ++i)
                        pos_accum_[i] += g.d_positions[i];

                    if ((it + 1) % cfg_.rebuild_interval == 0 || it + 1 == cfg_.main_iters)
                    {
                        if (it + 1 >= next_refine)
                        {
                            if (ps_.size() < cfg_.target_points)
                                refine(it);
                            next_refine += cfg_.refine_interval;
                        }
                        adam_pos_.step(flat(ps_.positions), flat(pos_accum_), cfg_.lr_pos);
                        std::fill(pos_accum_.begin(), pos_accum_.end(), Vec3::Zero());
                        ps_ = perturb_duplicates(ps_, kDuplicateEps, hash_combine(cfg_.seed, it));
                        ps_.touch();
                        grid_ = delaunay(ps_);
                        hull_ = hull_points(grid_);
                        clamp_hull();
                        ++result_.rebuilds;
                    }
                }
                for (std::size_t it = 0; it < cfg_.late_iters; ++it)
                {
                    iterate(cfg_.main_iters + it, Stage::late);
                }
                result_.points = ps_;
                result_.mesh = extract_surface(grid_, ps_, cfg_.exec);
                result_.grid = std::move(grid_);
                return std::move(result_);
            }

        private:
            ParamGradients iterate(std::size_t it, Stage stage)
            {
                const SurfaceMesh mesh = marching_tets(grid_, ps_, cfg_.exec);
                if (mesh.empty())
                {
                    if (++empty_streak_ >= cfg_.max_empty)
                    {
                        if (!cfg_.snapshot.empty())
                            write_twv(cfg_.snapshot, ps_, Precision::f64);
                        std::ostringstream msg;
                        msg << "extraction empty for " << empty_streak_ << " consecutive iterations (iteration " << it << ", "
                            << ps_.size() << " points";
                        if (!cfg_.snapshot.empty())
                            msg << ", snapshot " << cfg_.snapshot;
                        msg << ")";
                        throw Error(ErrorKind::diverged, msg.str());
                    }
                }
                else
                {
                    empty_streak_ = 0;
                }

                Tape tape(ps_, grid_, mesh);
                record_recon(tape, recon_, hash_combine(cfg_.seed, 0x5eed0000ULL + it), cfg_.exec);
                // Regularizers enter as means so their weights do not depend on
                // the point count.
                if (stage == Stage::main)
                {
                    if (cfg_.weights.fairness > 0.0 && !mesh.empty())
                        record_fairness(tape, cfg_.weights.fairness / static_cast<double>(mesh.num_faces()), cfg_.exec);
                    if (cfg_.weights.odt > 0.0)
                        record_odt(tape, cfg_.weights.odt / static_cast<double>(grid_.num_tets()), {}, cfg_.exec);
                }
                if (cfg_.weights.sign > 0.0 && !mesh.empty())
                    record_sign(tape, cfg_.weights.sign / (2.0 * static_cast<double>(mesh.num_vertices())));
                ParamGradients g = backward(tape, 1.0, cfg_.exec);

                HistoryRow row;
                row.iteration = it;
                row.stage = stage;
                row.total = tape.value();
                row.distance = tape.term("distance");
                row.normal = tape.term("normal");
                row.occupancy = tape.term("occupancy");
                row.fairness = tape.term("fairness");
                row.odt = tape.term("odt");
                row.sign = tape.term("sign");
                row.points = ps_.size();
                row.vertices = mesh.num_vertices();
                row.faces = mesh.num_faces();
                result_.history.push_back(row);
                if (observer_)
                    observer_(row);

                adam_sdf_.step(ps_.sdf, g.d_sdf, cfg_.lr_sdf);
                if (!ps_.sh.empty())
                    adam_sh_.step(ps_.sh, g.d_sh, cfg_.lr_sh);
                clamp_hull();
                return g;
            }

            // Hull points stay outside so the sign transition never reaches
            // the hull and every extraction is closed.
            void clamp_hull()
            {
                for (std::size_t i = 0; i < ps_.size(); ++i)
                    if (hull_[i] && ps_.sdf[i] < kHullSdf)
                        ps_.sdf[i] = kHullSdf;
            }

            void refine(std::size_t it)
            {
                const SurfaceMesh mesh = marching_tets(grid_, ps_, cfg_.exec);
                if (mesh.empty())
                    return;
                const auto errors = per_sample_error(mesh, *target_, cfg_.samples, hash_combine(cfg_.seed, 0xe770000ULL + it));
                const auto b = mesh.bounds();
                Aabb box;
                box.lo = b[0];
                box.hi = b[1];
                const VoxelImportance imp = build_importance(errors, box, cfg_.importance_resolution);
                const std::size_t passive = passive_points(grid_, ps_).size();
                const auto step = static_cast<std::size_t>(std::ceil(cfg_.refine_fraction * static_cast<double>(cfg_.target_points)));
                const std::size_t growth = std::min(cfg_.target_points - ps_.size(), step);
                ResampleResult r = resample(ps_, grid_, imp, passive + growth, hash_combine(cfg_.seed, 0x7e5a0000ULL + it));

                const std::size_t n = r.points.size();
                const auto q = static_cast<std::size_t>(ps_.coeffs_per_point());
                adam_pos_.remap(r.kept, 3, n);
                adam_sdf_.remap(r.kept, 1, n);
                adam_sh_.remap(r.kept, q, n);
                std::vector<Vec3> accum(n, Vec3::Zero());
                for (std::size_t i = 0; i < r.kept.size(); ++i)
                    accum[i] = pos_accum_[r.kept[i]];
                pos_accum_ = std::move(accum);
                ps_ = std::move(r.points);
                ++result_.refinements;
            }

            TargetPtr target_;
            const OptimConfig & cfg_;
            const FitObserver & observer_;
            ReconLoss recon_;
            Adam adam_pos_, adam_sdf_, adam_sh_;
            PointSet ps_;
            TetGrid grid_;
            std::vector<Vec3> pos_accum_;
            std::vector<std::uint8_t> hull_;
            std::size_t empty_streak_ = 0;
            FitResult result_;
        };
    }

    FitResult fit(const TargetPtr & target, const OptimConfig & cfg, const FitObserver & observer)
    {
        cfg.validate();
        Fitter f(target, cfg, observer);
        return f.run();
    }

    FitResult fit(const OptimConfig & cfg, const FitObserver & observer) { return fit(parse_target(cfg.target), cfg, observer); }
}
