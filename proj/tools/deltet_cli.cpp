#include "deltet/extract.hpp"
#include "deltet/io.hpp"
#include "deltet/metrics.hpp"
#include "deltet/pipeline.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

using namespace deltet;

namespace
{
    struct Globals
    {
        int threads = 0;
        bool deterministic = false;

        Exec exec() const { return deterministic ? Exec::serial : Exec::parallel; }
    };

    void report_topology(const SurfaceMesh & mesh)
    {
        const MeshTopology t = analyze_topology(mesh);
        std::fprintf(stderr, "mesh: %zu vertices, %zu faces, euler %lld, %s\n", mesh.num_vertices(), mesh.num_faces(), t.euler,
                     t.closed_manifold() ? "closed manifold" : "open or non-manifold");
    }

    int run_fit(const Globals & g, const std::string & config, const std::vector<std::string> & overrides, const std::string & out,
                const std::string & mesh_path, const std::string & history_path, const std::string & precision, std::size_t log_every)
    {
        OptimConfig cfg = load_config(config);
        for (const std::string & kv : overrides)
        {
            const auto eq = kv.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::invalid_argument, "--set expects key=value, got '" + kv + "'");
            set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
        }
        cfg.exec = g.exec();
        cfg.validate();

        const auto start = std::chrono::steady_clock::now();
        const FitResult r = fit(cfg, [&](const HistoryRow & row) {
            if (log_every > 0 && row.iteration % log_every == 0)
                std::fprintf(stderr, "[%s %zu] loss %.6g  points %zu  faces %zu\n", row.stage == Stage::main ? "main" : "late",
                             row.iteration, row.total, row.points, row.faces);
        });
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::fprintf(stderr, "fit: %zu points, %zu rebuilds, %zu refinements, %.1f s\n", r.points.size(), r.rebuilds, r.refinements,
                     secs);

        write_twv(out, r.points, parse_precision(precision));
        if (!mesh_path.empty())
        {
            export_mesh(r.mesh, mesh_path);
            report_topology(r.mesh);
        }
        if (!history_path.empty())
        {
            std::ofstream h(history_path);
            if (!h)
                throw Error(ErrorKind::io, "cannot write '" + history_path + "'");
            write_history_csv(h, r.history);
        }
        return 0;
    }

    int run_extract(const Globals & g, const std::string & in, const std::string & out, bool all_components)
    {
        const PointSet ps = read_twv(in);
        const TetGrid grid = delaunay(ps);
        const SurfaceMesh mesh = all_components ? marching_tets(grid, ps, g.exec()) : extract_surface(grid, ps, g.exec());
        if (mesh.empty())
            throw Error(ErrorKind::not_found, "extraction is empty (no sign change in '" + in + "')");
        export_mesh(mesh, out);
        report_topology(mesh);
        return 0;
    }

    int run_metrics(const Globals & g, const std::string & pred_path, const std::string & gt_path, const std::string & out,
                    std::size_t samples, std::uint64_t seed)
    {
        const SurfaceMesh pred = import_mesh(pred_path), gt = import_mesh(gt_path);
        MetricOptions opts;
        opts.samples = samples;
        opts.seed = seed;
        opts.exec = g.exec();
        const MetricReport r = evaluate_meshes(pred, gt, opts);
        if (out.empty())
        {
            write_metrics_csv(std::cout, r);
        }
        else
        {
            std::ofstream f(out);
            if (!f)
                throw Error(ErrorKind::io, "cannot write '" + out + "'");
            write_metrics_csv(f, r);
        }
        return 0;
    }

    int run_compress(const std::string & in, const std::string & out, const std::string & precision, bool trim, bool drop_l0)
    {
        PointSet ps = read_twv(in);
        const std::size_t before = ps.size();
        if (trim)
            ps = trim_inactive(ps, delaunay(ps));
        const Precision p = parse_precision(precision);
        write_twv(out, ps, p, drop_l0);
        std::fprintf(stderr, "compress: %zu -> %zu points, %zu payload bytes\n", before, ps.size(),
                     twv_payload_size(ps.size(), ps.degree, p, drop_l0));
        return 0;
    }

    int run_resample_demo(const Globals & g, const std::string & target_name, const std::string & importance, std::size_t points,
                          std::size_t add, int resolution, std::uint64_t seed, const std::string & out, const std::string & mesh_path)
    {
        const TargetPtr target = parse_target(target_name);
        PointSet ps = init_points(points, 1.0, seed, 0);
        for (std::size_t i = 0; i < ps.size(); ++i)
            ps.sdf[i] = target->sdf(ps.positions[i]);
        const TetGrid grid = delaunay(ps);
        const SurfaceMesh mesh = marching_tets(grid, ps, g.exec());
        if (mesh.empty())
            throw Error(ErrorKind::not_found, "target surface does not cross the initial point cloud");

        const VoxelImportance imp = builtin_importance(parse_importance(importance), mesh, resolution);
        const ResampleResult r = resample(ps, grid, imp, add, seed);
        std::fprintf(stderr, "resample-demo: %s importance, removed %zu passive, added %zu (%zu clamped), %zu points\n",
                     importance.c_str(), r.removed, r.added, r.clamped, r.points.size());
        if (!out.empty())
            write_twv(out, r.points, Precision::f64);
        if (!mesh_path.empty())
        {
            const SurfaceMesh refined = marching_tets(delaunay(r.points), r.points, g.exec());
            export_mesh(refined, mesh_path);
            report_topology(refined);
        }
        return 0;
    }
}

int main(int argc, char ** argv)
{
    CLI::App app{"deltet: Delaunay-grid surface fitting and evaluation"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--threads", g.threads, "OpenMP thread count (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_flag("--deterministic", g.deterministic, "single thread, serial reference kernels");

    std::string fit_config, fit_out, fit_mesh, fit_history, fit_precision = "f32";
    std::vector<std::string> fit_set;
    std::size_t log_every = 100;
    auto * fit_cmd = app.add_subcommand("fit", "fit a target from a config file");
    fit_cmd->add_option("config", fit_config, "key = value config file")->required();
    fit_cmd->add_option("-o,--output", fit_out, "output point set (.twv)")->required();
    fit_cmd->add_option("--mesh", fit_mesh, "final mesh (.obj or .ply)");
    fit_cmd->add_option("--history", fit_history, "per-iteration loss history (.csv)");
    fit_cmd->add_option("--precision", fit_precision, "f16, f32 or f64")->check(CLI::IsMember({"f16", "f32", "f64"}));
    fit_cmd->add_option("--set", fit_set, "override a config key (key=value), repeatable");
    fit_cmd->add_option("--log-every", log_every, "progress line interval, 0 to silence");

    std::string ex_in, ex_out;
    bool ex_all = false;
    auto * extract_cmd = app.add_subcommand("extract", "rebuild the grid and extract the surface");
    extract_cmd->add_option("input", ex_in, "point set (.twv)")->required();
    extract_cmd->add_option("-o,--output", ex_out, "mesh (.obj or .ply)")->required();
    extract_cmd->add_flag("--all-components", ex_all, "keep every component instead of the largest");

    std::string m_pred, m_gt, m_out;
    std::size_t m_samples = 100000;
    std::uint64_t m_seed = 0;
    auto * metrics_cmd = app.add_subcommand("metrics", "compare a predicted mesh against ground truth");
    metrics_cmd->add_option("pred", m_pred, "predicted mesh")->required();
    metrics_cmd->add_option("gt", m_gt, "ground-truth mesh")->required();
    metrics_cmd->add_option("-o,--output", m_out, "report (.csv); stdout when omitted");
    metrics_cmd->add_option("--samples", m_samples, "surface samples per mesh");
    metrics_cmd->add_option("--seed", m_seed, "sampling seed");

    std::string c_in, c_out, c_precision = "f32";
    bool c_trim = false, c_drop = false;
    auto * compress_cmd = app.add_subcommand("compress", "re-encode a point set");
    compress_cmd->add_option("input", c_in, "point set (.twv)")->required();
    compress_cmd->add_option("-o,--output", c_out, "output (.twv)")->required();
    compress_cmd->add_option("--precision", c_precision, "f16, f32 or f64")->check(CLI::IsMember({"f16", "f32", "f64"}));
    compress_cmd->add_flag("--trim", c_trim, "keep only points incident to an active edge");
    compress_cmd->add_flag("--drop-l0", c_drop, "omit the constant SH coefficient");

    std::string r_target = "torus", r_importance = "uniform", r_out, r_mesh;
    std::size_t r_points = 4000, r_add = 4000;
    int r_resolution = kDefaultImportanceResolution;
    std::uint64_t r_seed = 0;
    auto * demo_cmd = app.add_subcommand("resample-demo", "one refinement event driven by a built-in importance function");
    demo_cmd->add_option("--importance", r_importance, "uniform, axis_cubic or radial")
        ->check(CLI::IsMember({"uniform", "axis_cubic", "radial"}));
    demo_cmd->add_option("--target", r_target, "sphere, small-sphere, torus, box, csg or mesh:<path>");
    demo_cmd->add_option("--points", r_points, "initial point count");
    demo_cmd->add_option("--add", r_add, "points added by the event");
    demo_cmd->add_option("--resolution", r_resolution, "voxels per axis")->check(CLI::PositiveNumber);
    demo_cmd->add_option("--seed", r_seed, "seed");
    demo_cmd->add_option("-o,--output", r_out, "resampled point set (.twv)");
    demo_cmd->add_option("--mesh", r_mesh, "mesh of the resampled set");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp & e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp & e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError & e)
    {
        std::fprintf(stderr, "error: usage: %s\n", e.what());
        std::cerr << app.help();
        return 2;
    }

    if (g.deterministic)
        set_num_threads(1);
    else
        set_num_threads(g.threads);

    try
    {
        if (*fit_cmd)
            return run_fit(g, fit_config, fit_set, fit_out, fit_mesh, fit_history, fit_precision, log_every);
        if (*extract_cmd)
            return run_extract(g, ex_in, ex_out, ex_all);
        if (*metrics_cmd)
            return run_metrics(g, m_pred, m_gt, m_out, m_samples, m_seed);
        if (*compress_cmd)
            return run_compress(c_in, c_out, c_precision, c_trim, c_drop);
        if (*demo_cmd)
            return run_resample_demo(g, r_target, r_importance, r_points, r_add, r_resolution, r_seed, r_out, r_mesh);
    }
    catch (const Error & e)
    {
        std::fprintf(stderr, "error: %s: %s\n", to_string(e.kind()), e.what());
        return 1;
    }
    catch (const std::exception & e)
    {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 1;
    }
    return 2;
}
