#include "deltet/diff.hpp"
#include "deltet/extract.hpp"
#include "deltet/metrics.hpp"
#include "deltet/rng.hpp"
#include "deltet/supervise.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

using namespace deltet;

namespace
{
    // Random points in [-1, 1]^3 with a degree-2 field around a torus.
    struct Scene
    {
        PointSet ps;
        TetGrid grid;
        SurfaceMesh mesh;
    };

    const Scene & scene(std::size_t n)
    {
        static std::map<std::size_t, std::unique_ptr<Scene>> cache;
        auto & slot = cache[n];
        if (!slot)
        {
            slot = std::make_unique<Scene>();
            Rng rng(n);
            PointSet & ps = slot->ps;
            ps.degree = 2;
            const TargetPtr torus = parse_target("torus");
            std::vector<double> c(sh_count(2));
            for (std::size_t i = 0; i < n; ++i)
            {
                const Vec3 p(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
                for (double & x : c)
                    x = 0.05 * rng.uniform(-1, 1);
                ps.push_back(p, torus->sdf(p), c);
            }
            slot->grid = delaunay(ps);
            slot->mesh = marching_tets(slot->grid, ps);
        }
        return *slot;
    }

    Exec exec_of(const benchmark::State & state) { return state.range(1) ? Exec::parallel : Exec::serial; }

    void BM_MarchingTets(benchmark::State & state)
    {
        const Scene & s = scene(static_cast<std::size_t>(state.range(0)));
        for (auto _ : state)
            benchmark::DoNotOptimize(marching_tets(s.grid, s.ps, exec_of(state)));
        state.SetLabel(state.range(1) ? "parallel" : "serial");
    }

    void BM_Backward(benchmark::State & state)
    {
        const Scene & s = scene(static_cast<std::size_t>(state.range(0)));
        Tape tape(s.ps, s.grid, s.mesh);
        const ReconLoss loss(parse_target("torus"), LossWeights{}, 5000, 512);
        record_recon(tape, loss, 1, exec_of(state));
        record_fairness(tape, 0.35, exec_of(state));
        record_odt(tape, 0.1, {}, exec_of(state));
        record_sign(tape, 1.0);
        for (auto _ : state)
            benchmark::DoNotOptimize(backward(tape, 1.0, exec_of(state)));
        state.SetLabel(state.range(1) ? "parallel" : "serial");
    }

    void BM_LossEval(benchmark::State & state)
    {
        const Scene & s = scene(static_cast<std::size_t>(state.range(0)));
        const ReconLoss loss(parse_target("torus"), LossWeights{}, 5000, 2048);
        const auto samples = sample_surface(s.mesh, 5000, 1);
        std::vector<Vec3> grad;
        for (auto _ : state)
            benchmark::DoNotOptimize(loss.evaluate(s.mesh, samples, &grad, exec_of(state)));
        state.SetLabel(state.range(1) ? "parallel" : "serial");
    }

    void BM_MetricsNearest(benchmark::State & state)
    {
        const auto n = static_cast<std::size_t>(state.range(0));
        Rng rng(7);
        std::vector<Vec3> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            a[i] = rng.in_unit_ball();
            b[i] = rng.in_unit_ball();
        }
        const PointTree tree(b);
        for (auto _ : state)
            benchmark::DoNotOptimize(nearest_distances(tree, a, exec_of(state)));
        state.SetLabel(state.range(1) ? "parallel" : "serial");
    }
}

BENCHMARK(BM_MarchingTets)->ArgsProduct({{16000, 64000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Backward)->ArgsProduct({{16000, 64000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LossEval)->ArgsProduct({{16000}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MetricsNearest)->ArgsProduct({{100000}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
