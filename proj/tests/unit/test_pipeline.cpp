#include "deltet/io.hpp"
#include "deltet/pipeline.hpp"

#include "support.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

using namespace deltet;

namespace
{
    OptimConfig small_config()
    {
        OptimConfig cfg;
        cfg.target = "sphere";
        cfg.initial_points = 300;
        cfg.target_points = 300;
        cfg.init_radius = 1.0;
        cfg.sh_degree = 1;
        cfg.main_iters = 20;
        cfg.late_iters = 10;
        cfg.samples = 500;
        cfg.probes = 256;
        cfg.lr_pos = 0.002;
        cfg.seed = 3;
        return cfg;
    }

    bool same_points(const PointSet & a, const PointSet & b)
    {
        return a.positions == b.positions && a.sdf == b.sdf && a.sh == b.sh && a.degree == b.degree;
    }
}

TEST_CASE("adam: closed-form steps")
{
    SUBCASE("zero gradient leaves parameters unchanged")
    {
        Adam adam;
        std::vector<double> p = {1.0, -2.0, 3.5}, g(3, 0.0);
        for (int k = 0; k < 10; ++k)
            adam.step(p, g, 0.1);
        CHECK(p == std::vector<double>{1.0, -2.0, 3.5});
        CHECK(adam.steps() == 10);
    }
    SUBCASE("first step moves by lr against the gradient sign")
    {
        Adam adam;
        std::vector<double> p = {0.0, 0.0, 0.0}, g = {3.0, -0.01, 1e3};
        adam.step(p, g, 0.01);
        CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
        CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-5));
        CHECK(p[2] == doctest::Approx(-0.01).epsilon(1e-6));
    }
    SUBCASE("constant gradient drifts monotonically")
    {
        Adam adam;
        std::vector<double> p = {0.0}, g = {-0.5};
        double last = p[0];
        for (int k = 0; k < 50; ++k)
        {
            adam.step(p, g, 0.001);
            CHECK(p[0] > last);
            last = p[0];
        }
        // With a constant gradient every bias-corrected step is exactly lr.
        CHECK(p[0] == doctest::Approx(0.05).epsilon(1e-4));
    }
    SUBCASE("decoupled weight decay shrinks toward zero")
    {
        Adam adam({0.9, 0.999, 1e-8, 0.1});
        std::vector<double> p = {2.0}, g = {0.0};
        adam.step(p, g, 0.5);
        CHECK(p[0] == doctest::Approx(2.0 * (1.0 - 0.5 * 0.1)));
    }
    SUBCASE("size mismatch and remapping")
    {
        Adam adam;
        std::vector<double> p(6, 0.0), g = {1, 2, 3, 4, 5, 6};
        adam.step(p, g, 0.1);
        std::vector<double> wrong(4, 0.0);
        CHECK_THROWS_AS(adam.step(wrong, std::vector<double>(4, 0.0), 0.1), Error);

        const std::vector<double> m = adam.first_moment();
        // Three groups of two: keep groups 2 and 0, then add one fresh group.
        adam.remap({2, 0}, 2, 3);
        REQUIRE(adam.first_moment().size() == 6);
        CHECK(adam.first_moment()[0] == m[4]);
        CHECK(adam.first_moment()[1] == m[5]);
        CHECK(adam.first_moment()[2] == m[0]);
        CHECK(adam.first_moment()[3] == m[1]);
        CHECK(adam.first_moment()[4] == 0.0);
        CHECK(adam.second_moment()[5] == 0.0);
    }
}

TEST_CASE("config: parsing and validation")
{
    const OptimConfig cfg = parse_config("# desk run\n"
                                         "target = torus\n"
                                         "initial_points = 2000   # comment\n"
                                         "main_iters=500\n"
                                         "\n"
                                         "lr_pos = 0.002\n"
                                         "w_fairness = 0\n"
                                         "sh_degree = 3\n"
                                         "seed = 7\n");
    CHECK(cfg.target == "torus");
    CHECK(cfg.initial_points == 2000);
    CHECK(cfg.main_iters == 500);
    CHECK(cfg.lr_pos == 0.002);
    CHECK(cfg.weights.fairness == 0.0);
    CHECK(cfg.sh_degree == 3);
    CHECK(cfg.seed == 7);
    CHECK(cfg.late_iters == OptimConfig{}.late_iters);

    const auto kind_of = [](const std::string & text) {
        try
        {
            parse_config(text);
        }
        catch (const Error & e)
        {
            return e.kind();
        }
        return ErrorKind::internal;
    };
    CHECK(kind_of("warp_speed = 9\n") == ErrorKind::invalid_argument);
    CHECK(kind_of("main_iters = lots\n") == ErrorKind::invalid_argument);
    CHECK(kind_of("rebuild_interval = 0\n") == ErrorKind::invalid_argument);
    CHECK(kind_of("lr_sdf = -1\n") == ErrorKind::invalid_argument);
    CHECK(kind_of("no equals sign\n") == ErrorKind::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/deltet.cfg"), Error);
}

TEST_CASE("history: csv layout")
{
    HistoryRow r;
    r.iteration = 4;
    r.stage = Stage::late;
    r.total = 1.5;
    r.points = 10;
    std::ostringstream out;
    write_history_csv(out, {r});
    std::istringstream in(out.str());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "iteration,stage,total,distance,normal,occupancy,fairness,odt,sign,points,vertices,faces");
    CHECK(row.rfind("4,late,1.5,", 0) == 0);
}

TEST_CASE("fit: schedule bookkeeping without refinement")
{
    const OptimConfig cfg = small_config();
    std::size_t observed = 0;
    const FitResult r = fit(cfg, [&](const HistoryRow &) { ++observed; });
    CHECK(r.history.size() == cfg.main_iters + cfg.late_iters);
    CHECK(observed == r.history.size());
    CHECK(r.refinements == 0);
    CHECK(r.rebuilds == cfg.main_iters / cfg.rebuild_interval);
    CHECK(r.points.size() == cfg.initial_points);
    for (std::size_t k = 0; k < r.history.size(); ++k)
    {
        CHECK(r.history[k].iteration == k);
        CHECK(r.history[k].stage == (k < cfg.main_iters ? Stage::main : Stage::late));
        CHECK(std::isfinite(r.history[k].total));
        if (r.history[k].stage == Stage::late)
        {
            CHECK(r.history[k].fairness == 0.0);
            CHECK(r.history[k].odt == 0.0);
        }
    }
    CHECK(!r.mesh.empty());
    CHECK(r.grid.generation == r.points.generation);
}

TEST_CASE("fit: bitwise deterministic across runs and thread modes")
{
    OptimConfig cfg = small_config();
    const FitResult a = fit(cfg);
    const FitResult b = fit(cfg);
    CHECK(same_points(a.points, b.points));
    cfg.exec = Exec::serial;
    const FitResult c = fit(cfg);
    CHECK(same_points(a.points, c.points));
    CHECK(a.mesh.vertices == c.mesh.vertices);

    cfg.seed = 4;
    CHECK(!same_points(a.points, fit(cfg).points));
}

TEST_CASE("fit: the late stage changes only s and c")
{
    OptimConfig cfg = small_config();
    cfg.late_iters = 0;
    const FitResult before = fit(cfg);
    cfg.late_iters = 15;
    const FitResult after = fit(cfg);
    CHECK(before.points.positions == after.points.positions);
    CHECK(before.grid.tets == after.grid.tets);
    CHECK(before.points.sdf != after.points.sdf);
    CHECK(before.rebuilds == after.rebuilds);
}

TEST_CASE("fit: refinement grows the point count to the target")
{
    OptimConfig cfg = small_config();
    cfg.target_points = 400;
    cfg.main_iters = 40;
    cfg.refine_interval = 10;
    const FitResult r = fit(cfg);
    CHECK(r.refinements == 2);  // 50 points per event
    CHECK(r.points.size() == 400);
    for (std::size_t k = 1; k < r.history.size(); ++k)
    {
        CHECK(r.history[k].points >= r.history[k - 1].points);
        if (r.history[k].stage == Stage::late)
            CHECK(r.history[k].points == r.history[k - 1].points);
    }
}

TEST_CASE("fit: plain gradient descent lowers the reconstruction loss")
{
    OptimConfig cfg = small_config();
    cfg.weights.fairness = cfg.weights.odt = cfg.weights.sign = 0.0;
    cfg.rebuild_interval = 1;
    cfg.main_iters = 80;
    cfg.late_iters = 0;
    const FitResult r = fit(cfg);
    double first = 0.0, last = 0.0;
    for (std::size_t k = 0; k < 10; ++k)
    {
        first += r.history[k].total;
        last += r.history[r.history.size() - 1 - k].total;
        CHECK(r.history[k].sign == 0.0);
    }
    CHECK(last < 0.5 * first);
}

TEST_CASE("fit: empty extractions raise diverged with a snapshot")
{
    // Four points are all hull points, which stay positive: nothing to extract.
    OptimConfig cfg = small_config();
    cfg.initial_points = cfg.target_points = 4;
    cfg.max_empty = 3;
    const auto snap = std::filesystem::temp_directory_path() / "deltet_diverged.twv";
    std::filesystem::remove(snap);
    cfg.snapshot = snap.string();
    bool thrown = false;
    try
    {
        fit(cfg);
    }
    catch (const Error & e)
    {
        thrown = true;
        CHECK(e.kind() == ErrorKind::diverged);
        CHECK(std::string(e.what()).find("3 consecutive") != std::string::npos);
    }
    CHECK(thrown);
    REQUIRE(std::filesystem::exists(snap));
    CHECK(read_twv(snap.string()).size() == 4);
    std::filesystem::remove(snap);
}

TEST_CASE("fit: invalid configuration")
{
    OptimConfig cfg = small_config();
    cfg.initial_points = 3;
    CHECK_THROWS_AS(fit(cfg), Error);
    cfg = small_config();
    cfg.target = "klein-bottle";
    CHECK_THROWS_AS(fit(cfg), Error);
}
