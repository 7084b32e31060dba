#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "ccl/harness.hpp"

using namespace ccl;

namespace {

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream os;
    write_csv(os, rows, "");
    return os.str();
}

ResultRow sample_row(double L) {
    ResultRow r;
    r.experiment = "fig1_theory_vs_sim";
    r.strategy = "periodic";
    r.N = 1000;
    r.keyspace_bits = 20;
    r.r = 200.0;
    r.beta = 0.5;
    r.alpha = std::nan("");
    r.a = std::nan("");
    r.c = std::nan("");
    r.source = "analytic";
    r.L = L;
    r.f = 1.0 / 6.0;
    r.w1 = std::nan("");
    r.w1p = std::nan("");
    r.ci_halfwidth = std::nan("");
    return r;
}

bool same_double(double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
}

}  // namespace

TEST_CASE("figure ids") {
    CHECK(all_figures().size() == 8);
    for (FigureId id : all_figures()) {
        CHECK(parse_figure(figure_name(id)) == id);
        CHECK_NOTHROW(ExperimentSpec::defaults(id).validate());
    }
    CHECK_THROWS_AS(parse_figure("fig9"), std::invalid_argument);
}

TEST_CASE("default grids") {
    const auto fig2 = ExperimentSpec::defaults(FigureId::fig2_vary_N);
    CHECK(fig2.nodes == std::vector<std::uint64_t>{1000, 2000, 4000, 8000, 16000});
    CHECK(fig2.keyspace_bits == 20);
    CHECK(ExperimentSpec::defaults(FigureId::fig4_vary_base).bases == std::vector<unsigned>{2, 4, 16});
    CHECK(ExperimentSpec::defaults(FigureId::fig5_coc_vs_periodic).beta == 0.4);
    CHECK(ExperimentSpec::defaults(FigureId::fig6_vary_a).a_grid.size() == 6);
    CHECK(ExperimentSpec::defaults(FigureId::figA_nochurn).keyspace_bits == 14);
    const auto fig1 = ExperimentSpec::defaults(FigureId::fig1_theory_vs_sim);
    CHECK(fig1.runs >= 5);
    CHECK(fig1.r_grid == std::vector<double>{50, 100, 200, 400});
}

TEST_CASE("empty grids are rejected before anything is written") {
    auto spec = ExperimentSpec::defaults(FigureId::fig2_vary_N);
    spec.r_grid.clear();
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    CHECK_THROWS_AS(run_experiment(spec, 1), std::invalid_argument);

    spec = ExperimentSpec::defaults(FigureId::fig6_vary_a);
    spec.a_grid.clear();
    CHECK_THROWS_AS(run_experiment(spec, 1), std::invalid_argument);

    spec = ExperimentSpec::defaults(FigureId::figA_nochurn);
    spec.nodes.clear();
    CHECK_THROWS_AS(run_experiment(spec, 1), std::invalid_argument);

    spec = ExperimentSpec::defaults(FigureId::fig1_theory_vs_sim);
    spec.r_grid = {-1.0};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("csv round trip") {
    std::vector<ResultRow> rows{sample_row(7.123456789012345), sample_row(0.1 + 0.2)};
    rows[1].source = "simulated";
    rows[1].seed = 42;
    rows[1].ci_halfwidth = 1e-3 / 3.0;
    rows[1].status = "outside_validity";
    rows[1].distance = 17;

    std::istringstream in(to_csv(rows));
    const auto back = read_csv(in);
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i];
        const auto& b = back[i];
        CHECK(a.point_key() == b.point_key());
        CHECK(a.source == b.source);
        CHECK(a.status == b.status);
        CHECK(a.seed == b.seed);
        CHECK(a.distance == b.distance);
        for (auto [x, y] : {std::pair{a.L, b.L}, {a.f, b.f}, {a.w1, b.w1}, {a.w1p, b.w1p},
                            {a.ci_halfwidth, b.ci_halfwidth}, {a.r, b.r}, {a.a, b.a}}) {
            CHECK(same_double(x, y));
        }
    }
    CHECK(to_csv(back) == to_csv(rows));

    std::ostringstream stamped;
    write_csv(stamped, rows, "2026-01-01T00:00:00Z");
    std::istringstream in2(stamped.str());
    CHECK(read_csv(in2).size() == 2);
}

TEST_CASE("malformed results files") {
    std::istringstream no_schema("experiment,strategy\n");
    CHECK_THROWS_AS(read_csv(no_schema), std::invalid_argument);
    std::istringstream bad_header(std::string(kCsvSchema) + "\nexperiment,strategy\n");
    CHECK_THROWS_AS(read_csv(bad_header), std::invalid_argument);
    std::string csv = to_csv({sample_row(5.0)});
    csv += "fig1_theory_vs_sim,periodic\n";
    std::istringstream short_row(csv);
    CHECK_THROWS_AS(read_csv(short_row), std::invalid_argument);
    CHECK_THROWS_AS(read_csv_file("/nonexistent/results.csv"), std::runtime_error);
}

TEST_CASE("file output") {
    const auto dir = std::filesystem::temp_directory_path() / "ccl_harness_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "rows.csv").string();
    write_csv_file(path, {sample_row(5.5)});
    const auto back = read_csv_file(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].L == 5.5);
    CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
    CHECK_THROWS(write_csv_file((dir / "missing" / "rows.csv").string(), {}));
    std::filesystem::remove_all(dir);
}

TEST_CASE("compare report") {
    std::vector<ResultRow> pred, meas;
    for (double r : {50.0, 100.0, 200.0}) {
        auto p = sample_row(6.0);
        p.r = r;
        pred.push_back(p);
        auto m = p;
        m.source = "simulated";
        meas.push_back(m);
    }

    SUBCASE("identical grids give zero error") {
        const auto rep = compare_report(pred, pred);
        CHECK(rep.points.size() == 3);
        CHECK(rep.max_error == 0.0);
        CHECK(rep.median_error == 0.0);
        CHECK(rep.pass);
    }

    SUBCASE("median and maximum") {
        meas[0].L = 6.0 / 1.1;  // error 0.1
        meas[1].L = 6.0 / 1.02;
        const auto rep = compare_report(pred, meas, 0.05, 0.08);
        CHECK(rep.max_error == doctest::Approx(0.1));
        CHECK(rep.median_error == doctest::Approx(0.02));
        CHECK_FALSE(rep.pass);
        CHECK(compare_report(pred, meas, 0.05, 0.11).pass);
    }

    SUBCASE("flagged rows are excluded and listed") {
        meas[2].status = "solver_error";
        meas[2].L = std::nan("");
        const auto rep = compare_report(pred, meas);
        CHECK(rep.points.size() == 2);
        REQUIRE(rep.excluded.size() == 1);
        CHECK(rep.excluded[0] == pred[2].point_key());
    }

    SUBCASE("grid mismatch lists the missing points") {
        meas.pop_back();
        try {
            compare_report(pred, meas);
            FAIL("expected a grid mismatch");
        } catch (const GridMismatch& e) {
            REQUIRE(e.missing().size() == 1);
            CHECK(e.missing()[0].find("r=200") != std::string::npos);
        }
    }
}

TEST_CASE("worker pool") {
    std::vector<int> out(100, 0);
    parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == static_cast<int>(i * i));
    }
    std::atomic<int> calls{0};
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [&](std::size_t i) {
                                     ++calls;
                                     if (i == 4) {
                                         throw std::runtime_error("boom");
                                     }
                                 }),
                    std::runtime_error);
    CHECK(calls == 10);
    parallel_for(0, 4, [](std::size_t) { FAIL("no jobs expected"); });

    setenv("CCL_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    setenv("CCL_THREADS", "zero", 1);
    CHECK(worker_count() >= 1);
    unsetenv("CCL_THREADS");
}

TEST_CASE("churn-free sweep") {
    auto spec = ExperimentSpec::defaults(FigureId::figA_nochurn);
    spec.nodes = {64, 256, 1024, 4096};
    spec.runs = 1;
    const auto rows = run_experiment(spec, 2);
    CHECK(rows.size() == 8);
    for (const auto& line : summarize(spec.figure, rows)) {
        INFO(line.name << ": " << line.detail);
        CHECK(line.pass);
    }
    // Same seeds, any thread count: identical output.
    CHECK(to_csv(run_experiment(spec, 1)) == to_csv(rows));
}

TEST_CASE("cost profile rows") {
    auto spec = ExperimentSpec::defaults(FigureId::figA_cost_profile);
    spec.keyspace_bits = 12;
    spec.nodes = {100};
    spec.cost_stride = 64;
    const auto rows = run_experiment(spec, 1);
    REQUIRE(rows.size() == 64);
    CHECK(rows[0].distance == 1);
    CHECK(rows[0].L == 1.0);
    CHECK(rows[1].distance == 64);
    CHECK(summarize(spec.figure, rows).at(0).pass);
}

TEST_CASE("strategy comparison figures") {
    const auto fig5 = run_experiment(ExperimentSpec::defaults(FigureId::fig5_coc_vs_periodic), 2);
    CHECK(fig5.size() == 14);
    for (const auto& line : summarize(FigureId::fig5_coc_vs_periodic, fig5)) {
        INFO(line.detail);
        CHECK(line.pass);
    }
    const auto fig6 = run_experiment(ExperimentSpec::defaults(FigureId::fig6_vary_a), 2);
    CHECK(fig6.size() == 42);
    for (const auto& row : fig6) {
        CHECK(row.c == doctest::Approx(1.0 - row.a));
        CHECK_FALSE(row.flagged());
        CHECK(row.w1 >= 0.0);
    }
    CHECK(summarize(FigureId::fig6_vary_a, fig6).at(0).pass);
}

TEST_CASE("base comparison") {
    const auto rows = run_experiment(ExperimentSpec::defaults(FigureId::fig4_vary_base), 2);
    CHECK(rows.size() == 27);
    CHECK(summarize(FigureId::fig4_vary_base, rows).at(0).pass);
}

TEST_CASE("simulated points carry a confidence interval") {
    auto spec = ExperimentSpec::defaults(FigureId::fig1_theory_vs_sim);
    spec.nodes = {300};
    spec.r_grid = {200};
    spec.runs = 3;
    const auto rows = run_experiment(spec, 3);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].source == "analytic");
    CHECK(rows[1].source == "simulated");
    CHECK(rows[1].seed == spec.seed);
    CHECK(rows[1].ci_halfwidth > 0.0);
    CHECK(rows[1].L > rows[0].L * 0.8);
    CHECK(rows[1].f > 0.0);
}
