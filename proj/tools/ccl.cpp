// Command-line front end. Exit codes: 0 success, 1 invalid input, 2 solver
// or simulation failure, 3 acceptance check failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "ccl/harness.hpp"
#include "ccl/lookup_analytics.hpp"
#include "ccl/simulator.hpp"
#include "ccl/steady_state.hpp"

using json = nlohmann::json;
using namespace ccl;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitAcceptance = 3;

struct Options {
    unsigned keyspace_bits = 20;
    std::vector<std::uint64_t> nodes{1000};
    std::vector<unsigned> bases{2};
    std::vector<double> r_grid{100.0};
    double beta = 0.5;
    double alpha = 1.0;
    std::vector<double> a{0.0};
    std::optional<double> c;
    std::uint64_t seed = 1;
    unsigned runs = 1;
    std::string out;
    std::string strategy = "periodic";
    std::string mode = "exact";
    std::string config;
};

// Registers the shared flags and remembers which ones the user passed.
void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--keyspace-bits", o.keyspace_bits, "log2 of the key space size");
    cmd->add_option("--nodes", o.nodes, "number of nodes (list for experiments)")->delimiter(',');
    cmd->add_option("--base", o.bases, "finger base (list for experiments)")->delimiter(',');
    cmd->add_option("--r-grid", o.r_grid, "maintenance-to-failure rate ratios")->delimiter(',');
    cmd->add_option("--beta", o.beta, "periodic: share of budget spent on the successor");
    cmd->add_option("--alpha", o.alpha, "correction-on-change: S1 stabilisation weight");
    cmd->add_option("--a", o.a, "correction-on-change: S2 stabilisation weight (list)")->delimiter(',');
    cmd->add_option("--c", o.c, "correction-on-change: message weight (default 1 - a)");
    cmd->add_option("--seed", o.seed, "first simulator seed");
    cmd->add_option("--runs", o.runs, "simulator runs (seeds seed, seed+1, ...)");
    cmd->add_option("--out", o.out, "output file");
    cmd->add_option("--config", o.config, "JSON file with defaults; flags take precedence");
}

bool given(const CLI::App* cmd, const std::string& flag) { return cmd->count(flag) > 0; }

template <class T>
std::vector<T> as_list(const json& v) {
    if (v.is_array()) {
        return v.get<std::vector<T>>();
    }
    return {v.get<T>()};
}

// Fills options from the config file for every key whose flag was not given.
void apply_config(const CLI::App* cmd, Options& o) {
    if (o.config.empty()) {
        return;
    }
    std::ifstream in(o.config);
    if (!in) {
        throw std::invalid_argument("cannot open config file '" + o.config + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file: " + std::string(e.what()));
    }
    auto take = [&](const char* key, const char* flag, auto& field) {
        if (j.contains(key) && !given(cmd, flag)) {
            field = j.at(key).get<std::decay_t<decltype(field)>>();
        }
    };
    try {
        if (j.contains("nodes") && !given(cmd, "--nodes")) {
            o.nodes = as_list<std::uint64_t>(j["nodes"]);
        }
        if (j.contains("base") && !given(cmd, "--base")) {
            o.bases = as_list<unsigned>(j["base"]);
        }
        if (j.contains("r_grid") && !given(cmd, "--r-grid")) {
            o.r_grid = as_list<double>(j["r_grid"]);
        }
        if (j.contains("a") && !given(cmd, "--a")) {
            o.a = as_list<double>(j["a"]);
        }
        if (j.contains("c") && !given(cmd, "--c")) {
            o.c = j["c"].get<double>();
        }
        take("keyspace_bits", "--keyspace-bits", o.keyspace_bits);
        take("beta", "--beta", o.beta);
        take("alpha", "--alpha", o.alpha);
        take("seed", "--seed", o.seed);
        take("runs", "--runs", o.runs);
        take("out", "--out", o.out);
        take("strategy", "--strategy", o.strategy);
        take("mode", "--mode", o.mode);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config file: " + std::string(e.what()));
    }
}

RingParams ring_of(const Options& o) {
    return RingParams::from_bits(o.keyspace_bits, o.nodes.at(0), o.bases.at(0));
}

MaintenanceConfig maintenance_of(const Options& o, double r, double a) {
    MaintenanceConfig m;
    if (o.strategy == "periodic") {
        m = MaintenanceConfig::periodic(o.beta, r);
    } else if (o.strategy == "coc") {
        m = MaintenanceConfig{CorrectionOnChange{o.alpha, a, o.c ? *o.c : 1.0 - a}, r};
    } else {
        throw std::invalid_argument("strategy must be 'periodic' or 'coc'");
    }
    m.validate();
    return m;
}

void emit(const Options& o, const std::string& text) {
    if (o.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(o.out);
    if (!f || !(f << text)) {
        throw std::runtime_error("cannot write '" + o.out + "'");
    }
}

json steady_json(const SteadyState& ss) {
    return {{"w1", ss.w1},         {"w1_prime", ss.w1_prime},
            {"p_s1", ss.p_s1},     {"f", ss.dead_fingers.bulk()},
            {"g1", ss.g1},         {"residual", ss.residual},
            {"iterations", ss.iterations}};
}

int cmd_analytic_nochurn(const Options& o) {
    const RingParams p = ring_of(o);
    const auto table = solve_nochurn(p);
    const json j{{"keyspace_bits", o.keyspace_bits},
                 {"N", p.nodes()},
                 {"base", p.base()},
                 {"L", table.average},
                 {"partial_sum_L", nochurn_partial_sum_average(p, solve_nochurn(p, true))},
                 {"asymptotic_L", nochurn_asymptotic(p)}};
    emit(o, j.dump(2) + "\n");
    return 0;
}

int cmd_analytic_churn(const Options& o) {
    const RingParams p = ring_of(o);
    const double A = solve_nochurn(p).average;
    json rows = json::array();
    for (double a : o.strategy == "coc" ? o.a : std::vector<double>{0.0}) {
        for (double r : o.r_grid) {
            const auto m = maintenance_of(o, r, a);
            json row{{"strategy", m.name()}, {"r", r}};
            FingerDeathProfile f;
            if (m.is_periodic()) {
                f = periodic_death_fraction(m, p);
                row["beta"] = o.beta;
            } else {
                const auto ss = solve_coc(m, p);
                f = ss.dead_fingers;
                row["a"] = m.as_coc().a;
                row["c"] = m.as_coc().c;
                row["w1"] = ss.w1;
                row["w1_prime"] = ss.w1_prime;
            }
            const auto table = solve_with_churn(p, f);
            row["f"] = f.bulk();
            row["L"] = table.average;
            row["L_scaling_form"] = scaling_form(A, f.bulk());
            row["truncation_residual"] = table.truncation_residual;
            rows.push_back(row);
        }
    }
    emit(o, json{{"A", A}, {"rows", rows}}.dump(2) + "\n");
    return 0;
}

int cmd_steady_state(const Options& o) {
    const RingParams p = ring_of(o);
    json rows = json::array();
    for (double a : o.strategy == "coc" ? o.a : std::vector<double>{0.0}) {
        for (double r : o.r_grid) {
            const auto m = maintenance_of(o, r, a);
            json row{{"strategy", m.name()}, {"r", r}};
            if (m.is_periodic()) {
                const auto f = periodic_death_fraction(m, p);
                row["f"] = f.bulk();
                row["f1"] = f(1);
            } else {
                CocSolverOptions opts;
                if (o.mode == "first-order") {
                    opts.mode = CocMode::first_order;
                } else if (o.mode != "exact") {
                    throw std::invalid_argument("mode must be 'exact' or 'first-order'");
                }
                row.update(steady_json(solve_coc(m, p, opts)));
                row["a"] = m.as_coc().a;
                row["c"] = m.as_coc().c;
            }
            rows.push_back(row);
        }
    }
    emit(o, rows.dump(2) + "\n");
    return 0;
}

int cmd_simulate(const Options& o, bool static_ring) {
    json runs = json::array();
    for (unsigned i = 0; i < std::max(1u, o.runs); ++i) {
        SimConfig cfg;
        cfg.ring = ring_of(o);
        cfg.seed = o.seed + i;
        if (static_ring) {
            cfg.failure_rate = 0.0;
        } else {
            cfg.maintenance = maintenance_of(o, o.r_grid.at(0), o.a.at(0));
        }
        const auto res = run_simulation(cfg);
        runs.push_back({{"seed", cfg.seed},
                        {"mean_hops", res.mean_hops},
                        {"ci_halfwidth", res.hop_ci_halfwidth},
                        {"mean_timeouts", res.mean_timeouts},
                        {"lookups", res.lookups},
                        {"failure_fraction", res.failure_fraction},
                        {"outside_validity", res.outside_validity},
                        {"f", res.dead_fingers_bulk},
                        {"w1", res.w1},
                        {"w1_prime", res.w1_prime},
                        {"p_s1", res.p_s1},
                        {"population_mean", res.population_mean},
                        {"events", res.events}});
    }
    emit(o, runs.dump(2) + "\n");
    return 0;
}

int cmd_experiment(const CLI::App* cmd, const Options& o, const std::string& id) {
    auto spec = ExperimentSpec::defaults(parse_figure(id));
    // Options hold config-file values for flags that were not given; a field
    // replaces the figure default only if either source set it.
    json cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        cfg = json::parse(in, nullptr, false);
    }
    auto pick = [&](const char* flag, const char* key) {
        return given(cmd, flag) || (cfg.is_object() && cfg.contains(key));
    };
    if (pick("--keyspace-bits", "keyspace_bits")) spec.keyspace_bits = o.keyspace_bits;
    if (pick("--nodes", "nodes")) spec.nodes = o.nodes;
    if (pick("--base", "base")) spec.bases = o.bases;
    if (pick("--r-grid", "r_grid")) spec.r_grid = o.r_grid;
    if (pick("--beta", "beta")) spec.beta = o.beta;
    if (pick("--alpha", "alpha")) spec.alpha = o.alpha;
    if (pick("--a", "a")) spec.a_grid = o.a;
    if (pick("--c", "c")) spec.c = o.c;
    if (pick("--seed", "seed")) spec.seed = o.seed;
    if (pick("--runs", "runs")) spec.runs = o.runs;
    spec.output = o.out.empty() ? id + ".csv" : o.out;
    spec.validate();

    const auto rows = run_experiment(spec);
    write_csv_file(spec.output, rows);
    std::size_t flagged = 0;
    for (const auto& r : rows) {
        flagged += r.flagged();
    }
    std::cout << "wrote " << rows.size() << " rows to " << spec.output;
    if (flagged) {
        std::cout << " (" << flagged << " flagged)";
    }
    std::cout << "\n";
    bool ok = true;
    for (const auto& line : summarize(spec.figure, rows)) {
        std::cout << (line.pass ? "PASS " : "FAIL ") << line.name;
        if (!line.detail.empty()) {
            std::cout << ": " << line.detail;
        }
        std::cout << "\n";
        ok = ok && line.pass;
    }
    return ok ? 0 : kExitAcceptance;
}

int cmd_report(const std::vector<std::string>& files, double median_tol, double max_tol) {
    std::vector<ResultRow> predicted, measured;
    if (files.size() == 1) {
        for (auto& r : read_csv_file(files[0])) {
            (r.source == "simulated" ? measured : predicted).push_back(std::move(r));
        }
    } else if (files.size() == 2) {
        predicted = read_csv_file(files[0]);
        measured = read_csv_file(files[1]);
    } else {
        throw std::invalid_argument("report takes one combined file or two files");
    }
    const auto rep = compare_report(predicted, measured, median_tol, max_tol);
    for (const auto& p : rep.points) {
        std::printf("%s  predicted %.6g  measured %.6g  rel.err %.4f\n", p.point.c_str(), p.predicted,
                    p.measured, p.relative_error);
    }
    for (const auto& x : rep.excluded) {
        std::printf("%s  excluded (flagged)\n", x.c_str());
    }
    std::printf("%s median %.4f (<= %.4f), max %.4f (<= %.4f) over %zu points\n",
                rep.pass ? "PASS" : "FAIL", rep.median_error, median_tol, rep.max_error, max_tol,
                rep.points.size());
    return rep.pass ? 0 : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chord lookup-length models, steady-state solvers and simulator"};
    app.require_subcommand(1);
    Options o;

    auto* nochurn = app.add_subcommand("analytic-nochurn", "churn-free average lookup length");
    add_common(nochurn, o);

    auto* churn = app.add_subcommand("analytic-churn", "lookup length under churn, per r");
    add_common(churn, o);
    churn->add_option("--strategy", o.strategy, "periodic or coc");

    auto* steady = app.add_subcommand("steady-state", "dead-finger and wrong-successor fractions");
    add_common(steady, o);
    steady->add_option("--strategy", o.strategy, "periodic or coc");
    steady->add_option("--mode", o.mode, "exact or first-order");

    auto* sim = app.add_subcommand("simulate", "discrete-event simulation at the first r");
    add_common(sim, o);
    sim->add_option("--strategy", o.strategy, "periodic or coc");
    bool static_ring = false;
    sim->add_flag("--static", static_ring, "no churn; measure the fresh ring");

    auto* exp = app.add_subcommand("experiment", "run a figure's grid and write CSV");
    add_common(exp, o);
    std::string figure;
    exp->add_option("figure_id", figure, "experiment id")->required();

    auto* report = app.add_subcommand("report", "compare predicted and measured lengths");
    std::vector<std::string> files;
    double median_tol = 0.05;
    double max_tol = 0.08;
    report->add_option("files", files, "combined results file, or predicted then measured")
        ->required();
    report->add_option("--median-tol", median_tol, "median relative error limit");
    report->add_option("--max-tol", max_tol, "maximum relative error limit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        if (active != report) {
            apply_config(active, o);
        }
        if (active == nochurn) return cmd_analytic_nochurn(o);
        if (active == churn) return cmd_analytic_churn(o);
        if (active == steady) return cmd_steady_state(o);
        if (active == sim) return cmd_simulate(o, static_ring);
        if (active == exp) return cmd_experiment(exp, o, figure);
        return cmd_report(files, median_tol, max_tol);
    } catch (const SolverError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const GridMismatch& e) {
        std::cerr << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
