#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "ccl/harness.hpp"
#include "ccl/lookup_analytics.hpp"
#include "ccl/simulator.hpp"
#include "ccl/steady_state.hpp"

namespace py = pybind11;
using namespace ccl;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

FingerDeathProfile profile_from(const RingParams& p, const py::object& dead) {
    if (py::isinstance<py::float_>(dead) || py::isinstance<py::int_>(dead)) {
        return FingerDeathProfile::uniform(p.finger_count(), dead.cast<double>());
    }
    return FingerDeathProfile(dead.cast<std::vector<double>>());
}

MaintenanceConfig strategy_from(const std::string& strategy, double r, double beta, double alpha,
                                double a, std::optional<double> c) {
    MaintenanceConfig m;
    if (strategy == "periodic") {
        m = MaintenanceConfig::periodic(beta, r);
    } else if (strategy == "coc") {
        m = MaintenanceConfig{CorrectionOnChange{alpha, a, c ? *c : 1.0 - a}, r};
    } else {
        throw std::invalid_argument("strategy must be 'periodic' or 'coc'");
    }
    m.validate();
    return m;
}

py::dict row_to_dict(const ResultRow& r) {
    py::dict d;
    d["experiment"] = r.experiment;
    d["strategy"] = r.strategy;
    d["N"] = r.N;
    d["keyspace_bits"] = r.keyspace_bits;
    d["base"] = r.base;
    d["r"] = r.r;
    d["beta"] = r.beta;
    d["alpha"] = r.alpha;
    d["a"] = r.a;
    d["c"] = r.c;
    d["source"] = r.source;
    d["distance"] = r.distance;
    d["L"] = r.L;
    d["f"] = r.f;
    d["w1"] = r.w1;
    d["w1p"] = r.w1p;
    d["ci_halfwidth"] = r.ci_halfwidth;
    d["seed"] = r.seed ? py::cast(*r.seed) : py::none();
    d["status"] = r.status;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Chord lookup-length models under churn";

    py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);
    static PyObject* solver_error =
        py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError).ptr();
    // Raised as SolverError(message, candidate_roots).
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const SolverError& e) {
            py::list candidates;
            for (auto z : e.candidates()) {
                candidates.append(py::cast(z));
            }
            PyErr_SetObject(solver_error, py::make_tuple(e.what(), candidates).ptr());
        }
    });

    py::class_<RingParams>(m, "Ring")
        .def(py::init([](unsigned keyspace_bits, std::uint64_t nodes, unsigned base) {
                 return RingParams::from_bits(keyspace_bits, nodes, base);
             }),
             py::arg("keyspace_bits"), py::arg("nodes"), py::arg("base") = 2)
        .def_property_readonly("keyspace", &RingParams::keyspace)
        .def_property_readonly("nodes", &RingParams::nodes)
        .def_property_readonly("base", &RingParams::base)
        .def_property_readonly("finger_count", &RingParams::finger_count)
        .def_property_readonly("density", &RingParams::density)
        .def("__repr__", [](const RingParams& p) {
            return "Ring(keyspace=" + std::to_string(p.keyspace()) + ", nodes=" +
                   std::to_string(p.nodes()) + ", base=" + std::to_string(p.base()) + ")";
        });

    py::class_<CostTable>(m, "CostTable")
        .def_property_readonly("costs", [](const CostTable& t) { return to_array(t.costs); })
        .def_readonly("average", &CostTable::average)
        .def_readonly("churn_free", &CostTable::churn_free)
        .def_readonly("truncation_residual", &CostTable::truncation_residual);

    py::class_<SteadyState>(m, "SteadyState")
        .def_property_readonly("dead_fingers",
                               [](const SteadyState& s) { return to_array(s.dead_fingers.values()); })
        .def_property_readonly("f", [](const SteadyState& s) { return s.dead_fingers.bulk(); })
        .def_readonly("w1", &SteadyState::w1)
        .def_readonly("w1_prime", &SteadyState::w1_prime)
        .def_readonly("p_s1", &SteadyState::p_s1)
        .def_property_readonly("p_s2", [](const SteadyState& s) { return to_array(s.p_s2); })
        .def_readonly("residual", &SteadyState::residual)
        .def_readonly("iterations", &SteadyState::iterations);

    m.def("solve_nochurn", &solve_nochurn, py::arg("ring"), py::arg("include_wraparound") = false,
          "Per-distance costs and average lookup length on a static ring.");

    m.def(
        "solve_with_churn",
        [](const RingParams& p, const py::object& dead, unsigned max_backup_depth) {
            ChurnSolveOptions opts;
            opts.max_backup_depth = max_backup_depth;
            return solve_with_churn(p, profile_from(p, dead), opts);
        },
        py::arg("ring"), py::arg("dead_fingers"), py::arg("max_backup_depth") = 6,
        "Costs under churn; dead_fingers is a scalar or one value per finger.");

    m.def(
        "periodic_death_fraction",
        [](const RingParams& p, double beta, double r) {
            return to_array(periodic_death_fraction(MaintenanceConfig::periodic(beta, r), p).values());
        },
        py::arg("ring"), py::arg("beta"), py::arg("r"));

    m.def(
        "solve_coc",
        [](const RingParams& p, double r, double a, std::optional<double> c, double alpha,
           const std::string& mode) {
            CocSolverOptions opts;
            if (mode == "first_order") {
                opts.mode = CocMode::first_order;
            } else if (mode != "exact") {
                throw std::invalid_argument("mode must be 'exact' or 'first_order'");
            }
            return solve_coc(strategy_from("coc", r, 0.0, alpha, a, c), p, opts);
        },
        py::arg("ring"), py::arg("r"), py::arg("a") = 0.0, py::arg("c") = py::none(),
        py::arg("alpha") = 1.0, py::arg("mode") = "exact");

    m.def("scaling_form", &scaling_form, py::arg("churn_free"), py::arg("f"));

    m.def(
        "estimate_churn",
        [](double L, double A, const RingParams& p, const std::string& strategy, double beta,
           double a, bool quadratic) {
            const auto est =
                estimate_churn(L, A, strategy_from(strategy, 1.0, beta, 1.0, a, std::nullopt), p,
                               quadratic ? ChurnInverse::quadratic : ChurnInverse::linear);
            return py::make_tuple(est.r, est.f, est.warning);
        },
        py::arg("observed_length"), py::arg("churn_free"), py::arg("ring"),
        py::arg("strategy") = "periodic", py::arg("beta") = 0.5, py::arg("a") = 0.0,
        py::arg("quadratic") = true, "Returns (r, f, warning).");

    m.def(
        "simulate",
        [](const RingParams& p, const std::string& strategy, double r, double beta, double a,
           std::optional<double> c, double alpha, std::uint64_t seed, double failure_rate,
           double measure_time) {
            SimConfig cfg;
            cfg.ring = p;
            cfg.seed = seed;
            cfg.failure_rate = failure_rate;
            cfg.measure_time = measure_time;
            if (failure_rate > 0.0) {
                cfg.maintenance = strategy_from(strategy, r, beta, alpha, a, c);
            }
            SimResult res;
            {
                py::gil_scoped_release release;
                res = run_simulation(cfg);
            }
            py::dict d;
            d["mean_hops"] = res.mean_hops;
            d["ci_halfwidth"] = res.hop_ci_halfwidth;
            d["mean_timeouts"] = res.mean_timeouts;
            d["lookups"] = res.lookups;
            d["failure_fraction"] = res.failure_fraction;
            d["dead_fingers"] = to_array(res.dead_fingers);
            d["f"] = res.dead_fingers_bulk;
            d["w1"] = res.w1;
            d["w1_prime"] = res.w1_prime;
            d["p_s1"] = res.p_s1;
            d["population_mean"] = res.population_mean;
            d["events"] = res.events;
            return d;
        },
        py::arg("ring"), py::arg("strategy") = "periodic", py::arg("r") = 100.0,
        py::arg("beta") = 0.5, py::arg("a") = 0.0, py::arg("c") = py::none(),
        py::arg("alpha") = 1.0, py::arg("seed") = 1, py::arg("failure_rate") = 1.0,
        py::arg("measure_time") = 5.0);

    m.def("figures", [] {
        std::vector<std::string> names;
        for (FigureId id : all_figures()) {
            names.emplace_back(figure_name(id));
        }
        return names;
    });

    m.def(
        "run_experiment",
        [](const std::string& figure, std::optional<std::vector<std::uint64_t>> nodes,
           std::optional<std::vector<double>> r_grid, std::optional<unsigned> runs,
           std::optional<std::string> out) {
            auto spec = ExperimentSpec::defaults(parse_figure(figure));
            if (nodes) spec.nodes = *nodes;
            if (r_grid) spec.r_grid = *r_grid;
            if (runs) spec.runs = *runs;
            std::vector<ResultRow> rows;
            {
                py::gil_scoped_release release;
                rows = run_experiment(spec);
                if (out) {
                    write_csv_file(*out, rows);
                }
            }
            py::list result;
            for (const auto& r : rows) {
                result.append(row_to_dict(r));
            }
            return result;
        },
        py::arg("figure"), py::arg("nodes") = py::none(), py::arg("r_grid") = py::none(),
        py::arg("runs") = py::none(), py::arg("out") = py::none(),
        "Runs a figure's default grid with optional overrides; returns one dict per row.");
}
