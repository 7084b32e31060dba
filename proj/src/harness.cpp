#include "ccl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "ccl/lookup_analytics.hpp"
#include "ccl/simulator.hpp"
#include "ccl/steady_state.hpp"

namespace ccl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct FigureInfo {
    FigureId id;
    std::string_view name;
};

constexpr FigureInfo kFigures[] = {
    {FigureId::fig1_theory_vs_sim, "fig1_theory_vs_sim"},
    {FigureId::fig2_vary_N, "fig2_vary_N"},
    {FigureId::fig3_scaled_collapse, "fig3_scaled_collapse"},
    {FigureId::fig4_vary_base, "fig4_vary_base"},
    {FigureId::fig5_coc_vs_periodic, "fig5_coc_vs_periodic"},
    {FigureId::fig6_vary_a, "fig6_vary_a"},
    {FigureId::figA_nochurn, "figA_nochurn"},
    {FigureId::figA_cost_profile, "figA_cost_profile"},
};

const std::vector<double> kCocGrid{10, 20, 50, 100, 200, 500, 1000};

// r values that put the periodic bulk death fraction at f = 0.01 .. 0.25
// for 20 fingers and beta = 0.5, plus a few high-churn points.
std::vector<double> collapse_grid() {
    std::vector<double> r{10, 20, 50};
    for (int i = 25; i >= 1; --i) {
        const double f = 0.01 * i;
        r.push_back(20.0 * (1.0 - f) / (0.5 * f));
    }
    return r;
}

}  // namespace

std::string_view figure_name(FigureId id) {
    for (const auto& f : kFigures) {
        if (f.id == id) {
            return f.name;
        }
    }
    throw std::invalid_argument("unknown figure id");
}

FigureId parse_figure(std::string_view name) {
    for (const auto& f : kFigures) {
        if (f.name == name) {
            return f.id;
        }
    }
    throw std::invalid_argument("unknown experiment '" + std::string(name) + "'");
}

const std::vector<FigureId>& all_figures() {
    static const std::vector<FigureId> ids = [] {
        std::vector<FigureId> v;
        for (const auto& f : kFigures) {
            v.push_back(f.id);
        }
        return v;
    }();
    return ids;
}

ExperimentSpec ExperimentSpec::defaults(FigureId id) {
    ExperimentSpec s;
    s.figure = id;
    s.bases = {2};
    s.nodes = {1000};
    switch (id) {
        case FigureId::fig1_theory_vs_sim:
            s.r_grid = {50, 100, 200, 400};
            s.runs = 5;
            break;
        case FigureId::fig2_vary_N:
            s.nodes = {1000, 2000, 4000, 8000, 16000};
            s.r_grid = {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};
            break;
        case FigureId::fig3_scaled_collapse:
            s.nodes = {1000, 2000, 4000, 8000, 16000};
            s.r_grid = collapse_grid();
            break;
        case FigureId::fig4_vary_base:
            s.bases = {2, 4, 16};
            // Below r = 50 the base-16 death fraction exceeds 0.75, where the
            // quadratic scaling form no longer orders the bases.
            s.r_grid = {50, 100, 200, 500, 1000, 2000, 5000, 10000, 100000};
            break;
        case FigureId::fig5_coc_vs_periodic:
            s.beta = 0.4;
            s.a_grid = {0.0};
            s.r_grid = kCocGrid;
            break;
        case FigureId::fig6_vary_a:
            s.a_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
            s.r_grid = kCocGrid;
            break;
        case FigureId::figA_nochurn:
            s.keyspace_bits = 14;
            s.nodes.clear();
            for (unsigned e = 4; e <= 13; ++e) {
                s.nodes.push_back(std::uint64_t{1} << e);
            }
            s.runs = 1;
            break;
        case FigureId::figA_cost_profile:
            break;
    }
    return s;
}

void ExperimentSpec::validate() const {
    if (keyspace_bits < 2 || keyspace_bits > 40) {
        throw std::invalid_argument("keyspace bits must be in [2, 40]");
    }
    if (nodes.empty() || bases.empty()) {
        throw std::invalid_argument("node and base grids must be non-empty");
    }
    const bool needs_r = figure != FigureId::figA_nochurn && figure != FigureId::figA_cost_profile;
    if (needs_r && r_grid.empty()) {
        throw std::invalid_argument("r grid must be non-empty");
    }
    const bool needs_a = figure == FigureId::fig5_coc_vs_periodic || figure == FigureId::fig6_vary_a;
    if (needs_a && a_grid.empty()) {
        throw std::invalid_argument("a grid must be non-empty");
    }
    for (double r : r_grid) {
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw std::invalid_argument("r values must be positive and finite");
        }
    }
    for (double a : a_grid) {
        if (!(a >= 0.0 && a <= 1.0)) {
            throw std::invalid_argument("a values must lie in [0, 1]");
        }
    }
    if (c && !(*c >= 0.0 && *c <= 1.0)) {
        throw std::invalid_argument("c must lie in [0, 1]");
    }
    if (!(beta >= 0.0 && beta <= 1.0) || !(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("beta and alpha must lie in [0, 1]");
    }
    if (cost_stride == 0) {
        throw std::invalid_argument("cost stride must be positive");
    }
    for (std::uint64_t n : nodes) {
        // Also checks base and finger counts.
        (void)RingParams::from_bits(keyspace_bits, n, bases.front());
    }
    for (unsigned b : bases) {
        (void)RingParams::from_bits(keyspace_bits, nodes.front(), b);
    }
}

std::string ResultRow::point_key() const {
    std::ostringstream os;
    os.precision(17);
    os << experiment << '|' << strategy << "|N=" << N << "|bits=" << keyspace_bits << "|b=" << base
       << "|r=" << r << "|beta=" << beta << "|alpha=" << alpha << "|a=" << a << "|c=" << c
       << "|t=" << distance;
    return os.str();
}

unsigned worker_count() {
    if (const char* env = std::getenv("CCL_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) {
            return static_cast<unsigned>(n);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& job) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            job(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace {

enum class Evaluator { recursion, scaling, nochurn, cost_profile };

struct GridPoint {
    ResultRow row;  // coordinates filled, measurements empty
    Evaluator evaluator;
    MaintenanceConfig maintenance;
    bool has_churn = true;
};

std::vector<GridPoint> expand(const ExperimentSpec& s) {
    std::vector<GridPoint> points;
    auto base_row = [&](std::uint64_t n, unsigned b, const std::string& strategy) {
        ResultRow row;
        row.experiment = std::string(figure_name(s.figure));
        row.strategy = strategy;
        row.N = n;
        row.keyspace_bits = s.keyspace_bits;
        row.base = b;
        row.r = kNaN;
        row.beta = kNaN;
        row.alpha = kNaN;
        row.a = kNaN;
        row.c = kNaN;
        return row;
    };
    auto periodic_points = [&](Evaluator ev) {
        for (std::uint64_t n : s.nodes) {
            for (unsigned b : s.bases) {
                for (double r : s.r_grid) {
                    GridPoint p{base_row(n, b, "periodic"), ev, MaintenanceConfig::periodic(s.beta, r)};
                    p.row.r = r;
                    p.row.beta = s.beta;
                    points.push_back(std::move(p));
                }
            }
        }
    };
    auto coc_points = [&] {
        for (std::uint64_t n : s.nodes) {
            for (unsigned b : s.bases) {
                for (double a : s.a_grid) {
                    const double c = s.c ? *s.c : 1.0 - a;
                    for (double r : s.r_grid) {
                        GridPoint p{base_row(n, b, "coc"), Evaluator::scaling,
                                    MaintenanceConfig{CorrectionOnChange{s.alpha, a, c}, r}};
                        p.row.r = r;
                        p.row.alpha = s.alpha;
                        p.row.a = a;
                        p.row.c = c;
                        points.push_back(std::move(p));
                    }
                }
            }
        }
    };
    switch (s.figure) {
        case FigureId::fig1_theory_vs_sim:
        case FigureId::fig2_vary_N:
        case FigureId::fig3_scaled_collapse:
            periodic_points(Evaluator::recursion);
            break;
        case FigureId::fig4_vary_base:
            periodic_points(Evaluator::scaling);
            break;
        case FigureId::fig5_coc_vs_periodic:
            periodic_points(Evaluator::scaling);
            coc_points();
            break;
        case FigureId::fig6_vary_a:
            coc_points();
            break;
        case FigureId::figA_nochurn:
            for (std::uint64_t n : s.nodes) {
                for (unsigned b : s.bases) {
                    GridPoint p{base_row(n, b, "none"), Evaluator::nochurn, MaintenanceConfig{}};
                    p.has_churn = false;
                    points.push_back(std::move(p));
                }
            }
            break;
        case FigureId::figA_cost_profile:
            for (std::uint64_t n : s.nodes) {
                for (unsigned b : s.bases) {
                    GridPoint p{base_row(n, b, "none"), Evaluator::cost_profile, MaintenanceConfig{}};
                    p.has_churn = false;
                    points.push_back(std::move(p));
                }
            }
            break;
    }
    return points;
}

std::vector<ResultRow> evaluate(const GridPoint& p, const ExperimentSpec& s) {
    const RingParams ring = RingParams::from_bits(p.row.keyspace_bits, p.row.N, p.row.base);
    ResultRow row = p.row;
    row.source = "analytic";
    row.f = kNaN;
    row.w1 = kNaN;
    row.w1p = kNaN;
    row.ci_halfwidth = kNaN;
    switch (p.evaluator) {
        case Evaluator::nochurn:
            row.L = solve_nochurn(ring).average;
            row.f = 0.0;
            return {row};
        case Evaluator::cost_profile: {
            const auto table = solve_nochurn(ring);
            std::vector<ResultRow> rows;
            for (Key t = 1; t < ring.keyspace(); t += (t == 1 ? s.cost_stride - 1 : s.cost_stride)) {
                ResultRow r = row;
                r.distance = t;
                r.L = table.cost(t);
                rows.push_back(std::move(r));
            }
            return rows;
        }
        case Evaluator::recursion:
        case Evaluator::scaling:
            break;
    }
    try {
        FingerDeathProfile f;
        if (p.maintenance.is_periodic()) {
            f = periodic_death_fraction(p.maintenance, ring);
        } else {
            const auto ss = solve_coc(p.maintenance, ring);
            f = ss.dead_fingers;
            row.w1 = ss.w1;
            row.w1p = ss.w1_prime;
        }
        row.f = f.bulk();
        row.L = p.evaluator == Evaluator::recursion
                    ? solve_with_churn(ring, f).average
                    : scaling_form(solve_nochurn(ring).average, row.f);
    } catch (const SolverError& e) {
        row.L = kNaN;
        row.status = "solver_error";
    }
    return {row};
}

ResultRow aggregate(const GridPoint& p, const ExperimentSpec& s, const std::vector<SimResult>& runs) {
    ResultRow row = p.row;
    row.source = "simulated";
    row.seed = s.seed;
    const double n = static_cast<double>(runs.size());
    double L = 0, L2 = 0, f = 0, w1 = 0, w1p = 0;
    bool outside = false;
    for (const auto& r : runs) {
        L += r.mean_hops;
        L2 += r.mean_hops * r.mean_hops;
        f += r.dead_fingers_bulk;
        w1 += r.w1;
        w1p += r.w1_prime;
        outside = outside || r.outside_validity;
    }
    row.L = L / n;
    row.f = p.has_churn ? f / n : 0.0;
    row.w1 = p.has_churn ? w1 / n : kNaN;
    row.w1p = p.has_churn && !p.maintenance.is_periodic() ? w1p / n : kNaN;
    if (runs.size() >= 2) {
        const double var = std::max(0.0, (L2 - L * L / n) / (n - 1.0));
        const boost::math::students_t dist(n - 1.0);
        row.ci_halfwidth = boost::math::quantile(boost::math::complement(dist, 0.025)) *
                           std::sqrt(var / n);
    } else {
        row.ci_halfwidth = runs.front().hop_ci_halfwidth;
    }
    if (outside) {
        row.status = "outside_validity";
    }
    return row;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentSpec& spec, unsigned threads) {
    spec.validate();
    const auto points = expand(spec);

    std::vector<std::vector<ResultRow>> analytic(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { analytic[i] = evaluate(points[i], spec); });

    const bool simulate = spec.runs > 0 && spec.figure != FigureId::figA_cost_profile;
    const std::size_t runs = simulate ? spec.runs : 0;
    std::vector<SimResult> sims(points.size() * runs);
    parallel_for(sims.size(), threads, [&](std::size_t j) {
        const GridPoint& p = points[j / runs];
        SimConfig cfg;
        cfg.ring = RingParams::from_bits(p.row.keyspace_bits, p.row.N, p.row.base);
        cfg.seed = spec.seed + j % runs;
        if (p.has_churn) {
            cfg.maintenance = p.maintenance;
        } else {
            cfg.failure_rate = 0.0;
        }
        sims[j] = run_simulation(cfg);
    });

    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        rows.insert(rows.end(), analytic[i].begin(), analytic[i].end());
        if (runs > 0) {
            std::vector<SimResult> mine(sims.begin() + i * runs, sims.begin() + (i + 1) * runs);
            rows.push_back(aggregate(points[i], spec, mine));
        }
    }
    return rows;
}

// ---------------------------------------------------------------- CSV

const std::vector<std::string> kCsvColumns{
    "experiment", "strategy", "N", "keyspace_bits", "base",   "r",
    "beta",       "alpha",    "a", "c",             "source", "distance",
    "L",          "f",        "w1", "w1p",          "ci_halfwidth", "seed",
    "status"};

namespace {

std::string format_double(double x) {
    if (std::isnan(x)) {
        return "";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    if (s.empty()) {
        return kNaN;
    }
    double x = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        throw std::invalid_argument("bad number '" + s + "' in results file");
    }
    return x;
}

std::uint64_t parse_uint(const std::string& s) {
    std::uint64_t x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("bad integer '" + s + "' in results file");
    }
    return x;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<ResultRow>& rows, const std::string& timestamp) {
    out << kCsvSchema << '\n';
    if (!timestamp.empty()) {
        out << "# generated: " << timestamp << '\n';
    }
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
        out << (i ? "," : "") << kCsvColumns[i];
    }
    out << '\n';
    for (const auto& r : rows) {
        out << r.experiment << ',' << r.strategy << ',' << r.N << ',' << r.keyspace_bits << ','
            << r.base << ',' << format_double(r.r) << ',' << format_double(r.beta) << ','
            << format_double(r.alpha) << ',' << format_double(r.a) << ',' << format_double(r.c)
            << ',' << r.source << ',' << r.distance << ',' << format_double(r.L) << ','
            << format_double(r.f) << ',' << format_double(r.w1) << ',' << format_double(r.w1p)
            << ',' << format_double(r.ci_halfwidth) << ',' << (r.seed ? std::to_string(*r.seed) : "")
            << ',' << r.status << '\n';
    }
}

void write_csv_file(const std::string& path, const std::vector<ResultRow>& rows) {
    char stamp[32];
    const std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) {
            throw std::runtime_error("cannot open '" + tmp + "' for writing");
        }
        write_csv(out, rows, stamp);
        if (!out.flush()) {
            throw std::runtime_error("write to '" + tmp + "' failed");
        }
    }
    std::filesystem::rename(tmp, path);
}

std::vector<ResultRow> read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvSchema) {
        throw std::invalid_argument("results file does not start with the schema line");
    }
    while (std::getline(in, line) && line.starts_with("#")) {
    }
    if (split(line) != kCsvColumns) {
        throw std::invalid_argument("results file has an unexpected column header");
    }
    std::vector<ResultRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto c = split(line);
        if (c.size() != kCsvColumns.size()) {
            throw std::invalid_argument("results row has " + std::to_string(c.size()) + " fields");
        }
        ResultRow r;
        r.experiment = c[0];
        r.strategy = c[1];
        r.N = parse_uint(c[2]);
        r.keyspace_bits = static_cast<unsigned>(parse_uint(c[3]));
        r.base = static_cast<unsigned>(parse_uint(c[4]));
        r.r = parse_double(c[5]);
        r.beta = parse_double(c[6]);
        r.alpha = parse_double(c[7]);
        r.a = parse_double(c[8]);
        r.c = parse_double(c[9]);
        r.source = c[10];
        r.distance = parse_uint(c[11]);
        r.L = parse_double(c[12]);
        r.f = parse_double(c[13]);
        r.w1 = parse_double(c[14]);
        r.w1p = parse_double(c[15]);
        r.ci_halfwidth = parse_double(c[16]);
        if (!c[17].empty()) {
            r.seed = parse_uint(c[17]);
        }
        r.status = c[18];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    return read_csv(in);
}

// ---------------------------------------------------------------- reports

namespace {

double median(std::vector<double> v) {
    if (v.empty()) {
        return kNaN;
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

CompareReport compare_report(const std::vector<ResultRow>& predicted,
                             const std::vector<ResultRow>& measured, double median_tolerance,
                             double max_tolerance) {
    std::map<std::string, const ResultRow*> lhs, rhs;
    for (const auto& r : predicted) {
        lhs[r.point_key()] = &r;
    }
    for (const auto& r : measured) {
        rhs[r.point_key()] = &r;
    }
    std::vector<std::string> missing;
    for (const auto& [k, _] : lhs) {
        if (!rhs.count(k)) {
            missing.push_back(k + " (missing from measured)");
        }
    }
    for (const auto& [k, _] : rhs) {
        if (!lhs.count(k)) {
            missing.push_back(k + " (missing from predicted)");
        }
    }
    if (!missing.empty()) {
        std::string msg = "grids differ at " + std::to_string(missing.size()) + " point(s):";
        for (const auto& m : missing) {
            msg += "\n  " + m;
        }
        throw GridMismatch(msg, std::move(missing));
    }

    CompareReport rep;
    rep.median_tolerance = median_tolerance;
    rep.max_tolerance = max_tolerance;
    std::vector<double> errors;
    for (const auto& [k, p] : lhs) {
        const ResultRow* m = rhs.at(k);
        if (p->flagged() || m->flagged() || std::isnan(p->L) || std::isnan(m->L)) {
            rep.excluded.push_back(k);
            continue;
        }
        PointError e{k, p->L, m->L, m->L == p->L ? 0.0 : std::fabs(p->L - m->L) / std::fabs(m->L)};
        errors.push_back(e.relative_error);
        rep.points.push_back(std::move(e));
    }
    if (!errors.empty()) {
        rep.median_error = median(errors);
        rep.max_error = *std::max_element(errors.begin(), errors.end());
    }
    rep.pass = !errors.empty() && rep.median_error <= median_tolerance &&
               rep.max_error <= max_tolerance;
    return rep;
}

double collapse_deviation(const std::vector<ResultRow>& rows, double f_max) {
    std::map<std::pair<std::uint64_t, unsigned>, double> churn_free;
    double worst = 0.0;
    for (const auto& r : rows) {
        if (r.source != "analytic" || r.strategy != "periodic" || r.flagged() || !(r.f <= f_max)) {
            continue;
        }
        const auto key = std::make_pair(r.N, r.base);
        auto it = churn_free.find(key);
        if (it == churn_free.end()) {
            const double A = solve_nochurn(RingParams::from_bits(r.keyspace_bits, r.N, r.base)).average;
            it = churn_free.emplace(key, A).first;
        }
        const double A = it->second;
        worst = std::max(worst, std::fabs((r.L - A) / A - (r.f + 3.0 * r.f * r.f)));
    }
    return worst;
}

namespace {

std::vector<ResultRow> select(const std::vector<ResultRow>& rows, std::string_view source) {
    std::vector<ResultRow> out;
    for (const auto& r : rows) {
        if (r.source == source) {
            out.push_back(r);
        }
    }
    return out;
}

std::string fmt(double x, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << x;
    return os.str();
}

// Mean predicted L over r for each a (correction-on-change rows).
std::map<double, double> r_averaged_by_a(const std::vector<ResultRow>& rows) {
    std::map<double, std::pair<double, int>> acc;
    for (const auto& r : rows) {
        if (r.source == "analytic" && r.strategy == "coc" && !r.flagged()) {
            acc[r.a].first += r.L;
            acc[r.a].second += 1;
        }
    }
    std::map<double, double> out;
    for (const auto& [a, s] : acc) {
        out[a] = s.first / s.second;
    }
    return out;
}

}  // namespace

std::vector<SummaryLine> summarize(FigureId id, const std::vector<ResultRow>& rows) {
    std::vector<SummaryLine> out;
    const auto analytic = select(rows, "analytic");
    const auto simulated = select(rows, "simulated");
    auto add_compare = [&](const std::string& name, double med_tol, double max_tol) {
        if (simulated.empty()) {
            return;
        }
        try {
            const auto rep = compare_report(analytic, simulated, med_tol, max_tol);
            out.push_back({name, rep.pass,
                           "median " + fmt(rep.median_error) + " (<= " + fmt(med_tol) + "), max " +
                               fmt(rep.max_error) + " (<= " + fmt(max_tol) + ")" +
                               (rep.excluded.empty()
                                    ? ""
                                    : ", " + std::to_string(rep.excluded.size()) + " excluded")});
        } catch (const GridMismatch& e) {
            out.push_back({name, false, e.what()});
        }
    };

    switch (id) {
        case FigureId::fig1_theory_vs_sim:
            add_compare("model vs simulated lookup length", 0.05, 0.08);
            break;
        case FigureId::fig2_vary_N: {
            std::map<std::pair<double, unsigned>, std::vector<std::pair<std::uint64_t, double>>> by_r;
            for (const auto& r : analytic) {
                by_r[{r.r, r.base}].emplace_back(r.N, r.L);
            }
            bool ok = true;
            for (auto& [_, v] : by_r) {
                std::sort(v.begin(), v.end());
                for (std::size_t i = 1; i < v.size(); ++i) {
                    ok = ok && v[i].second > v[i - 1].second;
                }
            }
            out.push_back({"lookup length grows with N at every r", ok, ""});
            break;
        }
        case FigureId::fig3_scaled_collapse: {
            const double dev = collapse_deviation(rows);
            out.push_back({"collapse onto f + 3f^2 for f <= 0.25", dev <= 0.05,
                           "max deviation " + fmt(dev) + " (<= 0.05)"});
            break;
        }
        case FigureId::fig4_vary_base: {
            std::map<unsigned, std::map<double, double>> by_base;
            for (const auto& r : analytic) {
                by_base[r.base][r.r] = r.L;
            }
            if (by_base.size() >= 2) {
                const unsigned big = by_base.rbegin()->first;
                const auto& curve = by_base[big];
                const double r_lo = curve.begin()->first;
                const double r_hi = curve.rbegin()->first;
                bool high_churn_worst = true;
                bool low_churn_best = true;
                for (const auto& [b, c] : by_base) {
                    if (b == big) {
                        continue;
                    }
                    high_churn_worst = high_churn_worst && curve.at(r_lo) > c.at(r_lo);
                    low_churn_best = low_churn_best && curve.at(r_hi) < c.at(r_hi);
                }
                out.push_back({"largest base best at low churn, worst at high churn",
                               high_churn_worst && low_churn_best,
                               "b=" + std::to_string(big) + " at r=" + fmt(r_lo) + " and r=" + fmt(r_hi)});
            }
            break;
        }
        case FigureId::fig5_coc_vs_periodic: {
            std::map<double, double> periodic, coc;
            for (const auto& r : analytic) {
                if (r.flagged()) {
                    continue;
                }
                (r.strategy == "periodic" ? periodic : coc)[r.r] = r.L;
            }
            bool ok = !periodic.empty() && !coc.empty();
            std::string detail;
            if (ok) {
                const double lo = periodic.begin()->first;
                const double hi = periodic.rbegin()->first;
                ok = coc.count(lo) && coc.count(hi) && coc[hi] < periodic[hi] && coc[lo] > periodic[lo];
                detail = "r=" + fmt(lo) + ": coc " + fmt(coc[lo]) + " vs periodic " + fmt(periodic[lo]) +
                         "; r=" + fmt(hi) + ": coc " + fmt(coc[hi]) + " vs periodic " + fmt(periodic[hi]);
            }
            out.push_back({"strategies cross", ok, detail});
            break;
        }
        case FigureId::fig6_vary_a: {
            const auto avg = r_averaged_by_a(rows);
            if (!avg.empty()) {
                auto best = std::min_element(avg.begin(), avg.end(),
                                             [](auto x, auto y) { return x.second < y.second; });
                out.push_back({"r-averaged length minimised near a = 0.2",
                               std::fabs(best->first - 0.2) <= 0.1 + 1e-9,
                               "argmin a = " + fmt(best->first)});
            }
            break;
        }
        case FigureId::figA_nochurn: {
            double worst = 0.0;
            for (const auto& r : analytic) {
                if (r.N >= 64 && r.N <= 4096) {
                    const double law = 1.0 + 0.5 * std::log2(static_cast<double>(r.N));
                    worst = std::max(worst, std::fabs(r.L - law) / r.L);
                }
            }
            out.push_back({"length tracks 1 + log2(N)/2 for 64 <= N <= 4096", worst <= 0.05,
                           "max relative deviation " + fmt(worst) + " (<= 0.05)"});
            add_compare("model vs simulated churn-free length", 0.05, 0.08);
            break;
        }
        case FigureId::figA_cost_profile: {
            bool ok = !analytic.empty();
            for (const auto& r : analytic) {
                ok = ok && r.L >= 1.0 && std::isfinite(r.L);
            }
            out.push_back({"every cost is finite and at least one hop", ok, ""});
            break;
        }
    }
    return out;
}

}  // namespace ccl
