// One line per acceptance criterion; exit status 1 if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "ccl/harness.hpp"
#include "ccl/lookup_analytics.hpp"
#include "ccl/rng.hpp"
#include "ccl/steady_state.hpp"
#include "oracles.hpp"

using namespace ccl;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

// 1. Churn-free average at N = 1000 on 2^20 keys.
constexpr double kChurnFreeTarget = 5.846;
constexpr double kChurnFreeTolerance = 0.01;

Verdict churn_free_constant() {
    const double L = solve_nochurn(RingParams::from_bits(20, 1000)).average;
    return {std::fabs(L - kChurnFreeTarget) <= kChurnFreeTolerance,
            fmt("L = %.6f, target %.3f +- %.2f", L, kChurnFreeTarget, kChurnFreeTolerance)};
}

// 2. 1 + log2(N)/2 on 2^14 keys.
constexpr double kAsymptoticTolerance = 0.05;

Verdict asymptotic_law() {
    double worst = 0.0;
    std::string parts;
    for (unsigned e : {6u, 8u, 10u, 12u}) {
        const double L = solve_nochurn(RingParams::from_bits(14, std::uint64_t{1} << e)).average;
        const double law = 1.0 + 0.5 * e;
        const double err = std::fabs(L - law) / L;
        worst = std::max(worst, err);
        parts += fmt(" N=2^%u %.4f", e, err);
    }
    return {worst <= kAsymptoticTolerance,
            fmt("max relative deviation %.4f (<= %.2f);", worst, kAsymptoticTolerance) + parts};
}

// 3. Base-b closed form at N = 1024 on 2^20 keys.
constexpr double kBaseTolerance = 0.07;

Verdict base_closed_form() {
    double worst = 0.0;
    std::string parts;
    for (unsigned b : {2u, 4u, 16u}) {
        const auto p = RingParams::from_bits(20, 1024, b);
        const double L = solve_nochurn(p).average;
        const double closed = 1.0 + (b - 1.0) / b * std::log2(1024.0) / std::log2(double(b));
        const double err = std::fabs(L - closed) / L;
        worst = std::max(worst, err);
        parts += fmt(" b=%u exact %.4f closed %.4f err %.4f", b, L, closed, err);
    }
    return {worst <= kBaseTolerance, fmt("max relative error %.4f (<= %.2f);", worst, kBaseTolerance) + parts};
}

// 4. Model vs simulator under churn.
constexpr double kTheoryMedianTolerance = 0.05;
constexpr double kTheoryMaxTolerance = 0.08;
constexpr unsigned kTheorySeeds = 5;

Verdict theory_vs_simulation() {
    auto spec = ExperimentSpec::defaults(FigureId::fig1_theory_vs_sim);
    spec.nodes = {1000};
    spec.keyspace_bits = 20;
    spec.beta = 0.5;
    spec.r_grid = {50, 100, 200, 400};
    spec.runs = kTheorySeeds;
    const auto rows = run_experiment(spec);
    std::vector<ResultRow> model, sim;
    for (const auto& r : rows) {
        (r.source == "analytic" ? model : sim).push_back(r);
    }
    const auto rep = compare_report(model, sim, kTheoryMedianTolerance, kTheoryMaxTolerance);
    std::string parts;
    for (std::size_t i = 0; i < model.size(); ++i) {
        parts += fmt(" r=%g model %.3f sim %.3f+-%.3f", model[i].r, model[i].L, sim[i].L,
                     sim[i].ci_halfwidth);
    }
    return {rep.pass, fmt("median %.4f (<= %.2f), max %.4f (<= %.2f), %u seeds;", rep.median_error,
                          kTheoryMedianTolerance, rep.max_error, kTheoryMaxTolerance, kTheorySeeds) +
                          parts};
}

// 5. Collapse of (L - A)/A onto f + 3 f^2.
constexpr double kCollapseTolerance = 0.05;
constexpr double kCollapseMaxF = 0.25;

Verdict scaling_collapse() {
    auto spec = ExperimentSpec::defaults(FigureId::fig3_scaled_collapse);
    spec.nodes = {1000, 2000, 4000, 8000, 16000};
    spec.keyspace_bits = 20;
    spec.runs = 0;
    const auto rows = run_experiment(spec);
    std::string parts;
    double worst = 0.0;
    for (std::uint64_t n : spec.nodes) {
        std::vector<ResultRow> mine;
        for (const auto& r : rows) {
            if (r.N == n) {
                mine.push_back(r);
            }
        }
        const double dev = collapse_deviation(mine, kCollapseMaxF);
        worst = std::max(worst, dev);
        parts += fmt(" N=%llu %.4f", static_cast<unsigned long long>(n), dev);
    }
    return {worst <= kCollapseTolerance,
            fmt("max |(L-A)/A - (f+3f^2)| = %.4f over f <= %.2f (<= %.2f);", worst, kCollapseMaxF,
                kCollapseTolerance) + parts};
}

// 6. Correction-on-change (a = 0) against periodic (beta = 0.4).
Verdict strategy_crossover() {
    const auto rows = run_experiment(ExperimentSpec::defaults(FigureId::fig5_coc_vs_periodic));
    const auto lines = summarize(FigureId::fig5_coc_vs_periodic, rows);
    return {lines.at(0).pass, lines.at(0).detail};
}

// 7. Best a on the grid 0 .. 0.5.
Verdict optimal_a() {
    const auto rows = run_experiment(ExperimentSpec::defaults(FigureId::fig6_vary_a));
    std::vector<std::pair<double, double>> avg;
    for (double a : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
        double sum = 0.0;
        int n = 0;
        for (const auto& r : rows) {
            if (r.a == a && !r.flagged()) {
                sum += r.L;
                ++n;
            }
        }
        avg.emplace_back(a, n ? sum / n : INFINITY);
    }
    const auto best = *std::min_element(avg.begin(), avg.end(),
                                        [](auto x, auto y) { return x.second < y.second; });
    std::string parts;
    for (auto [a, L] : avg) {
        parts += fmt(" a=%.1f %.4f", a, L);
    }
    return {std::fabs(best.first - 0.2) <= 0.1 + 1e-9, fmt("argmin a = %.1f;", best.first) + parts};
}

// 8. Steady-state solver.
constexpr double kResidualTolerance = 1e-10;
constexpr double kPeriodicLimitTolerance = 1e-9;

Verdict solver_integrity() {
    const auto p = RingParams::from_bits(20, 1000);
    double worst_residual = 0.0;
    for (double a : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
        for (double r : {10.0, 20.0, 50.0, 100.0, 200.0, 500.0, 1000.0, 1e4}) {
            const auto cfg = MaintenanceConfig::correction_on_change(a, r);
            const auto ss = solve_coc(cfg, p);
            worst_residual = std::max(
                worst_residual, coc_residuals(ss.p_s1, ss.w1, ss.w1_prime, cfg, p.finger_count(),
                                              CocMode::exact).max_abs());
        }
    }
    double worst_limit = 0.0;
    for (double r : {1.0, 10.0, 100.0, 1000.0}) {
        const auto ss = solve_coc(MaintenanceConfig{CorrectionOnChange{1.0, 1.0, 0.0}, r}, p);
        worst_limit = std::max(worst_limit, std::fabs(ss.w1 - 2.0 / (3.0 + r)));
    }
    // Fit C at r = 100, require |exact - first order| <= C / r^2 further out.
    bool bounded = true;
    CocSolverOptions first_order;
    first_order.mode = CocMode::first_order;
    for (double a : {0.0, 0.2}) {
        auto gap = [&](double r) {
            const auto cfg = MaintenanceConfig::correction_on_change(a, r);
            return std::fabs(solve_coc(cfg, p).w1_prime - solve_coc(cfg, p, first_order).w1_prime);
        };
        const double C = gap(100.0) * 1e4;
        for (double r : {200.0, 400.0, 800.0}) {
            bounded = bounded && gap(r) <= C / (r * r);
        }
    }
    return {worst_residual < kResidualTolerance && worst_limit < kPeriodicLimitTolerance && bounded,
            fmt("max residual %.2e (< %.0e), c=0 limit error %.2e (< %.0e), mode gap within C/r^2: %s",
                worst_residual, kResidualTolerance, worst_limit, kPeriodicLimitTolerance,
                bounded ? "yes" : "no")};
}

// 9. Normalisation fuzz.
constexpr int kFuzzCases = 10000;
constexpr double kNormTolerance = 1e-12;

Verdict normalization() {
    Xoshiro256 rng(2024);
    double worst_h = 0.0;
    double worst_bc = 0.0;
    for (int trial = 0; trial < kFuzzCases; ++trial) {
        const unsigned bits = 8 + static_cast<unsigned>(rng.below(13));
        const Key K = Key{1} << bits;
        const auto p = RingParams::create(K, 1 + rng.below(K));
        std::vector<double> dead(bits);
        for (double& d : dead) {
            d = rng.uniform();
        }
        const FingerDeathProfile f(dead);
        const unsigned k = 1 + static_cast<unsigned>(rng.below(bits));
        double sum = 0.0;
        for (double h : backup_probabilities(k, Key{1} << (k - 1), f, p)) {
            sum += h;
        }
        worst_h = std::max(worst_h, std::fabs(sum - 1.0));

        const auto x = static_cast<std::int64_t>(1 + rng.below(std::min<Key>(K, 4096)));
        double bc = 0.0;
        for (std::int64_t i = 0; i < x; ++i) {
            bc += first_node_conditional(i, x, p);
        }
        worst_bc = std::max(worst_bc, std::fabs(bc - 1.0));
    }
    return {worst_h <= kNormTolerance && worst_bc <= kNormTolerance,
            fmt("%d cases: max |sum h - 1| %.2e, max |sum bc - 1| %.2e (<= %.0e)", kFuzzCases, worst_h,
                worst_bc, kNormTolerance)};
}

// 10. Brute-force oracles at small scale.
constexpr double kEnumerationTolerance = 1e-12;

Verdict tiny_oracles() {
    const auto full = RingParams::from_bits(10, 1024);
    const auto table = solve_nochurn(full);
    std::size_t mismatched = 0;
    for (Key t = 1; t < 1024; ++t) {
        mismatched += table.cost(t) != static_cast<double>(oracle::full_ring_greedy_hops(t));
    }
    Xoshiro256 rng(10);
    double worst = 0.0;
    for (unsigned k = 1; k <= 6; ++k) {
        for (std::uint64_t n : {2ull, 50ull, 300ull, 900ull, 1024ull}) {
            const auto p = RingParams::from_bits(10, n);
            std::vector<double> dead(10);
            for (double& d : dead) {
                d = rng.uniform();
            }
            const FingerDeathProfile f(dead);
            const Key xi = Key{1} << (k - 1);
            const auto h = backup_probabilities(k, xi, f, p);
            const auto e = oracle::backup_probabilities_enumerated(k, xi, f, p);
            for (unsigned i = 0; i < k; ++i) {
                worst = std::max(worst, std::fabs(h[i] - e[i]));
            }
        }
    }
    return {mismatched == 0 && worst <= kEnumerationTolerance,
            fmt("full-ring cost mismatches %zu of 1023, backup enumeration max error %.2e (<= %.0e)",
                mismatched, worst, kEnumerationTolerance)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"churn-free constant", churn_free_constant},
        {"asymptotic law", asymptotic_law},
        {"base-b closed form", base_closed_form},
        {"theory vs simulation under churn", theory_vs_simulation},
        {"scaling collapse", scaling_collapse},
        {"strategy crossover", strategy_crossover},
        {"optimal a", optimal_a},
        {"steady-state solver integrity", solver_integrity},
        {"normalization", normalization},
        {"tiny-scale oracle equivalence", tiny_oracles},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("error: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !v.pass;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed ? 1 : 0;
}
