#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ccl/lookup_analytics.hpp"
#include "ccl/rng.hpp"
#include "oracles.hpp"

using namespace ccl;

namespace {

FingerDeathProfile random_profile(unsigned size, Xoshiro256& rng, double cap = 0.6) {
    std::vector<double> v(size);
    for (double& x : v) {
        x = cap * rng.uniform();
    }
    return FingerDeathProfile(v);
}

}  // namespace

TEST_CASE("churn-free average for a thousand nodes on 2^20 keys") {
    const auto table = solve_nochurn(RingParams::from_bits(20, 1000));
    CHECK(table.average == doctest::Approx(5.846).epsilon(0.01 / 5.846));
    CHECK(table.costs[1] == 1.0);
    CHECK(table.churn_free == table.average);
}

TEST_CASE("second cost exceeds one by the occupancy") {
    for (unsigned n : {1u, 17u, 1000u, 1u << 19, 1u << 20}) {
        const auto p = RingParams::from_bits(20, n);
        const auto table = solve_nochurn(p);
        CHECK(table.costs[2] - 1.0 == doctest::Approx(p.occupancy()).epsilon(1e-12));
    }
}

TEST_CASE("full ring costs equal greedy bit routing") {
    const auto p = RingParams::from_bits(10, 1024);
    const auto table = solve_nochurn(p);
    double sum = 0.0;
    for (Key t = 1; t < 1024; ++t) {
        CHECK(table.costs[t] == static_cast<double>(oracle::full_ring_greedy_hops(t)));
        sum += oracle::full_ring_greedy_hops(t);
    }
    CHECK(table.average == sum / 1024.0);
}

TEST_CASE("partial-sum identity reproduces the direct average") {
    for (unsigned base : {2u, 4u}) {
        for (std::uint64_t n : {10ull, 1000ull, 50000ull}) {
            const auto p = RingParams::create(1u << 20, n, base);
            const auto wrapped = solve_nochurn(p, true);
            const auto direct = solve_nochurn(p);
            CHECK(std::fabs(nochurn_partial_sum_average(p, wrapped) - direct.average) < 1e-9);
        }
    }
    const auto p = RingParams::from_bits(12, 100);
    CHECK_THROWS_AS(nochurn_partial_sum_average(p, solve_nochurn(p)), std::invalid_argument);
}

TEST_CASE("cost deviations are first order in the occupancy") {
    // (C_i - 1) / (1 - rho) -> i - 1 as rho -> 1; the error shrinks with the occupancy.
    const auto coarse = solve_nochurn(RingParams::from_bits(20, 1u << 10));
    const auto fine = solve_nochurn(RingParams::from_bits(20, 1u << 8));
    const double occ_coarse = std::ldexp(1.0, -10);
    const double occ_fine = std::ldexp(1.0, -12);
    for (Key i : {2u, 3u, 4u, 8u, 16u, 33u, 64u}) {
        const double limit = static_cast<double>(i - 1);
        const double g_coarse = (coarse.costs[i] - 1.0) / occ_coarse;
        const double g_fine = (fine.costs[i] - 1.0) / occ_fine;
        CHECK(std::fabs(g_fine - limit) <= std::fabs(g_coarse - limit) + 1e-9);
        const double extrapolated = (4.0 * g_fine - g_coarse) / 3.0;
        CHECK(std::fabs(extrapolated - limit) < 1e-3 * std::max(1.0, limit));
    }
}

TEST_CASE("asymptotic average lookup length") {
    CHECK(nochurn_asymptotic(RingParams::from_bits(20, 1024)) == doctest::Approx(6.0));
    CHECK(nochurn_asymptotic(RingParams::create(1u << 20, 1024, 4)) == doctest::Approx(4.75));
    for (unsigned e : {6u, 8u, 10u, 12u}) {
        const auto p = RingParams::from_bits(14, 1u << e);
        const double exact = solve_nochurn(p).average;
        CHECK(std::fabs(exact - nochurn_asymptotic(p)) / exact <= 0.05);
    }
}

TEST_CASE("backup probabilities") {
    const auto p = RingParams::from_bits(20, 1000);
    const auto f = FingerDeathProfile::uniform(20, 0.2);
    CHECK_THROWS_AS(backup_probabilities(0, 1, f, p), std::domain_error);
    CHECK_THROWS_AS(backup_probabilities(21, Key{1} << 20, f, p), std::domain_error);
    CHECK_THROWS_AS(backup_probabilities(5, 15, f, p), std::domain_error);

    SUBCASE("a full ring with live fingers always uses the next finger") {
        const auto full = RingParams::from_bits(10, 1024);
        const auto none = FingerDeathProfile::none(10);
        for (unsigned k = 2; k <= 10; ++k) {
            const auto h = backup_probabilities(k, Key{1} << (k - 1), none, full);
            CHECK(h[0] == 1.0);
            for (unsigned i = 1; i < k; ++i) {
                CHECK(h[i] == 0.0);
            }
        }
    }

    SUBCASE("normalisation on random inputs") {
        Xoshiro256 rng(5);
        for (int trial = 0; trial < 500; ++trial) {
            const auto q = RingParams::from_bits(20, 1 + rng.below(1u << 20));
            const auto prof = random_profile(20, rng, 1.0);
            const auto k = static_cast<unsigned>(1 + rng.below(20));
            const auto h = backup_probabilities(k, Key{1} << (k - 1), prof, q);
            double sum = 0.0;
            for (double x : h) {
                CHECK(x >= 0.0);
                sum += x;
            }
            CHECK(std::fabs(sum - 1.0) < 1e-12);
        }
    }

    SUBCASE("matches exhaustive outcome enumeration") {
        Xoshiro256 rng(77);
        for (unsigned k = 1; k <= 6; ++k) {
            for (std::uint64_t n : {3ull, 100ull, 700ull, 1024ull}) {
                const auto q = RingParams::from_bits(10, n);
                const auto prof = random_profile(10, rng, 1.0);
                const Key xi = Key{1} << (k - 1);
                const auto h = backup_probabilities(k, xi, prof, q);
                const auto expect = oracle::backup_probabilities_enumerated(k, xi, prof, q);
                for (unsigned i = 0; i < k; ++i) {
                    CHECK(std::fabs(h[i] - expect[i]) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("enumeration at rho near 0.9 with a uniform dead fraction") {
    const auto q = RingParams::from_bits(20, 104858);
    CHECK(std::fabs(q.density() - 0.9) < 1e-6);
    const auto prof = FingerDeathProfile::uniform(20, 0.1);
    const auto h = backup_probabilities(3, 4, prof, q);
    const auto expect = oracle::backup_probabilities_enumerated(3, 4, prof, q);
    for (unsigned i = 0; i < 3; ++i) {
        CHECK(std::fabs(h[i] - expect[i]) < 1e-12);
    }
}

TEST_CASE("churn recursion with live fingers reduces to the churn-free recursion") {
    for (std::uint64_t n : {1ull, 50ull, 1000ull, 1ull << 14}) {
        const auto p = RingParams::from_bits(16, n);
        const auto churn = solve_with_churn(p, FingerDeathProfile::none(16));
        const auto plain = solve_nochurn(p);
        for (Key t = 1; t < p.keyspace(); ++t) {
            REQUIRE(std::fabs(churn.costs[t] - plain.costs[t]) < 1e-9);
        }
        CHECK(std::fabs(churn.average - plain.average) < 1e-9);
        CHECK(churn.churn_free == plain.average);
    }
}

TEST_CASE("fast churn recursion matches term-by-term evaluation") {
    Xoshiro256 rng(99);
    for (std::uint64_t n : {30ull, 200ull, 1024ull}) {
        const auto p = RingParams::from_bits(10, n);
        const auto prof = random_profile(10, rng, 0.7);
        for (unsigned depth : {2u, 6u, 9u}) {
            ChurnSolveOptions opts;
            opts.max_backup_depth = depth;
            const auto fast = solve_with_churn(p, prof, opts);
            const auto slow = oracle::churn_costs_brute(p, prof, depth);
            for (Key t = 1; t < p.keyspace(); ++t) {
                REQUIRE(std::fabs(fast.costs[t] - slow[t]) < 1e-10 * std::max(1.0, slow[t]));
            }
        }
    }
}

TEST_CASE("truncation residual is the omitted backup mass") {
    const auto p = RingParams::from_bits(16, 500);
    const auto prof = FingerDeathProfile::uniform(16, 0.3);
    ChurnSolveOptions shallow;
    shallow.max_backup_depth = 2;
    ChurnSolveOptions full;
    full.max_backup_depth = 16;
    const auto a = solve_with_churn(p, prof, shallow);
    const auto b = solve_with_churn(p, prof, full);
    CHECK(a.truncation_residual > 0.0);
    CHECK(b.truncation_residual == 0.0);
    CHECK(b.average >= a.average);
    double expected = 0.0;
    for (unsigned k = 1; k <= 16; ++k) {
        const auto h = backup_probabilities(k, Key{1} << (k - 1), prof, p);
        double tail = 0.0;
        for (unsigned i = 3; i < k; ++i) {
            tail += h[i - 1];
        }
        expected = std::max(expected, tail);
    }
    CHECK(a.truncation_residual == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("lookup length grows with each large finger's death probability") {
    // The recursion omits the successor-list fallback, so a dead finger whose
    // backups are mostly absent (small k) can come out cheaper than a live one.
    // The property is checked on the fingers whose start lies beyond the mean
    // node spacing.
    const auto p = RingParams::from_bits(16, 200);
    Xoshiro256 rng(3);
    const auto base = random_profile(16, rng, 0.4);
    const double L0 = solve_with_churn(p, base).average;
    for (unsigned k = 10; k <= 16; ++k) {
        std::vector<double> v(base.values().begin(), base.values().end());
        v[k - 1] = std::min(1.0, v[k - 1] + 0.1);
        CHECK(solve_with_churn(p, FingerDeathProfile(v)).average >= L0);
    }
}

TEST_CASE("invalid death profiles") {
    CHECK_THROWS_AS(FingerDeathProfile({0.1, 1.5}), std::domain_error);
    CHECK_THROWS_AS(FingerDeathProfile({-0.1}), std::domain_error);
    CHECK_THROWS_AS(FingerDeathProfile({std::nan("")}), std::domain_error);
    const auto p = RingParams::from_bits(12, 100);
    CHECK_THROWS_AS(solve_with_churn(p, FingerDeathProfile::uniform(11, 0.1)), std::domain_error);
    CHECK_THROWS_AS(solve_with_churn(RingParams::create(1u << 12, 100, 4),
                                     FingerDeathProfile::uniform(18, 0.1)),
                    std::domain_error);
}

TEST_CASE("scaling form") {
    CHECK(scaling_form(5.846, 0.0) == 5.846);
    CHECK(scaling_form(5.846, 0.1) == doctest::Approx(6.606));

    // The largest base wins at low churn and loses at high churn.
    const std::vector<unsigned> bases{2, 4, 16};
    std::vector<double> low, high;
    for (unsigned b : bases) {
        const auto p = RingParams::create(1u << 20, 1000, b);
        const double A = solve_nochurn(p).average;
        const double M = p.finger_count();
        auto f = [&](double r) { return M / (M + 0.5 * r); };
        low.push_back(scaling_form(A, f(1e5)));
        high.push_back(scaling_form(A, f(50.0)));
    }
    CHECK(low[2] < low[1]);
    CHECK(low[2] < low[0]);
    CHECK(high[2] > high[1]);
    CHECK(high[2] > high[0]);
}
