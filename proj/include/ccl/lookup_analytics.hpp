#pragma once
// Expected lookup cost C_t (hops including timeouts) to reach a target t keys
// away, for a fresh ring and for a ring whose fingers are dead with known
// per-finger probabilities.

#include <cstdint>
#include <span>
#include <vector>

#include "ccl/ring_model.hpp"

namespace ccl {

// Probability f_k that finger k points to a failed node, k in [1, M].
class FingerDeathProfile {
public:
    FingerDeathProfile() = default;
    explicit FingerDeathProfile(std::vector<double> dead);

    static FingerDeathProfile uniform(unsigned finger_count, double f);
    static FingerDeathProfile none(unsigned finger_count) { return uniform(finger_count, 0.0); }

    unsigned size() const { return static_cast<unsigned>(dead_.size()); }
    // 1-based, matching finger numbering.
    double operator()(unsigned k) const { return dead_.at(k - 1); }
    std::span<const double> values() const { return dead_; }

    // Mean over fingers 2..M, the "large finger" value used by the scaling form.
    double bulk() const;

private:
    std::vector<double> dead_;
};

struct CostTable {
    // costs[i] is C_i for i in [1, K-1]; costs[0] is 0 (local key).
    std::vector<double> costs;
    // L = sum_{i=1}^{K-1} C_i / K.
    double average = 0.0;
    // Same average with every f_k = 0.
    double churn_free = 0.0;
    // Largest omitted backup mass sum_{i > depth, i < k} h_k(i) over k.
    double truncation_residual = 0.0;

    double cost(Key distance) const { return costs.at(distance); }
};

// Forward iteration of C_{i+1} = rho C_i + (1 - rho) + (1 - rho) C_{i+1-xi(i+1)},
// with xi(t) the largest finger offset strictly below t. Any base.
// When `include_wraparound` is set the table also holds C_K (used only by the
// partial-sum identity).
CostTable solve_nochurn(const RingParams& p, bool include_wraparound = false);

// Average lookup length rebuilt from the block partial sums, which need only
// the costs at powers of the base. Independent cross-check of solve_nochurn.
double nochurn_partial_sum_average(const RingParams& p, const CostTable& with_wraparound);

// 1 + ((b-1)/b) log2(N) / log2(b); reduces to 1 + log2(N)/2 for b = 2.
double nochurn_asymptotic(const RingParams& p);

// h_k(1..k) for finger k (xi = 2^(k-1)): probability that finger k-i is the
// first usable backup when finger k is dead; h_k(k) is the successor-list
// fallback. Base 2 only. Returned vector is 0-based (entry i-1 is h_k(i)).
std::vector<double> backup_probabilities(unsigned k, Key xi, const FingerDeathProfile& f,
                                         const RingParams& p);

struct ChurnSolveOptions {
    unsigned max_backup_depth = 6;
};

// Churn-aware recursion (base 2). The successor-list fallback term is not
// modelled. Runs in O(K * depth) using geometric running sums.
CostTable solve_with_churn(const RingParams& p, const FingerDeathProfile& f,
                           const ChurnSolveOptions& options = {});

// L = A (1 + f + 3 f^2).
double scaling_form(double churn_free, double f);

// Compensated accumulator for long sums of similar-magnitude terms.
class KahanSum {
public:
    void add(double x) {
        const double y = x - carry_;
        const double t = sum_ + y;
        carry_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

}  // namespace ccl
