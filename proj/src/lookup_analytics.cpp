#include "ccl/lookup_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ccl {

FingerDeathProfile::FingerDeathProfile(std::vector<double> dead) : dead_(std::move(dead)) {
    for (double f : dead_) {
        if (!(f >= 0.0 && f <= 1.0)) {
            throw std::domain_error("finger death probability outside [0, 1]: " +
                                    std::to_string(f));
        }
    }
}

FingerDeathProfile FingerDeathProfile::uniform(unsigned finger_count, double f) {
    return FingerDeathProfile(std::vector<double>(finger_count, f));
}

double FingerDeathProfile::bulk() const {
    if (dead_.size() < 2) {
        return dead_.empty() ? 0.0 : dead_.front();
    }
    return std::accumulate(dead_.begin() + 1, dead_.end(), 0.0) /
           static_cast<double>(dead_.size() - 1);
}

CostTable solve_nochurn(const RingParams& p, bool include_wraparound) {
    const Key keyspace = p.keyspace();
    const std::vector<Key> offsets = p.finger_offsets();
    const double rho = p.density();
    const double occ = p.occupancy();

    CostTable table;
    const Key last = include_wraparound ? keyspace : keyspace - 1;
    table.costs.assign(last + 1, 0.0);
    table.costs[1] = 1.0;

    std::size_t finger = 0;
    for (Key t = 2; t <= last; ++t) {
        while (finger + 1 < offsets.size() && offsets[finger + 1] < t) {
            ++finger;
        }
        const Key xi = offsets[finger];
        table.costs[t] = rho * table.costs[t - 1] + occ + occ * table.costs[t - xi];
    }

    KahanSum sum;
    for (Key t = 1; t < keyspace; ++t) {
        sum.add(table.costs[t]);
    }
    table.average = sum.value() / static_cast<double>(keyspace);
    table.churn_free = table.average;
    return table;
}

double nochurn_partial_sum_average(const RingParams& p, const CostTable& with_wraparound) {
    const Key keyspace = p.keyspace();
    if (with_wraparound.costs.size() != keyspace + 1) {
        throw std::invalid_argument("partial-sum identity needs the wraparound cost C_K");
    }
    const double rho = p.density();
    const double ratio = rho / p.occupancy();
    const double branch = static_cast<double>(p.base() - 1);
    const auto& c = with_wraparound.costs;

    // Delta_j = sum of C over (b^(j-1), b^j].
    KahanSum total;
    double prefix = c[1];
    total.add(c[1]);
    Key lower = 1;
    double block_keys = branch;  // b^j - b^(j-1)
    for (unsigned j = 1; j <= p.digits(); ++j) {
        const Key upper = lower * p.base();
        const double delta = ratio * (c[lower] - c[upper]) + block_keys + branch * prefix;
        total.add(delta);
        prefix += delta;
        lower = upper;
        block_keys *= static_cast<double>(p.base());
    }
    total.add(-c[keyspace]);
    return total.value() / static_cast<double>(keyspace);
}

double nochurn_asymptotic(const RingParams& p) {
    const double b = static_cast<double>(p.base());
    const double n = static_cast<double>(p.nodes());
    return 1.0 + (b - 1.0) / b * std::log2(n) / std::log2(b);
}

std::vector<double> backup_probabilities(unsigned k, Key xi, const FingerDeathProfile& f,
                                         const RingParams& p) {
    if (p.base() != 2) {
        throw std::domain_error("backup_probabilities: base-2 finger layout only");
    }
    if (k < 1 || k > p.finger_count()) {
        throw std::domain_error("backup_probabilities: finger index " + std::to_string(k) +
                                " outside [1, " + std::to_string(p.finger_count()) + "]");
    }
    if (xi != (Key{1} << (k - 1))) {
        throw std::domain_error("backup_probabilities: xi must equal 2^(k-1)");
    }
    if (f.size() < k) {
        throw std::domain_error("backup_probabilities: death profile shorter than k");
    }
    std::vector<double> h(k, 0.0);
    double skip = 1.0;  // all of fingers k-1 .. k-i+1 unusable
    for (unsigned i = 1; i < k; ++i) {
        const double present = at_least_one(static_cast<std::int64_t>(xi >> i), p);
        const double dead = f(k - i);
        h[i - 1] = skip * present * (1.0 - dead);
        skip *= 1.0 - present + present * dead;
    }
    h[k - 1] = skip;
    return h;
}

namespace {

// Geometric window sum sum_{l=0}^{width-1} rho^l (1-rho) C_{end-l}, slid one
// key at a time.
class GeometricWindow {
public:
    GeometricWindow(const std::vector<double>& costs, Key width, Key end, double rho, double occ,
                    double rho_width)
        : costs_(costs), width_(width), end_(end), rho_(rho), occ_(occ), tail_(rho_width * occ) {
        for (Key idx = end - width + 1; idx <= end; ++idx) {
            sum_ = rho_ * sum_ + occ_ * costs_[idx];
        }
    }

    double value() const { return sum_; }

    void advance() {
        ++end_;
        sum_ = rho_ * sum_ + occ_ * costs_[end_] - tail_ * costs_[end_ - width_];
    }

private:
    const std::vector<double>& costs_;
    Key width_;
    Key end_;
    double rho_;
    double occ_;
    double tail_;
    double sum_ = 0.0;
};

}  // namespace

CostTable solve_with_churn(const RingParams& p, const FingerDeathProfile& f,
                           const ChurnSolveOptions& options) {
    if (p.base() != 2) {
        throw std::domain_error("solve_with_churn: base-2 finger layout only");
    }
    if (f.size() != p.finger_count()) {
        throw std::domain_error("solve_with_churn: death profile has " + std::to_string(f.size()) +
                                " entries, ring has " + std::to_string(p.finger_count()) +
                                " fingers");
    }
    const Key keyspace = p.keyspace();
    const double rho = p.density();
    const double occ = p.occupancy();

    CostTable table;
    auto& c = table.costs;
    c.assign(keyspace, 0.0);
    // d[m] = sum_{i<m} rho^i (1-rho) C_{m-i}, the occupied-branch convolution.
    std::vector<double> d(keyspace, 0.0);
    if (keyspace > 1) {
        c[1] = 1.0;
        d[1] = occ * c[1];
    }

    for (unsigned k = 1; k <= p.finger_count(); ++k) {
        const Key xi = Key{1} << (k - 1);
        if (xi + 1 > keyspace - 1) {
            break;
        }
        const Key block_end = std::min<Key>(2 * xi, keyspace - 1);
        const double dead = f(k);

        const std::vector<double> h = backup_probabilities(k, xi, f, p);
        const unsigned depth = std::min(k - 1, options.max_backup_depth);
        double omitted = 0.0;
        for (unsigned i = depth + 1; i < k; ++i) {
            omitted += h[i - 1];
        }
        table.truncation_residual = std::max(table.truncation_residual, omitted);

        std::vector<GeometricWindow> windows;
        std::vector<double> occupied;
        windows.reserve(depth);
        for (unsigned i = 1; i <= depth; ++i) {
            const Key width = xi >> i;
            windows.emplace_back(c, width, xi - width + 1, rho, occ,
                                 p.density_pow(static_cast<double>(width)));
            occupied.push_back(at_least_one(static_cast<std::int64_t>(width), p));
        }

        for (Key t = xi + 1; t <= block_end; ++t) {
            const Key m = t - xi;
            const double am = at_least_one(static_cast<std::int64_t>(m), p);
            double backup = 0.0;
            for (unsigned i = 1; i <= depth; ++i) {
                backup += h[i - 1] * (static_cast<double>(i) +
                                      windows[i - 1].value() / occupied[i - 1]);
            }
            c[t] = p.density_pow(static_cast<double>(m)) * c[xi] + (1.0 - dead) * (am + d[m]) +
                   dead * am * (1.0 + backup);
            d[t] = rho * d[t - 1] + occ * c[t];
            if (t < block_end) {
                for (auto& w : windows) {
                    w.advance();
                }
            }
        }
    }

    KahanSum sum;
    for (Key t = 1; t < keyspace; ++t) {
        sum.add(c[t]);
    }
    table.average = sum.value() / static_cast<double>(keyspace);
    table.churn_free = solve_nochurn(p).average;
    return table;
}

double scaling_form(double churn_free, double f) {
    return churn_free * (1.0 + f + 3.0 * f * f);
}

}  // namespace ccl
