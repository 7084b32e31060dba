#pragma once
// Steady-state dead-finger and wrong-successor fractions for the two
// maintenance strategies, and the inverse map from lookup length to churn.
//
// Rates are expressed relative to the per-node failure rate: r = lambda_s /
// lambda_f, with joins balancing failures on average.

#include <complex>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ccl/lookup_analytics.hpp"
#include "ccl/polynomial.hpp"
#include "ccl/ring_model.hpp"

namespace ccl {

// Successor stabilisations take a fraction beta of the maintenance budget,
// random finger refreshes take the rest.
struct Periodic {
    double beta = 0.5;
};

// Nodes are S1 (stabilise successor at rate alpha*lambda_s) or S2 (stabilise
// at a*lambda_s, send one correction message at c*lambda_s, M messages total).
struct CorrectionOnChange {
    double alpha = 1.0;
    double a = 0.0;
    double c = 1.0;
};

struct MaintenanceConfig {
    std::variant<Periodic, CorrectionOnChange> strategy;
    double r = 100.0;

    // Equal per-node message budget r for both strategies.
    static MaintenanceConfig periodic(double beta, double r) { return {Periodic{beta}, r}; }
    static MaintenanceConfig correction_on_change(double a, double r) {
        return {CorrectionOnChange{1.0, a, 1.0 - a}, r};
    }

    bool is_periodic() const { return std::holds_alternative<Periodic>(strategy); }
    const Periodic& as_periodic() const { return std::get<Periodic>(strategy); }
    const CorrectionOnChange& as_coc() const { return std::get<CorrectionOnChange>(strategy); }
    std::string name() const { return is_periodic() ? "periodic" : "coc"; }

    void validate() const;
};

struct SteadyState {
    FingerDeathProfile dead_fingers;
    double w1 = 0.0;        // wrong-successor fraction among S1 nodes
    double w1_prime = 0.0;  // wrong-successor fraction among S2 nodes
    double p_s1 = 1.0;
    std::vector<double> p_s2;  // P(S2^i), i = 1..M (0-based storage)
    double g1 = 0.0;           // substate ratio c r / (1 + c r + a r w1')
    double residual = 0.0;     // max |residual| of the three balance equations
    int iterations = 0;

    double p_s2_total() const;
    // 1 - (w1 P_S1 + w1' P_S2): a node's predecessor has a correct successor.
    double predecessor_correct() const;
};

enum class CocMode {
    exact,        // P(S2^M)/P(S2) from the full geometric substate chain
    first_order,  // expansion to O(1/r), solved as a polynomial in w1'
};

struct CocSolverOptions {
    CocMode mode = CocMode::exact;
    double damping = 0.5;
    double tolerance = 1e-12;
    int max_iterations = 100000;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<std::complex<double>> candidates,
                double last_residual)
        : std::runtime_error(what), candidates_(std::move(candidates)),
          last_residual_(last_residual) {}

    const std::vector<std::complex<double>>& candidates() const { return candidates_; }
    double last_residual() const { return last_residual_; }

private:
    std::vector<std::complex<double>> candidates_;
    double last_residual_;
};

// f_k = M / (M + (1-beta) r) for k >= 2, f_1 = 1 / (1 + beta r).
FingerDeathProfile periodic_death_fraction(const MaintenanceConfig& cfg, const RingParams& p);

SteadyState solve_coc(const MaintenanceConfig& cfg, const RingParams& p,
                      const CocSolverOptions& options = {});

// f_k = M / (M + c r (1 - w1') A(w1, w1')), uniform in k.
FingerDeathProfile coc_death_fraction(const SteadyState& ss, const MaintenanceConfig& cfg,
                                      const RingParams& p);

// Ratio P(S2^M)/P(S2) in both modes; exposed for tests.
double last_substate_share(double g1, unsigned finger_count);
double last_substate_share_first_order(double w1_prime, const CorrectionOnChange& coc, double r,
                                       unsigned finger_count);

// Residuals of the three balance equations at a candidate point.
struct BalanceResiduals {
    double s1_population = 0.0;
    double total_wrong = 0.0;
    double s2_wrong = 0.0;
    double max_abs() const;
};
BalanceResiduals coc_residuals(double p_s1, double w1, double w1_prime,
                               const MaintenanceConfig& cfg, unsigned finger_count, CocMode mode);

// Polynomial in w1' whose admissible root solves the first-order system.
Polynomial coc_first_order_polynomial(const MaintenanceConfig& cfg, unsigned finger_count);

enum class ChurnInverse {
    linear,     // f = (L - A) / A
    quadratic,  // positive root of 3 f^2 + f = (L - A) / A
};

struct ChurnEstimate {
    double r = 0.0;  // +infinity when no churn is detectable
    double f = 0.0;
    std::string warning;
};

// Death fraction f from an observed lookup length, then r from the strategy's
// death-fraction law. cfg.r is ignored.
ChurnEstimate estimate_churn(double observed_length, double churn_free,
                             const MaintenanceConfig& cfg, const RingParams& p,
                             ChurnInverse inverse = ChurnInverse::linear);

// Death fraction used by the scaling form for a strategy (bulk finger value).
double strategy_death_fraction(const MaintenanceConfig& cfg, const RingParams& p);

}  // namespace ccl
