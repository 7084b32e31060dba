#include "ccl/steady_state.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ccl {

void MaintenanceConfig::validate() const {
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw std::domain_error("maintenance rate ratio r must be positive and finite");
    }
    if (is_periodic()) {
        const double beta = as_periodic().beta;
        if (!(beta >= 0.0 && beta <= 1.0)) {
            throw std::domain_error("beta must lie in [0, 1]");
        }
    } else {
        const auto& coc = as_coc();
        if (!(coc.alpha >= 0.0 && coc.a >= 0.0 && coc.c >= 0.0)) {
            throw std::domain_error("alpha, a and c must be non-negative");
        }
    }
}

double SteadyState::p_s2_total() const {
    return 1.0 - p_s1;
}

double SteadyState::predecessor_correct() const {
    return 1.0 - (w1 * p_s1 + w1_prime * p_s2_total());
}

double BalanceResiduals::max_abs() const {
    return std::max({std::fabs(s1_population), std::fabs(total_wrong), std::fabs(s2_wrong)});
}

FingerDeathProfile periodic_death_fraction(const MaintenanceConfig& cfg, const RingParams& p) {
    if (!cfg.is_periodic()) {
        throw std::invalid_argument("periodic_death_fraction needs a periodic configuration");
    }
    cfg.validate();
    const double beta = cfg.as_periodic().beta;
    const double fingers = static_cast<double>(p.finger_count());
    std::vector<double> f(p.finger_count(), fingers / (fingers + (1.0 - beta) * cfg.r));
    f[0] = 1.0 / (1.0 + beta * cfg.r);
    return FingerDeathProfile(std::move(f));
}

double last_substate_share(double g1, unsigned finger_count) {
    if (finger_count <= 1) {
        return 1.0;
    }
    // g^(M-1) (1-g) / (1-g^M), written as g^(M-1) / sum_j g^j to stay finite at g = 1.
    double series = 0.0;
    double power = 1.0;
    for (unsigned j = 0; j < finger_count; ++j) {
        series += power;
        if (j + 1 < finger_count) {
            power *= g1;
        }
    }
    return power / series;
}

double last_substate_share_first_order(double w1_prime, const CorrectionOnChange& coc, double r,
                                       unsigned finger_count) {
    if (coc.c <= 0.0) {
        throw std::domain_error("first-order expansion needs c > 0");
    }
    const double m = static_cast<double>(finger_count);
    return 1.0 / m - (m - 1.0) / (2.0 * m) * (1.0 + coc.a * r * w1_prime) / (coc.c * r);
}

namespace {

double substate_ratio(const CorrectionOnChange& coc, double r, double w1_prime) {
    const double cr = coc.c * r;
    return cr / (1.0 + cr + coc.a * r * w1_prime);
}

double share_for(CocMode mode, double w1_prime, const CorrectionOnChange& coc, double r,
                 unsigned finger_count) {
    if (mode == CocMode::first_order) {
        return last_substate_share_first_order(w1_prime, coc, r, finger_count);
    }
    return last_substate_share(substate_ratio(coc, r, w1_prime), finger_count);
}

void fill_substates(SteadyState& ss, const CorrectionOnChange& coc, double r, unsigned fingers) {
    const double ar_w = coc.a * r * ss.w1_prime;
    ss.g1 = substate_ratio(coc, r, ss.w1_prime);
    const double first =
        (ss.p_s1 * (coc.alpha * r * ss.w1 - ar_w) + ar_w) / (1.0 + coc.c * r + ar_w);
    ss.p_s2.assign(fingers, 0.0);
    double level = first;
    for (unsigned i = 0; i < fingers; ++i) {
        ss.p_s2[i] = level;
        level *= ss.g1;
    }
}

bool admissible_probability(double x, double slack = 1e-12) {
    return x >= -slack && x <= 1.0 + slack;
}

std::array<double, 3> residual_vector(const MaintenanceConfig& cfg, unsigned fingers, CocMode mode,
                                      const std::array<double, 3>& x) {
    const auto res = coc_residuals(x[0], x[1], x[2], cfg, fingers, mode);
    return {res.s1_population, res.total_wrong, res.s2_wrong};
}

// A few Newton steps (central-difference Jacobian) from a converged fixed
// point; the balance equations carry O(r) coefficients, so the damped
// iteration alone leaves residuals of order r * tolerance.
void polish(const MaintenanceConfig& cfg, unsigned fingers, CocMode mode, double& ps1, double& w,
            double& v) {
    std::array<double, 3> x{ps1, w, v};
    auto norm = [](const std::array<double, 3>& f) {
        return std::max({std::fabs(f[0]), std::fabs(f[1]), std::fabs(f[2])});
    };
    std::array<double, 3> fx = residual_vector(cfg, fingers, mode, x);
    for (int step = 0; step < 5; ++step) {
        double jac[3][3];
        for (int j = 0; j < 3; ++j) {
            const double h = 1e-7 * std::max(1e-3, std::fabs(x[j]));
            auto xp = x;
            auto xm = x;
            xp[j] += h;
            xm[j] -= h;
            const auto fp = residual_vector(cfg, fingers, mode, xp);
            const auto fm = residual_vector(cfg, fingers, mode, xm);
            for (int i = 0; i < 3; ++i) {
                jac[i][j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        // Cramer's rule on the 3x3 system J dx = -f.
        auto det3 = [](const double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double det = det3(jac);
        if (det == 0.0 || !std::isfinite(det)) {
            return;
        }
        std::array<double, 3> dx{};
        for (int col = 0; col < 3; ++col) {
            double m[3][3];
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    m[i][j] = j == col ? -fx[i] : jac[i][j];
                }
            }
            dx[col] = det3(m) / det;
        }
        std::array<double, 3> next{x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]};
        const auto fnext = residual_vector(cfg, fingers, mode, next);
        if (!(norm(fnext) < norm(fx))) {
            break;
        }
        x = next;
        fx = fnext;
    }
    ps1 = x[0];
    w = x[1];
    v = x[2];
}

SteadyState solve_exact(const MaintenanceConfig& cfg, unsigned fingers,
                        const CocSolverOptions& options) {
    const auto& coc = cfg.as_coc();
    const double r = cfg.r;
    const double d = options.damping;

    double w = 2.0 / (3.0 + r);
    double v = w;
    double ps1 = 1.0;
    double change = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < options.max_iterations; ++iter) {
        const double q = coc.c * r * share_for(options.mode, v, coc, r, fingers);
        const double ps1_next = (1.0 + q) / (1.0 + coc.alpha * r * w + q);
        const double v_next = (2.0 - w * ps1_next) / (3.0 + coc.a * r + q - ps1_next);
        const double w_next =
            (2.0 - (3.0 + coc.a * r) * v_next * (1.0 - ps1_next)) / ((3.0 + coc.alpha * r) * ps1_next);
        const double nw = (1.0 - d) * w + d * w_next;
        const double nv = (1.0 - d) * v + d * v_next;
        const double np = (1.0 - d) * ps1 + d * ps1_next;
        change = std::max({std::fabs(nw - w), std::fabs(nv - v), std::fabs(np - ps1)});
        w = nw;
        v = nv;
        ps1 = np;
        if (!std::isfinite(change)) {
            break;
        }
        if (change < options.tolerance) {
            ++iter;
            break;
        }
    }
    if (change < options.tolerance) {
        polish(cfg, fingers, options.mode, ps1, w, v);
    }
    const double residual = coc_residuals(ps1, w, v, cfg, fingers, options.mode).max_abs();
    if (!(change < options.tolerance) || !std::isfinite(residual)) {
        throw SolverError("correction-on-change fixed point did not converge", {}, residual);
    }
    if (!admissible_probability(w) || !admissible_probability(v) || !admissible_probability(ps1)) {
        throw SolverError("fixed point left the probability simplex", {{v, 0.0}}, residual);
    }
    SteadyState ss;
    ss.w1 = w;
    ss.w1_prime = v;
    ss.p_s1 = ps1;
    ss.residual = residual;
    ss.iterations = iter;
    return ss;
}

SteadyState solve_first_order(const MaintenanceConfig& cfg, unsigned fingers) {
    const auto& coc = cfg.as_coc();
    const double r = cfg.r;
    const double alpha_r = coc.alpha * r;
    const double a_r = coc.a * r;

    const Polynomial poly = coc_first_order_polynomial(cfg, fingers);
    const auto roots = polynomial_roots(poly);

    const double m = static_cast<double>(fingers);
    const Polynomial crr = Polynomial::linear(coc.c * r / m - (m - 1.0) / (2.0 * m),
                                              -(m - 1.0) * a_r / (2.0 * m));

    SteadyState best;
    bool found = false;
    double best_residual = std::numeric_limits<double>::infinity();
    for (const auto& z : roots) {
        if (std::fabs(z.imag()) > 1e-9 * std::max(1.0, std::abs(z))) {
            continue;
        }
        const double v = z.real();
        if (!admissible_probability(v)) {
            continue;
        }
        const double q = crr(v);
        const double ps1 = (1.0 + q - 2.0 * alpha_r + alpha_r * v * (3.0 + a_r + q)) /
                           (1.0 + q + alpha_r * v);
        if (!(ps1 > 0.0) || !admissible_probability(ps1)) {
            continue;
        }
        const double w = (2.0 - v * (3.0 + a_r + q) + v * ps1) / ps1;
        if (!admissible_probability(w)) {
            continue;
        }
        const double share = q / (coc.c * r);
        if (!admissible_probability(share)) {
            continue;
        }
        const double residual =
            coc_residuals(ps1, w, v, cfg, fingers, CocMode::first_order).max_abs();
        if (residual < best_residual) {
            best_residual = residual;
            best.w1 = w;
            best.w1_prime = v;
            best.p_s1 = ps1;
            best.residual = residual;
            found = true;
        }
    }
    if (!found) {
        std::ostringstream msg;
        msg << "no admissible root of the degree-" << poly.degree()
            << " first-order polynomial (r = " << r << ")";
        throw SolverError(msg.str(), roots, best_residual);
    }
    return best;
}

}  // namespace

BalanceResiduals coc_residuals(double p_s1, double w1, double w1_prime,
                               const MaintenanceConfig& cfg, unsigned finger_count, CocMode mode) {
    const auto& coc = cfg.as_coc();
    const double r = cfg.r;
    const double q = coc.c * r * share_for(mode, w1_prime, coc, r, finger_count);
    BalanceResiduals res;
    res.s1_population = p_s1 * (1.0 + coc.alpha * r * w1) - 1.0 - q * (1.0 - p_s1);
    res.total_wrong = (3.0 + coc.alpha * r) * w1 * p_s1 +
                      (3.0 + coc.a * r) * w1_prime * (1.0 - p_s1) - 2.0;
    res.s2_wrong = w1_prime * (3.0 + coc.a * r + q) + (w1 - w1_prime) * p_s1 - 2.0;
    return res;
}

Polynomial coc_first_order_polynomial(const MaintenanceConfig& cfg, unsigned finger_count) {
    const auto& coc = cfg.as_coc();
    if (coc.c <= 0.0) {
        throw std::domain_error("first-order mode needs c > 0");
    }
    const double r = cfg.r;
    const double m = static_cast<double>(finger_count);
    const double alpha_r = coc.alpha * r;
    const double a_r = coc.a * r;
    const Polynomial v = Polynomial::linear(0.0, 1.0);
    // c r P(S2^M)/P(S2), linear in w1'.
    const Polynomial q =
        Polynomial::linear(coc.c * r / m - (m - 1.0) / (2.0 * m), -(m - 1.0) * a_r / (2.0 * m));
    const Polynomial stab = Polynomial::constant(3.0 + a_r) + q;  // 3 + a r + c r R

    // P_S1 from the total-wrong and S2-wrong balances: P * v * r(alpha - a) = n1.
    const Polynomial n1 = Polynomial::constant(-2.0 * (2.0 + alpha_r)) +
                          v * ((3.0 + alpha_r) * stab - Polynomial::constant(3.0 + a_r));
    // P_S1 from the S1 population balance: P = n2 / d2.
    const Polynomial d2 = Polynomial::constant(1.0) + q + alpha_r * v;
    const Polynomial n2 = Polynomial::constant(1.0 - 2.0 * alpha_r) + q + alpha_r * v * stab;
    return n1 * d2 - (r * (coc.alpha - coc.a)) * (v * n2);
}

SteadyState solve_coc(const MaintenanceConfig& cfg, const RingParams& p,
                      const CocSolverOptions& options) {
    if (cfg.is_periodic()) {
        throw std::invalid_argument("solve_coc needs a correction-on-change configuration");
    }
    cfg.validate();
    const unsigned fingers = p.finger_count();
    SteadyState ss = options.mode == CocMode::exact ? solve_exact(cfg, fingers, options)
                                                    : solve_first_order(cfg, fingers);
    fill_substates(ss, cfg.as_coc(), cfg.r, fingers);
    ss.dead_fingers = coc_death_fraction(ss, cfg, p);
    return ss;
}

FingerDeathProfile coc_death_fraction(const SteadyState& ss, const MaintenanceConfig& cfg,
                                      const RingParams& p) {
    if (cfg.is_periodic()) {
        throw std::invalid_argument("coc_death_fraction needs a correction-on-change configuration");
    }
    cfg.validate();
    const double m = static_cast<double>(p.finger_count());
    const double repair = cfg.as_coc().c * cfg.r * (1.0 - ss.w1_prime) * ss.predecessor_correct();
    return FingerDeathProfile::uniform(p.finger_count(), m / (m + std::max(repair, 0.0)));
}

double strategy_death_fraction(const MaintenanceConfig& cfg, const RingParams& p) {
    if (cfg.is_periodic()) {
        return periodic_death_fraction(cfg, p).bulk();
    }
    return solve_coc(cfg, p).dead_fingers.bulk();
}

ChurnEstimate estimate_churn(double observed_length, double churn_free,
                             const MaintenanceConfig& cfg, const RingParams& p,
                             ChurnInverse inverse) {
    if (!(churn_free >= 1.0)) {
        throw std::domain_error("churn-free lookup length must be >= 1");
    }
    ChurnEstimate est;
    if (observed_length <= churn_free) {
        est.r = std::numeric_limits<double>::infinity();
        est.f = 0.0;
        est.warning = observed_length < churn_free
                          ? "observed lookup length below the churn-free value; no churn detectable"
                          : "observed lookup length equals the churn-free value; no churn detectable";
        return est;
    }
    const double excess = (observed_length - churn_free) / churn_free;
    est.f = inverse == ChurnInverse::linear ? excess
                                            : (-1.0 + std::sqrt(1.0 + 12.0 * excess)) / 6.0;
    if (est.f >= 1.0) {
        throw std::domain_error("implied finger death fraction >= 1");
    }
    const double m = static_cast<double>(p.finger_count());

    if (cfg.is_periodic()) {
        const double beta = cfg.as_periodic().beta;
        if (beta >= 1.0) {
            throw std::domain_error("beta = 1 never refreshes fingers; churn is not identifiable");
        }
        est.r = m * (1.0 - est.f) / ((1.0 - beta) * est.f);
        return est;
    }

    // Correction-on-change: f(r) decreases in r, bisect in log r.
    auto dead_at = [&](double r) {
        MaintenanceConfig probe = cfg;
        probe.r = r;
        return solve_coc(probe, p).dead_fingers.bulk();
    };
    double lo = std::log(1e-3);
    double hi = std::log(1e9);
    if (dead_at(std::exp(hi)) > est.f) {
        throw std::domain_error("implied death fraction unreachable at any maintenance rate");
    }
    if (dead_at(std::exp(lo)) < est.f) {
        est.r = std::exp(lo);
        est.warning = "implied death fraction exceeds the low-rate limit; r clamped";
        return est;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dead_at(std::exp(mid)) > est.f) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    est.r = std::exp(0.5 * (lo + hi));
    return est;
}

}  // namespace ccl
