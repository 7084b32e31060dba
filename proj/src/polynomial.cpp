#include "ccl/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ccl {

int Polynomial::degree() const {
    for (int i = static_cast<int>(coeffs_.size()) - 1; i >= 0; --i) {
        if (coeffs_[i] != 0.0) {
            return i;
        }
    }
    return -1;
}

double Polynomial::operator()(double x) const {
    double acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        acc = acc * x + *it;
    }
    return acc;
}

std::complex<double> Polynomial::operator()(std::complex<double> z) const {
    std::complex<double> acc = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
        acc = acc * z + *it;
    }
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) {
        return Polynomial::constant(0.0);
    }
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t i = 1; i < coeffs_.size(); ++i) {
        d[i - 1] = static_cast<double>(i) * coeffs_[i];
    }
    return Polynomial(std::move(d));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> out(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = a.coefficient(i) + b.coefficient(i);
    }
    return Polynomial(std::move(out));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    return a + (-1.0) * b;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.coeffs_.empty() || b.coeffs_.empty()) {
        return Polynomial();
    }
    std::vector<double> out(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
            out[i + j] += a.coeffs_[i] * b.coeffs_[j];
        }
    }
    return Polynomial(std::move(out));
}

Polynomial operator*(double s, const Polynomial& a) {
    std::vector<double> out(a.coeffs_);
    for (double& c : out) {
        c *= s;
    }
    return Polynomial(std::move(out));
}

std::vector<std::complex<double>> polynomial_roots(const Polynomial& p,
                                                   const RootFinderOptions& options,
                                                   double drop_below) {
    std::vector<double> c(p.coefficients().begin(), p.coefficients().end());
    double scale = 0.0;
    for (double v : c) {
        scale = std::max(scale, std::fabs(v));
    }
    if (scale == 0.0) {
        throw std::invalid_argument("polynomial_roots: zero polynomial");
    }
    while (!c.empty() && std::fabs(c.back()) <= drop_below * scale) {
        c.pop_back();
    }
    const int n = static_cast<int>(c.size()) - 1;
    if (n < 1) {
        throw std::invalid_argument("polynomial_roots: constant polynomial has no roots");
    }
    // Monic normalisation.
    const double lead = c.back();
    for (double& v : c) {
        v /= lead;
    }
    const Polynomial monic(c);
    const Polynomial slope = monic.derivative();

    // Initial guesses on a circle of the Cauchy bound radius, rotated off the
    // real axis so conjugate pairs can separate.
    double radius = 0.0;
    for (int i = 0; i < n; ++i) {
        radius = std::max(radius, std::fabs(c[i]));
    }
    radius = 1.0 + radius;
    std::vector<std::complex<double>> z(n);
    for (int i = 0; i < n; ++i) {
        const double angle = 2.0 * std::numbers::pi * i / n + 0.4;
        z[i] = std::polar(0.5 * radius, angle);
    }

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        double largest_step = 0.0;
        for (int i = 0; i < n; ++i) {
            const std::complex<double> value = monic(z[i]);
            if (value == 0.0) {
                continue;
            }
            const std::complex<double> newton = value / slope(z[i]);
            std::complex<double> repulsion = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j != i) {
                    repulsion += 1.0 / (z[i] - z[j]);
                }
            }
            const std::complex<double> step = newton / (1.0 - newton * repulsion);
            z[i] -= step;
            largest_step = std::max(largest_step, std::abs(step) / std::max(1.0, std::abs(z[i])));
        }
        if (largest_step < options.tolerance) {
            break;
        }
    }

    // Newton polish against the original (unnormalised) coefficients.
    const Polynomial original(c);
    for (auto& root : z) {
        for (int k = 0; k < 3; ++k) {
            const std::complex<double> d = slope(root);
            if (d == 0.0) {
                break;
            }
            const std::complex<double> candidate = root - original(root) / d;
            if (std::abs(original(candidate)) >= std::abs(original(root))) {
                break;
            }
            root = candidate;
        }
    }
    return z;
}

}  // namespace ccl
