#pragma once
// Dense real polynomials (ascending coefficients) and a general complex root
// finder (Aberth-Ehrlich simultaneous iteration with Newton polishing).

#include <complex>
#include <span>
#include <vector>

namespace ccl {

class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> coeffs) : coeffs_(coeffs) {}
    explicit Polynomial(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}

    static Polynomial constant(double c) { return Polynomial({c}); }
    static Polynomial linear(double c0, double c1) { return Polynomial({c0, c1}); }

    // Highest index with a nonzero coefficient; -1 for the zero polynomial.
    int degree() const;
    double coefficient(std::size_t i) const { return i < coeffs_.size() ? coeffs_[i] : 0.0; }
    std::span<const double> coefficients() const { return coeffs_; }

    double operator()(double x) const;
    std::complex<double> operator()(std::complex<double> z) const;
    Polynomial derivative() const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(double s, const Polynomial& a);

private:
    std::vector<double> coeffs_;
};

struct RootFinderOptions {
    double tolerance = 1e-14;
    int max_iterations = 500;
};

// All complex roots of p (degree >= 1), with multiplicity. Leading zero
// coefficients are dropped first; relative magnitudes below `drop_below`
// times the largest coefficient count as zero.
std::vector<std::complex<double>> polynomial_roots(const Polynomial& p,
                                                   const RootFinderOptions& options = {},
                                                   double drop_below = 1e-13);

}  // namespace ccl
