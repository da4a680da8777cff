#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "deltafree/scalar.hpp"

namespace deltafree {

class DivergentLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A finite sum of c_e N^(e/2) with exact complex-rational c_e, i.e. a
// polynomial in sqrt(N) divided by a power of N.
class RationalInN {
public:
    RationalInN() = default;
    static RationalInN constant(Complex c) { return term(std::move(c), 0); }
    static RationalInN term(Complex c, int half_exponent);
    // N (N-1) ... (N-k+1)
    static RationalInN falling_factorial(int k);

    const std::map<int, Complex>& coefficients() const { return coef_; }
    bool is_zero() const { return coef_.empty(); }
    Complex coefficient(int half_exponent) const;

    RationalInN& operator+=(const RationalInN& o);
    RationalInN& operator*=(const RationalInN& o);
    RationalInN& operator*=(const Complex& c);
    friend RationalInN operator+(RationalInN a, const RationalInN& b) { return a += b; }
    friend RationalInN operator*(RationalInN a, const RationalInN& b) { return a *= b; }
    friend bool operator==(const RationalInN& a, const RationalInN& b) { return a.coef_ == b.coef_; }

    // Multiplies by N^(h/2).
    RationalInN shifted(int half_exponent) const;
    // Exact value at integer N; N must be a perfect square when odd half-exponents occur.
    Complex evaluate(long n) const;
    // Constant term; throws DivergentLimit when a positive power survives.
    Complex limit() const;
    // e.g. "1 - 1/N + 2/N^2"
    std::string render() const;
    // Numerator polynomial in N over the common denominator N^k (integer exponents only).
    std::string render_fraction() const;

private:
    void add(int e, const Complex& c);
    std::map<int, Complex> coef_;
};

}  // namespace deltafree
