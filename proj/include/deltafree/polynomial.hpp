#pragma once

#include <map>

#include "deltafree/monomial.hpp"
#include "deltafree/scalar.hpp"

namespace deltafree {

// Finite linear combination of canonical monomials; zero coefficients are never stored.
class DeltaPolynomial {
public:
    using Terms = std::map<DeltaMonomial, Complex>;

    DeltaPolynomial() = default;
    DeltaPolynomial(const DeltaMonomial& m, Complex c = Complex(1));  // NOLINT(google-explicit-constructor)
    static DeltaPolynomial constant(Complex c) { return DeltaPolynomial(DeltaMonomial(), std::move(c)); }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }
    Complex coefficient(const DeltaMonomial& m) const;

    void add(const DeltaMonomial& m, const Complex& c);

    DeltaPolynomial& operator+=(const DeltaPolynomial& o);
    DeltaPolynomial& operator-=(const DeltaPolynomial& o);
    DeltaPolynomial& operator*=(const Complex& c);

    friend DeltaPolynomial operator+(DeltaPolynomial a, const DeltaPolynomial& b) { return a += b; }
    friend DeltaPolynomial operator-(DeltaPolynomial a, const DeltaPolynomial& b) { return a -= b; }
    friend DeltaPolynomial operator*(DeltaPolynomial a, const Complex& c) { return a *= c; }
    friend DeltaPolynomial operator*(const Complex& c, DeltaPolynomial a) { return a *= c; }
    friend DeltaPolynomial operator*(const DeltaPolynomial& a, const DeltaPolynomial& b);
    friend bool operator==(const DeltaPolynomial& a, const DeltaPolynomial& b) { return a.terms_ == b.terms_; }

private:
    Terms terms_;
};

DeltaPolynomial delta(const DeltaPolynomial& p);
DeltaPolynomial adjoint(const DeltaPolynomial& p);
DeltaPolynomial power(const DeltaPolynomial& p, unsigned k);

}  // namespace deltafree
