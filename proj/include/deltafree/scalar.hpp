#pragma once

#include <gmpxx.h>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace deltafree {

using Rational = mpq_class;

// Exact complex rational a + b i.
struct Complex {
    Rational re;
    Rational im;

    Complex() : re(0), im(0) {}
    Complex(long v) : re(v), im(0) {}  // NOLINT(google-explicit-constructor)
    Complex(const Rational& r) : re(r), im(0) {}  // NOLINT(google-explicit-constructor)
    Complex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}

    bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
    bool is_real() const { return sgn(im) == 0; }
    Complex conj() const { return {re, -im}; }
    Rational norm2() const { return Rational(re * re + im * im); }
    std::complex<double> to_double() const { return {re.get_d(), im.get_d()}; }

    Complex& operator+=(const Complex& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    Complex& operator-=(const Complex& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    Complex& operator*=(const Complex& o);
    Complex& operator/=(const Complex& o);

    friend Complex operator+(Complex a, const Complex& b) { return a += b; }
    friend Complex operator-(Complex a, const Complex& b) { return a -= b; }
    friend Complex operator*(Complex a, const Complex& b) { return a *= b; }
    friend Complex operator/(Complex a, const Complex& b) { return a /= b; }
    friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
    friend bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }
    friend bool operator!=(const Complex& a, const Complex& b) { return !(a == b); }
};

Complex pow(const Complex& z, unsigned k);

class NumberError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Decimal ("0.25", "-3", "1e-2") or fraction ("2/3"). Throws NumberError.
Rational parse_rational(std::string_view text);

// The shortest round-trip decimal of d, read back exactly.
Rational rational_from_double(double d);

std::string format(const Rational& r);
// "3/4", "-2", or "(a,b)" when the imaginary part is nonzero.
std::string format(const Complex& z);

}  // namespace deltafree
