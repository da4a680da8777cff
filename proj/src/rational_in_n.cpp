#include "deltafree/rational_in_n.hpp"

#include <cmath>

namespace deltafree {

RationalInN RationalInN::term(Complex c, int half_exponent) {
    RationalInN r;
    r.add(half_exponent, c);
    return r;
}

RationalInN RationalInN::falling_factorial(int k) {
    RationalInN r = constant(Complex(1));
    for (int i = 0; i < k; ++i) r *= term(Complex(1), 2) + term(Complex(-i), 0);
    return r;
}

Complex RationalInN::coefficient(int half_exponent) const {
    auto it = coef_.find(half_exponent);
    return it == coef_.end() ? Complex() : it->second;
}

void RationalInN::add(int e, const Complex& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = coef_.try_emplace(e, c);
    if (inserted) return;
    it->second += c;
    if (it->second.is_zero()) coef_.erase(it);
}

RationalInN& RationalInN::operator+=(const RationalInN& o) {
    for (const auto& [e, c] : o.coef_) add(e, c);
    return *this;
}

RationalInN& RationalInN::operator*=(const RationalInN& o) {
    RationalInN out;
    for (const auto& [e1, c1] : coef_)
        for (const auto& [e2, c2] : o.coef_) out.add(e1 + e2, c1 * c2);
    coef_ = std::move(out.coef_);
    return *this;
}

RationalInN& RationalInN::operator*=(const Complex& c) {
    if (c.is_zero()) coef_.clear();
    for (auto& [e, v] : coef_) v *= c;
    return *this;
}

RationalInN RationalInN::shifted(int half_exponent) const {
    RationalInN r;
    for (const auto& [e, c] : coef_) r.coef_.emplace(e + half_exponent, c);
    return r;
}

Complex RationalInN::evaluate(long n) const {
    if (n <= 0) throw std::domain_error("evaluation needs N >= 1");
    long root = std::lround(std::sqrt(static_cast<double>(n)));
    bool square = root * root == n;
    Complex total;
    for (const auto& [e, c] : coef_) {
        Rational base = (e % 2 == 0) ? Rational(n) : Rational(root);
        if (e % 2 != 0 && !square) throw std::domain_error("half-integer power of N at non-square N");
        int p = e % 2 == 0 ? e / 2 : e;
        Rational v(1);
        for (int i = 0; i < std::abs(p); ++i) v *= base;
        if (p < 0) v = 1 / v;
        total += c * Complex(v);
    }
    return total;
}

Complex RationalInN::limit() const {
    for (const auto& [e, c] : coef_)
        if (e > 0) throw DivergentLimit("limit diverges: nonzero coefficient of N^(" + std::to_string(e) + "/2)");
    return coefficient(0);
}

namespace {

std::string power_text(int e) {
    if (e % 2 == 0) {
        int p = e / 2;
        return p == 1 ? "N" : "N^" + std::to_string(p);
    }
    return "N^(" + std::to_string(e) + "/2)";
}

}  // namespace

std::string RationalInN::render() const {
    if (coef_.empty()) return "0";
    std::string out;
    bool first = true;
    for (auto it = coef_.rbegin(); it != coef_.rend(); ++it) {
        int e = it->first;
        Complex c = it->second;
        bool neg = c.is_real() && sgn(c.re) < 0;
        if (neg) c = -c;
        std::string piece;
        if (e == 0) {
            piece = format(c);
        } else if (e > 0) {
            piece = (c == Complex(1) ? "" : format(c) + "*") + power_text(e);
        } else if (c.is_real() && c.re.get_den() != 1) {
            // a/b * N^-k  ->  a/(b N^k)
            mpz_class num = c.re.get_num(), den = c.re.get_den();
            piece = num.get_str() + "/(" + den.get_str() + "*" + power_text(-e) + ")";
        } else {
            piece = format(c) + "/" + power_text(-e);
        }
        if (first) out = neg ? "-" + piece : piece;
        else out += (neg ? " - " : " + ") + piece;
        first = false;
    }
    return out;
}

std::string RationalInN::render_fraction() const {
    if (coef_.empty()) return "0";
    int low = coef_.begin()->first;
    for (const auto& [e, c] : coef_)
        if (e % 2 != 0) return render();
    int k = low < 0 ? -low / 2 : 0;
    RationalInN num = shifted(2 * k);
    std::string top = num.render();
    return k == 0 ? top : "(" + top + ")/" + power_text(2 * k);
}

}  // namespace deltafree
