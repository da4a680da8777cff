#include "deltafree/polynomial.hpp"

namespace deltafree {

DeltaPolynomial::DeltaPolynomial(const DeltaMonomial& m, Complex c) { add(m, c); }

Complex DeltaPolynomial::coefficient(const DeltaMonomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Complex() : it->second;
}

void DeltaPolynomial::add(const DeltaMonomial& m, const Complex& c) {
    if (c.is_zero()) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (inserted) return;
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
}

DeltaPolynomial& DeltaPolynomial::operator+=(const DeltaPolynomial& o) {
    for (const auto& [m, c] : o.terms_) add(m, c);
    return *this;
}

DeltaPolynomial& DeltaPolynomial::operator-=(const DeltaPolynomial& o) {
    for (const auto& [m, c] : o.terms_) add(m, -c);
    return *this;
}

DeltaPolynomial& DeltaPolynomial::operator*=(const Complex& c) {
    if (c.is_zero()) {
        terms_.clear();
        return *this;
    }
    for (auto& [m, v] : terms_) v *= c;
    return *this;
}

DeltaPolynomial operator*(const DeltaPolynomial& a, const DeltaPolynomial& b) {
    DeltaPolynomial out;
    for (const auto& [ma, ca] : a.terms_)
        for (const auto& [mb, cb] : b.terms_) out.add(concat(ma, mb), ca * cb);
    return out;
}

DeltaPolynomial delta(const DeltaPolynomial& p) {
    DeltaPolynomial out;
    for (const auto& [m, c] : p.terms()) out.add(delta(m), c);
    return out;
}

DeltaPolynomial adjoint(const DeltaPolynomial& p) {
    DeltaPolynomial out;
    for (const auto& [m, c] : p.terms()) out.add(adjoint(m), c.conj());
    return out;
}

DeltaPolynomial power(const DeltaPolynomial& p, unsigned k) {
    DeltaPolynomial out = DeltaPolynomial::constant(Complex(1));
    for (unsigned i = 0; i < k; ++i) out = out * p;
    return out;
}

}  // namespace deltafree
