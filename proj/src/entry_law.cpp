#include "deltafree/entry_law.hpp"

#include <sstream>

namespace deltafree {

namespace {

std::vector<std::vector<Rational>> square(int cap) {
    return std::vector<std::vector<Rational>>(static_cast<std::size_t>(cap + 1),
                                              std::vector<Rational>(static_cast<std::size_t>(cap + 1), Rational(0)));
}

}  // namespace

WignerEntryLaw WignerEntryLaw::complex_gaussian(int cap) {
    auto mu = square(cap);
    Rational fact(1);
    for (int a = 0; 2 * a <= cap; ++a) {
        if (a > 0) fact *= a;
        mu[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] = fact;
    }
    std::vector<Rational> diag(static_cast<std::size_t>(cap + 1), Rational(0));
    Rational dfact(1);  // (k-1)!!
    diag[0] = 1;
    for (int k = 2; k <= cap; k += 2) {
        dfact *= k - 1;
        diag[static_cast<std::size_t>(k)] = dfact;
    }
    return from_tables("complex-gaussian", cap, std::move(mu), std::move(diag));
}

WignerEntryLaw WignerEntryLaw::quaternary(int cap) {
    auto mu = square(cap);
    for (int a = 0; a <= cap; ++a)
        for (int b = 0; a + b <= cap; ++b)
            if ((a - b) % 4 == 0) mu[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = 1;
    std::vector<Rational> diag(static_cast<std::size_t>(cap + 1), Rational(0));
    for (int k = 0; k <= cap; k += 2) diag[static_cast<std::size_t>(k)] = 1;
    return from_tables("quaternary", cap, std::move(mu), std::move(diag));
}

WignerEntryLaw WignerEntryLaw::preset(const std::string& name, int cap) {
    if (name == "complex-gaussian") return complex_gaussian(cap);
    if (name == "quaternary") return quaternary(cap);
    throw LawError("unknown entry-law preset '" + name + "'");
}

WignerEntryLaw WignerEntryLaw::from_tables(std::string name, int cap, std::vector<std::vector<Rational>> mu,
                                           std::vector<Rational> diag) {
    WignerEntryLaw law;
    law.name_ = std::move(name);
    law.cap_ = cap;
    law.mu_ = std::move(mu);
    law.diag_ = std::move(diag);
    law.validate();
    return law;
}

const Rational& WignerEntryLaw::mu(int a, int b) const {
    if (a < 0 || b < 0 || a + b > cap_)
        throw LawError("moment mu(" + std::to_string(a) + "," + std::to_string(b) + ") beyond degree cap " +
                       std::to_string(cap_) + " of law " + name_);
    return mu_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
}

const Rational& WignerEntryLaw::diag(int k) const {
    if (k < 0 || k > cap_)
        throw LawError("diagonal moment d" + std::to_string(k) + " beyond degree cap of law " + name_);
    return diag_[static_cast<std::size_t>(k)];
}

bool WignerEntryLaw::odd_moments_vanish() const {
    for (int a = 0; a <= cap_; ++a)
        for (int b = 0; a + b <= cap_; ++b)
            if ((a + b) % 2 == 1 && sgn(mu(a, b)) != 0) return false;
    for (int k = 1; k <= cap_; k += 2)
        if (sgn(diag(k)) != 0) return false;
    return true;
}

std::string WignerEntryLaw::fingerprint() const {
    std::ostringstream os;
    os << name_ << '/' << cap_;
    for (int a = 0; a <= cap_; ++a)
        for (int b = 0; a + b <= cap_; ++b) os << ',' << mu(a, b).get_str();
    for (int k = 0; k <= cap_; ++k) os << ';' << diag(k).get_str();
    return os.str();
}

void WignerEntryLaw::validate() const {
    auto fail = [&](const std::string& what) { throw LawError("entry law " + name_ + ": " + what); };
    if (cap_ < 8 || cap_ % 2 != 0) fail("degree cap must be an even integer >= 8");
    if (mu_.size() < static_cast<std::size_t>(cap_ + 1) || diag_.size() < static_cast<std::size_t>(cap_ + 1))
        fail("tables shorter than the degree cap");
    for (const auto& row : mu_)
        if (row.size() < static_cast<std::size_t>(cap_ + 1)) fail("tables shorter than the degree cap");
    if (mu(0, 0) != 1) fail("mu(0,0) must be 1");
    if (mu(1, 0) != 0 || mu(0, 1) != 0) fail("entries must be centered");
    if (mu(1, 1) != 1) fail("mu(1,1) must be 1");
    if (mu(2, 0) != 0 || mu(0, 2) != 0) fail("pseudo-variance mu(2,0) must vanish");
    for (int a = 0; a <= cap_; ++a)
        for (int b = 0; a + b <= cap_; ++b)
            if (mu(a, b) != mu(b, a)) fail("mu must be symmetric");
    if (diag(0) != 1 || diag(1) != 0) fail("diagonal law must have d0 = 1 and d1 = 0");
}

}  // namespace deltafree
