#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "deltafree/scalar.hpp"

namespace deltafree {

class LawError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Off-diagonal moments mu(a,b) = E[x^a conj(x)^b] for a+b <= cap and the
// diagonal moments d_k = E[x_11^k] for k <= cap.
class WignerEntryLaw {
public:
    static WignerEntryLaw complex_gaussian(int cap = 32);
    static WignerEntryLaw quaternary(int cap = 32);
    static WignerEntryLaw preset(const std::string& name, int cap = 32);
    // Free-form tables; mu given as a (cap+1)x(cap+1) array, unused entries ignored.
    static WignerEntryLaw from_tables(std::string name, int cap, std::vector<std::vector<Rational>> mu,
                                      std::vector<Rational> diag);

    const std::string& name() const { return name_; }
    int cap() const { return cap_; }
    const Rational& mu(int a, int b) const;
    const Rational& diag(int k) const;
    Rational m4() const { return mu(2, 2); }
    bool odd_moments_vanish() const;
    std::string fingerprint() const;

private:
    void validate() const;
    std::string name_;
    int cap_ = 0;
    std::vector<std::vector<Rational>> mu_;
    std::vector<Rational> diag_;
};

}  // namespace deltafree
