#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "deltafree/polynomial.hpp"

namespace deltafree {

class UndefinedMoment : public std::runtime_error {
public:
    explicit UndefinedMoment(const std::string& word) : std::runtime_error("undefined y-moment: " + word), word_(word) {}
    const std::string& word() const { return word_; }

private:
    std::string word_;
};

class RecursionLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Moments of one deterministic family.
struct DeterministicFamily {
    enum class Source { none, power_moments, scalar };
    Source source = Source::none;
    std::vector<Complex> moments;  // moments[k] = phi(y^k), self-adjoint families only
    Complex scalar;
    bool self_adjoint = true;
};

struct FirstOrderState {
    std::map<int, Complex> wigner_variance;  // missing family: 1
    std::map<int, DeterministicFamily> y_families;
    // Explicit values keyed by trace_class_key. Plain words, or bracketed
    // y-monomials when h5 is off.
    std::map<DeltaMonomial, Complex> y_table;
    bool h5 = true;

    Complex variance(int family) const;
    void set_table_value(const DeltaMonomial& m, const Complex& v);
    // phi of a plain word in deterministic letters.
    Complex y_word_moment(const DeltaMonomial& word) const;
    std::string fingerprint() const;
};

class PhiEvaluator {
public:
    explicit PhiEvaluator(FirstOrderState state, bool memoize = true, std::size_t max_depth = 4096);

    const FirstOrderState& state() const { return state_; }
    Complex eval(const DeltaPolynomial& p) const;
    Complex eval(const DeltaMonomial& m) const;
    std::size_t memo_size() const;

private:
    Complex eval_monomial(const DeltaMonomial& m, std::size_t depth) const;
    Complex compute(const DeltaMonomial& m, std::size_t depth) const;
    Complex y_only(const DeltaMonomial& m) const;

    FirstOrderState state_;
    bool memoize_;
    std::size_t max_depth_;
    mutable std::shared_mutex mutex_;
    mutable std::unordered_map<DeltaMonomial, Complex, MonomialHash> memo_;
};

Complex eval_phi(const DeltaPolynomial& p, const FirstOrderState& state);

struct TaggedFactor {
    DeltaPolynomial value;
    int tag = 0;
};

// phi of a1...an for factors from mutually free families, through the
// centering expansion. Throws std::invalid_argument if consecutive tags repeat.
Complex freeness_factor(const std::vector<TaggedFactor>& tuple, const PhiEvaluator& phi);

struct H5Report {
    bool equal = false;
    Complex phi;
    Complex product;
};
H5Report check_h5(const DeltaMonomial& m, const PhiEvaluator& phi);

// Wigner families are tagged by their index, all deterministic letters by 0.
int family_tag(const Letter& l);
inline constexpr int kDeterministicTag = 0;
// The unique tag of a single-family monomial, nullopt when mixed or empty.
std::optional<int> single_tag(const DeltaMonomial& m);
std::optional<int> single_tag(const DeltaPolynomial& p);

}  // namespace deltafree
