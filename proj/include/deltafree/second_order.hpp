#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deltafree/first_order.hpp"
#include "deltafree/test_graph.hpp"

namespace deltafree {

class MissingMarginal : public std::runtime_error {
public:
    MissingMarginal(int family, const std::string& p, const std::string& q);
    int family() const { return family_; }
    const std::string& first() const { return p_; }
    const std::string& second() const { return q_; }

private:
    int family_;
    std::string p_, q_;
};

// A mixed E1 term that the Leibniz normal form does not cover.
class IrreducibleTerm : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SecondOrderState {
    FirstOrderState first;
    // Entry laws used when a Wigner marginal falls back to the exact oracle.
    Laws laws;
    bool oracle_marginals = true;
    OracleOptions oracle;
    // Explicit marginal values per family, keyed by the ordered pair of trace-class keys.
    std::map<int, std::map<std::pair<DeltaMonomial, DeltaMonomial>, Complex>> tables;

    // Stores the value for (p, q) and (q, p). Throws std::invalid_argument on a
    // conflicting value or when p, q are not single-family monomials of that family.
    void set_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q, const Complex& value);
};

// One E_n component. For n >= 2 the factors are centered (Delta of each is 0),
// carry their family tags and alternate cyclically. For n = 1 the component is
// a monomial whose sigma blocks are each single-family.
struct EnComponent {
    int n = 1;
    std::vector<TaggedFactor> factors;
    DeltaMonomial e1;
};

struct WeightedComponent {
    Complex coefficient;
    EnComponent component;
};

// Decomposition up to rotations and ground block changes (moves that preserve
// every tracial Delta-invariant functional).
std::vector<WeightedComponent> decompose_En(const DeltaPolynomial& p);

// Product a = Delta(F_0) ... Delta(F_r) under the trace, each F_i with single-family
// blocks only. Returns {m} when m is single-family.
std::vector<DeltaMonomial> leibniz_factors(const DeltaMonomial& m);

struct MarginalLookup {
    int family = 0;
    DeltaMonomial p, q;
    Complex value;
    enum class Source { table, oracle, deterministic } source = Source::table;
};

class SecondOrderEvaluator {
public:
    explicit SecondOrderEvaluator(SecondOrderState state);

    const SecondOrderState& state() const { return state_; }
    const PhiEvaluator& phi() const { return phi_; }

    Complex eval(const DeltaPolynomial& p, const DeltaPolynomial& q) const;
    Complex eval_components(const EnComponent& a, const EnComponent& b) const;

    // Sum over rotations i of prod_k phi(a_k b_{(i - k) mod n}); b is the second
    // slot as written. Use adjoint factors in reverse order for phi2(a, b*).
    Complex mingo_speicher(const std::vector<TaggedFactor>& a, const std::vector<TaggedFactor>& b) const;

    // phi2(D[a] D[b], c) = phi2(a, c) phi(b) + phi(a) phi2(b, c)
    Complex leibniz_reduce(const DeltaPolynomial& a, const DeltaPolynomial& b, const DeltaPolynomial& c) const;

    // Single-family lookup: explicit table, then oracle, then zero for deterministic letters.
    Complex marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const;

    std::vector<MarginalLookup> lookups() const;
    void clear_lookups() const;
    // Oracle results keyed by family and ordered key pair; shareable across evaluators.
    using OracleCache = std::map<std::tuple<int, DeltaMonomial, DeltaMonomial>, Complex>;
    OracleCache oracle_cache() const;
    void seed_oracle_cache(const OracleCache& cache);

private:
    Complex e1_pair(const DeltaMonomial& e, const DeltaMonomial& f) const;
    bool has_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const;
    Complex oracle_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const;

    SecondOrderState state_;
    PhiEvaluator phi_;
    mutable std::shared_mutex mutex_;
    mutable OracleCache cache_;
    mutable std::mutex log_mutex_;
    mutable std::vector<MarginalLookup> log_;
    mutable std::map<std::pair<DeltaMonomial, DeltaMonomial>, Complex> e1_memo_;
};

Complex eval_phi2(const DeltaPolynomial& p, const DeltaPolynomial& q, const SecondOrderState& state);

// Sum of the n rotations of each tuple, expanded. Tuples must be cyclically
// alternating with n >= 2.
DeltaPolynomial build_Fn(const std::vector<std::vector<TaggedFactor>>& tuples);

// Product of the factor values in order.
DeltaPolynomial product_of(const std::vector<TaggedFactor>& factors);

// f - D[f]
DeltaPolynomial centered(const DeltaPolynomial& f);

}  // namespace deltafree
