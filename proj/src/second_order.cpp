#include "deltafree/second_order.hpp"

#include <deque>
#include <set>

#include "deltafree/expression.hpp"

namespace deltafree {

MissingMarginal::MissingMarginal(int family, const std::string& p, const std::string& q)
    : std::runtime_error("missing second-order marginal for family " + std::to_string(family) + ": (" + p + ", " + q +
                         ")"),
      family_(family), p_(p), q_(q) {}

namespace {

bool at_open(const std::string& t, Span s) { return static_cast<unsigned char>(t[s.first]) == kOpen; }

std::set<int> tags_of(const DeltaMonomial& m) {
    std::set<int> out;
    for (const auto& l : m.letters()) out.insert(family_tag(l));
    return out;
}

// Tag sets of the sigma blocks.
std::vector<std::set<int>> block_tags(const DeltaMonomial& m, std::optional<std::size_t>* ground = nullptr) {
    NCPartition sigma = sigma_partition(m);
    std::vector<Letter> letters = m.letters();
    std::vector<std::set<int>> out;
    for (const auto& b : sigma.blocks) {
        std::set<int> t;
        for (int pos : b) t.insert(family_tag(letters[static_cast<std::size_t>(pos - 1)]));
        out.push_back(std::move(t));
    }
    if (ground) *ground = sigma.ground;
    return out;
}

bool has_mixed_block(const DeltaMonomial& m) {
    for (const auto& t : block_tags(m))
        if (t.size() > 1) return true;
    return false;
}

bool ground_is_mixed(const DeltaMonomial& m) {
    std::optional<std::size_t> g;
    auto tags = block_tags(m, &g);
    return g && tags[*g].size() > 1;
}

DeltaMonomial bracket_content(const std::string& t, Span s) {
    return DeltaMonomial::from_canonical(t.substr(s.first + 1, s.second - s.first - 2));
}

// Walks the ground into a mixed block with ground block changes.
DeltaMonomial mixed_block_to_ground(DeltaMonomial m) {
    for (std::size_t guard = 0; guard < 4096; ++guard) {
        if (ground_is_mixed(m)) return m;
        const std::string& t = m.tokens();
        std::size_t which = 0;
        bool moved = false;
        for (auto s : top_level_atoms(t)) {
            if (at_open(t, s)) {
                if (has_mixed_block(bracket_content(t, s))) {
                    m = ground_block_change(m, which);
                    moved = true;
                    break;
                }
                ++which;
            }
        }
        if (!moved) return m;
    }
    throw RecursionLimit("ground walk did not terminate");
}

struct Decomposition {
    std::map<DeltaMonomial, Complex> e1;
    std::vector<WeightedComponent> higher;
};

void decompose_monomial(const DeltaMonomial& m0, const Complex& c, Decomposition& out, int depth) {
    if (c.is_zero()) return;
    if (depth > 256) throw RecursionLimit("decomposition too deep");
    if (m0.is_empty() || !has_mixed_block(m0)) {
        out.e1[m0.is_empty() ? m0 : cyclic_normal_form(m0)] += c;
        return;
    }
    DeltaMonomial m = mixed_block_to_ground(m0);
    const std::string& t = m.tokens();
    auto atoms = top_level_atoms(t);
    std::vector<int> tag(atoms.size(), -1);
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (!at_open(t, atoms[k])) tag[k] = family_tag(Letter::from_code(static_cast<unsigned char>(t[atoms[k].first])));
    // Start at a letter whose cyclic predecessor letter has another tag.
    std::size_t start = atoms.size();
    int prev = -1;
    for (std::size_t k = atoms.size(); k-- > 0;)
        if (tag[k] >= 0) {
            prev = tag[k];
            break;
        }
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (tag[k] < 0) continue;
        if (tag[k] != prev) {
            start = k;
            break;
        }
        prev = tag[k];
    }
    std::vector<std::pair<int, std::string>> runs;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        std::size_t k = (start + i) % atoms.size();
        std::string piece = t.substr(atoms[k].first, atoms[k].second - atoms[k].first);
        if (tag[k] >= 0 && (runs.empty() || runs.back().first != tag[k])) runs.emplace_back(tag[k], "");
        runs.back().second += piece;
    }
    WeightedComponent comp;
    comp.coefficient = c;
    comp.component.n = static_cast<int>(runs.size());
    std::string rotated;
    for (const auto& [tg, tokens] : runs) {
        rotated += tokens;
        comp.component.factors.push_back({centered(DeltaPolynomial(DeltaMonomial::from_canonical(tokens))), tg});
    }
    DeltaPolynomial residual = DeltaPolynomial(DeltaMonomial::from_canonical(rotated)) - product_of(comp.component.factors);
    out.higher.push_back(std::move(comp));
    for (const auto& [mono, coef] : residual.terms()) decompose_monomial(mono, c * coef, out, depth + 1);
}

Decomposition decompose(const DeltaPolynomial& p) {
    Decomposition d;
    for (const auto& [m, c] : p.terms()) decompose_monomial(m, c, d, 0);
    for (auto it = d.e1.begin(); it != d.e1.end();) it = it->second.is_zero() ? d.e1.erase(it) : std::next(it);
    return d;
}

bool brackets_clustered(const std::string& t, const std::vector<Span>& atoms) {
    // At most one cyclic run of bracket atoms.
    int changes = 0;
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (at_open(t, atoms[k]) != at_open(t, atoms[(k + 1) % atoms.size()])) ++changes;
    return changes <= 2;
}

}  // namespace

DeltaPolynomial centered(const DeltaPolynomial& f) { return f - delta(f); }

DeltaPolynomial product_of(const std::vector<TaggedFactor>& factors) {
    DeltaPolynomial out = DeltaPolynomial::constant(Complex(1));
    for (const auto& f : factors) out = out * f.value;
    return out;
}

std::vector<WeightedComponent> decompose_En(const DeltaPolynomial& p) {
    Decomposition d = decompose(p);
    std::vector<WeightedComponent> out;
    for (const auto& [m, c] : d.e1) {
        WeightedComponent w;
        w.coefficient = c;
        w.component.n = 1;
        w.component.e1 = m;
        out.push_back(std::move(w));
    }
    for (auto& h : d.higher) out.push_back(std::move(h));
    return out;
}

std::vector<DeltaMonomial> leibniz_factors(const DeltaMonomial& m) {
    if (!m.has_brackets()) return {m};
    std::set<DeltaMonomial> seen{cyclic_normal_form(m)};
    std::deque<DeltaMonomial> todo{*seen.begin()};
    while (!todo.empty()) {
        DeltaMonomial cur = todo.front();
        todo.pop_front();
        const std::string& t = cur.tokens();
        auto atoms = top_level_atoms(t);
        if (brackets_clustered(t, atoms)) {
            // Rotate to  w D[A1] ... D[Ar]  and read off w, A1, ..., Ar.
            std::size_t first_letter = atoms.size();
            for (std::size_t k = 0; k < atoms.size(); ++k)
                if (!at_open(t, atoms[k]) && at_open(t, atoms[(k + atoms.size() - 1) % atoms.size()])) first_letter = k;
            std::vector<DeltaMonomial> out;
            std::string word;
            std::vector<DeltaMonomial> contents;
            for (std::size_t i = 0; i < atoms.size(); ++i) {
                std::size_t k = (first_letter == atoms.size() ? i : (first_letter + i) % atoms.size());
                if (at_open(t, atoms[k])) contents.push_back(bracket_content(t, atoms[k]));
                else word += t.substr(atoms[k].first, atoms[k].second - atoms[k].first);
            }
            if (!word.empty()) out.push_back(DeltaMonomial::from_canonical(word));
            for (auto& c : contents) out.push_back(std::move(c));
            return out;
        }
        std::size_t nb = top_level_bracket_count(cur);
        for (std::size_t j = 0; j < nb; ++j) {
            DeltaMonomial next = cyclic_normal_form(ground_block_change(cur, j));
            if (seen.insert(next).second) todo.push_back(next);
        }
    }
    throw IrreducibleTerm("no product-of-blocks form for " + render(m));
}

void SecondOrderState::set_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q, const Complex& value) {
    for (const DeltaMonomial* m : {&p, &q}) {
        auto tag = single_tag(*m);
        if (!tag || *tag != family)
            throw std::invalid_argument("marginal entry " + render(*m) + " is not a monomial of family " +
                                        std::to_string(family));
    }
    auto& table = tables[family];
    auto kp = trace_class_key(p), kq = trace_class_key(q);
    for (auto key : {std::make_pair(kp, kq), std::make_pair(kq, kp)}) {
        auto [it, inserted] = table.emplace(key, value);
        if (!inserted && it->second != value)
            throw std::invalid_argument("conflicting marginal values for (" + render(p) + ", " + render(q) + ")");
    }
}

SecondOrderEvaluator::SecondOrderEvaluator(SecondOrderState state) : state_(std::move(state)), phi_(state_.first) {}

Complex SecondOrderEvaluator::eval(const DeltaPolynomial& p, const DeltaPolynomial& q) const {
    Decomposition dp = decompose(p), dq = decompose(q);
    Complex total;
    for (const auto& [e, ce] : dp.e1)
        for (const auto& [f, cf] : dq.e1) total += ce * cf * e1_pair(e, f);
    for (const auto& a : dp.higher)
        for (const auto& b : dq.higher)
            if (a.component.n == b.component.n)
                total += a.coefficient * b.coefficient * mingo_speicher(a.component.factors, b.component.factors);
    return total;
}

Complex SecondOrderEvaluator::eval_components(const EnComponent& a, const EnComponent& b) const {
    if (a.n != b.n) return Complex();
    if (a.n == 1) return e1_pair(a.e1, b.e1);
    return mingo_speicher(a.factors, b.factors);
}

Complex SecondOrderEvaluator::mingo_speicher(const std::vector<TaggedFactor>& a, const std::vector<TaggedFactor>& b) const {
    std::size_t n = a.size();
    if (b.size() != n) return Complex();
    for (const auto* tuple : {&a, &b}) {
        if (n < 2) throw std::invalid_argument("mingo_speicher needs tuples of length >= 2");
        for (std::size_t k = 0; k < n; ++k)
            if ((*tuple)[k].tag == (*tuple)[(k + 1) % n].tag)
                throw std::invalid_argument("mingo_speicher: tuple is not cyclically alternating");
    }
    Complex total;
    for (std::size_t i = 0; i < n; ++i) {
        bool aligned = true;
        for (std::size_t k = 0; k < n && aligned; ++k) aligned = a[k].tag == b[(i + n - k) % n].tag;
        if (!aligned) continue;
        Complex prod(1);
        for (std::size_t k = 0; k < n && !prod.is_zero(); ++k) prod *= phi_.eval(a[k].value * b[(i + n - k) % n].value);
        total += prod;
    }
    return total;
}

Complex SecondOrderEvaluator::leibniz_reduce(const DeltaPolynomial& a, const DeltaPolynomial& b,
                                             const DeltaPolynomial& c) const {
    return eval(a, c) * phi_.eval(b) + phi_.eval(a) * eval(b, c);
}

Complex SecondOrderEvaluator::e1_pair(const DeltaMonomial& e, const DeltaMonomial& f) const {
    if (e.is_empty() || f.is_empty()) return Complex();
    auto key = e < f ? std::make_pair(e, f) : std::make_pair(f, e);
    {
        std::shared_lock lock(mutex_);
        auto it = e1_memo_.find(key);
        if (it != e1_memo_.end()) return it->second;
    }
    std::set<int> te = tags_of(e), tf = tags_of(f);
    Complex value;
    bool disjoint = true;
    for (int t : te) disjoint = disjoint && !tf.count(t);
    if (disjoint) {
        value = Complex();
    } else if (te.size() == 1 && tf.size() == 1 && has_marginal(*te.begin(), e, f)) {
        value = marginal(*te.begin(), e, f);
    } else if (te.size() == 1 && tf.size() == 1 && leibniz_factors(e).size() < 2 && leibniz_factors(f).size() < 2) {
        value = marginal(*te.begin(), e, f);  // reports the missing pair
    } else {
        // Split the mixed side into blocks: sum_j phi2(F_j, other) prod_{i != j} phi(F_i).
        bool split_e = te.size() > 1 || (tf.size() == 1 && leibniz_factors(e).size() >= 2);
        const DeltaMonomial& mixed = split_e ? e : f;
        const DeltaMonomial& other = split_e ? f : e;
        auto factors = leibniz_factors(mixed);
        if (factors.size() < 2) throw IrreducibleTerm("mixed E1 term without a block split: " + render(mixed));
        std::vector<Complex> phis;
        for (const auto& F : factors) phis.push_back(phi_.eval(F));
        for (std::size_t j = 0; j < factors.size(); ++j) {
            Complex rest(1);
            for (std::size_t i = 0; i < factors.size() && !rest.is_zero(); ++i)
                if (i != j) rest *= phis[i];
            if (!rest.is_zero()) value += rest * e1_pair(factors[j], other);
        }
    }
    std::unique_lock lock(mutex_);
    e1_memo_.emplace(key, value);
    return value;
}

bool SecondOrderEvaluator::has_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const {
    if (family == kDeterministicTag || state_.oracle_marginals) return true;
    auto table = state_.tables.find(family);
    return table != state_.tables.end() && table->second.count({trace_class_key(p), trace_class_key(q)});
}

Complex SecondOrderEvaluator::marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const {
    auto kp = trace_class_key(p), kq = trace_class_key(q);
    MarginalLookup rec{family, kp, kq, Complex(), MarginalLookup::Source::table};
    auto table = state_.tables.find(family);
    bool found = false;
    if (table != state_.tables.end()) {
        auto it = table->second.find({kp, kq});
        if (it != table->second.end()) {
            rec.value = it->second;
            found = true;
        }
    }
    if (!found) {
        if (family == kDeterministicTag) {
            rec.source = MarginalLookup::Source::deterministic;
        } else if (state_.oracle_marginals) {
            rec.source = MarginalLookup::Source::oracle;
            rec.value = oracle_marginal(family, kp, kq);
        } else {
            throw MissingMarginal(family, render(p), render(q));
        }
    }
    std::lock_guard lock(log_mutex_);
    log_.push_back(rec);
    return rec.value;
}

Complex SecondOrderEvaluator::oracle_marginal(int family, const DeltaMonomial& p, const DeltaMonomial& q) const {
    auto key = p < q ? std::make_tuple(family, p, q) : std::make_tuple(family, q, p);
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
    }
    Complex value = limit_covariance(p, q, state_.laws, state_.oracle);
    std::size_t k = p.letter_count() + q.letter_count();
    Complex v = state_.first.variance(family);
    if (v != Complex(1) && !value.is_zero()) {
        if (k % 2) throw MissingMarginal(family, render(p), render(q));
        value *= pow(v, static_cast<unsigned>(k / 2));
    }
    std::unique_lock lock(mutex_);
    cache_.emplace(key, value);
    return value;
}

std::vector<MarginalLookup> SecondOrderEvaluator::lookups() const {
    std::lock_guard lock(log_mutex_);
    return log_;
}

void SecondOrderEvaluator::clear_lookups() const {
    std::lock_guard lock(log_mutex_);
    log_.clear();
}

SecondOrderEvaluator::OracleCache SecondOrderEvaluator::oracle_cache() const {
    std::shared_lock lock(mutex_);
    return cache_;
}

void SecondOrderEvaluator::seed_oracle_cache(const OracleCache& cache) {
    std::unique_lock lock(mutex_);
    for (const auto& [k, v] : cache) cache_.emplace(k, v);
}

Complex eval_phi2(const DeltaPolynomial& p, const DeltaPolynomial& q, const SecondOrderState& state) {
    return SecondOrderEvaluator(state).eval(p, q);
}

DeltaPolynomial build_Fn(const std::vector<std::vector<TaggedFactor>>& tuples) {
    DeltaPolynomial out;
    for (const auto& tuple : tuples) {
        std::size_t n = tuple.size();
        if (n < 2) throw std::invalid_argument("build_Fn needs tuples of length >= 2");
        for (std::size_t k = 0; k < n; ++k)
            if (tuple[k].tag == tuple[(k + 1) % n].tag)
                throw std::invalid_argument("build_Fn: tuple is not cyclically alternating");
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<TaggedFactor> rot;
            for (std::size_t k = 0; k < n; ++k) rot.push_back(tuple[(i + k) % n]);
            out += product_of(rot);
        }
    }
    return out;
}

}  // namespace deltafree
