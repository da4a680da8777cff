#include "deltafree/first_order.hpp"

#include <mutex>
#include <set>
#include <sstream>

#include "deltafree/expression.hpp"

namespace deltafree {

int family_tag(const Letter& l) { return l.is_wigner() ? l.family : kDeterministicTag; }

std::optional<int> single_tag(const DeltaMonomial& m) {
    std::optional<int> tag;
    for (const auto& l : m.letters()) {
        int t = family_tag(l);
        if (tag && *tag != t) return std::nullopt;
        tag = t;
    }
    return tag;
}

std::optional<int> single_tag(const DeltaPolynomial& p) {
    std::optional<int> tag;
    for (const auto& [m, c] : p.terms()) {
        if (m.is_empty()) continue;
        auto t = single_tag(m);
        if (!t || (tag && *tag != *t)) return std::nullopt;
        tag = t;
    }
    return tag;
}

Complex FirstOrderState::variance(int family) const {
    auto it = wigner_variance.find(family);
    return it == wigner_variance.end() ? Complex(1) : it->second;
}

void FirstOrderState::set_table_value(const DeltaMonomial& m, const Complex& v) {
    DeltaMonomial key = trace_class_key(m);
    auto [it, inserted] = y_table.emplace(key, v);
    if (!inserted && it->second != v)
        throw std::invalid_argument("inconsistent y-moment table entries for " + render(m));
}

Complex FirstOrderState::y_word_moment(const DeltaMonomial& word) const {
    if (word.is_empty()) return Complex(1);
    if (auto it = y_table.find(cyclic_normal_form(word)); it != y_table.end()) return it->second;
    // Scalar families commute out; what remains must be a single-family word.
    Complex factor(1);
    std::vector<Letter> rest;
    for (const auto& l : word.letters()) {
        auto it = y_families.find(l.family);
        if (it != y_families.end() && it->second.source == DeterministicFamily::Source::scalar)
            factor *= l.variant == Variant::star ? it->second.scalar.conj() : it->second.scalar;
        else
            rest.push_back(l);
    }
    if (rest.empty()) return factor;
    DeltaMonomial core = DeltaMonomial::word(rest);
    if (rest.size() != word.letter_count())
        if (auto it = y_table.find(cyclic_normal_form(core)); it != y_table.end()) return factor * it->second;
    std::set<int> fams;
    for (const auto& l : rest) fams.insert(l.family);
    auto it = fams.size() == 1 ? y_families.find(*fams.begin()) : y_families.end();
    if (it == y_families.end() || it->second.source != DeterministicFamily::Source::power_moments ||
        rest.size() >= it->second.moments.size())
        throw UndefinedMoment(render(word));
    return factor * it->second.moments[rest.size()];
}

std::string FirstOrderState::fingerprint() const {
    std::ostringstream os;
    os << "h5=" << h5 << ";var";
    for (const auto& [f, v] : wigner_variance) os << ':' << f << '=' << format(v);
    os << ";y";
    for (const auto& [f, d] : y_families) {
        os << ':' << f << '/' << static_cast<int>(d.source) << '/' << d.self_adjoint << '/' << format(d.scalar);
        for (const auto& m : d.moments) os << ',' << format(m);
    }
    os << ";t";
    for (const auto& [m, v] : y_table) os << ':' << render(m) << '=' << format(v);
    return os.str();
}

PhiEvaluator::PhiEvaluator(FirstOrderState state, bool memoize, std::size_t max_depth)
    : state_(std::move(state)), memoize_(memoize), max_depth_(max_depth) {}

std::size_t PhiEvaluator::memo_size() const {
    std::shared_lock lock(mutex_);
    return memo_.size();
}

Complex PhiEvaluator::eval(const DeltaPolynomial& p) const {
    Complex total;
    for (const auto& [m, c] : p.terms()) total += c * eval_monomial(m, 0);
    return total;
}

Complex PhiEvaluator::eval(const DeltaMonomial& m) const { return eval_monomial(m, 0); }

Complex PhiEvaluator::eval_monomial(const DeltaMonomial& m, std::size_t depth) const {
    if (m.is_empty()) return Complex(1);
    if (depth > max_depth_) throw RecursionLimit("recursion depth guard exceeded at " + render(m));
    if (!memoize_) return compute(m, depth);
    DeltaMonomial key = cyclic_normal_form(m);
    {
        std::shared_lock lock(mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    Complex v = compute(key, depth);
    std::unique_lock lock(mutex_);
    memo_.emplace(std::move(key), v);
    return v;
}

Complex PhiEvaluator::y_only(const DeltaMonomial& m) const {
    if (!m.has_brackets()) return state_.y_word_moment(m);
    if (state_.h5) {
        Complex v(1);
        for (const auto& w : block_words(m, sigma_partition(m))) v *= state_.y_word_moment(w);
        return v;
    }
    if (auto it = state_.y_table.find(trace_class_key(m)); it != state_.y_table.end()) return it->second;
    throw UndefinedMoment(render(m));
}

Complex PhiEvaluator::compute(const DeltaMonomial& m, std::size_t depth) const {
    if (!m.has_wigner()) return y_only(m);
    const std::string& t = m.tokens();
    auto atoms = top_level_atoms(t);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        auto c = static_cast<unsigned char>(t[atoms[k].first]);
        if (!is_letter_code(c) || !Letter::from_code(c).is_wigner()) continue;
        // Rotate to x m' and sum over m' = l x r.
        std::string rot = t.substr(atoms[k].second) + t.substr(0, atoms[k].first);
        auto rest = top_level_atoms(rot);
        Complex sum;
        for (std::size_t j = 0; j < rest.size(); ++j) {
            if (static_cast<unsigned char>(rot[rest[j].first]) != c) continue;
            Complex left = eval_monomial(DeltaMonomial::from_canonical(rot.substr(0, rest[j].first)), depth + 1);
            if (left.is_zero()) continue;
            left *= eval_monomial(DeltaMonomial::from_canonical(rot.substr(rest[j].second)), depth + 1);
            sum += left;
        }
        return sum.is_zero() ? sum : state_.variance(Letter::from_code(c).family) * sum;
    }
    // Every Wigner letter sits inside a bracket: open the bracket holding the
    // shallowest one, which strictly lowers the minimal Wigner depth.
    std::size_t best = 0, best_depth = SIZE_MAX, bracket_index = 0;
    for (auto [b, e] : atoms) {
        if (static_cast<unsigned char>(t[b]) != kOpen) continue;
        std::size_t depth_here = 0, min_depth = SIZE_MAX;
        for (std::size_t i = b; i < e; ++i) {
            auto c = static_cast<unsigned char>(t[i]);
            if (c == kOpen) ++depth_here;
            else if (c == kClose) --depth_here;
            else if (Letter::from_code(c).is_wigner() && depth_here < min_depth) min_depth = depth_here;
        }
        if (min_depth < best_depth) {
            best_depth = min_depth;
            best = bracket_index;
        }
        ++bracket_index;
    }
    return eval_monomial(ground_block_change(m, best), depth + 1);
}

Complex eval_phi(const DeltaPolynomial& p, const FirstOrderState& state) { return PhiEvaluator(state).eval(p); }

namespace {

using Cycle = std::vector<TaggedFactor>;

void merge_adjacent(Cycle& c) {
    bool changed = true;
    while (changed && c.size() > 1) {
        changed = false;
        for (std::size_t i = 0; i < c.size(); ++i) {
            std::size_t j = (i + 1) % c.size();
            if (j == i || c[i].tag != c[j].tag) continue;
            if (j == 0) {
                // Cyclic wrap: phi(a1 ... an) = phi(an a1 ... a(n-1)).
                c[0].value = c[i].value * c[0].value;
                c.pop_back();
            } else {
                c[i].value = c[i].value * c[j].value;
                c.erase(c.begin() + static_cast<long>(j));
            }
            changed = true;
            break;
        }
    }
}

Complex expand_centered(Cycle c, const PhiEvaluator& phi) {
    merge_adjacent(c);
    if (c.empty()) return Complex(1);
    if (c.size() == 1) return phi.eval(c[0].value);
    for (std::size_t i = 0; i < c.size(); ++i) {
        Complex mean = phi.eval(c[i].value);
        if (mean.is_zero()) continue;
        Cycle centered = c;
        centered[i].value -= DeltaPolynomial::constant(mean);
        Cycle dropped = c;
        dropped.erase(dropped.begin() + static_cast<long>(i));
        return expand_centered(std::move(centered), phi) + mean * expand_centered(std::move(dropped), phi);
    }
    return Complex();
}

}  // namespace

Complex freeness_factor(const std::vector<TaggedFactor>& tuple, const PhiEvaluator& phi) {
    if (tuple.empty()) return Complex(1);
    if (tuple.size() == 1) return phi.eval(tuple[0].value);
    for (std::size_t i = 0; i < tuple.size(); ++i)
        if (tuple[i].tag == tuple[(i + 1) % tuple.size()].tag)
            throw std::invalid_argument("freeness_factor: tuple is not cyclically alternating");
    return expand_centered(tuple, phi);
}

H5Report check_h5(const DeltaMonomial& m, const PhiEvaluator& phi) {
    H5Report r;
    r.phi = phi.eval(m);
    r.product = Complex(1);
    for (const auto& w : block_words(m, sigma_partition(m))) r.product *= phi.eval(w);
    r.equal = r.phi == r.product;
    return r;
}

}  // namespace deltafree
