#include "deltafree/corpus.hpp"

#include <set>

namespace deltafree {

std::vector<std::vector<DeltaMonomial>> monomials_by_degree(const std::vector<Letter>& alphabet, int max_degree) {
    // seqs[d]: all canonical monomials of d letters; atoms[d]: those that are a single letter or bracket.
    std::vector<std::set<DeltaMonomial>> seqs(static_cast<std::size_t>(max_degree + 1));
    std::vector<std::set<DeltaMonomial>> atoms(static_cast<std::size_t>(max_degree + 1));
    if (max_degree >= 0) seqs[0].insert(DeltaMonomial());
    for (int d = 1; d <= max_degree; ++d) {
        auto ud = static_cast<std::size_t>(d);
        auto& out = seqs[ud];
        // Non-bracket-led sequences first, then wrap.
        if (d == 1)
            for (const Letter& l : alphabet) atoms[1].insert(DeltaMonomial::letter(l));
        for (int j = 1; j < d; ++j)
            for (const auto& a : atoms[static_cast<std::size_t>(j)])
                for (const auto& rest : seqs[ud - static_cast<std::size_t>(j)]) out.insert(concat(a, rest));
        for (const auto& a : atoms[ud]) out.insert(a);
        std::set<DeltaMonomial> wrapped;
        for (const auto& s : out) wrapped.insert(delta(s));
        for (const auto& w : wrapped) {
            atoms[ud].insert(w);
            out.insert(w);
        }
    }
    std::vector<std::vector<DeltaMonomial>> result;
    for (auto& s : seqs) result.emplace_back(s.begin(), s.end());
    return result;
}

namespace {

template <class Key>
std::vector<DeltaMonomial> classes(const std::vector<Letter>& alphabet, int max_degree, Key key) {
    auto all = monomials_by_degree(alphabet, max_degree);
    std::vector<DeltaMonomial> out;
    for (std::size_t d = 1; d < all.size(); ++d) {
        std::set<DeltaMonomial> reps;
        for (const auto& m : all[d]) reps.insert(key(m));
        out.insert(out.end(), reps.begin(), reps.end());
    }
    return out;
}

}  // namespace

std::vector<DeltaMonomial> cyclic_classes(const std::vector<Letter>& alphabet, int max_degree) {
    return classes(alphabet, max_degree, [](const DeltaMonomial& m) { return cyclic_normal_form(m); });
}

std::vector<DeltaMonomial> trace_classes(const std::vector<Letter>& alphabet, int max_degree) {
    return classes(alphabet, max_degree, [](const DeltaMonomial& m) { return trace_class_key(m); });
}

}  // namespace deltafree
