#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "deltafree/letter.hpp"

namespace deltafree {

// A canonical bracketed word. Stored as a flat token string: letter codes plus
// kOpen/kClose. The canonical form never has a bracket whose content is empty
// or starts or ends with a bracket atom.
class DeltaMonomial {
public:
    DeltaMonomial() = default;

    // Trusted constructor; the caller guarantees canonical form.
    static DeltaMonomial from_canonical(std::string tokens);
    static DeltaMonomial letter(Letter l);
    static DeltaMonomial word(const std::vector<Letter>& letters);

    const std::string& tokens() const { return tokens_; }
    bool is_empty() const { return tokens_.empty(); }
    std::size_t letter_count() const;
    std::vector<Letter> letters() const;
    bool has_wigner() const;
    bool has_brackets() const;

    friend bool operator==(const DeltaMonomial&, const DeltaMonomial&) = default;
    friend auto operator<=>(const DeltaMonomial& a, const DeltaMonomial& b) { return a.tokens_ <=> b.tokens_; }

private:
    explicit DeltaMonomial(std::string t) : tokens_(std::move(t)) {}
    std::string tokens_;
};

struct MonomialHash {
    std::size_t operator()(const DeltaMonomial& m) const { return std::hash<std::string>{}(m.tokens()); }
};

// Canonical form of a balanced raw token string (innermost-first, left to right).
DeltaMonomial normalize(std::string_view raw);

DeltaMonomial concat(const DeltaMonomial& a, const DeltaMonomial& b);
DeltaMonomial delta(const DeltaMonomial& m);
DeltaMonomial adjoint(const DeltaMonomial& m);

// [begin, end) spans of the top-level atoms.
using Span = std::pair<std::size_t, std::size_t>;
std::vector<Span> top_level_atoms(std::string_view tokens);

struct NCPartition {
    int n = 0;
    std::vector<std::vector<int>> blocks;  // 1-based positions, ordered by first position
    std::optional<std::size_t> ground;     // nullopt: the monomial is Delta-invariant
};

NCPartition sigma_partition(const DeltaMonomial& m);
// Plain word of the letters of one block.
DeltaMonomial block_word(const DeltaMonomial& m, const std::vector<int>& block);
// Block words of sigma(m) in order, each with the index of its block.
std::vector<DeltaMonomial> block_words(const DeltaMonomial& m, const NCPartition& sigma);

struct Degrees {
    int full = 0;
    int ground = 0;
};
Degrees degrees(const DeltaMonomial& m, const std::function<bool(const Letter&)>& filter = {});

class NotApplicable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::size_t top_level_bracket_count(const DeltaMonomial& m);
// m1 D[p] m2 -> p D[m2 m1] for the which-th top-level bracket.
DeltaMonomial ground_block_change(const DeltaMonomial& m, std::size_t which = 0);

DeltaMonomial cyclic_normal_form(const DeltaMonomial& m);
// Least cyclic normal form reachable by rotations, ground block changes and
// m -> D[m]. These moves generate a symmetric relation (a ground block change
// on a Delta-invariant monomial undoes m -> D[m] up to rotation).
// Monomials with equal keys have equal traces for every tracial Delta-invariant state.
DeltaMonomial trace_class_key(const DeltaMonomial& m);

}  // namespace deltafree
