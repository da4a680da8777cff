#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace deltafree {

enum class Kind : std::uint8_t { wigner = 0, deterministic = 1 };

// Deterministic letters record their adjoint behaviour in the letter itself so
// that adjoint() needs no alphabet lookup: a self-adjoint family has a single
// letter, a general family has the pair (plain, star).
enum class Variant : std::uint8_t { self_adjoint = 0, plain = 1, star = 2 };

struct Letter {
    Kind kind = Kind::wigner;
    int family = 1;
    Variant variant = Variant::self_adjoint;

    static Letter x(int family) { return {Kind::wigner, family, Variant::self_adjoint}; }
    static Letter y(int family, Variant v = Variant::self_adjoint) { return {Kind::deterministic, family, v}; }

    bool is_wigner() const { return kind == Kind::wigner; }
    Letter adjoint() const;
    std::string name() const;

    unsigned char code() const;
    static Letter from_code(unsigned char c);

    friend bool operator==(const Letter&, const Letter&) = default;
    friend auto operator<=>(const Letter& a, const Letter& b) { return a.code() <=> b.code(); }
};

// Token codes of the flat monomial encoding. ']' sorts below every letter and
// '[' above, which makes plain string comparison agree with the recursive atom
// order (letters before brackets, brackets by content).
inline constexpr unsigned char kClose = 1;
inline constexpr unsigned char kOpen = 254;
inline constexpr int kMaxWignerFamily = 60;
inline constexpr int kMaxDeterministicFamily = 63;

inline bool is_letter_code(unsigned char c) { return c >= 2 && c < kOpen; }

class AlphabetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Alphabet {
public:
    // Accepts every x family and treats every y family as general (y and y').
    static Alphabet permissive();

    void declare_wigner(int family);
    void declare_deterministic(int family, bool self_adjoint);

    // Resolves the surface letter "x3", "y2" (adjoint=false) or its adjoint.
    Letter resolve(char kind, int family, bool adjoint) const;
    bool declared(const Letter& l) const;

    const std::set<int>& wigner_families() const { return wigner_; }
    const std::map<int, bool>& deterministic_families() const { return deterministic_; }

private:
    bool permissive_ = false;
    std::set<int> wigner_;
    std::map<int, bool> deterministic_;  // family -> self-adjoint
};

}  // namespace deltafree
