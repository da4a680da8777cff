#include "deltafree/letter.hpp"

namespace deltafree {

Letter Letter::adjoint() const {
    Letter l = *this;
    if (variant == Variant::plain)
        l.variant = Variant::star;
    else if (variant == Variant::star)
        l.variant = Variant::plain;
    return l;
}

std::string Letter::name() const {
    std::string s = (kind == Kind::wigner ? "x" : "y") + std::to_string(family);
    if (variant == Variant::star) s += "'";
    return s;
}

unsigned char Letter::code() const {
    if (kind == Kind::wigner) return static_cast<unsigned char>(1 + family);
    return static_cast<unsigned char>(2 + kMaxWignerFamily + 3 * (family - 1) + static_cast<int>(variant));
}

Letter Letter::from_code(unsigned char c) {
    int v = c;
    if (v >= 2 && v < 2 + kMaxWignerFamily) return Letter::x(v - 1);
    v -= 2 + kMaxWignerFamily;
    return Letter::y(v / 3 + 1, static_cast<Variant>(v % 3));
}

Alphabet Alphabet::permissive() {
    Alphabet a;
    a.permissive_ = true;
    return a;
}

void Alphabet::declare_wigner(int family) {
    if (family < 1 || family > kMaxWignerFamily)
        throw AlphabetError("wigner family index out of range: " + std::to_string(family));
    wigner_.insert(family);
}

void Alphabet::declare_deterministic(int family, bool self_adjoint) {
    if (family < 1 || family > kMaxDeterministicFamily)
        throw AlphabetError("deterministic family index out of range: " + std::to_string(family));
    deterministic_[family] = self_adjoint;
}

Letter Alphabet::resolve(char kind, int family, bool adjoint) const {
    if (kind == 'x') {
        if (family < 1 || family > kMaxWignerFamily || (!permissive_ && !wigner_.count(family)))
            throw AlphabetError("undeclared letter x" + std::to_string(family));
        return Letter::x(family);
    }
    if (family < 1 || family > kMaxDeterministicFamily)
        throw AlphabetError("undeclared letter y" + std::to_string(family));
    auto it = deterministic_.find(family);
    bool self_adjoint;
    if (it != deterministic_.end())
        self_adjoint = it->second;
    else if (permissive_)
        self_adjoint = false;
    else
        throw AlphabetError("undeclared letter y" + std::to_string(family));
    if (self_adjoint) return Letter::y(family);
    return Letter::y(family, adjoint ? Variant::star : Variant::plain);
}

bool Alphabet::declared(const Letter& l) const {
    if (permissive_) return true;
    if (l.is_wigner()) return wigner_.count(l.family) > 0;
    auto it = deterministic_.find(l.family);
    if (it == deterministic_.end()) return false;
    return it->second == (l.variant == Variant::self_adjoint);
}

}  // namespace deltafree
