#include "deltafree/monomial.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <set>
#include <stdexcept>

namespace deltafree {

DeltaMonomial DeltaMonomial::from_canonical(std::string tokens) { return DeltaMonomial(std::move(tokens)); }

DeltaMonomial DeltaMonomial::letter(Letter l) { return DeltaMonomial(std::string(1, static_cast<char>(l.code()))); }

DeltaMonomial DeltaMonomial::word(const std::vector<Letter>& letters) {
    std::string t;
    t.reserve(letters.size());
    for (const auto& l : letters) t.push_back(static_cast<char>(l.code()));
    return DeltaMonomial(std::move(t));
}

std::size_t DeltaMonomial::letter_count() const {
    std::size_t n = 0;
    for (unsigned char c : tokens_) n += is_letter_code(c);
    return n;
}

std::vector<Letter> DeltaMonomial::letters() const {
    std::vector<Letter> out;
    for (unsigned char c : tokens_)
        if (is_letter_code(c)) out.push_back(Letter::from_code(c));
    return out;
}

bool DeltaMonomial::has_wigner() const {
    for (unsigned char c : tokens_)
        if (is_letter_code(c) && Letter::from_code(c).is_wigner()) return true;
    return false;
}

bool DeltaMonomial::has_brackets() const { return tokens_.find(static_cast<char>(kOpen)) != std::string::npos; }

namespace {

unsigned char at(std::string_view s, std::size_t i) { return static_cast<unsigned char>(s[i]); }

std::size_t atom_end(std::string_view s, std::size_t i) {
    if (at(s, i) != kOpen) return i + 1;
    int depth = 0;
    for (std::size_t j = i; j < s.size(); ++j) {
        if (at(s, j) == kOpen) ++depth;
        else if (at(s, j) == kClose && --depth == 0) return j + 1;
    }
    throw std::invalid_argument("unbalanced bracket");
}

// Appends D[inner] in canonical form, inner already canonical: bracket atoms at
// either border of the content are hoisted out.
void emit_bracket(const std::string& inner, std::string& out) {
    auto atoms = top_level_atoms(inner);
    std::size_t first = atoms.size(), last = atoms.size();
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (is_letter_code(at(inner, atoms[k].first))) {
            if (first == atoms.size()) first = k;
            last = k;
        }
    }
    if (first == atoms.size()) {
        out += inner;
        return;
    }
    out.append(inner, 0, atoms[first].first);
    out.push_back(static_cast<char>(kOpen));
    out.append(inner, atoms[first].first, atoms[last].second - atoms[first].first);
    out.push_back(static_cast<char>(kClose));
    out.append(inner, atoms[last].second, std::string::npos);
}

void canon_seq(std::string_view raw, std::size_t& i, std::string& out) {
    while (i < raw.size() && at(raw, i) != kClose) {
        if (at(raw, i) == kOpen) {
            ++i;
            std::string inner;
            canon_seq(raw, i, inner);
            if (i >= raw.size()) throw std::invalid_argument("unbalanced bracket");
            ++i;
            emit_bracket(inner, out);
        } else {
            out.push_back(raw[i++]);
        }
    }
}

}  // namespace

std::vector<Span> top_level_atoms(std::string_view tokens) {
    std::vector<Span> out;
    for (std::size_t i = 0; i < tokens.size();) {
        std::size_t e = atom_end(tokens, i);
        out.emplace_back(i, e);
        i = e;
    }
    return out;
}

DeltaMonomial normalize(std::string_view raw) {
    std::string out;
    std::size_t i = 0;
    canon_seq(raw, i, out);
    if (i != raw.size()) throw std::invalid_argument("unbalanced bracket");
    return DeltaMonomial::from_canonical(std::move(out));
}

DeltaMonomial concat(const DeltaMonomial& a, const DeltaMonomial& b) {
    return DeltaMonomial::from_canonical(a.tokens() + b.tokens());
}

DeltaMonomial delta(const DeltaMonomial& m) {
    std::string out;
    emit_bracket(m.tokens(), out);
    return DeltaMonomial::from_canonical(std::move(out));
}

DeltaMonomial adjoint(const DeltaMonomial& m) {
    std::string t(m.tokens().rbegin(), m.tokens().rend());
    for (auto& ch : t) {
        auto c = static_cast<unsigned char>(ch);
        if (c == kOpen) ch = static_cast<char>(kClose);
        else if (c == kClose) ch = static_cast<char>(kOpen);
        else ch = static_cast<char>(Letter::from_code(c).adjoint().code());
    }
    return DeltaMonomial::from_canonical(std::move(t));
}

NCPartition sigma_partition(const DeltaMonomial& m) {
    NCPartition p;
    std::vector<std::vector<int>> blocks;
    std::vector<int> stack;
    int ground = -1;
    int pos = 0;
    for (unsigned char c : m.tokens()) {
        if (c == kOpen) {
            stack.push_back(static_cast<int>(blocks.size()));
            blocks.emplace_back();
        } else if (c == kClose) {
            stack.pop_back();
        } else {
            ++pos;
            if (stack.empty()) {
                if (ground < 0) {
                    ground = static_cast<int>(blocks.size());
                    blocks.emplace_back();
                }
                blocks[ground].push_back(pos);
            } else {
                blocks[stack.back()].push_back(pos);
            }
        }
    }
    p.n = pos;
    std::vector<int> order(blocks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return blocks[a].front() < blocks[b].front(); });
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (order[k] == ground) p.ground = k;
        p.blocks.push_back(std::move(blocks[order[k]]));
    }
    return p;
}

DeltaMonomial block_word(const DeltaMonomial& m, const std::vector<int>& block) {
    std::vector<Letter> all = m.letters();
    std::string t;
    for (int pos : block) t.push_back(static_cast<char>(all.at(static_cast<std::size_t>(pos - 1)).code()));
    return DeltaMonomial::from_canonical(std::move(t));
}

std::vector<DeltaMonomial> block_words(const DeltaMonomial& m, const NCPartition& sigma) {
    std::vector<DeltaMonomial> out;
    out.reserve(sigma.blocks.size());
    for (const auto& b : sigma.blocks) out.push_back(block_word(m, b));
    return out;
}

Degrees degrees(const DeltaMonomial& m, const std::function<bool(const Letter&)>& filter) {
    Degrees d;
    int depth = 0;
    for (unsigned char c : m.tokens()) {
        if (c == kOpen) ++depth;
        else if (c == kClose) --depth;
        else if (!filter || filter(Letter::from_code(c))) {
            ++d.full;
            if (depth == 0) ++d.ground;
        }
    }
    return d;
}

std::size_t top_level_bracket_count(const DeltaMonomial& m) {
    std::size_t n = 0;
    for (auto [b, e] : top_level_atoms(m.tokens())) n += at(m.tokens(), b) == kOpen;
    return n;
}

DeltaMonomial ground_block_change(const DeltaMonomial& m, std::size_t which) {
    const std::string& t = m.tokens();
    std::size_t seen = 0;
    for (auto [b, e] : top_level_atoms(t)) {
        if (at(t, b) != kOpen) continue;
        if (seen++ != which) continue;
        std::string raw = t.substr(b + 1, e - b - 2);
        raw.push_back(static_cast<char>(kOpen));
        raw.append(t, e, std::string::npos);
        raw.append(t, 0, b);
        raw.push_back(static_cast<char>(kClose));
        return normalize(raw);
    }
    throw NotApplicable("ground block change not applicable: no top-level bracket");
}

DeltaMonomial cyclic_normal_form(const DeltaMonomial& m) {
    const std::string& t = m.tokens();
    auto atoms = top_level_atoms(t);
    std::string best = t;
    for (std::size_t k = 1; k < atoms.size(); ++k) {
        std::size_t cut = atoms[k].first;
        std::string rot = t.substr(cut) + t.substr(0, cut);
        if (rot < best) best = std::move(rot);
    }
    return DeltaMonomial::from_canonical(std::move(best));
}

DeltaMonomial trace_class_key(const DeltaMonomial& m) {
    std::set<DeltaMonomial> seen;
    std::deque<DeltaMonomial> todo;
    DeltaMonomial start = cyclic_normal_form(m);
    seen.insert(start);
    todo.push_back(start);
    while (!todo.empty()) {
        DeltaMonomial cur = std::move(todo.front());
        todo.pop_front();
        std::size_t nb = top_level_bracket_count(cur);
        std::vector<DeltaMonomial> moves;
        for (std::size_t j = 0; j < nb; ++j) moves.push_back(cyclic_normal_form(ground_block_change(cur, j)));
        moves.push_back(cyclic_normal_form(delta(cur)));
        for (auto& next : moves)
            if (seen.insert(next).second) todo.push_back(std::move(next));
    }
    return *seen.begin();
}

}  // namespace deltafree
