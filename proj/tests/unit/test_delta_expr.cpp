#include <doctest.h>

#include <random>
#include <set>

#include "deltafree/expression.hpp"
#include "deltafree/monomial.hpp"

using namespace deltafree;

namespace {

DeltaMonomial M(const char* s) { return parse_monomial(s); }
std::string R(const char* s) { return render(parse(s)); }

// Tree form for an independent rewriter.
struct Node {
    bool bracket = false;
    unsigned char code = 0;
    std::vector<Node> kids;
};

void to_tokens(const std::vector<Node>& seq, std::string& out) {
    for (const auto& n : seq) {
        if (!n.bracket) {
            out.push_back(static_cast<char>(n.code));
            continue;
        }
        out.push_back(static_cast<char>(kOpen));
        to_tokens(n.kids, out);
        out.push_back(static_cast<char>(kClose));
    }
}

std::vector<Node> random_seq(std::mt19937_64& rng, int depth, int& budget) {
    std::vector<Node> seq;
    int len = static_cast<int>(rng() % 4);
    for (int i = 0; i < len && budget > 0; ++i) {
        if (depth < 4 && rng() % 3 == 0) {
            Node b;
            b.bracket = true;
            b.kids = random_seq(rng, depth + 1, budget);
            seq.push_back(std::move(b));
        } else {
            static const Letter pool[] = {Letter::x(1), Letter::x(2), Letter::y(1, Variant::plain), Letter::y(1, Variant::star)};
            Node l;
            l.code = pool[rng() % 4].code();
            seq.push_back(l);
            --budget;
        }
    }
    return seq;
}

// Addresses every redex; applies one picked at random.
struct Redex {
    std::vector<Node>* seq;
    std::size_t index;
    int kind;  // 0 empty, 1 leading bracket, 2 trailing bracket
};

void collect(std::vector<Node>& seq, std::vector<Redex>& out) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
        Node& n = seq[i];
        if (!n.bracket) continue;
        if (n.kids.empty()) out.push_back({&seq, i, 0});
        else {
            if (n.kids.front().bracket) out.push_back({&seq, i, 1});
            if (n.kids.back().bracket) out.push_back({&seq, i, 2});
        }
        collect(n.kids, out);
    }
}

void rewrite_randomly(std::vector<Node>& seq, std::mt19937_64& rng) {
    for (;;) {
        std::vector<Redex> rs;
        collect(seq, rs);
        if (rs.empty()) return;
        Redex r = rs[rng() % rs.size()];
        auto& s = *r.seq;
        if (r.kind == 0) {
            s.erase(s.begin() + static_cast<long>(r.index));
        } else if (r.kind == 1) {
            Node moved = std::move(s[r.index].kids.front());
            s[r.index].kids.erase(s[r.index].kids.begin());
            s.insert(s.begin() + static_cast<long>(r.index), std::move(moved));
        } else {
            Node moved = std::move(s[r.index].kids.back());
            s[r.index].kids.pop_back();
            s.insert(s.begin() + static_cast<long>(r.index) + 1, std::move(moved));
        }
    }
}

bool is_canonical(const std::string& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        auto c = static_cast<unsigned char>(t[i]);
        if (c == kOpen && (i + 1 >= t.size() || !is_letter_code(static_cast<unsigned char>(t[i + 1])))) return false;
        if (c == kClose && (i == 0 || !is_letter_code(static_cast<unsigned char>(t[i - 1])))) return false;
    }
    return true;
}

std::vector<DeltaMonomial> corpus(int count, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<DeltaMonomial> out;
    while (static_cast<int>(out.size()) < count) {
        int budget = 8;
        auto seq = random_seq(rng, 0, budget);
        std::string raw;
        to_tokens(seq, raw);
        out.push_back(normalize(raw));
    }
    return out;
}

}  // namespace

TEST_CASE("parse examples") {
    CHECK(R("x1^2") == "x1^2");
    CHECK(R("y1*x1") == "y1*x1");
    DeltaMonomial ex = M("x1*D[x1^2*y1]*y1*x1*y1*x1");
    CHECK(top_level_bracket_count(ex) == 1);
    CHECK(render(ex) == "x1*D[x1^2*y1]*y1*x1*y1*x1");
    CHECK(R("2*x1 - x1 + x1") == "2*x1");
    CHECK(R("D[x1 + x2]") == "D[x1] + D[x2]");
    CHECK(R("(1/2,-3)*x1") == "(1/2,-3)*x1");
    CHECK(R("0.25*x1") == "1/4*x1");
    CHECK(R("-x1") == "-x1");
    CHECK(R("x1 - x1") == "0");
    CHECK(R("1") == "1");
}

TEST_CASE("parse errors carry positions") {
    CHECK_THROWS_AS(parse("x1 * + x2"), ParseError);
    CHECK_THROWS_AS(parse("D[x1"), ParseError);
    try {
        parse("x1*z2");
        FAIL("no throw");
    } catch (const ParseError& e) {
        CHECK(e.position() == 3);
    }
    Alphabet a;
    a.declare_wigner(1);
    CHECK_THROWS_AS(parse("x2", a), ParseError);
    CHECK_NOTHROW(parse("x1", a));
}

TEST_CASE("adjoint without partner is the letter itself only when declared self-adjoint") {
    Alphabet a;
    a.declare_deterministic(1, true);
    a.declare_deterministic(2, false);
    CHECK(render(parse("y1'", a)) == "y1");
    CHECK(render(parse("y2'", a)) == "y2'");
    CHECK(render(parse("(x1*y2)'", Alphabet::permissive())) == "y2'*x1");
}

TEST_CASE("normalize examples") {
    CHECK(R("D[D[x1*x2]]") == "D[x1*x2]");
    CHECK(R("D[D[x1]*y1*D[x2]]") == "D[x1]*D[y1]*D[x2]");
    CHECK(R("D[1]") == "1");
    CHECK(R("D[D[x1]]") == "D[x1]");
    CHECK(R("D[D[D[x1]*x2]*D[x1]]") == "D[x1]*D[x2]*D[x1]");
}

TEST_CASE("normalize is idempotent and confluent") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 3000; ++trial) {
        int budget = 9;
        auto seq = random_seq(rng, 0, budget);
        std::string raw;
        to_tokens(seq, raw);
        DeltaMonomial n = normalize(raw);
        CHECK(is_canonical(n.tokens()));
        CHECK(normalize(n.tokens()) == n);
        for (int order = 0; order < 3; ++order) {
            auto copy = seq;
            rewrite_randomly(copy, rng);
            std::string other;
            to_tokens(copy, other);
            CHECK(other == n.tokens());
        }
    }
}

TEST_CASE("sigma partition examples") {
    auto s = sigma_partition(M("x1^3"));
    CHECK(s.blocks == std::vector<std::vector<int>>{{1, 2, 3}});
    CHECK(s.ground == 0u);
    s = sigma_partition(M("y1*D[x1*y1]*y1"));
    CHECK(s.blocks == std::vector<std::vector<int>>{{1, 4}, {2, 3}});
    CHECK(s.ground == 0u);
    s = sigma_partition(M("D[x1^2]"));
    CHECK(s.blocks == std::vector<std::vector<int>>{{1, 2}});
    CHECK(!s.ground.has_value());
    CHECK(render(block_word(M("y1*D[x1*y1]*y1"), {2, 3})) == "x1*y1");
}

TEST_CASE("sigma partitions are non-crossing and nest consistently") {
    for (const auto& m : corpus(1500, 11)) {
        auto s = sigma_partition(m);
        std::vector<int> owner(static_cast<std::size_t>(s.n) + 1, -1);
        for (std::size_t b = 0; b < s.blocks.size(); ++b)
            for (int p : s.blocks[b]) owner[static_cast<std::size_t>(p)] = static_cast<int>(b);
        for (int p = 1; p <= s.n; ++p) REQUIRE(owner[static_cast<std::size_t>(p)] >= 0);
        bool crossing = false;
        for (int a = 1; a <= s.n; ++a)
            for (int b = a + 1; b <= s.n; ++b)
                for (int c = b + 1; c <= s.n; ++c)
                    for (int d = c + 1; d <= s.n; ++d)
                        if (owner[a] == owner[c] && owner[b] == owner[d] && owner[a] != owner[b]) crossing = true;
        CHECK_FALSE(crossing);
        CHECK(s.ground.has_value() == (degrees(m).ground > 0));

        // Remove each paddle block's own letters and recompute.
        const std::string& t = m.tokens();
        std::vector<std::size_t> opens;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (static_cast<unsigned char>(t[i]) == kOpen) opens.push_back(i);
        for (std::size_t o : opens) {
            std::string raw;
            int rel = -1;  // depth relative to the bracket at o; 0 = its own letters
            int pos = 0;
            std::set<int> removed;
            for (std::size_t i = 0; i < t.size(); ++i) {
                auto c = static_cast<unsigned char>(t[i]);
                if (i == o) {
                    rel = 0;
                    raw.push_back(t[i]);
                } else if (rel >= 0 && c == kOpen) {
                    ++rel;
                    raw.push_back(t[i]);
                } else if (rel >= 0 && c == kClose) {
                    rel = rel == 0 ? -1 : rel - 1;
                    raw.push_back(t[i]);
                } else if (is_letter_code(c)) {
                    ++pos;
                    if (rel == 0) removed.insert(pos);
                    else raw.push_back(t[i]);
                } else {
                    raw.push_back(t[i]);
                }
            }
            auto shorter = sigma_partition(normalize(raw));
            std::set<std::vector<int>> expected;
            for (const auto& blk : s.blocks) {
                std::vector<int> mapped;
                for (int p : blk) {
                    if (removed.count(p)) continue;
                    int shift = 0;
                    for (int r : removed) shift += r < p;
                    mapped.push_back(p - shift);
                }
                if (!mapped.empty()) expected.insert(mapped);
            }
            std::set<std::vector<int>> got(shorter.blocks.begin(), shorter.blocks.end());
            CHECK(got == expected);
        }
    }
}

TEST_CASE("degrees") {
    DeltaMonomial m = M("y1*D[x1*y1]*y1");
    CHECK(degrees(m).full == 4);
    CHECK(degrees(m).ground == 2);
    auto only_x = [](const Letter& l) { return l.is_wigner(); };
    CHECK(degrees(m, only_x).full == 1);
    CHECK(degrees(m, only_x).ground == 0);
    CHECK(degrees(DeltaMonomial()).full == 0);
    CHECK(degrees(M("x1*x2")).ground == 2);
}

TEST_CASE("ground block change") {
    CHECK(render(ground_block_change(M("D[x1^2*y1]*y1"))) == "x1^2*y1*D[y1]");
    CHECK(render(ground_block_change(M("x1*D[y1]*x1"))) == "y1*D[x1^2]");
    CHECK_THROWS_AS(ground_block_change(M("x1*x2")), NotApplicable);
    for (const auto& m : corpus(800, 3)) {
        for (std::size_t j = 0; j < top_level_bracket_count(m); ++j) {
            DeltaMonomial g = ground_block_change(m, j);
            auto a = m.letters(), b = g.letters();
            std::multiset<Letter> sa(a.begin(), a.end()), sb(b.begin(), b.end());
            CHECK(sa == sb);
        }
    }
}

TEST_CASE("cyclic normal form") {
    CHECK(render(cyclic_normal_form(M("x2*x1"))) == "x1*x2");
    CHECK(render(cyclic_normal_form(M("D[x1*y1]"))) == "D[x1*y1]");
    CHECK(render(cyclic_normal_form(M("x1*y1*x1*x1"))) == "x1^3*y1");
    CHECK(render(cyclic_normal_form(M("D[x1]*x2"))) == "x2*D[x1]");
    CHECK(trace_class_key(M("x1*D[y1]*x1")) == trace_class_key(M("y1*D[x1^2]")));
}

TEST_CASE("adjoint is an involution and rendering round-trips") {
    for (const auto& m : corpus(1500, 5)) {
        CHECK(adjoint(adjoint(m)) == m);
        CHECK(is_canonical(adjoint(m).tokens()));
        DeltaPolynomial p = DeltaPolynomial(m, Complex(Rational(3, 7), Rational(-1))) + DeltaPolynomial(adjoint(m));
        CHECK(parse(render(p)) == p);
        CHECK(adjoint(adjoint(p)) == p);
    }
    CHECK(render(adjoint(parse("D[x1*y1]"))) == "D[y1'*x1]");
}
