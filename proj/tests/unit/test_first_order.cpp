#include <doctest.h>

#include <functional>
#include <random>

#include "deltafree/expression.hpp"
#include "deltafree/first_order.hpp"

using namespace deltafree;

namespace {

Alphabet alphabet() {
    Alphabet a;
    a.declare_wigner(1);
    a.declare_wigner(2);
    a.declare_deterministic(1, true);
    a.declare_deterministic(2, true);
    return a;
}

DeltaPolynomial P(const char* s) { return parse(s, alphabet()); }
DeltaMonomial M(const char* s) { return parse_monomial(s, alphabet()); }

FirstOrderState uniform_state(const Rational& scale = Rational(1)) {
    FirstOrderState s;
    DeterministicFamily f;
    f.source = DeterministicFamily::Source::power_moments;
    Rational pw(1);
    for (int k = 0; k <= 24; ++k) {
        f.moments.push_back(Complex(Rational(pw / (k + 1))));
        pw *= scale;
    }
    s.y_families[1] = f;
    DeterministicFamily g;
    g.source = DeterministicFamily::Source::scalar;
    g.scalar = Complex(Rational(-2, 3));
    s.y_families[2] = g;
    return s;
}

FirstOrderState scalar_state(const Rational& c) {
    FirstOrderState s;
    DeterministicFamily f;
    f.source = DeterministicFamily::Source::scalar;
    f.scalar = Complex(c);
    s.y_families[1] = f;
    return s;
}

// Non-crossing pair partitions of 2k points by brute force over all pairings.
long count_noncrossing_pairings(int points) {
    std::vector<int> mate(static_cast<std::size_t>(points), -1);
    std::function<long()> rec = [&]() -> long {
        int i = 0;
        while (i < points && mate[static_cast<std::size_t>(i)] >= 0) ++i;
        if (i == points) {
            for (int a = 0; a < points; ++a)
                for (int b = 0; b < points; ++b) {
                    int c = mate[static_cast<std::size_t>(a)], d = mate[static_cast<std::size_t>(b)];
                    if (a < b && b < c && c < d) return 0;
                }
            return 1;
        }
        long total = 0;
        for (int j = i + 1; j < points; ++j) {
            if (mate[static_cast<std::size_t>(j)] >= 0) continue;
            mate[static_cast<std::size_t>(i)] = j;
            mate[static_cast<std::size_t>(j)] = i;
            total += rec();
            mate[static_cast<std::size_t>(i)] = mate[static_cast<std::size_t>(j)] = -1;
        }
        return total;
    };
    return rec();
}

std::vector<DeltaMonomial> random_corpus(int count, int max_letters, unsigned seed, bool with_y) {
    std::mt19937_64 rng(seed);
    std::vector<DeltaMonomial> out;
    std::vector<Letter> pool = {Letter::x(1), Letter::x(2)};
    if (with_y) {
        pool.push_back(Letter::y(1));
        pool.push_back(Letter::y(2));
    }
    while (static_cast<int>(out.size()) < count) {
        int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_letters));
        std::string raw;
        int open = 0;
        for (int i = 0; i < n; ++i) {
            while (rng() % 4 == 0 && open < 3) {
                raw.push_back(static_cast<char>(kOpen));
                ++open;
            }
            raw.push_back(static_cast<char>(pool[rng() % pool.size()].code()));
            while (open > 0 && rng() % 3 == 0) {
                raw.push_back(static_cast<char>(kClose));
                --open;
            }
        }
        while (open-- > 0) raw.push_back(static_cast<char>(kClose));
        out.push_back(normalize(raw));
    }
    return out;
}

}  // namespace

TEST_CASE("semicircle moments are Catalan numbers") {
    PhiEvaluator phi(FirstOrderState{});
    CHECK(phi.eval(P("x1^2")) == Complex(1));
    for (int k = 1; k <= 6; ++k) {
        DeltaMonomial m = DeltaMonomial::word(std::vector<Letter>(static_cast<std::size_t>(2 * k), Letter::x(1)));
        CHECK(phi.eval(m) == Complex(count_noncrossing_pairings(2 * k)));
        DeltaMonomial odd = DeltaMonomial::word(std::vector<Letter>(static_cast<std::size_t>(2 * k - 1), Letter::x(1)));
        CHECK(phi.eval(odd).is_zero());
    }
    CHECK(eval_phi(P("1"), FirstOrderState{}) == Complex(1));
    CHECK(eval_phi(P("D[1]"), FirstOrderState{}) == Complex(1));
}

TEST_CASE("variance scales the even moments") {
    FirstOrderState s;
    s.wigner_variance[1] = Complex(Rational(3));
    CHECK(eval_phi(P("x1^4"), s) == Complex(18));
}

TEST_CASE("ground block change example value") {
    for (const char* c : {"1", "2", "-1/2"}) {
        Rational v = parse_rational(c);
        PhiEvaluator phi(scalar_state(v));
        Complex expected = Complex(2) * pow(Complex(v), 3);
        CHECK(phi.eval(P("x1^2*D[x1^2*y1]*y1*x1*y1*x1")) == expected);
    }
    PhiEvaluator phi(uniform_state());
    Complex t1 = Complex(Rational(1, 2));
    CHECK(phi.eval(P("x1^2*D[x1^2*y1]*y1*x1*y1*x1")) == Complex(2) * t1 * t1 * t1);
    CHECK(phi.eval(P("D[x1^2*y1]*y1")) == phi.eval(P("x1^2*y1*D[y1]")));
}

TEST_CASE("ground block change example with an explicit bracketed table") {
    // Without (H5) the value is 2 phi(D[y]^2) phi(y) for independent table entries.
    FirstOrderState s;
    s.h5 = false;
    Rational a(7, 3), b(5, 11);
    s.set_table_value(M("y1"), Complex(b));
    s.set_table_value(M("D[y1]^2"), Complex(a));
    s.set_table_value(M("y1^2"), Complex(Rational(13, 17)));
    PhiEvaluator phi(s);
    CHECK(phi.eval(P("x1^2*D[x1^2*y1]*y1*x1*y1*x1")) == Complex(2) * Complex(a) * Complex(b));
}

TEST_CASE("undefined y-moment names the word") {
    FirstOrderState s;
    PhiEvaluator phi(s);
    try {
        phi.eval(P("x1*y1*x1*y1"));
        FAIL("expected an error");
    } catch (const UndefinedMoment& e) {
        CHECK(e.word() == "y1");
    }
}

TEST_CASE("mixed scalar and power families") {
    PhiEvaluator phi(uniform_state());
    CHECK(phi.eval(P("y1^3")) == Complex(Rational(1, 4)));
    CHECK(phi.eval(P("y2^2")) == Complex(Rational(4, 9)));
    CHECK(phi.eval(P("y1*y2")) == Complex(Rational(-1, 3)));  // scalar y2 factors out
}

TEST_CASE("traciality and Delta-invariance on a random corpus") {
    PhiEvaluator phi(uniform_state());
    PhiEvaluator scratch(uniform_state(), false);
    for (const auto& m : random_corpus(600, 8, 17, true)) {
        Complex v = phi.eval(m);
        auto atoms = top_level_atoms(m.tokens());
        for (std::size_t k = 1; k < atoms.size(); ++k) {
            std::string rot = m.tokens().substr(atoms[k].first) + m.tokens().substr(0, atoms[k].first);
            CHECK(scratch.eval(DeltaMonomial::from_canonical(rot)) == v);
        }
        CHECK(phi.eval(delta(m)) == v);
        CHECK(phi.eval(adjoint(m)) == v.conj());
    }
}

TEST_CASE("SD right-hand side from scratch") {
    PhiEvaluator phi(uniform_state());
    for (const auto& m : random_corpus(600, 7, 23, true)) {
        for (int fam = 1; fam <= 2; ++fam) {
            DeltaMonomial xm = concat(DeltaMonomial::letter(Letter::x(fam)), m);
            PhiEvaluator fresh(uniform_state(), false);
            Complex rhs;
            const std::string& t = m.tokens();
            for (auto [b, e] : top_level_atoms(t)) {
                if (static_cast<unsigned char>(t[b]) != Letter::x(fam).code()) continue;
                rhs += fresh.eval(DeltaMonomial::from_canonical(t.substr(0, b))) *
                       fresh.eval(DeltaMonomial::from_canonical(t.substr(e)));
            }
            CHECK(phi.eval(xm) == rhs);
        }
    }
}

TEST_CASE("homogeneity in the y moments") {
    Rational lambda(3, 2);
    PhiEvaluator base(uniform_state());
    PhiEvaluator scaled(uniform_state(lambda));
    for (const auto& m : random_corpus(300, 7, 29, true)) {
        int d = degrees(m, [](const Letter& l) { return !l.is_wigner() && l.family == 1; }).full;
        CHECK(scaled.eval(m) == pow(Complex(lambda), static_cast<unsigned>(d)) * base.eval(m));
    }
}

TEST_CASE("check_h5") {
    PhiEvaluator phi(uniform_state());
    auto r = check_h5(M("D[x1^2]*x1^2"), phi);
    CHECK(r.equal);
    CHECK(r.phi == Complex(1));
    CHECK(check_h5(M("x1^2"), phi).equal);
    r = check_h5(M("D[x1^2*y1]*y1"), phi);
    CHECK(r.equal);
    CHECK(r.phi == phi.eval(P("x1^2*y1")) * phi.eval(P("y1")));
    for (const auto& m : random_corpus(300, 7, 31, true)) CHECK(check_h5(m, phi).equal);
}

TEST_CASE("freeness factor") {
    PhiEvaluator phi(uniform_state());
    std::vector<TaggedFactor> centered = {{P("x1"), 1}, {P("x2"), 2}};
    CHECK(freeness_factor(centered, phi).is_zero());
    CHECK(freeness_factor({{P("x1^2 + 3"), 1}}, phi) == Complex(4));
    CHECK_THROWS_AS(freeness_factor({{P("x1"), 1}, {P("x1"), 1}}, phi), std::invalid_argument);

    std::vector<TaggedFactor> t = {{P("x1^2"), 1}, {P("x2^2"), 2}, {P("x1^2"), 1}};
    CHECK_THROWS_AS(freeness_factor(t, phi), std::invalid_argument);  // first and last share a tag
    std::vector<std::vector<TaggedFactor>> cases = {
        {{P("x1^2 - 1"), 1}, {P("x2^2"), 2}, {P("x1^2"), 1}, {P("y1 - 1/2"), 0}},
        {{P("x1^2"), 1}, {P("x2^2 + x2"), 2}, {P("x1^3 + x1"), 1}, {P("x2^4"), 2}},
        {{P("x1*D[x1]"), 1}, {P("y1*D[y1] + y1"), 0}, {P("x2^2"), 2}},
        {{P("D[x1^2]*x1^2 - x1"), 1}, {P("y1^2"), 0}, {P("x1^2"), 1}, {P("y1"), 0}},
    };
    for (const auto& c : cases) {
        DeltaPolynomial prod = DeltaPolynomial::constant(Complex(1));
        for (const auto& f : c) prod = prod * f.value;
        CHECK(freeness_factor(c, phi) == phi.eval(prod));
    }
}
