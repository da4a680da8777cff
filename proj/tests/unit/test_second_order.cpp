#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "deltafree/corpus.hpp"
#include "deltafree/expression.hpp"
#include "deltafree/second_order.hpp"

using namespace deltafree;

namespace {

using Mat = Eigen::MatrixXcd;

DeltaPolynomial P(const std::string& s) { return parse(s); }
DeltaMonomial M(const std::string& s) { return parse_monomial(s); }

Mat eval_monomial(const DeltaMonomial& m, const std::map<int, Mat>& xs, int n) {
    std::vector<Mat> stack{Mat::Identity(n, n)};
    for (unsigned char c : m.tokens()) {
        if (c == kOpen) {
            stack.push_back(Mat::Identity(n, n));
        } else if (c == kClose) {
            Mat d = stack.back().diagonal().asDiagonal();
            stack.pop_back();
            stack.back() = stack.back() * d;
        } else {
            stack.back() = stack.back() * xs.at(Letter::from_code(c).family);
        }
    }
    return stack.back();
}

std::complex<double> trace(const DeltaPolynomial& p, const std::map<int, Mat>& xs, int n) {
    std::complex<double> t = 0;
    for (const auto& [m, c] : p.terms()) t += c.to_double() * eval_monomial(m, xs, n).trace();
    return t;
}

std::map<int, Mat> random_matrices(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    std::map<int, Mat> xs;
    for (int f = 1; f <= 3; ++f) {
        Mat a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
        xs[f] = a;
    }
    return xs;
}

DeltaPolynomial reassemble(const std::vector<WeightedComponent>& parts) {
    DeltaPolynomial out;
    for (const auto& w : parts) {
        if (w.component.n == 1) out += DeltaPolynomial(w.component.e1, w.coefficient);
        else out += product_of(w.component.factors) * w.coefficient;
    }
    return out;
}

bool e1_ok(const DeltaMonomial& m) {
    if (m.is_empty()) return true;
    auto sigma = sigma_partition(m);
    auto letters = m.letters();
    for (const auto& b : sigma.blocks) {
        std::set<int> t;
        for (int pos : b) t.insert(family_tag(letters[static_cast<std::size_t>(pos - 1)]));
        if (t.size() > 1) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("decomposition preserves the trace and yields well-formed components") {
    std::mt19937_64 rng(11);
    std::vector<std::string> corpus{"x1*x2", "x1^2*x2^2*D[x1^2*x2^2]", "D[x1*x2]*D[x2*x1]", "x1*D[x2*D[x1*x2]]*x2",
                                    "x1*x2*x3*x1*x2", "x1*y1*x1*y1", "D[x1*y1]*x2*y1'", "x1*D[x2]*x1*D[x2*x3*x2]"};
    auto extra = trace_classes({Letter::x(1), Letter::x(2)}, 5);
    for (std::size_t i = 0; i < extra.size(); i += 7) corpus.push_back(render(extra[i]));
    for (const auto& s : corpus) {
        CAPTURE(s);
        DeltaPolynomial p = P(s);
        auto parts = decompose_En(p);
        for (const auto& w : parts) {
            if (w.component.n == 1) {
                CHECK(e1_ok(w.component.e1));
                continue;
            }
            const auto& f = w.component.factors;
            REQUIRE(f.size() >= 2);
            for (std::size_t k = 0; k < f.size(); ++k) {
                CHECK(f[k].tag != f[(k + 1) % f.size()].tag);
                CHECK(delta(f[k].value).is_zero());
            }
        }
        for (int trial = 0; trial < 3; ++trial) {
            auto xs = random_matrices(rng, 4);
            xs[0] = xs[1];
            std::complex<double> a = trace(p, xs, 4), b = trace(reassemble(parts), xs, 4);
            CHECK(std::abs(a - b) < 1e-8 * (1 + std::abs(a)));
        }
    }
}

TEST_CASE("decomposition examples") {
    auto single = decompose_En(P("x1^2*D[x1]"));
    REQUIRE(single.size() == 1);
    CHECK(single[0].component.n == 1);
    auto already = decompose_En(P("(x1 - D[x1])*(x2 - D[x2])"));
    int e2 = 0;
    for (const auto& w : already) e2 += w.component.n == 2;
    CHECK(e2 >= 1);
    // The worked shape: an E2 part and a Delta-only E1 remainder.
    auto parts = decompose_En(P("x1*x2*D[x1*x2]"));
    bool has_e2 = false, has_blocks = false;
    for (const auto& w : parts) {
        has_e2 |= w.component.n == 2;
        if (w.component.n == 1 && w.component.e1 == cyclic_normal_form(M("D[x1]*D[x2]*D[x1]*D[x2]"))) has_blocks = true;
    }
    CHECK(has_e2);
    CHECK(has_blocks);
}

TEST_CASE("unit annihilation, symmetry and orthogonality") {
    SecondOrderState st;
    SecondOrderEvaluator ev(st);
    CHECK(ev.eval(P("1"), P("x1^2")).is_zero());
    CHECK(ev.eval(P("x1^2*x2"), P("1")).is_zero());
    CHECK(ev.eval(P("x1^2"), P("x2^2")).is_zero());
    CHECK(ev.eval(P("x1"), P("x1")) == Complex(1));
    for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"x1*x2*x1*x2", "x2*x1^3*x2"}, {"D[x1*x2]*x1*x2", "x2*x1"}, {"x1^2*D[x2^2]", "x2^2*x1*x1"}}) {
        CAPTURE(a);
        CAPTURE(b);
        CHECK(ev.eval(P(a), P(b)) == ev.eval(P(b), P(a)));
        CHECK(ev.eval(delta(P(a)), P(b)) == ev.eval(P(a), P(b)));
    }
}

TEST_CASE("mingo-speicher tag alignment") {
    SecondOrderState st;
    SecondOrderEvaluator ev(st);
    auto c = [](const std::string& s, int tag) { return TaggedFactor{centered(P(s)), tag}; };
    std::vector<TaggedFactor> a{c("x1^2", 1), c("x2^2", 2)};
    std::vector<TaggedFactor> b{c("x1^2", 1), c("x2^2", 2)};
    std::vector<TaggedFactor> swapped{c("x2^2", 2), c("x1^2", 1)};
    std::vector<TaggedFactor> other{c("x3^2", 3), TaggedFactor{centered(P("y1")), 0}};
    // var(x^2) = 1 for each family.
    CHECK(ev.mingo_speicher(a, b) == Complex(1));
    CHECK(ev.mingo_speicher(a, swapped) == Complex(1));
    CHECK(ev.mingo_speicher(a, other).is_zero());
    CHECK(ev.mingo_speicher(a, {c("x1^2", 1), c("x2^2", 2), c("x1", 1)}).is_zero());
    CHECK_THROWS_AS(ev.mingo_speicher({c("x1", 1), c("x1^2", 1)}, b), std::invalid_argument);
}

TEST_CASE("leibniz with an abstract marginal table") {
    SecondOrderState st;
    st.oracle_marginals = false;
    st.first.wigner_variance[1] = Complex(3);
    st.set_marginal(1, M("x1^2"), M("x1^2"), Complex(7));
    SecondOrderEvaluator ev(st);
    // phi(x1^2) = 3
    CHECK(ev.eval(P("D[x1^2]"), P("x1^2")) == Complex(7));
    CHECK(ev.eval(P("D[x1^2]*D[x1^2]"), P("x1^2")) == Complex(2 * 3 * 7));
    CHECK(ev.eval(P("D[x1^2]*D[x1^2]"), P("D[x1^2]*D[x1^2]")) == Complex(4 * 3 * 3 * 7));
    CHECK(ev.leibniz_reduce(P("x1^2"), P("x1^2"), P("x1^2")) == Complex(42));
    CHECK_THROWS_AS(ev.eval(P("x1^4"), P("x1^2")), MissingMarginal);
    CHECK_THROWS_AS(st.set_marginal(1, M("x1^2"), M("x1^2"), Complex(8)), std::invalid_argument);
    CHECK_THROWS_AS(st.set_marginal(1, M("x1*x2"), M("x1^2"), Complex(8)), std::invalid_argument);
}

TEST_CASE("collinearity on F_n") {
    SecondOrderState st;
    SecondOrderEvaluator ev(st);
    auto c = [](const std::string& s, int tag) { return TaggedFactor{centered(P(s)), tag}; };
    std::vector<std::vector<TaggedFactor>> t2{{c("x1^2 + x1", 1), c("x2^3 - x2", 2)}};
    std::vector<std::vector<TaggedFactor>> t3{{c("x1^2", 1), c("x2^2 + 2*x2", 2), c("x3^2", 3)}};
    for (const auto& [tuples, n] : {std::pair{t2, 2}, std::pair{t3, 3}}) {
        DeltaPolynomial p = build_Fn(tuples);
        CHECK(ev.eval(p, adjoint(p)) == Complex(n) * ev.phi().eval(p * adjoint(p)));
    }
    CHECK(build_Fn({{c("x1", 1), c("x2", 2)}}) == product_of({c("x1", 1), c("x2", 2)}) + product_of({c("x2", 2), c("x1", 1)}));
    CHECK_THROWS_AS(build_Fn({{c("x1", 1)}}), std::invalid_argument);
}

TEST_CASE("rules agree with the exact oracle on small mixed pairs") {
    auto reps = trace_classes({Letter::x(1), Letter::x(2)}, 4);
    for (int law = 0; law < 2; ++law) {
        SecondOrderState st;
        if (law) st.laws.default_law = WignerEntryLaw::quaternary();
        SecondOrderEvaluator ev(st);
        int checked = 0;
        for (std::size_t i = 0; i < reps.size(); ++i)
            for (std::size_t j = i; j < reps.size(); ++j) {
                if (reps[i].letter_count() + reps[j].letter_count() > 6) continue;
                CAPTURE(render(reps[i]));
                CAPTURE(render(reps[j]));
                CHECK(ev.eval(reps[i], reps[j]) == limit_covariance(reps[i], reps[j], st.laws));
                ++checked;
            }
        CHECK(checked > 100);
    }
}

TEST_CASE("marginal provenance and deterministic zero") {
    SecondOrderState st;
    SecondOrderEvaluator ev(st);
    CHECK(ev.eval(P("y1*y1"), P("y1")).is_zero());
    ev.eval(P("x1^2"), P("x1^2"));
    auto log = ev.lookups();
    REQUIRE(log.size() == 2);
    CHECK(log[0].source == MarginalLookup::Source::deterministic);
    CHECK(log[1].source == MarginalLookup::Source::oracle);
    CHECK(log[1].value == Complex(2));
    CHECK(ev.oracle_cache().size() == 1);
}
