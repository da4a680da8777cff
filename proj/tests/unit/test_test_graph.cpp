#include <doctest.h>

#include <Eigen/Dense>
#include <functional>
#include <random>

#include "deltafree/expression.hpp"
#include "deltafree/test_graph.hpp"

using namespace deltafree;

namespace {

DeltaMonomial M(const std::string& s) { return parse_monomial(s); }

WignerEntryLaw law_with_d2(int d2) {
    WignerEntryLaw g = WignerEntryLaw::complex_gaussian(16);
    std::vector<std::vector<Rational>> mu(17, std::vector<Rational>(17, Rational(0)));
    for (int a = 0; a <= 16; ++a)
        for (int b = 0; a + b <= 16; ++b) mu[a][b] = g.mu(a, b);
    std::vector<Rational> diag(17, Rational(0));
    // Real Gaussian with variance d2: d_{2j} = d2^j (2j-1)!!
    Rational v(1), df(1);
    diag[0] = 1;
    for (int k = 2; k <= 16; k += 2) {
        v *= d2;
        df *= k - 1;
        diag[k] = v * df;
    }
    return WignerEntryLaw::from_tables("test-d2", 16, mu, diag);
}

using Mat = Eigen::MatrixXcd;

// Direct evaluation of a monomial on concrete matrices, Delta = diagonal part.
Mat evaluate(const DeltaMonomial& m, const std::map<int, Mat>& xs, int n) {
    const std::string& t = m.tokens();
    std::vector<Mat> stack{Mat::Identity(n, n)};
    for (unsigned char c : t) {
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

// Sum over all labellings V -> [n] of the product of X(target, source).
std::complex<double> labelled_sum(const TestGraph& g, const std::map<int, Mat>& xs, int n) {
    std::vector<int> lab(static_cast<std::size_t>(g.vertex_count), 0);
    std::complex<double> total = 0;
    while (true) {
        std::complex<double> p = 1;
        for (const auto& e : g.edges) p *= xs.at(e.label.family)(lab[e.target], lab[e.source]);
        total += p;
        int i = 0;
        while (i < g.vertex_count && ++lab[i] == n) lab[i++] = 0;
        if (i == g.vertex_count) break;
    }
    return total;
}

}  // namespace

TEST_CASE("bell numbers and partition streaming") {
    auto bell = bell_numbers(12);
    std::vector<unsigned long long> known{1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975, 678570, 4213597};
    CHECK(bell == known);
    for (int n = 0; n <= 9; ++n) {
        PartitionEnumerator pe(n);
        unsigned long long count = 0;
        while (pe.next()) {
            const auto& p = pe.current();
            int mx = -1;
            for (int v : p.rgs) {
                CHECK(v <= mx + 1);
                mx = std::max(mx, v);
            }
            CHECK(p.blocks == mx + 1);
            ++count;
        }
        CHECK(count == bell[static_cast<std::size_t>(n)]);
    }
    PartitionEnumerator singletons(5, 14, [](const SetPartition& p) { return p.blocks != 5; });
    int seen = 0;
    while (singletons.next()) ++seen;
    CHECK(seen == 1);
    CHECK_THROWS_AS(PartitionEnumerator(15), OracleError);
}

TEST_CASE("cactus shapes") {
    TestGraph t = build_cactus(M("x1^4"));
    CHECK(t.vertex_count == 4);
    CHECK(t.edges.size() == 4);
    TestGraph d = build_cactus(M("x1*D[x1*x1]"));
    CHECK(d.vertex_count == 2);
    CHECK(d.edges[1].cycle == d.edges[2].cycle);
    CHECK(d.edges[0].cycle != d.edges[1].cycle);
    TestGraph u = disjoint_union(t, d);
    CHECK(u.vertex_count == 6);
    CHECK(u.edges.back().side == 1);
    CHECK(u.edges.back().source >= 4);
}

TEST_CASE("cactus labelled sums reproduce matrix traces") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    int n = 3;
    std::map<int, Mat> xs;
    for (int f = 1; f <= 2; ++f) {
        Mat a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = {g(rng), g(rng)};
        xs[f] = a;
    }
    for (const char* s : {"x1^3", "x1*x2*x1", "D[x1]*x2", "x1*D[x2*x1]*x2", "D[x1*D[x2]*x1]*x2", "D[x1*x2]*D[x2*x1]",
                          "x1*D[x2*D[x1]]*x2*x1"}) {
        DeltaMonomial m = M(s);
        CAPTURE(s);
        std::complex<double> direct = evaluate(m, xs, n).trace();
        std::complex<double> sum = labelled_sum(build_cactus(m), xs, n);
        CHECK(std::abs(direct - sum) < 1e-9 * (1 + std::abs(direct)));
    }
}

TEST_CASE("exact moments in closed form") {
    Laws gue;
    CHECK(exact_moment(M("x1^2"), gue).render() == "1");
    CHECK(exact_moment(M("x1^4"), gue).render() == "2 + 1/N^2");
    Laws laws;
    laws.default_law = law_with_d2(2);
    RationalInN r = exact_moment(M("x1^2"), laws);
    CHECK(r.limit() == Complex(1));
    CHECK(r.coefficient(-2) == Complex(1));  // 1 - 1/N + d2/N
    CHECK(exact_moment(M("x1^3"), gue).is_zero());
    CHECK(exact_moment(M("D[x1]"), laws).render() == "0");
    CHECK(exact_moment(M("D[x1^2]"), laws).limit() == Complex(1));
    CHECK_THROWS_AS(exact_moment(M("x1*y1"), gue), OracleError);
}

TEST_CASE("exact covariances in closed form") {
    Laws gue;
    CHECK(exact_covariance(M("x1^2"), M("x1^2"), gue).render() == "2");
    for (int d2 : {1, 2, 3}) {
        Laws laws;
        laws.default_law = law_with_d2(d2);
        CHECK(exact_covariance(M("x1"), M("x1"), laws).render() == std::to_string(d2));
    }
    Laws q;
    q.default_law = WignerEntryLaw::quaternary();
    // Unit-modulus entries: Tr X^2 is deterministic, 2 (m4 - 1) = 0.
    CHECK(exact_covariance(M("x1^2"), M("x1^2"), q).is_zero());
}

TEST_CASE("limit routes agree on small monomials") {
    Laws gue;
    Laws q;
    q.default_law = WignerEntryLaw::quaternary();
    for (std::string s : {"x1^2", "x1^4", "x1^6", "x1*x2*x1*x2", "x1^2*x2^2", "D[x1^2]*x1^2", "x1*D[x2*x1*x2]*x1",
                          "D[x1*x2]*D[x2*x1]", "D[x1^2]*D[x1^2]"}) {
        CAPTURE(s);
        for (const Laws* l : {&gue, &q}) {
            LimitReport r = limit_moment_report(M(s), *l);
            CHECK(r.agree());
        }
    }
    for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
             {"x1", "x1"}, {"x1^2", "x1^2"}, {"x1^3", "x1"}, {"x1^2", "x1^4"}, {"x1*x2", "x2*x1"}, {"D[x1^2]", "x1^2"},
             {"x1*D[x1]", "x1^2"}, {"x1^3", "x1^3"}}) {
        CAPTURE(a);
        CAPTURE(b);
        for (const Laws* l : {&gue, &q}) {
            LimitReport r = limit_covariance_report(M(a), M(b), *l);
            CHECK(r.agree());
            CHECK(r.twin_violations == 0);
        }
    }
}

TEST_CASE("classification of hand-made quotients") {
    Letter x = Letter::x(1);
    TestGraph twin{2, {{0, 1, x}, {1, 0, x}}};
    CHECK(classify(twin, Order::first) == QuotientType::DT);
    TestGraph single{2, {{0, 1, x}, {0, 1, x}}};
    CHECK(classify(single, Order::first) == QuotientType::other);
    TestGraph loop{1, {{0, 0, x, 0, 0}, {0, 0, x, 1, 1}}};
    CHECK(classify(loop, Order::second) == QuotientType::DU);
    TestGraph four{2, {{0, 1, x, 0, 0}, {1, 0, x, 0, 0}, {0, 1, x, 1, 1}, {1, 0, x, 1, 1}}};
    CHECK(classify(four, Order::second) == QuotientType::FT);
    Laws gue;
    CHECK(omega_x(four, gue) == Complex(2));
    CHECK(omega_x(loop, gue) == Complex(1));
}

TEST_CASE("parallel enumeration matches serial") {
    Laws gue;
    OracleOptions serial, parallel;
    parallel.jobs = 3;
    DeltaMonomial a = M("x1^2*D[x2*x1]*x2"), b = M("x1*x2*x1*x2");
    CHECK(exact_moment(a, gue, serial) == exact_moment(a, gue, parallel));
    CHECK(exact_covariance(a, b, gue, serial) == exact_covariance(a, b, gue, parallel));
}
