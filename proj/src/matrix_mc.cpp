#include "deltafree/matrix_mc.hpp"

#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace deltafree {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

bool hermitian_builder(const DeterministicSpec& d) {
    switch (d.builder) {
        case DeterministicSpec::Builder::hermitian_circulant:
        case DeterministicSpec::Builder::diagonal_profile:
            return true;
        case DeterministicSpec::Builder::fourier_unitary:
            return false;
        case DeterministicSpec::Builder::scalar:
            return d.scalar.is_real();
    }
    return false;
}

double symbol(const std::vector<double>& c, double t) {
    double v = 0;
    for (std::size_t k = c.size(); k-- > 0;) v = v * t + c[k];
    return v;
}

std::vector<double> to_doubles(const std::vector<Rational>& c) {
    std::vector<double> out;
    for (const auto& r : c) out.push_back(r.get_d());
    return out;
}

// int_0^1 f(t)^k dt for k = 0..max, exactly.
std::vector<Complex> symbol_moments(const std::vector<Rational>& c, int max) {
    std::vector<Complex> out;
    std::vector<Rational> power{Rational(1)};
    for (int k = 0; k <= max; ++k) {
        Rational integral(0);
        for (std::size_t j = 0; j < power.size(); ++j) integral += power[j] / Rational(static_cast<long>(j + 1));
        out.emplace_back(integral);
        std::vector<Rational> next(power.size() + c.size() - 1, Rational(0));
        for (std::size_t i = 0; i < power.size(); ++i)
            for (std::size_t j = 0; j < c.size(); ++j) next[i + j] += power[i] * c[j];
        power = std::move(next);
    }
    return out;
}

}  // namespace

const char* to_string(DeterministicSpec::Builder b) {
    switch (b) {
        case DeterministicSpec::Builder::hermitian_circulant: return "hermitian-circulant";
        case DeterministicSpec::Builder::diagonal_profile: return "diagonal-profile";
        case DeterministicSpec::Builder::fourier_unitary: return "fourier-unitary";
        case DeterministicSpec::Builder::scalar: return "scalar";
    }
    return "?";
}

DeterministicSpec::Builder builder_from_string(const std::string& name) {
    for (auto b : {DeterministicSpec::Builder::hermitian_circulant, DeterministicSpec::Builder::diagonal_profile,
                   DeterministicSpec::Builder::fourier_unitary, DeterministicSpec::Builder::scalar})
        if (name == to_string(b)) return b;
    throw SpecError("unknown deterministic builder '" + name + "'");
}

void EnsembleSpec::validate() const {
    for (const auto& [f, w] : wigner) {
        if (f < 1 || f > kMaxWignerFamily) throw SpecError("Wigner family index out of range: " + std::to_string(f));
        if (w.preset != "complex-gaussian" && w.preset != "quaternary")
            throw SpecError("unknown entry-law preset '" + w.preset + "'");
    }
    for (const auto& [f, d] : deterministic) {
        if (f < 1 || f > kMaxDeterministicFamily)
            throw SpecError("deterministic family index out of range: " + std::to_string(f));
        bool needs_symbol = d.builder == DeterministicSpec::Builder::hermitian_circulant ||
                            d.builder == DeterministicSpec::Builder::diagonal_profile;
        if (needs_symbol && d.coefficients.empty())
            throw SpecError(std::string(to_string(d.builder)) + " for y" + std::to_string(f) + " needs coefficients");
    }
    if (sizes.empty()) throw SpecError("no matrix sizes");
    for (int n : sizes)
        if (n < 1) throw SpecError("matrix size must be positive");
    if (samples < 2) throw SpecError("need at least 2 samples");
    if (jobs < 1) throw SpecError("jobs must be positive");
}

Alphabet EnsembleSpec::alphabet() const {
    Alphabet a;
    for (const auto& [f, w] : wigner) a.declare_wigner(f);
    for (const auto& [f, d] : deterministic) a.declare_deterministic(f, hermitian_builder(d));
    return a;
}

FirstOrderState EnsembleSpec::first_order_state(int max_word) const {
    FirstOrderState st;
    for (const auto& [f, w] : wigner) st.wigner_variance[f] = Complex(1);
    for (const auto& [f, d] : deterministic) {
        DeterministicFamily fam;
        fam.self_adjoint = hermitian_builder(d);
        switch (d.builder) {
            case DeterministicSpec::Builder::hermitian_circulant:
            case DeterministicSpec::Builder::diagonal_profile:
                fam.source = DeterministicFamily::Source::power_moments;
                fam.moments = symbol_moments(d.coefficients, max_word);
                break;
            case DeterministicSpec::Builder::scalar:
                fam.source = DeterministicFamily::Source::scalar;
                fam.scalar = d.scalar;
                break;
            case DeterministicSpec::Builder::fourier_unitary: {
                // Words in F and F*: F^4 = I, lower powers have vanishing normalized trace.
                Letter u = Letter::y(f, Variant::plain), v = Letter::y(f, Variant::star);
                for (int len = 1; len <= max_word; ++len)
                    for (unsigned mask = 0; mask < (1u << len); ++mask) {
                        std::vector<Letter> w;
                        int power = 0;
                        for (int i = 0; i < len; ++i) {
                            bool star = (mask >> i) & 1u;
                            w.push_back(star ? v : u);
                            power += star ? -1 : 1;
                        }
                        auto key = cyclic_normal_form(DeltaMonomial::word(w));
                        if (!st.y_table.count(key)) st.y_table[key] = Complex(((power % 4) + 4) % 4 == 0 ? 1 : 0);
                    }
                break;
            }
        }
        st.y_families[f] = fam;
    }
    return st;
}

Laws EnsembleSpec::laws() const {
    Laws l;
    for (const auto& [f, w] : wigner) l.per_family.emplace(f, WignerEntryLaw::preset(w.preset));
    return l;
}

std::uint64_t stream_seed(std::uint64_t master, int family, std::uint64_t family_seed, int n, int replica) {
    std::uint64_t h = splitmix(master);
    h = splitmix(h ^ static_cast<std::uint64_t>(family));
    h = splitmix(h ^ family_seed);
    h = splitmix(h ^ static_cast<std::uint64_t>(n));
    return splitmix(h ^ static_cast<std::uint64_t>(replica));
}

namespace {

// Ziggurat normals from Boost: faster than std::normal_distribution and the
// same stream on every standard library.
template <class T>
void fill_wigner(Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>& x, const WignerSpec& spec,
                 int family, int n, std::uint64_t master_seed, int replica) {
    std::mt19937_64 rng(stream_seed(master_seed, family, spec.seed, n, replica));
    x.resize(n, n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    using C = std::complex<T>;
    if (spec.preset == "complex-gaussian") {
        boost::random::normal_distribution<double> g(0.0, 1.0);
        const double half = std::sqrt(0.5) * scale;
        for (int i = 0; i < n; ++i) {
            x(i, i) = C(static_cast<T>(g(rng) * scale), 0);
            for (int j = i + 1; j < n; ++j) {
                double re = g(rng) * half;
                double im = g(rng) * half;
                x(i, j) = C(static_cast<T>(re), static_cast<T>(im));
                x(j, i) = C(static_cast<T>(re), static_cast<T>(-im));
            }
        }
    } else if (spec.preset == "quaternary") {
        const T s = static_cast<T>(scale);
        const C units[4] = {{s, 0}, {0, s}, {-s, 0}, {0, -s}};
        for (int i = 0; i < n; ++i) {
            x(i, i) = (rng() >> 63) ? C(s, 0) : C(-s, 0);
            for (int j = i + 1; j < n; ++j) {
                C z = units[rng() >> 62];
                x(i, j) = z;
                x(j, i) = std::conj(z);
            }
        }
    } else {
        throw SpecError("unknown entry-law preset '" + spec.preset + "'");
    }
}

}  // namespace

Matrix sample_wigner(const WignerSpec& spec, int family, int n, std::uint64_t master_seed, int replica) {
    Matrix x;
    fill_wigner(x, spec, family, n, master_seed, replica);
    return x;
}

Matrix build_deterministic(const DeterministicSpec& spec, int n) {
    using B = DeterministicSpec::Builder;
    const double two_pi = 2 * std::numbers::pi;
    switch (spec.builder) {
        case B::hermitian_circulant: {
            auto c = to_doubles(spec.coefficients);
            std::vector<double> f(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k) f[static_cast<std::size_t>(k)] = symbol(c, static_cast<double>(k) / n);
            // C = F diag(f) F*, so C(j, l) depends on (j - l) mod n.
            std::vector<std::complex<double>> row(static_cast<std::size_t>(n));
            for (int d = 0; d < n; ++d) {
                std::complex<double> s = 0;
                for (int k = 0; k < n; ++k)
                    s += f[static_cast<std::size_t>(k)] * std::polar(1.0, two_pi * ((static_cast<long>(k) * d) % n) / n);
                row[static_cast<std::size_t>(d)] = s / static_cast<double>(n);
            }
            Matrix m(n, n);
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) m(j, l) = row[static_cast<std::size_t>(((j - l) % n + n) % n)];
            return m;
        }
        case B::diagonal_profile: {
            auto c = to_doubles(spec.coefficients);
            Matrix m = Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i) m(i, i) = symbol(c, static_cast<double>(i) / n);
            return m;
        }
        case B::fourier_unitary: {
            Matrix m(n, n);
            const double s = 1.0 / std::sqrt(static_cast<double>(n));
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) m(j, k) = std::polar(s, two_pi * ((static_cast<long>(j) * k) % n) / n);
            return m;
        }
        case B::scalar:
            return Matrix::Identity(n, n) * spec.scalar.to_double();
    }
    throw SpecError("bad builder");
}

namespace {

Bindings deterministic_bindings(const EnsembleSpec& spec, int n) {
    Bindings b;
    for (const auto& [f, d] : spec.deterministic) {
        Matrix m = build_deterministic(d, n);
        if (hermitian_builder(d)) {
            b[Letter::y(f)] = std::move(m);
        } else {
            b[Letter::y(f, Variant::star)] = m.adjoint();
            b[Letter::y(f, Variant::plain)] = std::move(m);
        }
    }
    return b;
}

void add_wigner(Bindings& b, const EnsembleSpec& spec, int n, int replica) {
    for (const auto& [f, w] : spec.wigner) b[Letter::x(f)] = sample_wigner(w, f, n, spec.master_seed, replica);
}

// A straight-line program for a batch of traces. Nodes are sub-words whose
// matrices get reused; a node is diagonal when it is a bracket or a product
// of brackets. Products are split to minimize the number of dense products.
class TracePlan {
public:
    struct Node {
        enum class Op { letter, diag_letter, diag_pair, product } op;
        Letter letter;
        int a = -1, b = -1;
        bool diagonal = false;
        bool gram = false;  // b is the adjoint word of a: M(a) M(a)*
    };
    // Tr of M(a) M(b); b < 0 means Tr M(a); a < 0 means Tr I.
    struct Request {
        int a = -1, b = -1;
    };
    struct Term {
        std::complex<double> coefficient;
        Request request;
    };

    int add_expression(const DeltaPolynomial& p) {
        std::vector<Term> terms;
        for (const auto& [m, c] : p.terms()) terms.push_back({c.to_double(), trace_request(m.tokens())});
        expressions_.push_back(std::move(terms));
        return static_cast<int>(expressions_.size()) - 1;
    }

    // Diagonal of the whole word, for diagnostics.
    int add_diagonal(const std::string& tokens) { return diag_node(tokens); }

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<std::vector<Term>>& expressions() const { return expressions_; }
    int dense_products() const {
        int k = 0;
        for (const auto& n : nodes_) k += n.op == Node::Op::product && !nodes_[n.a].diagonal && !nodes_[n.b].diagonal;
        return k;
    }

private:
    // Cost of a sub-word: the set of dense products it would add, so a
    // sub-word shared by both halves is paid once.
    using Need = std::set<std::string>;
    using Memo = std::map<std::string, Need>;

    static std::vector<Span> atoms(const std::string& t) { return top_level_atoms(t); }
    static bool single_bracket(const std::string& t) {
        auto at = atoms(t);
        return at.size() == 1 && static_cast<unsigned char>(t[0]) == kOpen;
    }
    static std::string join(const std::string& t, const std::vector<Span>& at, std::size_t from, std::size_t count) {
        std::string s;
        for (std::size_t i = 0; i < count; ++i) {
            auto [b, e] = at[(from + i) % at.size()];
            s.append(t, b, e - b);
        }
        return s;
    }
    static Need merge(const Need& a, const Need& b) {
        Need u = a;
        u.insert(b.begin(), b.end());
        return u;
    }

    Need split_need(const std::string& l, const std::string& r, bool product, const std::string& whole,
                    Memo& memo) const {
        Need u = merge(cost(l, memo), cost(r, memo));
        if (product && !single_bracket(l) && !single_bracket(r)) u.insert(whole);
        return u;
    }

    const Need& cost(const std::string& t, Memo& memo) const {
        static const Need none;
        if (index_.count(t)) return none;
        if (auto it = memo.find(t); it != memo.end()) return it->second;
        auto at = atoms(t);
        Need best;
        if (at.size() == 1) {
            if (static_cast<unsigned char>(t[0]) == kOpen) best = diag_cost(t.substr(1, t.size() - 2), memo);
        } else {
            bool first = true;
            for (std::size_t j = 1; j < at.size(); ++j) {
                Need c = split_need(join(t, at, 0, j), join(t, at, j, at.size() - j), true, t, memo);
                if (first || c.size() < best.size()) best = std::move(c), first = false;
            }
        }
        return memo[t] = std::move(best);
    }

    Need diag_cost(const std::string& content, Memo& memo) const {
        auto at = atoms(content);
        if (at.size() == 1) return {};
        Need best;
        bool first = true;
        for (std::size_t j = 1; j < at.size(); ++j) {
            Need c = split_need(join(content, at, 0, j), join(content, at, j, at.size() - j), false, content, memo);
            if (first || c.size() < best.size()) best = std::move(c), first = false;
        }
        return best;
    }

    int push(const std::string& key, Node n) {
        nodes_.push_back(n);
        int id = static_cast<int>(nodes_.size()) - 1;
        index_[key] = id;
        return id;
    }

    // Node for D[content].
    int diag_node(const std::string& content) {
        std::string key = std::string(1, static_cast<char>(kOpen)) + content + std::string(1, static_cast<char>(kClose));
        if (auto it = index_.find(key); it != index_.end()) return it->second;
        auto at = atoms(content);
        if (at.size() == 1 && is_letter_code(static_cast<unsigned char>(content[0]))) {
            int a = node(content);
            return push(key, {Node::Op::diag_letter, {}, a, -1, true});
        }
        if (at.size() == 1) return diag_node(content.substr(1, content.size() - 2));
        Memo memo;
        std::size_t best_j = 1, best = SIZE_MAX;
        for (std::size_t j = 1; j < at.size(); ++j) {
            auto c = split_need(join(content, at, 0, j), join(content, at, j, at.size() - j), false, content, memo).size();
            if (c < best) best = c, best_j = j;
        }
        int a = node(join(content, at, 0, best_j));
        int b = node(join(content, at, best_j, at.size() - best_j));
        return push(key, {Node::Op::diag_pair, {}, a, b, true});
    }

    int node(const std::string& t) {
        if (auto it = index_.find(t); it != index_.end()) return it->second;
        auto at = atoms(t);
        if (at.size() == 1) {
            auto c = static_cast<unsigned char>(t[0]);
            if (c == kOpen) return diag_node(t.substr(1, t.size() - 2));
            return push(t, {Node::Op::letter, Letter::from_code(c), -1, -1, false});
        }
        Memo memo;
        std::size_t best_j = 1, best = SIZE_MAX;
        for (std::size_t j = 1; j < at.size(); ++j) {
            auto c = split_need(join(t, at, 0, j), join(t, at, j, at.size() - j), true, t, memo).size();
            if (c < best) best = c, best_j = j;
        }
        int a = node(join(t, at, 0, best_j));
        int b = node(join(t, at, best_j, at.size() - best_j));
        std::string l = join(t, at, 0, best_j);
        bool gram = adjoint(DeltaMonomial::from_canonical(l)).tokens() == join(t, at, best_j, at.size() - best_j);
        return push(t, {Node::Op::product, {}, a, b, nodes_[a].diagonal && nodes_[b].diagonal, gram});
    }

    Request trace_request(const std::string& t) {
        if (t.empty()) return {};
        auto at = atoms(t);
        if (at.size() == 1) {
            if (static_cast<unsigned char>(t[0]) == kOpen) return trace_request(t.substr(1, t.size() - 2));
            return {node(t), -1};
        }
        Memo memo;
        std::size_t best_r = 0, best_s = 1, best = SIZE_MAX;
        for (std::size_t r = 0; r < at.size(); ++r)
            for (std::size_t s = 1; s < at.size(); ++s) {
                auto c = split_need(join(t, at, r, s), join(t, at, r + s, at.size() - s), false, t, memo).size();
                if (c < best) best = c, best_r = r, best_s = s;
            }
        int a = node(join(t, at, best_r, best_s));
        int b = node(join(t, at, best_r + best_s, at.size() - best_s));
        return {a, b};
    }

    std::map<std::string, int> index_;
    std::vector<Node> nodes_;
    std::vector<std::vector<Term>> expressions_;
};

template <class T>
class Executor {
public:
    using C = std::complex<T>;
    using Dense = Eigen::Matrix<C, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<C, Eigen::Dynamic, 1>;
    using Binding = std::map<Letter, Dense>;

    explicit Executor(const TracePlan& plan) : plan_(plan), dense_(plan.nodes().size()), diag_(plan.nodes().size()) {}

    // Evaluates every node; the binding must outlive the subsequent reads.
    void run(const Binding& b, int n) {
        n_ = n;
        letters_.assign(plan_.nodes().size(), nullptr);
        const auto& nodes = plan_.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& nd = nodes[i];
            switch (nd.op) {
                case TracePlan::Node::Op::letter: {
                    auto it = b.find(nd.letter);
                    if (it == b.end()) throw BindingError("no matrix bound to letter " + nd.letter.name());
                    if (it->second.rows() != n || it->second.cols() != n)
                        throw BindingError("matrix for " + nd.letter.name() + " has the wrong size");
                    letters_[i] = &it->second;
                    break;
                }
                case TracePlan::Node::Op::diag_letter:
                    diag_[i] = dense(nd.a).diagonal();
                    break;
                case TracePlan::Node::Op::diag_pair:
                    diag_[i] = diag_of_product(nd.a, nd.b);
                    break;
                case TracePlan::Node::Op::product: {
                    bool da = nodes[nd.a].diagonal, db = nodes[nd.b].diagonal;
                    if (da && db) diag_[i] = diag_[nd.a].cwiseProduct(diag_[nd.b]);
                    else if (da) dense_[i] = diag_[nd.a].asDiagonal() * dense(nd.b);
                    else if (db) dense_[i] = dense(nd.a) * diag_[nd.b].asDiagonal();
                    else if (nd.gram) gram(dense_[i], dense(nd.a));
                    else dense_[i].noalias() = dense(nd.a) * dense(nd.b);
                    break;
                }
            }
        }
    }

    std::complex<double> expression(int k) const {
        std::complex<double> sum = 0;
        for (const auto& t : plan_.expressions()[static_cast<std::size_t>(k)]) sum += t.coefficient * request(t.request);
        return sum;
    }

    Vec diagonal(int node) const {
        return plan_.nodes()[static_cast<std::size_t>(node)].diagonal ? diag_[static_cast<std::size_t>(node)]
                                                                      : Vec(dense(node).diagonal());
    }

private:
    // Hermitian rank update, roughly 70% of a general product.
    static void gram(Dense& out, const Dense& a) {
        out.setZero(a.rows(), a.rows());
        out.template selfadjointView<Eigen::Lower>().rankUpdate(a);
        for (Eigen::Index j = 1; j < out.cols(); ++j)
            for (Eigen::Index i = 0; i < j; ++i) out(i, j) = std::conj(out(j, i));
    }

    const Dense& dense(int i) const {
        auto k = static_cast<std::size_t>(i);
        return letters_[k] ? *letters_[k] : dense_[k];
    }
    bool is_diag(int i) const { return plan_.nodes()[static_cast<std::size_t>(i)].diagonal; }

    Vec diag_of_product(int a, int b) const {
        bool da = is_diag(a), db = is_diag(b);
        if (da && db) return diag_[a].cwiseProduct(diag_[b]);
        if (da) return diag_[a].cwiseProduct(dense(b).diagonal());
        if (db) return dense(a).diagonal().cwiseProduct(diag_[b]);
        return dense(a).cwiseProduct(dense(b).transpose()).rowwise().sum();
    }

    std::complex<double> request(const TracePlan::Request& r) const {
        if (r.a < 0) return static_cast<double>(n_);
        if (r.b < 0) {
            C s = is_diag(r.a) ? diag_[r.a].sum() : dense(r.a).trace();
            return {static_cast<double>(s.real()), static_cast<double>(s.imag())};
        }
        bool da = is_diag(r.a), db = is_diag(r.b);
        std::complex<double> s = 0;
        if (da || db) {
            Vec d = diag_of_product(r.a, r.b);
            for (Eigen::Index i = 0; i < d.size(); ++i) s += std::complex<double>(d[i].real(), d[i].imag());
            return s;
        }
        // Column sums in T, accumulated in double.
        const Dense& A = dense(r.a);
        const Dense& B = dense(r.b);
        for (Eigen::Index j = 0; j < n_; ++j) {
            C col = A.col(j).cwiseProduct(B.row(j).transpose()).sum();
            s += std::complex<double>(col.real(), col.imag());
        }
        return s;
    }

    const TracePlan& plan_;
    int n_ = 0;
    std::vector<const Dense*> letters_;
    std::vector<Dense> dense_;
    std::vector<Vec> diag_;
};

int size_of(const Bindings& b) {
    if (b.empty()) throw BindingError("no matrices bound");
    auto n = b.begin()->second.rows();
    for (const auto& [l, m] : b)
        if (m.rows() != n || m.cols() != n) throw BindingError("bound matrices must be square of one size");
    return static_cast<int>(n);
}

template <class T>
typename Executor<T>::Binding convert(const Bindings& b) {
    typename Executor<T>::Binding out;
    for (const auto& [l, m] : b) out[l] = m.template cast<std::complex<T>>();
    return out;
}

template <class T>
void run_size(const TracePlan& plan, const EnsembleSpec& spec, int n, const Bindings& fixed,
              std::vector<std::vector<std::complex<double>>>& samples) {
    const int S = spec.samples;
    const int workers = std::max(1, std::min(spec.jobs, S));
    auto fixed_t = convert<T>(fixed);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    auto work = [&](int w) {
        try {
            Executor<T> ex(plan);
            auto b = fixed_t;
            for (int r = w; r < S; r += workers) {
                for (const auto& [f, ws] : spec.wigner) fill_wigner(b[Letter::x(f)], ws, f, n, spec.master_seed, r);
                ex.run(b, n);
                for (std::size_t i = 0; i < samples.size(); ++i)
                    samples[i][static_cast<std::size_t>(r)] = ex.expression(static_cast<int>(i));
            }
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

std::complex<double> parts_se(const std::vector<std::complex<double>>& x, double scale) {
    const double S = static_cast<double>(x.size());
    std::complex<double> mean = 0;
    for (auto v : x) mean += v;
    mean /= S;
    double vr = 0, vi = 0;
    for (auto v : x) {
        vr += std::pow(v.real() - mean.real(), 2);
        vi += std::pow(v.imag() - mean.imag(), 2);
    }
    return {std::sqrt(vr / (S - 1) / S) * scale, std::sqrt(vi / (S - 1) / S) * scale};
}

std::complex<double> bilinear_cov(const std::vector<std::complex<double>>& a,
                                  const std::vector<std::complex<double>>& b) {
    const double S = static_cast<double>(a.size());
    std::complex<double> ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
    ma /= S;
    mb /= S;
    std::complex<double> c = 0;
    for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma) * (b[i] - mb);
    return c / (S - 1);
}

H5Table finish(std::vector<H5Row> rows) {
    H5Table t;
    t.rows = std::move(rows);
    t.decreasing = true;
    for (std::size_t i = 1; i < t.rows.size(); ++i)
        if (t.rows[i].value > t.rows[i - 1].value + 1e-12) t.decreasing = false;
    return t;
}

double h5_value(const Matrix& a) {
    const double n = static_cast<double>(a.rows());
    double d = a.diagonal().squaredNorm() / n;
    return d - std::norm(a.trace() / n);
}

}  // namespace

Bindings bind_replica(const EnsembleSpec& spec, int n, int replica) {
    Bindings b = deterministic_bindings(spec, n);
    add_wigner(b, spec, n, replica);
    return b;
}

std::complex<double> eval_expression(const DeltaPolynomial& p, const Bindings& bindings) {
    int n = size_of(bindings);
    TracePlan plan;
    plan.add_expression(p);
    Executor<double> ex(plan);
    ex.run(bindings, n);
    return ex.expression(0);
}

int planned_products(const std::vector<DeltaPolynomial>& expressions) {
    TracePlan plan;
    for (const auto& e : expressions) plan.add_expression(e);
    return plan.dense_products();
}

Matrix eval_matrix(const DeltaPolynomial& p, const Bindings& bindings) {
    const int n = size_of(bindings);
    Matrix out = Matrix::Zero(n, n);
    for (const auto& [m, c] : p.terms()) {
        std::vector<Matrix> stack{Matrix::Identity(n, n)};
        for (unsigned char t : m.tokens()) {
            if (t == kOpen) {
                stack.push_back(Matrix::Identity(n, n));
            } else if (t == kClose) {
                Eigen::VectorXcd d = stack.back().diagonal();
                stack.pop_back();
                stack.back() = stack.back() * d.asDiagonal();
            } else {
                Letter l = Letter::from_code(t);
                auto it = bindings.find(l);
                if (it == bindings.end()) throw BindingError("no matrix bound to letter " + l.name());
                stack.back() = stack.back() * it->second;
            }
        }
        out += c.to_double() * stack.back();
    }
    return out;
}

std::complex<double> jackknife_cov_se(const std::vector<std::complex<double>>& a,
                                      const std::vector<std::complex<double>>& b) {
    const std::size_t S = a.size();
    if (S < 3 || b.size() != S) throw std::invalid_argument("jackknife needs matching samples, at least 3");
    std::complex<double> ma = 0, mb = 0;
    for (std::size_t i = 0; i < S; ++i) ma += a[i], mb += b[i];
    ma /= static_cast<double>(S);
    mb /= static_cast<double>(S);
    // Centered sums; leave-one-out covariances in O(1) each.
    std::complex<double> sa = 0, sb = 0, sab = 0;
    std::vector<std::complex<double>> ca(S), cb(S);
    for (std::size_t i = 0; i < S; ++i) {
        ca[i] = a[i] - ma;
        cb[i] = b[i] - mb;
        sa += ca[i];
        sb += cb[i];
        sab += ca[i] * cb[i];
    }
    const double m = static_cast<double>(S - 1);
    std::vector<std::complex<double>> loo(S);
    std::complex<double> mean = 0;
    for (std::size_t i = 0; i < S; ++i) {
        std::complex<double> xa = (sa - ca[i]) / m, xb = (sb - cb[i]) / m;
        loo[i] = (sab - ca[i] * cb[i] - m * xa * xb) / (m - 1);
        mean += loo[i];
    }
    mean /= static_cast<double>(S);
    double vr = 0, vi = 0;
    for (auto v : loo) {
        vr += std::pow(v.real() - mean.real(), 2);
        vi += std::pow(v.imag() - mean.imag(), 2);
    }
    const double f = m / static_cast<double>(S);
    return {std::sqrt(f * vr), std::sqrt(f * vi)};
}

McReport estimate(const std::vector<DeltaPolynomial>& expressions, const std::vector<std::pair<int, int>>& pairs,
                  const EnsembleSpec& spec, bool keep_samples) {
    spec.validate();
#if defined(__GLIBC__)
    // Eigen's GEMM workspace is a few MB per call; above the mmap threshold
    // glibc maps and unmaps it every time, which costs ~15% in page faults.
    static std::once_flag malloc_tuned;
    std::call_once(malloc_tuned, [] {
        mallopt(M_MMAP_THRESHOLD, 256 << 20);
        mallopt(M_TRIM_THRESHOLD, 512 << 20);
    });
#endif
    const int k = static_cast<int>(expressions.size());
    for (auto [p, q] : pairs)
        if (p < 0 || q < 0 || p >= k || q >= k) throw std::invalid_argument("pair index out of range");
    Alphabet alpha = spec.alphabet();
    for (const auto& e : expressions)
        for (const auto& [m, c] : e.terms())
            for (const auto& l : m.letters())
                if (!alpha.declared(l)) throw BindingError("letter " + l.name() + " is not bound by the ensemble");

    TracePlan plan;
    for (const auto& e : expressions) plan.add_expression(e);

    McReport report;
    for (const auto& e : expressions) report.expressions.push_back(render(e));
    for (int n : spec.sizes) {
        std::vector<std::vector<std::complex<double>>> samples(
            static_cast<std::size_t>(k), std::vector<std::complex<double>>(static_cast<std::size_t>(spec.samples)));
        Bindings fixed = deterministic_bindings(spec, n);
        if (spec.precision == Precision::single_precision) run_size<float>(plan, spec, n, fixed, samples);
        else run_size<double>(plan, spec, n, fixed, samples);

        SizeReport sr;
        sr.n = n;
        for (int i = 0; i < k; ++i) {
            const auto& x = samples[static_cast<std::size_t>(i)];
            std::complex<double> mean = 0;
            for (auto v : x) mean += v;
            mean /= static_cast<double>(x.size()) * n;
            sr.means.push_back({i, mean, parts_se(x, 1.0 / n)});
        }
        for (auto [p, q] : pairs) {
            const auto& a = samples[static_cast<std::size_t>(p)];
            const auto& b = samples[static_cast<std::size_t>(q)];
            sr.pairs.push_back({p, q, bilinear_cov(a, b), spec.samples >= 3 ? jackknife_cov_se(a, b) : 0.0});
        }
        if (keep_samples) sr.samples = std::move(samples);
        report.sizes.push_back(std::move(sr));
    }
    return report;
}

H5Table h5_diagnostic(const DeltaPolynomial& expression, const EnsembleSpec& spec, const std::vector<int>& sizes) {
    std::vector<H5Row> rows;
    for (int n : sizes) rows.push_back({n, h5_value(eval_matrix(expression, bind_replica(spec, n, 0)))});
    return finish(std::move(rows));
}

H5Table h5_diagnostic(const DeterministicSpec& builder, const std::vector<int>& sizes) {
    std::vector<H5Row> rows;
    for (int n : sizes) rows.push_back({n, h5_value(build_deterministic(builder, n))});
    return finish(std::move(rows));
}

}  // namespace deltafree
