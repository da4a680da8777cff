#include "deltafree/state_io.hpp"

#include <fstream>
#include <sstream>

#include "deltafree/expression.hpp"

namespace deltafree {

namespace {

Rational rational_from(const Json& j) {
    try {
        if (j.is_string()) return parse_rational(j.get<std::string>());
        if (j.is_number_integer()) return Rational(static_cast<long>(j.get<long long>()));
        if (j.is_number()) return rational_from_double(j.get<double>());
    } catch (const NumberError& e) {
        throw ConfigError(e.what());
    }
    throw ConfigError("expected a number, got " + j.dump());
}

int family_of(const Json& j, const char* what) {
    if (!j.contains("family") || !j["family"].is_number_integer())
        throw ConfigError(std::string(what) + " entry needs an integer \"family\"");
    return j["family"].get<int>();
}

DeltaPolynomial parse_in(const std::string& text, const Alphabet& a) {
    try {
        return parse(text, a);
    } catch (const std::exception& e) {
        throw ConfigError("cannot parse '" + text + "': " + e.what());
    }
}

DeltaMonomial single_monomial(const std::string& text, const Alphabet& a) {
    DeltaPolynomial p = parse_in(text, a);
    if (p.terms().size() != 1 || p.terms().begin()->second != Complex(1))
        throw ConfigError("'" + text + "' must be a single monomial with coefficient 1");
    return p.terms().begin()->first;
}

// [key, value] pairs or {"word"/"monomial": key, "value": v}
std::pair<std::string, Complex> keyed_value(const Json& e) {
    if (e.is_array() && e.size() == 2 && e[0].is_string()) return {e[0].get<std::string>(), complex_from_json(e[1])};
    if (e.is_object() && e.contains("value")) {
        for (const char* k : {"word", "monomial", "expr"})
            if (e.contains(k)) return {e[k].get<std::string>(), complex_from_json(e["value"])};
    }
    throw ConfigError("expected [expression, value], got " + e.dump());
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

Complex complex_from_json(const Json& j) {
    if (j.is_array()) {
        if (j.size() != 2) throw ConfigError("complex value must be [re, im]");
        return {rational_from(j[0]), rational_from(j[1])};
    }
    if (j.is_object()) {
        if (!j.contains("re") && !j.contains("im")) throw ConfigError("complex value needs \"re\" or \"im\"");
        Rational re = j.contains("re") ? rational_from(j["re"]) : Rational(0);
        Rational im = j.contains("im") ? rational_from(j["im"]) : Rational(0);
        return {re, im};
    }
    return Complex(rational_from(j));
}

Json to_json(const Complex& z) { return {{"type", "exact"}, {"re", format(z.re)}, {"im", format(z.im)}}; }

Json to_json(std::complex<double> z) { return {{"type", "float"}, {"re", z.real()}, {"im", z.imag()}}; }

LoadedFirstOrder first_order_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("first-order state must be a JSON object");
    LoadedFirstOrder out;
    auto& st = out.state;
    try {
        if (j.contains("wigner")) {
            for (const auto& w : j["wigner"]) {
                int f = family_of(w, "wigner");
                out.alphabet.declare_wigner(f);
                st.wigner_variance[f] = w.contains("variance") ? complex_from_json(w["variance"]) : Complex(1);
            }
        } else {
            // No declaration: every x family is available with variance 1.
            for (int f = 1; f <= kMaxWignerFamily; ++f) out.alphabet.declare_wigner(f);
        }
        st.h5 = j.value("h5", true);
        std::vector<std::pair<std::string, Complex>> words;
        if (j.contains("deterministic")) {
            for (const auto& d : j["deterministic"]) {
                int f = family_of(d, "deterministic");
                DeterministicFamily fam;
                int sources = d.contains("power_moments") + d.contains("scalar") + d.contains("words");
                if (sources != 1)
                    throw ConfigError("y" + std::to_string(f) + " needs exactly one of power_moments, scalar, words");
                if (d.contains("power_moments")) {
                    fam.source = DeterministicFamily::Source::power_moments;
                    fam.self_adjoint = true;
                    if (!d.value("self_adjoint", true))
                        throw ConfigError("power_moments require a self-adjoint family (y" + std::to_string(f) + ")");
                    for (const auto& m : d["power_moments"]) fam.moments.push_back(complex_from_json(m));
                    if (fam.moments.empty() || fam.moments[0] != Complex(1))
                        throw ConfigError("power_moments must start with phi(1) = 1 (y" + std::to_string(f) + ")");
                } else if (d.contains("scalar")) {
                    fam.source = DeterministicFamily::Source::scalar;
                    fam.scalar = complex_from_json(d["scalar"]);
                    fam.self_adjoint = d.value("self_adjoint", fam.scalar.is_real());
                } else {
                    fam.self_adjoint = d.value("self_adjoint", true);
                    for (const auto& e : d["words"]) words.push_back(keyed_value(e));
                }
                out.alphabet.declare_deterministic(f, fam.self_adjoint);
                st.y_families[f] = fam;
            }
        }
        for (const auto& [w, v] : words) st.set_table_value(single_monomial(w, out.alphabet), v);
        if (j.contains("table"))
            for (const auto& e : j["table"]) {
                auto [w, v] = keyed_value(e);
                st.set_table_value(single_monomial(w, out.alphabet), v);
            }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("first-order state: ") + e.what());
    }
    return out;
}

WignerEntryLaw law_from_json(const Json& j) {
    try {
        if (j.is_string()) return WignerEntryLaw::preset(j.get<std::string>());
        if (!j.is_object()) throw ConfigError("entry law must be a preset name or an object");
        if (j.contains("preset")) return WignerEntryLaw::preset(j["preset"].get<std::string>(), j.value("cap", 32));
        int cap = j.value("cap", 16);
        auto size = static_cast<std::size_t>(cap + 1);
        std::vector<std::vector<Rational>> mu(size, std::vector<Rational>(size, Rational(0)));
        for (const auto& e : j.at("mu")) {
            if (!e.is_array() || e.size() != 3) throw ConfigError("mu entries are [a, b, value]");
            int a = e[0].get<int>(), b = e[1].get<int>();
            if (a < 0 || b < 0 || a > cap || b > cap) throw ConfigError("mu index beyond the degree cap");
            mu[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = rational_from(e[2]);
        }
        std::vector<Rational> diag(size, Rational(0));
        std::size_t k = 0;
        for (const auto& e : j.at("diag")) {
            if (k >= size) throw ConfigError("diag longer than the degree cap");
            diag[k++] = rational_from(e);
        }
        return WignerEntryLaw::from_tables(j.value("name", std::string("custom")), cap, std::move(mu), std::move(diag));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("entry law: ") + e.what());
    }
}

Laws laws_from_json(const Json& j) {
    Laws l;
    if (j.is_string()) {
        l.default_law = law_from_json(j);
        return l;
    }
    if (j.contains("default")) l.default_law = law_from_json(j["default"]);
    if (j.contains("families"))
        for (const auto& [k, v] : j["families"].items()) l.per_family.emplace(std::stoi(k), law_from_json(v));
    return l;
}

LoadedSecondOrder second_order_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("second-order state must be a JSON object");
    LoadedSecondOrder out;
    auto first = first_order_from_json(j.value("first_order", Json::object()));
    out.state.first = std::move(first.state);
    out.alphabet = std::move(first.alphabet);
    if (j.contains("laws")) out.state.laws = laws_from_json(j["laws"]);
    out.state.oracle_marginals = j.value("oracle_marginals", true);
    out.state.oracle.cap = j.value("oracle_cap", 14);
    if (j.contains("marginals")) {
        for (const auto& e : j["marginals"]) {
            if (!e.is_array() || e.size() != 3) throw ConfigError("marginal entries are [p, q, value]");
            DeltaMonomial p = single_monomial(e[0].get<std::string>(), out.alphabet);
            DeltaMonomial q = single_monomial(e[1].get<std::string>(), out.alphabet);
            auto tp = single_tag(p), tq = single_tag(q);
            if (!tp || !tq || *tp != *tq || *tp == kDeterministicTag)
                throw ConfigError("marginal " + e.dump() + " must pair monomials of one Wigner family");
            try {
                out.state.set_marginal(*tp, p, q, complex_from_json(e[2]));
            } catch (const std::invalid_argument& ex) {
                throw ConfigError(ex.what());
            }
        }
    }
    return out;
}

EnsembleSpec ensemble_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("ensemble spec must be a JSON object");
    EnsembleSpec s;
    try {
        if (j.contains("wigner"))
            for (const auto& [k, v] : j["wigner"].items()) {
                WignerSpec w;
                w.preset = v.value("preset", std::string("complex-gaussian"));
                w.seed = v.value("seed", std::uint64_t{0});
                s.wigner[std::stoi(k)] = w;
            }
        if (j.contains("deterministic"))
            for (const auto& [k, v] : j["deterministic"].items()) {
                DeterministicSpec d;
                d.builder = builder_from_string(v.at("builder").get<std::string>());
                if (v.contains("coefficients"))
                    for (const auto& c : v["coefficients"]) d.coefficients.push_back(rational_from(c));
                if (v.contains("value")) d.scalar = complex_from_json(v["value"]);
                s.deterministic[std::stoi(k)] = d;
            }
        if (j.contains("sizes")) s.sizes = j["sizes"].get<std::vector<int>>();
        s.samples = j.value("samples", s.samples);
        s.master_seed = j.value("master_seed", s.master_seed);
        s.jobs = j.value("jobs", s.jobs);
        std::string precision = j.value("precision", std::string("double"));
        if (precision == "double") s.precision = Precision::double_precision;
        else if (precision == "single") s.precision = Precision::single_precision;
        else throw ConfigError("precision must be \"double\" or \"single\"");
        s.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("ensemble spec: ") + e.what());
    }
    return s;
}

Json report_to_json(const McReport& report, const EnsembleSpec& spec) {
    Json results = Json::array();
    Json pairs = Json::array();
    for (const auto& sr : report.sizes) {
        for (const auto& m : sr.means)
            results.push_back({{"expression", report.expressions[static_cast<std::size_t>(m.expression)]},
                               {"N", sr.n},
                               {"mean", to_json(m.mean)},
                               {"se_mean", to_json(m.se)}});
        for (const auto& p : sr.pairs)
            pairs.push_back({{"N", sr.n},
                             {"p", report.expressions[static_cast<std::size_t>(p.p)]},
                             {"q", report.expressions[static_cast<std::size_t>(p.q)]},
                             {"cov", to_json(p.cov)},
                             {"se_cov", to_json(p.se)}});
    }
    Json diagnostics = {{"samples", spec.samples},
                        {"master_seed", spec.master_seed},
                        {"precision", spec.precision == Precision::single_precision ? "single" : "double"},
                        {"sizes", spec.sizes}};
    return {{"results", results}, {"pairs", pairs}, {"diagnostics", diagnostics}};
}

std::string report_to_csv(const McReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "kind,N,p,q,re,im,se_re,se_im\n";
    auto quoted = [](const std::string& s) { return "\"" + s + "\""; };
    for (const auto& sr : report.sizes) {
        for (const auto& m : sr.means)
            os << "mean," << sr.n << ',' << quoted(report.expressions[static_cast<std::size_t>(m.expression)]) << ",,"
               << m.mean.real() << ',' << m.mean.imag() << ',' << m.se.real() << ',' << m.se.imag() << '\n';
        for (const auto& p : sr.pairs)
            os << "cov," << sr.n << ',' << quoted(report.expressions[static_cast<std::size_t>(p.p)]) << ','
               << quoted(report.expressions[static_cast<std::size_t>(p.q)]) << ',' << p.cov.real() << ','
               << p.cov.imag() << ',' << p.se.real() << ',' << p.se.imag() << '\n';
    }
    return os.str();
}

std::filesystem::path marginal_cache_file(const std::filesystem::path& dir, const Laws& laws) {
    std::string fp = laws.default_law.fingerprint();
    for (const auto& [f, l] : laws.per_family) fp += ";" + std::to_string(f) + "=" + l.fingerprint();
    std::ostringstream name;
    name << "marginals-" << std::hex << std::hash<std::string>{}(fp) << ".json";
    return dir / name.str();
}

SecondOrderEvaluator::OracleCache load_marginal_cache(const std::filesystem::path& file) {
    SecondOrderEvaluator::OracleCache cache;
    if (!std::filesystem::exists(file)) return cache;
    Json j = load_json_file(file);
    for (const auto& e : j.at("entries")) {
        auto p = parse_monomial(e.at("p").get<std::string>());
        auto q = parse_monomial(e.at("q").get<std::string>());
        cache.emplace(std::tuple{e.at("family").get<int>(), p, q}, complex_from_json(e.at("value")));
    }
    return cache;
}

void save_marginal_cache(const std::filesystem::path& file, const SecondOrderEvaluator::OracleCache& cache) {
    Json entries = Json::array();
    for (const auto& [k, v] : cache) {
        const auto& [f, p, q] = k;
        entries.push_back({{"family", f}, {"p", render(p)}, {"q", render(q)}, {"value", to_json(v)}});
    }
    std::filesystem::create_directories(file.parent_path());
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        out << Json{{"entries", entries}}.dump();
    }
    std::filesystem::rename(tmp, file);
}

}  // namespace deltafree
