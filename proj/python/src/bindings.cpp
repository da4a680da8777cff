// JSON strings cross the boundary; the Python package turns them into objects.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "deltafree/expression.hpp"
#include "deltafree/state_io.hpp"
#include "deltafree/verify.hpp"

namespace py = pybind11;
using namespace deltafree;

namespace {

Json doc(const std::string& s) { return s.empty() ? Json::object() : Json::parse(s); }

std::string normalize_expr(const std::string& text) { return render(parse(text)); }

std::string phi1(const std::string& text, const std::string& first_order) {
    LoadedFirstOrder fo = first_order_from_json(doc(first_order));
    return to_json(PhiEvaluator(fo.state).eval(parse(text, fo.alphabet))).dump();
}

std::string phi2(const std::string& p, const std::string& q, const std::string& second_order) {
    LoadedSecondOrder so = second_order_from_json(doc(second_order));
    SecondOrderEvaluator ev(so.state);
    return to_json(ev.eval(parse(p, so.alphabet), parse(q, so.alphabet))).dump();
}

std::string oracle(const std::string& p, const std::string& q, const std::string& laws_doc, long at) {
    Laws laws = laws_doc.empty() ? Laws{} : laws_from_json(doc(laws_doc));
    DeltaPolynomial a = parse(p);
    RationalInN r;
    if (q.empty()) {
        for (const auto& [m, c] : a.terms()) {
            RationalInN t = m.is_empty() ? RationalInN::constant(Complex(1)) : exact_moment(m, laws);
            t *= c;
            r += t;
        }
    } else {
        DeltaPolynomial b = parse(q);
        for (const auto& [m, c] : a.terms())
            for (const auto& [n, d] : b.terms()) {
                if (m.is_empty() || n.is_empty()) continue;
                RationalInN t = exact_covariance(m, n, laws);
                t *= c * d;
                r += t;
            }
    }
    Json j = {{"function", r.render_fraction()}, {"limit", to_json(r.limit())}};
    if (at > 0) j["value"] = to_json(r.evaluate(at));
    return j.dump();
}

std::string monte_carlo(const std::vector<std::string>& exprs, const std::vector<std::pair<int, int>>& pairs,
                        const std::string& ensemble) {
    EnsembleSpec spec = ensemble_from_json(doc(ensemble));
    Alphabet a = spec.alphabet();
    std::vector<DeltaPolynomial> ps;
    for (const auto& e : exprs) ps.push_back(parse(e, a));
    McReport report;
    {
        py::gil_scoped_release release;
        report = estimate(ps, pairs, spec);
    }
    return report_to_json(report, spec).dump();
}

std::string run(const std::string& name, std::uint64_t seed, int samples, int jobs) {
    VerifyOptions opt;
    opt.seed = seed;
    opt.samples = samples;
    opt.jobs = jobs;
    SuiteResult r;
    {
        py::gil_scoped_release release;
        r = run_suite(name, opt);
    }
    return verify_report({r}, opt).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings to the deltafree C++ engines";
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<MissingMarginal>(m, "MissingMarginal", PyExc_LookupError);
    py::register_exception<UndefinedMoment>(m, "UndefinedMoment", PyExc_LookupError);
    m.def("normalize", &normalize_expr, py::arg("expr"));
    m.def("phi1", &phi1, py::arg("expr"), py::arg("first_order") = "");
    m.def("phi2", &phi2, py::arg("p"), py::arg("q"), py::arg("second_order") = "");
    m.def("oracle", &oracle, py::arg("p"), py::arg("q") = "", py::arg("laws") = "", py::arg("at") = 0);
    m.def("monte_carlo", &monte_carlo, py::arg("expressions"), py::arg("pairs"), py::arg("ensemble"));
    m.def("run_suite", &run, py::arg("name"), py::arg("seed") = 0, py::arg("samples") = 2000, py::arg("jobs") = 1);
    m.def("suite_names", &suite_names);
    m.def("count_noncrossing_pairings", &count_noncrossing_pairings);
}
