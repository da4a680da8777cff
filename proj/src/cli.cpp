#include "deltafree/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "deltafree/expression.hpp"
#include "deltafree/state_io.hpp"
#include "deltafree/verify.hpp"

namespace deltafree {

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
    int jobs = 1;
    std::string format = "json";
    std::string out_path;
};

// Usage and configuration problems; mapped to exit status 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json load_config(const Globals& g) { return g.config_path.empty() ? Json::object() : load_json_file(g.config_path); }

Alphabet alphabet_from_json(const Json& j) {
    Alphabet a;
    for (const auto& f : j.value("wigner", Json::array())) a.declare_wigner(f.get<int>());
    for (const auto& [k, sa] : j.value("deterministic", Json::object()).items()) a.declare_deterministic(std::stoi(k), sa.get<bool>());
    return a;
}

// Positional expressions first, else the config's "expressions".
std::vector<std::string> expressions(const std::vector<std::string>& positional, const Json& cfg) {
    if (!positional.empty()) return positional;
    std::vector<std::string> out;
    for (const auto& e : cfg.value("expressions", Json::array())) out.push_back(e.get<std::string>());
    return out;
}

Laws laws_for(const Json& cfg, const std::string& preset) {
    Laws laws = cfg.contains("laws") ? laws_from_json(cfg["laws"]) : Laws{};
    if (!preset.empty()) laws.default_law = WignerEntryLaw::preset(preset);
    return laws;
}

Json sigma_json(const DeltaMonomial& m) {
    NCPartition s = sigma_partition(m);
    Json j = {{"n", s.n}, {"blocks", s.blocks}};
    j["ground"] = s.ground ? Json(*s.ground) : Json(nullptr);
    return j;
}

std::string csv_quote(const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

void emit(const Globals& g, std::ostream& out, const Json& j, const std::string& csv) {
    std::string text = g.format == "csv" ? csv : j.dump(2) + "\n";
    if (g.out_path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(g.out_path);
    if (!f) throw ConfigError("cannot write " + g.out_path);
    f << text;
}

std::string value_csv(const Json& rows, const std::vector<std::string>& keys) {
    std::ostringstream os;
    for (std::size_t i = 0; i < keys.size(); ++i) os << keys[i] << ',';
    os << "re,im\n";
    for (const auto& r : rows) {
        for (const auto& k : keys) os << csv_quote(r[k].get<std::string>()) << ',';
        os << r["value"]["re"].get<std::string>() << ',' << r["value"]["im"].get<std::string>() << '\n';
    }
    return os.str();
}

int cmd_normalize(const Globals& g, const std::vector<std::string>& exprs, std::ostream& out) {
    Json cfg = load_config(g);
    Alphabet a = cfg.contains("alphabet") ? alphabet_from_json(cfg["alphabet"]) : Alphabet::permissive();
    Json rows = Json::array();
    std::ostringstream csv;
    csv << "input,canonical\n";
    for (const auto& e : expressions(exprs, cfg)) {
        DeltaPolynomial p = parse(e, a);
        Json terms = Json::array();
        for (const auto& [m, c] : p.terms())
            terms.push_back({{"monomial", render(m)}, {"coefficient", to_json(c)}, {"sigma", sigma_json(m)}});
        rows.push_back({{"input", e}, {"canonical", render(p)}, {"terms", terms}});
        csv << csv_quote(e) << ',' << csv_quote(render(p)) << '\n';
    }
    emit(g, out, {{"results", rows}}, csv.str());
    return 0;
}

int cmd_phi1(const Globals& g, const std::vector<std::string>& exprs, std::ostream& out) {
    Json cfg = load_config(g);
    LoadedFirstOrder fo = first_order_from_json(cfg.value("first_order", Json::object()));
    PhiEvaluator phi(fo.state);
    Json rows = Json::array();
    for (const auto& e : expressions(exprs, cfg)) {
        DeltaPolynomial p = parse(e, fo.alphabet);
        rows.push_back({{"expression", e}, {"value", to_json(phi.eval(p))}});
    }
    emit(g, out, {{"results", rows}}, value_csv(rows, {"expression"}));
    return 0;
}

const char* source_name(MarginalLookup::Source s) {
    switch (s) {
        case MarginalLookup::Source::table: return "table";
        case MarginalLookup::Source::oracle: return "oracle";
        case MarginalLookup::Source::deterministic: return "deterministic";
    }
    return "?";
}

std::vector<std::pair<std::string, std::string>> pair_list(const std::vector<std::string>& positional, const Json& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    if (!positional.empty()) {
        if (positional.size() % 2) throw UsageError("phi2 and oracle-cov take expressions in pairs");
        for (std::size_t i = 0; i < positional.size(); i += 2) out.emplace_back(positional[i], positional[i + 1]);
        return out;
    }
    for (const auto& p : cfg.value("pairs", Json::array())) out.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return out;
}

int cmd_phi2(const Globals& g, const std::vector<std::string>& args, const std::string& preset, std::ostream& out) {
    Json cfg = load_config(g);
    LoadedSecondOrder so = second_order_from_json(cfg.value("second_order", Json::object()));
    if (!preset.empty()) so.state.laws.default_law = WignerEntryLaw::preset(preset);
    so.state.oracle.jobs = g.jobs;
    SecondOrderEvaluator ev(so.state);
    std::filesystem::path cache;
    if (const char* dir = std::getenv("DM_CACHE_DIR"); dir && *dir) {
        cache = marginal_cache_file(dir, so.state.laws);
        if (std::filesystem::exists(cache)) ev.seed_oracle_cache(load_marginal_cache(cache));
    }
    Json rows = Json::array();
    for (const auto& [ps, qs] : pair_list(args, cfg)) {
        DeltaPolynomial p = parse(ps, so.alphabet), q = parse(qs, so.alphabet);
        ev.clear_lookups();
        Complex v = ev.eval(p, q);
        Json lookups = Json::array();
        for (const auto& l : ev.lookups())
            lookups.push_back({{"family", l.family},
                               {"p", render(l.p)},
                               {"q", render(l.q)},
                               {"value", to_json(l.value)},
                               {"source", source_name(l.source)}});
        rows.push_back({{"p", ps}, {"q", qs}, {"value", to_json(v)}, {"marginals", lookups}});
    }
    if (!cache.empty()) {
        std::filesystem::create_directories(cache.parent_path());
        save_marginal_cache(cache, ev.oracle_cache());
    }
    emit(g, out, {{"results", rows}}, value_csv(rows, {"p", "q"}));
    return 0;
}

Json rational_json(const RationalInN& r, const std::vector<long>& at) {
    Json j = {{"function", r.render_fraction()}, {"expansion", r.render()}};
    try {
        j["limit"] = to_json(r.limit());
    } catch (const DivergentLimit&) {
        j["limit"] = nullptr;
    }
    Json vals = Json::array();
    for (long n : at) vals.push_back({{"N", n}, {"value", to_json(r.evaluate(n))}});
    if (!at.empty()) j["at"] = vals;
    return j;
}

RationalInN linear(const DeltaPolynomial& p, const std::function<RationalInN(const DeltaMonomial&)>& f) {
    RationalInN sum;
    for (const auto& [m, c] : p.terms()) {
        RationalInN t = f(m);
        t *= c;
        sum += t;
    }
    return sum;
}

std::string oracle_csv(const Json& rows, const std::vector<std::string>& keys) {
    std::ostringstream os;
    for (const auto& k : keys) os << k << ',';
    os << "function,limit_re,limit_im\n";
    for (const auto& r : rows) {
        for (const auto& k : keys) os << csv_quote(r[k].get<std::string>()) << ',';
        os << csv_quote(r["function"].get<std::string>()) << ',';
        if (r["limit"].is_null())
            os << ",\n";
        else
            os << r["limit"]["re"].get<std::string>() << ',' << r["limit"]["im"].get<std::string>() << '\n';
    }
    return os.str();
}

int cmd_oracle_moment(const Globals& g, const std::vector<std::string>& args, const std::string& preset,
                      const std::vector<long>& at, int cap, std::ostream& out) {
    Json cfg = load_config(g);
    Laws laws = laws_for(cfg, preset);
    OracleOptions opt{cap, g.jobs};
    Json rows = Json::array();
    for (const auto& e : expressions(args, cfg)) {
        DeltaPolynomial p = parse(e);
        RationalInN r = linear(p, [&](const DeltaMonomial& m) {
            return m.is_empty() ? RationalInN::constant(Complex(1)) : exact_moment(m, laws, opt);
        });
        Json row = rational_json(r, at);
        row["expression"] = e;
        rows.push_back(row);
    }
    emit(g, out, {{"results", rows}}, oracle_csv(rows, {"expression"}));
    return 0;
}

int cmd_oracle_cov(const Globals& g, const std::vector<std::string>& args, const std::string& preset,
                   const std::vector<long>& at, int cap, std::ostream& out) {
    Json cfg = load_config(g);
    Laws laws = laws_for(cfg, preset);
    OracleOptions opt{cap, g.jobs};
    Json rows = Json::array();
    for (const auto& [ps, qs] : pair_list(args, cfg)) {
        DeltaPolynomial p = parse(ps), q = parse(qs);
        RationalInN r;
        for (const auto& [m, c] : p.terms())
            for (const auto& [n, d] : q.terms()) {
                if (m.is_empty() || n.is_empty()) continue;
                RationalInN t = exact_covariance(m, n, laws, opt);
                t *= c * d;
                r += t;
            }
        Json row = rational_json(r, at);
        row["p"] = ps;
        row["q"] = qs;
        rows.push_back(row);
    }
    emit(g, out, {{"results", rows}}, oracle_csv(rows, {"p", "q"}));
    return 0;
}

int cmd_mc(const Globals& g, const std::vector<std::string>& args, bool keep, std::ostream& out) {
    Json cfg = load_config(g);
    if (!cfg.contains("ensemble")) throw UsageError("mc needs --config with an \"ensemble\" section");
    EnsembleSpec spec = ensemble_from_json(cfg["ensemble"]);
    if (g.seed_given) spec.master_seed = g.seed;
    spec.jobs = g.jobs;
    Alphabet a = spec.alphabet();
    std::vector<DeltaPolynomial> exprs;
    for (const auto& e : expressions(args, cfg)) exprs.push_back(parse(e, a));
    if (exprs.empty()) throw UsageError("mc needs at least one expression");
    std::vector<std::pair<int, int>> pairs;
    for (const auto& p : cfg.value("pairs", Json::array())) {
        int i = p.at(0).get<int>(), j = p.at(1).get<int>();
        if (i < 0 || j < 0 || i >= static_cast<int>(exprs.size()) || j >= static_cast<int>(exprs.size()))
            throw ConfigError("pair index out of range");
        pairs.emplace_back(i, j);
    }
    McReport report = estimate(exprs, pairs, spec, keep);
    Json j = report_to_json(report, spec);
    if (keep) {
        Json samples = Json::array();
        for (const auto& sr : report.sizes) {
            Json per = Json::array();
            for (const auto& s : sr.samples) {
                Json v = Json::array();
                for (auto z : s) v.push_back({z.real(), z.imag()});
                per.push_back(v);
            }
            samples.push_back({{"N", sr.n}, {"traces", per}});
        }
        j["samples"] = samples;
    }
    emit(g, out, j, report_to_csv(report));
    return 0;
}

int cmd_verify(const Globals& g, std::vector<std::string> suites, int samples, const std::string& precision,
               bool quiet, std::ostream& out, std::ostream& err) {
    Json cfg = load_config(g);
    if (suites.empty())
        for (const auto& s : cfg.value("suites", Json::array())) suites.push_back(s.get<std::string>());
    if (suites.empty()) throw UsageError("verify needs at least one suite (or \"all\")");
    if (suites.size() == 1 && suites[0] == "all") suites = suite_names();
    for (const auto& s : suites)
        if (std::find(suite_names().begin(), suite_names().end(), s) == suite_names().end())
            throw UsageError("unknown suite '" + s + "'");
    VerifyOptions opt;
    opt.seed = g.seed_given ? g.seed : cfg.value("seed", std::uint64_t{0});
    opt.jobs = g.jobs;
    opt.samples = samples > 0 ? samples : cfg.value("samples", 2000);
    std::string prec = !precision.empty() ? precision : cfg.value("precision", std::string("single"));
    if (prec != "single" && prec != "double") throw UsageError("precision must be single or double");
    opt.precision = prec == "single" ? Precision::single_precision : Precision::double_precision;
    std::vector<SuiteResult> results;
    for (const auto& s : suites) {
        results.push_back(run_suite(s, opt));
        const auto& r = results.back();
        if (!quiet) err << (r.pass ? "PASS " : "FAIL ") << r.criterion << ' ' << r.suite << ": " << r.detail << '\n';
    }
    Json report = verify_report(results, opt);
    std::ostringstream csv;
    csv << "criterion,suite,pass,seconds,detail\n";
    for (const auto& r : results)
        csv << r.criterion << ',' << r.suite << ',' << (r.pass ? "true" : "false") << ',' << r.seconds << ','
            << csv_quote(r.detail) << '\n';
    emit(g, out, report, csv.str());
    return report["all_pass"].get<bool>() ? 0 : 1;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Delta-expression engines: normalization, limits, exact oracle and Monte Carlo"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON run configuration");
    auto* seed = app.add_option("--seed", g.seed, "master seed for every random stream");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--out", g.out_path, "write output here instead of stdout");

    std::vector<std::string> positional;
    std::string preset;
    std::vector<long> at;
    int cap = 14, samples = 0;
    bool keep = false, quiet = false;
    std::string precision;

    auto* normalize = app.add_subcommand("normalize", "canonical form and sigma partition");
    normalize->add_option("expr", positional);
    auto* phi1 = app.add_subcommand("phi1", "first-order limit");
    phi1->add_option("expr", positional);
    auto* phi2 = app.add_subcommand("phi2", "second-order limit of pairs P Q");
    phi2->add_option("expr", positional);
    phi2->add_option("--law", preset, "default entry law preset");
    auto* om = app.add_subcommand("oracle-moment", "exact E[(1/N) Tr p] as a function of N");
    om->add_option("expr", positional);
    auto* oc = app.add_subcommand("oracle-cov", "exact Cov(Tr p, Tr q) as a function of N");
    oc->add_option("expr", positional);
    for (auto* sub : {om, oc}) {
        sub->add_option("--law", preset, "default entry law preset");
        sub->add_option("--at", at, "also evaluate at these N");
        sub->add_option("--cap", cap, "largest vertex count enumerated");
    }
    auto* mc = app.add_subcommand("mc", "Monte Carlo estimates");
    mc->add_option("expr", positional);
    mc->add_flag("--samples-out", keep, "include every per-replica trace");
    auto* verify = app.add_subcommand("verify", "run acceptance suites");
    verify->add_option("suite", positional, "suite names, or all");
    verify->add_option("--samples", samples, "Monte Carlo replicas")->check(CLI::Range(10, 10000000));
    verify->add_option("--precision", precision, "single or double");
    verify->add_flag("--quiet", quiet, "no per-suite lines on stderr");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        return 2;
    }
    g.seed_given = seed->count() > 0;

    try {
        if (normalize->parsed()) return cmd_normalize(g, positional, out);
        if (phi1->parsed()) return cmd_phi1(g, positional, out);
        if (phi2->parsed()) return cmd_phi2(g, positional, preset, out);
        if (om->parsed()) return cmd_oracle_moment(g, positional, preset, at, cap, out);
        if (oc->parsed()) return cmd_oracle_cov(g, positional, preset, at, cap, out);
        if (mc->parsed()) return cmd_mc(g, positional, keep, out);
        if (verify->parsed()) return cmd_verify(g, positional, samples, precision, quiet, out, err);
    } catch (const MissingMarginal& e) {
        err << "missing marginal: " << e.what() << '\n';
        return 2;
    } catch (const UndefinedMoment& e) {
        err << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const UsageError& e) {
        err << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        // Config, alphabet, binding, law and JSON errors all land here.
        err << e.what() << '\n';
        return 2;
    }
    return 2;
}

}  // namespace deltafree
