#pragma once

#include <complex>
#include <filesystem>
#include <json.hpp>
#include <stdexcept>
#include <string>

#include "deltafree/entry_law.hpp"
#include "deltafree/first_order.hpp"
#include "deltafree/matrix_mc.hpp"
#include "deltafree/second_order.hpp"

namespace deltafree {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json load_json_file(const std::filesystem::path& path);

// Accepts "3/4", 0.25, [re, im] or {"re": .., "im": ..}; components as strings or numbers.
Complex complex_from_json(const Json& j);
// {"type": "exact", "re": "3/4", "im": "0"}
Json to_json(const Complex& z);
// {"type": "float", "re": .., "im": ..}
Json to_json(std::complex<double> z);

struct LoadedFirstOrder {
    FirstOrderState state;
    Alphabet alphabet;
};

// {"wigner": [{"family": 1, "variance": "1"}],   (omitted: all x families, variance 1)
//  "deterministic": [{"family": 1, "power_moments": [...]}, {"family": 2, "scalar": "2"},
//                    {"family": 3, "self_adjoint": false, "words": [["y3*y3'", "1"]]}],
//  "h5": true, "table": [["D[y1]*y1", "1/2"]]}
LoadedFirstOrder first_order_from_json(const Json& j);

// A preset name, or {"preset": name} or {"name", "cap", "mu": [[a, b, value]...], "diag": [...]}.
WignerEntryLaw law_from_json(const Json& j);
// {"default": law, "families": {"2": law}}
Laws laws_from_json(const Json& j);

struct LoadedSecondOrder {
    SecondOrderState state;
    Alphabet alphabet;
};

// {"first_order": {...}, "laws": {...}, "oracle_marginals": true, "oracle_cap": 14,
//  "marginals": [["x1^2", "x1^2", "2"], ...]}
LoadedSecondOrder second_order_from_json(const Json& j);

// {"wigner": {"1": {"preset": "quaternary", "seed": 3}},
//  "deterministic": {"1": {"builder": "hermitian-circulant", "coefficients": ["-1", "2"]}},
//  "sizes": [128, 256, 512], "samples": 2000, "master_seed": 0, "precision": "double", "jobs": 1}
EnsembleSpec ensemble_from_json(const Json& j);

Json report_to_json(const McReport& report, const EnsembleSpec& spec);
std::string report_to_csv(const McReport& report);

// Oracle marginal cache persisted under a directory, one file per law fingerprint.
std::filesystem::path marginal_cache_file(const std::filesystem::path& dir, const Laws& laws);
SecondOrderEvaluator::OracleCache load_marginal_cache(const std::filesystem::path& file);
void save_marginal_cache(const std::filesystem::path& file, const SecondOrderEvaluator::OracleCache& cache);

}  // namespace deltafree
