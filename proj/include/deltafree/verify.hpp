#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deltafree/matrix_mc.hpp"
#include "deltafree/state_io.hpp"

namespace deltafree {

struct VerifyOptions {
    std::uint64_t seed = 0;
    int jobs = 1;
    // Replica count for the Monte Carlo suites.
    int samples = 2000;
    Precision precision = Precision::single_precision;
    // Progress lines go here when set.
    std::function<void(const std::string&)> log;
};

struct SuiteResult {
    int criterion = 0;
    std::string suite;
    bool pass = false;
    std::string detail;
    double seconds = 0;
    Json data = Json::object();
};

// Suite names in criterion order: semicircle, example-ground-change, sd-vs-oracle,
// classification, second-order-oracle, collinearity, orthogonality,
// example-alpha, h5, mixed-mc, fluctuations.
const std::vector<std::string>& suite_names();

// Throws ConfigError on an unknown name.
SuiteResult run_suite(const std::string& name, const VerifyOptions& options);

Json verify_report(const std::vector<SuiteResult>& results, const VerifyOptions& options);

// Brute-force count of non-crossing pair partitions of 2k points.
unsigned long long count_noncrossing_pairings(int k);

// A random canonical monomial with exactly `degree` letters drawn from `alphabet`
// and random bracket placements.
DeltaMonomial random_monomial(std::uint64_t& state, const std::vector<Letter>& alphabet, int degree);

}  // namespace deltafree
