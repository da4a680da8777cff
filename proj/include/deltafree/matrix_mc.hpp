#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "deltafree/expression.hpp"
#include "deltafree/first_order.hpp"
#include "deltafree/polynomial.hpp"
#include "deltafree/test_graph.hpp"

namespace deltafree {

class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class BindingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct WignerSpec {
    std::string preset = "complex-gaussian";
    std::uint64_t seed = 0;
};

struct DeterministicSpec {
    enum class Builder { hermitian_circulant, diagonal_profile, fourier_unitary, scalar };
    Builder builder = Builder::scalar;
    // Symbol f(t) = sum_k coefficients[k] t^k, real rationals.
    std::vector<Rational> coefficients;
    Complex scalar = Complex(1);
};

enum class Precision { double_precision, single_precision };

struct EnsembleSpec {
    std::map<int, WignerSpec> wigner;
    std::map<int, DeterministicSpec> deterministic;
    std::vector<int> sizes{128, 256, 512};
    int samples = 2000;
    std::uint64_t master_seed = 0;
    Precision precision = Precision::double_precision;
    int jobs = 1;

    void validate() const;
    // Letters the spec binds: x_f per Wigner family, y_f (and y_f' for non-Hermitian builders).
    Alphabet alphabet() const;
    // Exact limiting first-order data for the declared families.
    FirstOrderState first_order_state(int max_word = 12) const;
    Laws laws() const;
};

const char* to_string(DeterministicSpec::Builder b);
DeterministicSpec::Builder builder_from_string(const std::string& name);

using Matrix = Eigen::MatrixXcd;

// Counter-based stream seed for (master seed, family, family seed, N, replica).
std::uint64_t stream_seed(std::uint64_t master, int family, std::uint64_t family_seed, int n, int replica);

Matrix sample_wigner(const WignerSpec& spec, int family, int n, std::uint64_t master_seed, int replica);
Matrix build_deterministic(const DeterministicSpec& spec, int n);

using Bindings = std::map<Letter, Matrix>;
Bindings bind_replica(const EnsembleSpec& spec, int n, int replica);

// Unnormalized trace, with D the diagonal projection and ' the conjugate transpose.
std::complex<double> eval_expression(const DeltaPolynomial& p, const Bindings& bindings);

// Dense N x N products per replica that the trace planner schedules for the batch.
int planned_products(const std::vector<DeltaPolynomial>& expressions);

// The matrix value itself (used by diagnostics and tests).
Matrix eval_matrix(const DeltaPolynomial& p, const Bindings& bindings);

struct MeanEstimate {
    int expression = 0;
    std::complex<double> mean;  // of (1/N) Tr p
    std::complex<double> se;    // componentwise standard errors
};

struct PairEstimate {
    int p = 0, q = 0;
    std::complex<double> cov;  // Cov(Tr p, Tr q), bilinear
    std::complex<double> se;   // jackknife, componentwise
};

struct SizeReport {
    int n = 0;
    std::vector<MeanEstimate> means;
    std::vector<PairEstimate> pairs;
    // samples[i][r]: Tr of expression i at replica r (kept on request).
    std::vector<std::vector<std::complex<double>>> samples;
};

struct McReport {
    std::vector<std::string> expressions;
    std::vector<SizeReport> sizes;
};

McReport estimate(const std::vector<DeltaPolynomial>& expressions, const std::vector<std::pair<int, int>>& pairs,
                  const EnsembleSpec& spec, bool keep_samples = false);

// Jackknife standard error of the bilinear covariance, componentwise.
std::complex<double> jackknife_cov_se(const std::vector<std::complex<double>>& a,
                                      const std::vector<std::complex<double>>& b);

struct H5Row {
    int n = 0;
    double value = 0;
};

struct H5Table {
    std::vector<H5Row> rows;
    bool decreasing = false;  // non-increasing up to 1e-12 across the sizes
};

// (1/N) Tr[D(A) D(A)*] - |(1/N) Tr A|^2 for A = the expression bound at replica 0.
H5Table h5_diagnostic(const DeltaPolynomial& expression, const EnsembleSpec& spec, const std::vector<int>& sizes);
H5Table h5_diagnostic(const DeterministicSpec& builder, const std::vector<int>& sizes);

}  // namespace deltafree
