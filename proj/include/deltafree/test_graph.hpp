#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "deltafree/entry_law.hpp"
#include "deltafree/monomial.hpp"
#include "deltafree/rational_in_n.hpp"

namespace deltafree {

// Edge e = (source -> target) stands for the entry X(target, source).
struct Edge {
    int source = 0;
    int target = 0;
    Letter label;
    int cycle = 0;  // simple cycle of the source cactus (one per sigma block)
    int side = 0;   // 0 or 1 inside a disjoint union
};

struct TestGraph {
    int vertex_count = 0;
    std::vector<Edge> edges;
};

class OracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InternalConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

TestGraph build_cactus(const DeltaMonomial& m);
// Second graph's edges get side 1 and shifted vertices and cycles.
TestGraph disjoint_union(const TestGraph& a, const TestGraph& b);

// Restricted growth string: rgs[v] is the block of vertex v.
struct SetPartition {
    std::vector<int> rgs;
    int blocks = 0;
};

class PartitionEnumerator {
public:
    using Predicate = std::function<bool(const SetPartition&)>;
    // Streams all set partitions of n elements in restricted-growth order,
    // skipping those for which prune returns true.
    explicit PartitionEnumerator(int n, int cap = 14, Predicate prune = {});
    bool next();
    const SetPartition& current() const { return current_; }

private:
    bool advance();
    int n_;
    bool started_ = false;
    bool done_ = false;
    std::vector<int> max_prefix_;
    SetPartition current_;
    Predicate prune_;
};

TestGraph quotient(const TestGraph& t, const SetPartition& pi);

// Entry law per Wigner family with a default.
struct Laws {
    WignerEntryLaw default_law = WignerEntryLaw::complex_gaussian();
    std::map<int, WignerEntryLaw> per_family;
    const WignerEntryLaw& of(int family) const;
    bool odd_moments_vanish() const;
};

Complex omega_x(const TestGraph& quotient_graph, const Laws& laws);

enum class QuotientType { DT, DU, FT, other };
enum class Order { first, second };
const char* to_string(QuotientType t);
QuotientType classify(const TestGraph& quotient_graph, Order context);

struct OracleOptions {
    int cap = 14;
    int jobs = 1;
};

RationalInN exact_moment(const DeltaMonomial& m, const Laws& laws, const OracleOptions& opts = {});
RationalInN exact_covariance(const DeltaMonomial& m1, const DeltaMonomial& m2, const Laws& laws,
                             const OracleOptions& opts = {});

struct LimitReport {
    Complex exact;           // route (a): limit of the exact rational function
    Complex classified;      // route (b): sum of predicted weights over DT (or DU and FT) quotients
    long long partitions = 0;
    long long classified_count = 0;
    long long twin_violations = 0;  // DT twins not in one cactus cycle with opposite orientation
    bool agree() const { return exact == classified && twin_violations == 0; }
};

LimitReport limit_moment_report(const DeltaMonomial& m, const Laws& laws, const OracleOptions& opts = {});
LimitReport limit_covariance_report(const DeltaMonomial& m1, const DeltaMonomial& m2, const Laws& laws,
                                    const OracleOptions& opts = {});
// Route (a), after asserting (a) = (b); throws InternalConsistencyError otherwise.
Complex limit_moment(const DeltaMonomial& m, const Laws& laws, const OracleOptions& opts = {});
Complex limit_covariance(const DeltaMonomial& m1, const DeltaMonomial& m2, const Laws& laws,
                         const OracleOptions& opts = {});

// Bell numbers from the triangle recurrence.
std::vector<unsigned long long> bell_numbers(int up_to);

}  // namespace deltafree
