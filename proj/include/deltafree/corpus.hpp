#pragma once

#include <vector>

#include "deltafree/monomial.hpp"

namespace deltafree {

// by_degree[d]: every canonical monomial with exactly d letters from the alphabet.
std::vector<std::vector<DeltaMonomial>> monomials_by_degree(const std::vector<Letter>& alphabet, int max_degree);

// One representative (the cyclic normal form) per rotation class, degrees 1..max_degree.
std::vector<DeltaMonomial> cyclic_classes(const std::vector<Letter>& alphabet, int max_degree);

// One representative per trace class (see trace_class_key), degrees 1..max_degree.
std::vector<DeltaMonomial> trace_classes(const std::vector<Letter>& alphabet, int max_degree);

}  // namespace deltafree
