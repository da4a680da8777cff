#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "deltafree/letter.hpp"
#include "deltafree/polynomial.hpp"

namespace deltafree {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : std::runtime_error(msg + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

// expr := term (('+'|'-') term)*, with D[...] for Delta, ' for adjoint,
// letters x<k>/y<k>, numbers as decimals, a/b or (a,b).
DeltaPolynomial parse(std::string_view text, const Alphabet& alphabet = Alphabet::permissive());
// Parses text that must denote a single monomial with coefficient 1.
DeltaMonomial parse_monomial(std::string_view text, const Alphabet& alphabet = Alphabet::permissive());

std::string render(const DeltaMonomial& m);
std::string render(const DeltaPolynomial& p);

}  // namespace deltafree
