#include "deltafree/expression.hpp"

#include <cctype>

namespace deltafree {

namespace {

class Parser {
public:
    Parser(std::string_view text, const Alphabet& alphabet) : s_(text), alphabet_(alphabet) {}

    DeltaPolynomial parse_all() {
        DeltaPolynomial p = expr();
        skip();
        if (i_ != s_.size()) fail("unexpected character '" + std::string(1, s_[i_]) + "'");
        return p;
    }

private:
    std::string_view s_;
    const Alphabet& alphabet_;
    std::size_t i_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, i_); }

    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool peek(char c) {
        skip();
        return i_ < s_.size() && s_[i_] == c;
    }
    bool eat(char c) {
        if (!peek(c)) return false;
        ++i_;
        return true;
    }
    void expect(char c) {
        if (!eat(c)) fail(std::string("expected '") + c + "'");
    }
    bool at_number() {
        skip();
        return i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.');
    }
    bool at_factor() {
        skip();
        if (i_ >= s_.size()) return false;
        char c = s_[i_];
        return c == 'x' || c == 'y' || c == 'D' || c == '(' || std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    }

    DeltaPolynomial expr() {
        DeltaPolynomial out;
        bool neg = false;
        if (eat('-')) neg = true;
        else eat('+');
        for (;;) {
            DeltaPolynomial t = term();
            if (neg) out -= t;
            else out += t;
            if (eat('+')) neg = false;
            else if (eat('-')) neg = true;
            else break;
        }
        return out;
    }

    DeltaPolynomial term() {
        if (!at_factor()) fail("expected a factor");
        DeltaPolynomial out = factor();
        for (;;) {
            if (eat('*')) {
                if (!at_factor()) fail("expected a factor after '*'");
                out = out * factor();
            } else if (at_factor()) {
                out = out * factor();
            } else {
                break;
            }
        }
        return out;
    }

    DeltaPolynomial factor() {
        DeltaPolynomial base = atom();
        while (eat('\'')) base = adjoint(base);
        if (eat('^')) {
            skip();
            std::size_t start = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            if (start == i_) fail("expected a positive integer exponent");
            if (i_ - start > 4) fail("exponent too large");
            int k = std::stoi(std::string(s_.substr(start, i_ - start)));
            if (k < 1) fail("exponent must be positive");
            base = power(base, static_cast<unsigned>(k));
        }
        return base;
    }

    Rational number() {
        skip();
        std::size_t start = i_;
        auto scan_decimal = [&] {
            while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.')) ++i_;
            if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
                std::size_t save = i_++;
                if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
                if (i_ >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_]))) i_ = save;
                else
                    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            }
        };
        scan_decimal();
        if (i_ < s_.size() && s_[i_] == '/') {
            ++i_;
            scan_decimal();
        }
        try {
            return parse_rational(s_.substr(start, i_ - start));
        } catch (const NumberError& e) {
            i_ = start;
            fail(e.what());
        }
    }

    bool try_complex(Complex& out) {
        std::size_t save = i_;
        auto signed_number = [&](Rational& r) {
            bool neg = false;
            if (eat('-')) neg = true;
            else eat('+');
            if (!at_number()) return false;
            r = number();
            if (neg) r = -r;
            return true;
        };
        Rational re, im;
        if (eat('(') && signed_number(re) && eat(',') && signed_number(im) && eat(')')) {
            out = Complex(re, im);
            return true;
        }
        i_ = save;
        return false;
    }

    DeltaPolynomial atom() {
        skip();
        char c = s_[i_];
        if (c == 'x' || c == 'y') {
            ++i_;
            std::size_t start = i_;
            while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            if (start == i_ || i_ - start > 3) fail("expected a family index after letter");
            int fam = std::stoi(std::string(s_.substr(start, i_ - start)));
            bool adj = false;
            while (i_ < s_.size() && s_[i_] == '\'') {
                adj = !adj;
                ++i_;
            }
            try {
                return DeltaPolynomial(DeltaMonomial::letter(alphabet_.resolve(c, fam, adj)));
            } catch (const AlphabetError& e) {
                i_ = start - 1;
                fail(e.what());
            }
        }
        if (c == 'D') {
            ++i_;
            expect('[');
            DeltaPolynomial inner = peek(']') ? DeltaPolynomial::constant(Complex(1)) : expr();
            expect(']');
            return delta(inner);
        }
        if (c == '(') {
            Complex z;
            if (try_complex(z)) return DeltaPolynomial::constant(z);
            ++i_;
            DeltaPolynomial inner = expr();
            expect(')');
            return inner;
        }
        return DeltaPolynomial::constant(Complex(number()));
    }
};

void render_atoms(const std::string& t, std::string& out) {
    auto atoms = top_level_atoms(t);
    bool first = true;
    for (std::size_t k = 0; k < atoms.size();) {
        if (!first) out += "*";
        first = false;
        auto [b, e] = atoms[k];
        if (static_cast<unsigned char>(t[b]) == kOpen) {
            out += "D[";
            render_atoms(t.substr(b + 1, e - b - 2), out);
            out += "]";
            ++k;
            continue;
        }
        std::size_t run = 1;
        while (k + run < atoms.size() && atoms[k + run].second - atoms[k + run].first == 1 && t[atoms[k + run].first] == t[b])
            ++run;
        out += Letter::from_code(static_cast<unsigned char>(t[b])).name();
        if (run > 1) out += "^" + std::to_string(run);
        k += run;
    }
}

}  // namespace

DeltaPolynomial parse(std::string_view text, const Alphabet& alphabet) { return Parser(text, alphabet).parse_all(); }

DeltaMonomial parse_monomial(std::string_view text, const Alphabet& alphabet) {
    DeltaPolynomial p = parse(text, alphabet);
    if (p.size() != 1 || p.terms().begin()->second != Complex(1))
        throw ParseError("expected a single monomial with coefficient 1", 0);
    return p.terms().begin()->first;
}

std::string render(const DeltaMonomial& m) {
    if (m.is_empty()) return "1";
    std::string out;
    render_atoms(m.tokens(), out);
    return out;
}

std::string render(const DeltaPolynomial& p) {
    if (p.is_zero()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : p.terms()) {
        std::string term;
        if (m.is_empty()) term = format(c);
        else if (c == Complex(1)) term = render(m);
        else if (c == Complex(-1)) term = "-" + render(m);
        else term = format(c) + "*" + render(m);
        if (first) out = term;
        else if (term[0] == '-') out += " - " + term.substr(1);
        else out += " + " + term;
        first = false;
    }
    return out;
}

}  // namespace deltafree
