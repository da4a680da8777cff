#include "deltafree/scalar.hpp"

#include <charconv>
#include <cmath>

namespace deltafree {

Complex& Complex::operator*=(const Complex& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

Complex& Complex::operator/=(const Complex& o) {
    Rational d = o.norm2();
    if (sgn(d) == 0) throw std::domain_error("division by zero");
    Rational r = (re * o.re + im * o.im) / d;
    Rational i = (im * o.re - re * o.im) / d;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

Complex pow(const Complex& z, unsigned k) {
    Complex result(1);
    Complex base = z;
    while (k) {
        if (k & 1u) result *= base;
        k >>= 1u;
        if (k) base *= base;
    }
    return result;
}

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

Rational parse_decimal(std::string_view s) {
    std::string_view body = s;
    bool neg = false;
    if (!body.empty() && (body[0] == '-' || body[0] == '+')) {
        neg = body[0] == '-';
        body.remove_prefix(1);
    }
    long exp10 = 0;
    if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view es = body.substr(e + 1);
        bool eneg = false;
        if (!es.empty() && (es[0] == '-' || es[0] == '+')) {
            eneg = es[0] == '-';
            es.remove_prefix(1);
        }
        if (!all_digits(es) || es.size() > 6) throw NumberError("bad exponent in '" + std::string(s) + "'");
        exp10 = std::stol(std::string(es));
        if (eneg) exp10 = -exp10;
        body = body.substr(0, e);
    }
    std::string digits;
    auto dot = body.find('.');
    if (dot == std::string_view::npos) {
        if (!all_digits(body)) throw NumberError("bad number '" + std::string(s) + "'");
        digits = std::string(body);
    } else {
        std::string_view ip = body.substr(0, dot), fp = body.substr(dot + 1);
        if ((ip.empty() && fp.empty()) || (!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)))
            throw NumberError("bad number '" + std::string(s) + "'");
        digits = std::string(ip) + std::string(fp);
        exp10 -= static_cast<long>(fp.size());
    }
    mpz_class num(digits.empty() ? "0" : digits, 10);
    mpz_class scale;
    mpz_ui_pow_ui(scale.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(exp10)));
    Rational r = exp10 >= 0 ? Rational(num * scale) : Rational(num, scale);
    r.canonicalize();
    return neg ? Rational(-r) : r;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    auto slash = text.find('/');
    if (slash == std::string_view::npos) return parse_decimal(text);
    Rational a = parse_decimal(text.substr(0, slash));
    Rational b = parse_decimal(text.substr(slash + 1));
    if (sgn(b) == 0) throw NumberError("zero denominator in '" + std::string(text) + "'");
    return a / b;
}

Rational rational_from_double(double d) {
    if (!std::isfinite(d)) throw NumberError("non-finite number");
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    return parse_decimal(std::string_view(buf, static_cast<size_t>(res.ptr - buf)));
}

std::string format(const Rational& r) { return r.get_str(); }

std::string format(const Complex& z) {
    if (z.is_real()) return format(z.re);
    return "(" + format(z.re) + "," + format(z.im) + ")";
}

}  // namespace deltafree
