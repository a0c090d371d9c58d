#include "logcost/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace logcost {

namespace {

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    bool neg = false;
    if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    Rational r;
    if (auto slash = s.find('/'); slash != std::string_view::npos) {
        auto num = s.substr(0, slash), den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den))
            throw std::invalid_argument("bad rational: " + std::string(text));
        boost::multiprecision::mpz_int n{std::string(num)}, d{std::string(den)};
        if (d == 0) throw std::invalid_argument("zero denominator: " + std::string(text));
        r = Rational(n, d);
    } else if (auto dot = s.find('.'); dot != std::string_view::npos) {
        auto ip = s.substr(0, dot), fp = s.substr(dot + 1);
        if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) || (ip.empty() && fp.empty()))
            throw std::invalid_argument("bad decimal: " + std::string(text));
        boost::multiprecision::mpz_int n(std::string(ip.empty() ? "0" : ip) + std::string(fp));
        boost::multiprecision::mpz_int d = 1;
        for (size_t i = 0; i < fp.size(); ++i) d *= 10;
        r = Rational(n, d);
    } else {
        if (!all_digits(s)) throw std::invalid_argument("bad number: " + std::string(text));
        r = Rational(boost::multiprecision::mpz_int(std::string(s)));
    }
    return neg ? Rational(-r) : r;
}

std::string to_string(const Rational& r) { return r.str(); }

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace logcost
