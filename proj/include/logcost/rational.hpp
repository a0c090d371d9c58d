#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <string>
#include <string_view>

namespace logcost {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational, boost::multiprecision::et_off>;

/** Parses "3", "-3/2" or "1.25" into an exact rational. Throws std::invalid_argument. */
Rational parse_rational(std::string_view text);

std::string to_string(const Rational& r);

double to_double(const Rational& r);

}  // namespace logcost
