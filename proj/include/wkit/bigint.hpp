#ifndef WKIT_BIGINT_HPP
#define WKIT_BIGINT_HPP

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

#include "wkit/errors.hpp"

namespace wkit {

// All invariant values are exact integers; asymptotic probes produce
// values far beyond 64 bits, so the whole pipeline uses cpp_int and
// serializes as decimal strings.
using Integer  = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline std::string to_decimal(const Integer& v) { return v.str(); }

inline Integer parse_decimal(const std::string& s) {
    if (s.empty()) throw ConfigurationError("empty integer literal");
    std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (i == s.size()) throw ConfigurationError("bad integer literal: " + s);
    for (; i < s.size(); ++i)
        if (s[i] < '0' || s[i] > '9')
            throw ConfigurationError("bad integer literal: " + s);
    return Integer(s);
}

} // namespace wkit

#endif
