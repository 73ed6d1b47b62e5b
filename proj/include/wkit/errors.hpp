#ifndef WKIT_ERRORS_HPP
#define WKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wkit {

// Base class for all toolkit errors.  Subclasses map onto the CLI exit
// codes: validation/configuration problems exit with 2, value mismatches
// with 3, out-of-scope requests with 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operands live in Picard lattices of different rank.
struct LatticeMismatchError : Error {
    using Error::Error;
};

// Malformed input: class strings, JSON documents, bh tables, selections.
struct ConfigurationError : Error {
    using Error::Error;
};

// A closed form was requested outside its regime (p_a(D) != g resp. g+1),
// or a formula was asked to run under hypotheses it does not cover.
struct RegimeError : Error {
    using Error::Error;
};

// The request is recognized but outside the supported capability range
// (degree-1 surfaces, missing ruleset/oracle backends, ...).
struct CapabilityError : Error {
    using Error::Error;
};

// Rule file rejected: schema violation, measure or conservation breach.
struct RulesetError : Error {
    using Error::Error;
};

// Recursion reached a state that no rule reduces and no base case covers.
struct IncompleteRulesetError : Error {
    using Error::Error;
};

// An exact halving or parity requirement failed on concrete data.
struct IntegralityError : Error {
    using Error::Error;
};

// A backend table lacks an entry that the truncation bound still requires.
struct BackendError : Error {
    using Error::Error;
};

// Computed value disagrees with a bundled/oracle reference.
struct MismatchError : Error {
    using Error::Error;
};

} // namespace wkit

#endif
