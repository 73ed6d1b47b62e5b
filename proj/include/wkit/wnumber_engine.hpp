#ifndef WKIT_WNUMBER_ENGINE_HPP
#define WKIT_WNUMBER_ENGINE_HPP

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "wkit/bigint.hpp"
#include "wkit/invariant_framework.hpp"
#include "wkit/picard_lattice.hpp"

namespace wkit {

// Sparse vector of tangency conditions along E: entry alpha_j >= 1 at
// index j >= 1 means alpha_j branches with tangency order j.  All
// arithmetic is exact; removal below zero throws.
class TangencyVector {
public:
    TangencyVector() = default;

    static TangencyVector unit(int j); // e_j
    static TangencyVector parse(const std::string& text); // "0" | "1^2+3^1"
    std::string str() const;

    long long norm() const;    // total number of conditions
    long long iweight() const; // sum of j * alpha_j
    bool odd_support() const;  // no entry at an even index
    bool empty() const { return e_.empty(); }
    int at(int j) const;

    TangencyVector& add(int j, int count = 1);
    TangencyVector& remove(int j, int count = 1);

    const std::map<int, int>& entries() const { return e_; }

    friend TangencyVector operator+(TangencyVector a, const TangencyVector& b);
    friend bool operator==(const TangencyVector&, const TangencyVector&) = default;
    friend std::strong_ordering operator<=>(const TangencyVector&, const TangencyVector&) = default;

private:
    std::map<int, int> e_;
};

// All submultisets of v (including empty and v itself), deterministic order.
std::vector<TangencyVector> submultisets(const TangencyVector& v);

// Product over indices of binomial(v_j, part_j); the multiplicity with
// which a two-way split (part, v - part) occurs.
Integer split_multiplicity(const TangencyVector& v, const TangencyVector& part);

// State of the w-number recursion on a uninodal pair: (D, alpha, beta, phi).
// Conservation I(alpha + beta) = D.E is enforced at construction, which also
// caps every tangency index at D.E.
struct WState {
    NodalPairLattice pair;
    DivisorClass D;
    TangencyVector alpha, beta;
    PhiTag phi = PhiTag::Zero;

    WState(NodalPairLattice pair_, DivisorClass D_, TangencyVector alpha_,
           TangencyVector beta_, PhiTag phi_ = PhiTag::Zero);

    std::string key() const; // canonical: "k=..|E=..|D=..|a=..|b=..|phi=.."
};

// R_Y(D, beta) = -(K+E).D + |beta| - 1; every rule application must lower it.
long long induction_measure(const WState& s);

// The universal first sum: one successor (alpha + e_j, beta - e_j) per
// index j with beta_j > 0, ascending j.  Measure drops by exactly one.
std::vector<WState> first_sum_expand(const WState& s);

// --- declarative rulesets -------------------------------------------------

// A ruleset is loaded from a versioned JSON document:
//
// {
//   "ruleset_version": 1,
//   "name": "...",
//   "odd_support_preserving": true,
//   "first_sum": {"enabled": true},
//   "tables": {"pairs": [1, 2, -1]},
//   "base_cases": [
//     {"divisor": {"K": -1, "E": -1}, "beta": "0", "value": "1"}
//   ],
//   "splitting": [
//     {"name": "node",
//      "params": {"l": 2, "m": 6},
//      "guard": "2*l+m >= 1",
//      "coefficient": "(l+1)*pairs[m]",
//      "factors": [
//        {"divisor": {"D": 1, "E": -1, "K+E": "-(2*l+m)"},
//         "alpha": {"base": "alpha", "add": [{"index": 1, "count": "2+2*(2*l+m)"}]},
//         "beta": "beta",
//         "phi": "same"}
//      ]}
//   ]
// }
//
// Coefficient/count expressions range over integers, parameters l and m,
// declared tables (out-of-range lookups evaluate to 0), and the split
// multiplicities c_alpha / c_beta when "alpha_split" / "beta_split" is set
// on the rule.  The engine itself enforces, on every expansion: strict
// decrease of the induction measure, conservation I(alpha+beta) = D.E per
// factor, and odd-support closure when declared.  Factors whose divisor
// class is not effective on the pair contribute zero and are dropped;
// tangency removal below zero marks the instance inapplicable.
class RuleSet {
public:
    static RuleSet load(const std::string& json_text);
    static RuleSet load_file(const std::string& path);

    const std::string& name() const { return name_; }
    const std::string& hash() const { return hash_; } // stable content hash
    bool first_sum_enabled() const { return first_sum_; }
    bool odd_support_preserving() const { return odd_support_; }
    std::size_t splitting_rule_count() const;
    std::size_t base_case_count() const;

    struct Impl;
    std::shared_ptr<const Impl> impl;

private:
    std::string name_;
    std::string hash_;
    bool first_sum_ = false;
    bool odd_support_ = false;
};

struct ExpansionTerm {
    Integer coefficient;
    std::vector<WState> factors;
    std::string rule; // "first_sum" or the splitting rule name
};

struct Expansion {
    std::vector<ExpansionTerm> terms;
    bool reducible = false; // some rule applied (possibly with all terms zero)
};

// One expansion step, with all engine-side guards executed.  Base cases are
// not consulted here.
Expansion expand_once(const WState& s, const RuleSet& rules);

// Base-case lookup (first matching pattern in file order).
std::optional<Integer> match_base_case(const WState& s, const RuleSet& rules);

// Shared memoization table; safe for concurrent readers and writers, and
// inserts are idempotent (a conflicting value for an existing key is a
// determinism bug and throws MismatchError).
class WMemo {
public:
    std::optional<Integer> get(const std::string& key) const;
    void put(const std::string& key, const Integer& value);
    std::size_t size() const;
    void clear();
    std::uint64_t hits() const { return hits_.load(); }
    std::uint64_t misses() const { return misses_.load(); }

    std::vector<std::pair<std::string, Integer>> snapshot() const; // sorted by key

private:
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, Integer> map_;
    mutable std::atomic<std::uint64_t> hits_{0}, misses_{0};
};

// Memoized evaluation.  Throws IncompleteRulesetError (naming the stuck
// state) when a state is neither a base case nor reducible by any rule.
Integer evaluate(const WState& s, const RuleSet& rules, WMemo& memo);

struct ProbeReport {
    std::string state_key;
    Integer value;
    bool ok = false;
    std::string message;
};

// Lemma-shape positivity probe: D' nef with D'.E = 2, state (D', 0, 2e_1);
// a non-positive value flags a transcription defect.
ProbeReport positivity_probe(const NodalPairLattice& pair, const DivisorClass& Dprime,
                             const RuleSet& rules, WMemo& memo, PhiTag phi = PhiTag::Zero);

// Nonnegativity probe for a general odd-supported state.
ProbeReport nonneg_probe(const WState& s, const RuleSet& rules, WMemo& memo);

// --- persistent cache log ---------------------------------------------------
//
// Append-only text log, one entry per line: "<ruleset_hash> <state_key> <value>".
// The loader ignores entries whose hash differs from the given ruleset.
// Appends take an advisory lock on the file.

std::size_t load_cache_log(const std::string& path, const std::string& ruleset_hash,
                           WMemo& memo, std::vector<std::string>* loaded_keys = nullptr);

void append_cache_log(const std::string& path, const std::string& ruleset_hash,
                      const std::vector<std::pair<std::string, Integer>>& entries);

} // namespace wkit

#endif
