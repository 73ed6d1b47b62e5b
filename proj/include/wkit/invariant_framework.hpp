#ifndef WKIT_INVARIANT_FRAMEWORK_HPP
#define WKIT_INVARIANT_FRAMEWORK_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wkit/bigint.hpp"
#include "wkit/real_structures.hpp"

namespace wkit {

// Twisting class phi in H_2(X \ F-hat; Z/2) entering the invariant: the
// zero class, the fundamental class of the non-selected components, or an
// opaque user-defined tag.
enum class PhiTag { Zero, ComplementClass, Custom };

struct PhiClass {
    PhiTag tag = PhiTag::Zero;
    std::string custom_id;

    static PhiClass zero() { return {PhiTag::Zero, ""}; }
    static PhiClass complement() { return {PhiTag::ComplementClass, ""}; }
    static PhiClass custom(std::string id) { return {PhiTag::Custom, std::move(id)}; }

    std::string str() const;
    static PhiClass parse(const std::string& text);

    friend bool operator==(const PhiClass&, const PhiClass&) = default;
};

// Everything a Welschinger-type count W_{g,(r,m)}(X, D, F-hat, eps, phi)
// depends on.  Immutable value object with a canonical serialization.
struct InvariantDescriptor {
    RealSurfaceModel model;
    DivisorClass D;
    int g = 1;
    ComponentSelection selection;                  // size g+1
    std::optional<PointDistribution> distribution; // (r_0..r_g; m)
    std::vector<int> eps;                          // size g+1, entries +-1
    PhiClass phi;

    // "deg=..|RX=..|D=..|g=..|F=..|r=..|m=..|eps=..|phi=.."
    std::string serialize() const;
};

enum class Provenance { ClosedForm, Reduction, Recursion, Oracle };

std::string provenance_name(Provenance p);

struct InvariantValue {
    Integer value;
    Provenance provenance = Provenance::ClosedForm;
    std::string descriptor;
};

struct CheckItem {
    std::string name;
    bool pass = false;
    std::string message;
};

struct ValidationReport {
    std::vector<CheckItem> items;
    std::vector<int> bh_unverified; // selected components with unverified parity data

    bool all_ok() const;
    const CheckItem* find(const std::string& name) const;
};

// Runs the full hypothesis checklist: structural shape, nef, big,
// F-hat-compatibility, genus bound p_a(D) >= g, the degree inequality
// -D.K >= g + 1 - sum of selected parities, parity congruence, and
// distribution feasibility.  Never throws on a failing hypothesis; broken
// configuration data is reported as a failed item.
ValidationReport validate_hypotheses(const InvariantDescriptor& desc);

// p_a(D) = g regime: W = +-1.  phi = zero forces parity 0, hence +1.
// Throws RegimeError outside the regime.
InvariantValue closed_form_equal_genus(const InvariantDescriptor& desc, int half_curve_parity);

// p_a(D) = g + 1 regime (pencil):
//   W = sum_i eps_i (r_i + 1 - chi(F_i))  -  [phi = complement] chi(RX \ F-hat).
// Requires the descriptor to carry a distribution; custom phi classes are
// not supported here.
InvariantValue closed_form_pencil(const InvariantDescriptor& desc);

// The elliptic count on the two-component real cubic for D = -2K - E_i:
// W = eps_0 r_0 + eps_1 (r_1 - 1) on distributions r_0 + r_1 + 2m = 5 with
// r_0 even, r_1 odd.
Integer cubic_elliptic_example(int r0, int r1, int eps0, int eps1);

// |value| <= GW bound.
bool gw_bound_check(const InvariantValue& v, const Integer& gw);

// Exact values keyed by canonical descriptor, with provenance.
class InvariantLedger {
public:
    void add(const InvariantValue& v); // idempotent; conflicting value -> MismatchError
    const InvariantValue* find(const std::string& descriptor) const;
    std::size_t size() const { return entries_.size(); }

    std::string to_csv() const;  // descriptor,value,provenance
    std::string to_json() const; // array of objects, deterministic order

private:
    std::map<std::string, InvariantValue> entries_;
};

} // namespace wkit

#endif
