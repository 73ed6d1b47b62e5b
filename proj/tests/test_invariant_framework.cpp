#include <doctest.h>

#include "wkit/invariant_framework.hpp"
#include "wkit/store.hpp"

using namespace wkit;

namespace {

InvariantDescriptor cubic_descriptor() {
    InvariantDescriptor desc;
    desc.model = find_catalog_model(3, {ComponentType::RP2, ComponentType::S2});
    BundledData::apply_example_bh(desc.model);
    desc.D = DivisorClass::parse(desc.model.lattice, "6;-2,-2,-2,-2,-2,-3");
    desc.g = 1;
    desc.selection = {0, 1};
    desc.eps = {1, 1};
    desc.phi = PhiClass::zero();
    return desc;
}

} // namespace

TEST_CASE("phi classes") {
    CHECK(PhiClass::zero().str() == "zero");
    CHECK(PhiClass::complement().str() == "complement");
    CHECK(PhiClass::custom("w1").str() == "custom:w1");
    for (const char* s : {"zero", "complement", "custom:abc"})
        CHECK(PhiClass::parse(s).str() == s);
    CHECK_THROWS_AS(PhiClass::parse("nonsense"), ConfigurationError);
}

TEST_CASE("descriptor serialization") {
    InvariantDescriptor desc = cubic_descriptor();
    desc.distribution = PointDistribution{{2, 1}, 1};
    CHECK(desc.serialize() ==
          "deg=3|RX=RP2+S2|D=6;-2,-2,-2,-2,-2,-3|g=1|F=0,1|r=2,1|m=1|eps=+1,+1|phi=zero");
    desc.distribution.reset();
    desc.eps = {1, -1};
    desc.phi = PhiClass::complement();
    CHECK(desc.serialize() ==
          "deg=3|RX=RP2+S2|D=6;-2,-2,-2,-2,-2,-3|g=1|F=0,1|r=-|m=-|eps=+1,-1|phi=complement");
}

TEST_CASE("provenance names") {
    CHECK(provenance_name(Provenance::ClosedForm) == "closed_form");
    CHECK(provenance_name(Provenance::Reduction) == "reduction");
    CHECK(provenance_name(Provenance::Recursion) == "recursion");
    CHECK(provenance_name(Provenance::Oracle) == "oracle");
}

TEST_CASE("hypothesis checklist passes on the cubic example") {
    InvariantDescriptor desc = cubic_descriptor();
    desc.distribution = PointDistribution{{2, 1}, 1};
    ValidationReport rep = validate_hypotheses(desc);
    CHECK(rep.all_ok());
    CHECK(rep.bh_unverified.empty());
    for (const char* item : {"structural", "nef", "big", "fhat_compatible", "genus_bound",
                             "degree_inequality", "parity_congruence", "distribution_feasible"})
        CHECK(rep.find(item) != nullptr);
}

TEST_CASE("hypothesis checklist flags failures without throwing") {
    InvariantDescriptor desc = cubic_descriptor();
    desc.D = desc.model.lattice.exceptional(1); // not nef, p_a = 0 < g
    ValidationReport rep = validate_hypotheses(desc);
    CHECK_FALSE(rep.all_ok());
    REQUIRE(rep.find("nef") != nullptr);
    CHECK_FALSE(rep.find("nef")->pass);
    REQUIRE(rep.find("genus_bound") != nullptr);
    CHECK_FALSE(rep.find("genus_bound")->pass);

    InvariantDescriptor bad_shape = cubic_descriptor();
    bad_shape.eps = {1};
    rep = validate_hypotheses(bad_shape);
    CHECK_FALSE(rep.all_ok());
    CHECK_FALSE(rep.find("structural")->pass);

    bad_shape = cubic_descriptor();
    bad_shape.selection = {0, 0};
    rep = validate_hypotheses(bad_shape);
    CHECK_FALSE(rep.all_ok());

    bad_shape = cubic_descriptor();
    bad_shape.eps = {2, 1};
    CHECK_FALSE(validate_hypotheses(bad_shape).all_ok());

    // Distribution with the wrong total.
    InvariantDescriptor bad_dist = cubic_descriptor();
    bad_dist.distribution = PointDistribution{{2, 1}, 2};
    rep = validate_hypotheses(bad_dist);
    CHECK_FALSE(rep.find("distribution_feasible")->pass);
}

TEST_CASE("unverified bh data is reported, not failed") {
    InvariantDescriptor desc;
    desc.model = find_catalog_model(2, {ComponentType::RP2, ComponentType::RP2});
    BundledData::apply_example_bh(desc.model);
    desc.D = desc.model.lattice.anticanonical();
    desc.g = 1;
    desc.selection = {0, 1};
    desc.eps = {1, 1};
    ValidationReport rep = validate_hypotheses(desc);
    CHECK(rep.bh_unverified == std::vector<int>{0, 1});
}

TEST_CASE("equal-genus closed form") {
    InvariantDescriptor desc = cubic_descriptor();
    desc.D = desc.model.lattice.anticanonical(); // p_a = 1 = g
    InvariantValue v = closed_form_equal_genus(desc, 0);
    CHECK(v.value == 1);
    CHECK(v.provenance == Provenance::ClosedForm);
    CHECK(v.descriptor == desc.serialize());
    // phi = zero pins the sign regardless of the reported parity.
    CHECK(closed_form_equal_genus(desc, 1).value == 1);
    desc.phi = PhiClass::complement();
    CHECK(closed_form_equal_genus(desc, 1).value == -1);
    CHECK(closed_form_equal_genus(desc, 2).value == 1);

    desc = cubic_descriptor(); // p_a(D) = 2 != 1
    CHECK_THROWS_AS(closed_form_equal_genus(desc, 0), RegimeError);
}

TEST_CASE("pencil closed form: 24 cubic instances") {
    InvariantDescriptor base = cubic_descriptor(); // p_a(D) = 2 = g + 1
    auto dists = enumerate_distributions(base.model, base.selection, base.D);
    REQUIRE(dists.size() == 6);
    const int signs[4][2] = {{1, 1}, {1, -1}, {-1, 1}, {-1, -1}};
    int checked = 0;
    for (const auto& dist : dists) {
        for (const auto& s : signs) {
            InvariantDescriptor desc = base;
            desc.distribution = dist;
            desc.eps = {s[0], s[1]};
            InvariantValue v = closed_form_pencil(desc);
            CHECK(v.value == cubic_elliptic_example(dist.r[0], dist.r[1], s[0], s[1]));
            ++checked;
        }
    }
    CHECK(checked == 24);
}

TEST_CASE("pencil closed form: regime and input guards") {
    InvariantDescriptor desc = cubic_descriptor();
    desc.D = desc.model.lattice.anticanonical(); // p_a = 1, not g + 1
    desc.distribution = PointDistribution{{2, 1}, 0};
    CHECK_THROWS_AS(closed_form_pencil(desc), RegimeError);

    desc = cubic_descriptor();
    CHECK_THROWS_AS(closed_form_pencil(desc), ConfigurationError); // no distribution

    desc = cubic_descriptor();
    desc.distribution = PointDistribution{{2, 1}, 1};
    desc.phi = PhiClass::custom("x");
    CHECK_THROWS_AS(closed_form_pencil(desc), CapabilityError);
}

TEST_CASE("pencil closed form respects the complement term") {
    // Four spheres, select two: chi of the complement is 4.
    InvariantDescriptor desc;
    desc.model = find_catalog_model(
        2, {ComponentType::S2, ComponentType::S2, ComponentType::S2, ComponentType::S2});
    BundledData::apply_example_bh(desc.model);
    // -K + (L - E_1) has p_a = 2 on the degree-2 lattice.
    desc.D = DivisorClass::parse(desc.model.lattice, "4;-2,-1,-1,-1,-1,-1,-1");
    desc.g = 1;
    desc.selection = {0, 1};
    desc.eps = {1, 1};
    auto dists = enumerate_distributions(desc.model, desc.selection, desc.D);
    REQUIRE(!dists.empty());
    desc.distribution = dists.front();
    Integer zero_phi = closed_form_pencil(desc).value;
    desc.phi = PhiClass::complement();
    Integer comp_phi = closed_form_pencil(desc).value;
    CHECK(zero_phi - comp_phi == euler_complement(desc.model, desc.selection));
}

TEST_CASE("gw bound check") {
    InvariantValue v{Integer(36), Provenance::Oracle, "x"};
    CHECK(gw_bound_check(v, Integer(1740)));
    CHECK(gw_bound_check(v, Integer(36)));
    v.value = -37;
    CHECK_FALSE(gw_bound_check(v, Integer(36)));
    CHECK(gw_bound_check(v, Integer(37)));
}

TEST_CASE("ledger") {
    InvariantLedger ledger;
    InvariantValue a{Integer(112), Provenance::Oracle, "descA"};
    InvariantValue b{Integer(36), Provenance::Reduction, "descB"};
    ledger.add(a);
    ledger.add(b);
    ledger.add(a); // idempotent
    CHECK(ledger.size() == 2);
    REQUIRE(ledger.find("descA") != nullptr);
    CHECK(ledger.find("descA")->value == 112);
    CHECK(ledger.find("missing") == nullptr);

    InvariantValue conflict{Integer(113), Provenance::Oracle, "descA"};
    CHECK_THROWS_AS(ledger.add(conflict), MismatchError);

    std::string csv = ledger.to_csv();
    CHECK(csv.find("\"descA\",112,oracle") != std::string::npos);
    CHECK(csv.find("\"descB\",36,reduction") != std::string::npos);
    CHECK(csv.find("descriptor,value,provenance") == 0);
    // Deterministic output: map order, stable across calls.
    CHECK(ledger.to_csv() == csv);
    CHECK(ledger.to_json() == ledger.to_json());
    CHECK(ledger.to_json().find("\"value\": \"112\"") != std::string::npos);
}
