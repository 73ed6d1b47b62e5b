#include <doctest.h>

#include <random>

#include "wkit/reduction_engine.hpp"
#include "wkit/store.hpp"

using namespace wkit;

namespace {

Integer fact(int n) {
    Integer r = 1;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// Direct transcription of the half-plus-twists shape, independent of the
// library loop (no shared helper, no truncation bound).
Integer direct_half_plus_twists(const NodalPairLattice& pair, const DivisorClass& D,
                                const std::map<std::string, Integer>& table) {
    Integer total = table.at(D.str()) / 2;
    for (int m = 1; m < 64; ++m) {
        DivisorClass Dm = D - (2 * m) * pair.e;
        if (!is_effective(Dm, pair)) break;
        total += table.at(Dm.str());
    }
    return total;
}

} // namespace

TEST_CASE("backends: tables, defaults, evaluators") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    DivisorClass mk = pair.surface.anticanonical();

    GenusZeroBackend strict = GenusZeroBackend::from_map({{mk.str(), Integer(7)}});
    CHECK(strict.kind() == GenusZeroBackend::Kind::OracleTable);
    CHECK(strict.size() == 1);
    CHECK(strict.value(mk) == 7);
    CHECK_THROWS_AS(strict.value(pair.e), BackendError);

    GenusZeroBackend lax = GenusZeroBackend::from_map({{mk.str(), Integer(7)}}, true);
    CHECK(lax.value(pair.e) == 0);

    SurfaceLattice lat(7);
    GenusZeroBackend table = GenusZeroBackend::from_table_json(lat, R"([
      {"class": "3;-1,-1,-1,-1,-1,-1,-1", "value": "12"},
      {"class": "0;0,0,0,0,0,0,0", "value": 4}
    ])");
    CHECK(table.size() == 2);
    CHECK(table.value(mk) == 12);
    CHECK(table.value(lat.zero()) == 4);
    CHECK_THROWS_AS(GenusZeroBackend::from_table_json(lat, "nope"), ConfigurationError);
    CHECK_THROWS_AS(GenusZeroBackend::from_table_json(lat, R"({"a": 1})"), ConfigurationError);
    CHECK_THROWS_AS(GenusZeroBackend::from_table_json(lat, R"([{"class": "0;0"}])"),
                    ConfigurationError);
    CHECK_THROWS_AS(GenusZeroBackend::from_table_file(lat, "no/such.json"), ConfigurationError);

    GenusZeroBackend fn = GenusZeroBackend::from_evaluator(
        [](const DivisorClass& D) { return Integer(intersect(D, D)); });
    CHECK(fn.kind() == GenusZeroBackend::Kind::Ruleset);
    CHECK(fn.value(pair.e) == -2);
}

TEST_CASE("extend_to_rank") {
    SurfaceLattice small(6), big(7);
    DivisorClass D = DivisorClass::parse(small, "6;-2,-2,-2,-2,-2,-3");
    CHECK(extend_to_rank(D, big).str() == "6;-2,-2,-2,-2,-2,-3,0");
    CHECK(extend_to_rank(D, small) == D);
    CHECK_THROWS_AS(extend_to_rank(extend_to_rank(D, big), small), LatticeMismatchError);
}

TEST_CASE("transfer: canonical states per degree") {
    auto make_desc = [](const RealSurfaceModel& model) {
        InvariantDescriptor d;
        d.model = model;
        d.D = -2 * model.lattice.canonical();
        d.g = 1;
        d.selection = {0, 1};
        d.eps = {1, 1};
        d.phi = PhiClass::zero();
        return d;
    };

    WState s2 = transfer_to_pair(
        make_desc(find_catalog_model(2, {ComponentType::S2, ComponentType::S2})));
    CHECK(s2.key() ==
          "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement");

    WState s3 = transfer_to_pair(
        make_desc(find_catalog_model(3, {ComponentType::RP2, ComponentType::S2})));
    CHECK(s3.key() ==
          "k=7|E=0;0,0,0,0,0,1,-1|D=6;0,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement");

    WState s4 = transfer_to_pair(
        make_desc(find_catalog_model(4, {ComponentType::S2, ComponentType::S2})));
    CHECK(s4.key() ==
          "k=7|E=0;0,0,0,0,0,1,-1|D=6;0,0,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement");

    // The transferred class is orthogonal to E before the E-subtraction.
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    CHECK(pair.orthogonal_to_e(s3.D + pair.e));

    // phi toggles: a complement-class descriptor lands on phi = zero.
    InvariantDescriptor flip =
        make_desc(find_catalog_model(2, {ComponentType::S2, ComponentType::S2}));
    flip.phi = PhiClass::complement();
    CHECK(transfer_to_pair(flip).phi == PhiTag::Zero);
}

TEST_CASE("transfer: guards") {
    RealSurfaceModel deg2 = find_catalog_model(2, {ComponentType::S2, ComponentType::S2});
    InvariantDescriptor desc;
    desc.model = deg2;
    desc.D = -2 * deg2.lattice.canonical();
    desc.g = 1;
    desc.selection = {0, 1};
    desc.eps = {1, 1};

    InvariantDescriptor bad = desc;
    bad.eps = {1, -1};
    CHECK_THROWS_AS(transfer_to_pair(bad), RegimeError);
    bad = desc;
    bad.g = 2;
    CHECK_THROWS_AS(transfer_to_pair(bad), RegimeError);
    bad = desc;
    bad.phi = PhiClass::custom("x");
    CHECK_THROWS_AS(transfer_to_pair(bad), CapabilityError);
    bad = desc;
    bad.D = deg2.lattice.exceptional(1); // not nef
    CHECK_THROWS_AS(transfer_to_pair(bad), ConfigurationError);
    bad = desc;
    // Nef and big, but with seven pairwise distinct multiplicities.
    bad.D = DivisorClass::parse(deg2.lattice, "40;0,-1,-2,-3,-4,-5,-6");
    REQUIRE(is_nef(bad.D));
    REQUIRE(is_big(bad.D));
    CHECK_THROWS_AS(transfer_to_pair(bad), ConfigurationError);

    // Degrees outside [2, 4] are capability errors.
    RealSurfaceModel deg5;
    deg5.lattice = SurfaceLattice(4);
    deg5.components = {RealComponent{ComponentType::S2, {}, false},
                       RealComponent{ComponentType::S2, {}, false}};
    InvariantDescriptor high = desc;
    high.model = deg5;
    high.D = -2 * deg5.lattice.canonical();
    try {
        transfer_to_pair(high);
        CHECK(false);
    } catch (const CapabilityError& e) {
        CHECK(std::string(e.what()).find("blow up 1 more") != std::string::npos);
    }

    RealSurfaceModel deg1;
    deg1.lattice = SurfaceLattice(8);
    deg1.components = deg5.components;
    InvariantDescriptor low = desc;
    low.model = deg1;
    low.D = -2 * deg1.lattice.canonical();
    CHECK_THROWS_AS(transfer_to_pair(low), CapabilityError);
}

TEST_CASE("degeneration sums: pinned shapes") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    // D = E: only m = 1 survives (D - E = 0, D - 2E = -E).
    {
        auto [plus, minus] = genus1_degeneration_sums(pair, pair.e, {{1, Integer(9)}});
        CHECK(plus == 9);
        CHECK(minus == 9);
    }
    // D = 2E: m = 1, 2 -> (a - 4b, a + 4b).
    {
        auto [plus, minus] = genus1_degeneration_sums(
            pair, 2 * pair.e, {{1, Integer(10)}, {2, Integer(3)}});
        CHECK(plus == 10 - 12);
        CHECK(minus == 10 + 12);
    }
    // Truncation before m = 1: both sums empty.
    {
        auto [plus, minus] = genus1_degeneration_sums(pair, pair.surface.zero(), {});
        CHECK(plus == 0);
        CHECK(minus == 0);
    }
    // Missing oracle entry inside the effective range.
    CHECK_THROWS_AS(genus1_degeneration_sums(pair, 2 * pair.e, {{1, Integer(1)}}),
                    BackendError);
}

TEST_CASE("degeneration sums: parity identity on random oracles") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    std::mt19937 rng(123);
    std::uniform_int_distribution<int> val(-20, 20);
    for (int h = 1; h <= 4; ++h) {
        DivisorClass D = h * pair.e;
        for (int rep = 0; rep < 25; ++rep) {
            std::map<int, Integer> oracle;
            for (int m = 1; m <= h; ++m) oracle[m] = Integer(val(rng));
            auto [plus, minus] = genus1_degeneration_sums(pair, D, oracle);
            Integer odd_only = 0;
            for (int m = 1; m <= h; m += 2)
                odd_only += (Integer(1) << (m - 1)) * m * oracle[m];
            CHECK(plus + minus == 2 * odd_only);
            // And against a direct loop with independent arithmetic.
            Integer p = 0, q = 0, pw = 1;
            for (int m = 1; m <= h; ++m) {
                Integer t = pw * m * oracle[m];
                p += (m % 2 ? t : -t);
                q += t;
                pw *= 2;
            }
            CHECK(plus == p);
            CHECK(minus == q);
        }
    }
}

TEST_CASE("half-plus-twists reductions") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    DivisorClass twoE = 2 * pair.e;
    DivisorClass zero = pair.surface.zero();

    // Pinned: combo(2E) = B(2E)/2 + B(0).
    GenusZeroBackend b = GenusZeroBackend::from_map(
        {{twoE.str(), Integer(14)}, {zero.str(), Integer(5)}});
    CHECK(combo_e14(pair, twoE, b) == 12);

    // Odd leading value is an integrality defect.
    GenusZeroBackend odd = GenusZeroBackend::from_map(
        {{twoE.str(), Integer(3)}, {zero.str(), Integer(0)}});
    CHECK_THROWS_AS(combo_e14(pair, twoE, odd), IntegralityError);

    // Missing twist entry: BackendError (no implicit zeros).
    GenusZeroBackend partial = GenusZeroBackend::from_map({{twoE.str(), Integer(2)}});
    CHECK_THROWS_AS(combo_e14(pair, twoE, partial), BackendError);

    // Linearity in the backend, on random synthetic tables.
    std::mt19937 rng(55);
    std::uniform_int_distribution<int> val(-30, 30);
    for (int rep = 0; rep < 40; ++rep) {
        std::map<std::string, Integer> A, B, S;
        for (const auto& key : {twoE.str(), zero.str()}) {
            A[key] = 2 * Integer(val(rng));
            B[key] = 2 * Integer(val(rng));
            S[key] = A[key] + B[key];
        }
        Integer va = combo_e14(pair, twoE, GenusZeroBackend::from_map(A));
        Integer vb = combo_e14(pair, twoE, GenusZeroBackend::from_map(B));
        Integer vs = combo_e14(pair, twoE, GenusZeroBackend::from_map(S));
        CHECK(vs == va + vb);
        CHECK(va == direct_half_plus_twists(pair, twoE, A));
    }
}

TEST_CASE("p_a drops quadratically along 2mE twists") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    std::mt19937 rng(77);
    std::uniform_int_distribution<int> c(-3, 3);
    for (int rep = 0; rep < 200; ++rep) {
        // Random class orthogonal to E: span(L, E_1..E_5, E_6 + E_7).
        std::vector<int> v{c(rng), c(rng), c(rng), c(rng), c(rng), c(rng), 0, 0};
        int last = c(rng);
        v[6] = last;
        v[7] = last;
        DivisorClass D(pair.surface, v);
        REQUIRE(pair.orthogonal_to_e(D));
        for (int m = 1; m <= 3; ++m)
            CHECK(arithmetic_genus(D - (2 * m) * pair.e) ==
                  arithmetic_genus(D) - 4 * static_cast<long long>(m) * m);
    }
}

TEST_CASE("chained genus-3 <- genus-2 <- genus-1 reduction") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    DivisorClass fourE = 4 * pair.e;
    DivisorClass twoE = 2 * pair.e;
    DivisorClass zero = pair.surface.zero();

    GenusZeroBackend t1 = GenusZeroBackend::from_map(
        {{fourE.str(), Integer(8)}, {twoE.str(), Integer(4)}, {zero.str(), Integer(2)}});
    CHECK(genus2_e15(pair, fourE, t1) == 10);
    CHECK(genus2_e15(pair, twoE, t1) == 4);
    CHECK(genus2_e15(pair, zero, t1) == 1);

    GenusZeroBackend t2 = GenusZeroBackend::from_evaluator(
        [&](const DivisorClass& D) { return genus2_e15(pair, D, t1); });
    CHECK(genus3_e16(pair, fourE, t2) == 10); // 10/2 + 4 + 1

    // Same result from a hand-rolled double sum.
    auto b1 = [&](const DivisorClass& D) { return t1.value(D); };
    auto b2 = [&](const DivisorClass& D) {
        Integer tot = b1(D) / 2;
        for (int m = 1; m < 16; ++m) {
            if (!is_effective(D - (2 * m) * pair.e, pair)) break;
            tot += b1(D - (2 * m) * pair.e);
        }
        return tot;
    };
    Integer direct = b2(fourE) / 2;
    for (int m = 1; m < 16; ++m) {
        if (!is_effective(fourE - (2 * m) * pair.e, pair)) break;
        direct += b2(fourE - (2 * m) * pair.e);
    }
    CHECK(genus3_e16(pair, fourE, t2) == direct);
}

TEST_CASE("table1 oracle and pipeline") {
    Table1Oracle oracle = Table1Oracle::load(BundledData::table1_oracle_json());
    CHECK(oracle.size() == 7);
    CHECK_THROWS_AS(oracle.value("deg=9|RX=?", "nope"), BackendError);
    CHECK_THROWS_AS(Table1Oracle::load("nope"), ConfigurationError);
    CHECK_THROWS_AS(Table1Oracle::load(R"({"entries": []})"), ConfigurationError);

    const auto& cols = BundledData::table1();
    const auto& models = catalog();
    REQUIRE(cols.size() == 7);
    REQUIRE(models.size() == 7);
    for (std::size_t i = 0; i < 7; ++i) {
        RealSurfaceModel model = models[i];
        BundledData::apply_example_bh(model);
        CHECK(model.tag() == cols[i].model_tag);
        PipelineResult res = table1_pipeline(model, oracle);
        CHECK(res.value.value == cols[i].w1);
        CHECK(res.value.provenance == Provenance::Oracle);
        CHECK(res.desc.D == -2 * model.lattice.canonical());
        CHECK(res.state.phi == PhiTag::ComplementClass);
        CHECK(res.value.descriptor.find("eps=+1,+1") != std::string::npos);
        CHECK(gw_bound_check(res.value, cols[i].gw1));
    }

    // All five degree-2 rows share one transfer state; the oracle key must
    // therefore carry the model tag.
    std::set<std::string> deg2_states;
    for (std::size_t i = 2; i < 7; ++i) {
        RealSurfaceModel model = models[i];
        BundledData::apply_example_bh(model);
        deg2_states.insert(table1_pipeline(model, oracle).state.key());
    }
    CHECK(deg2_states.size() == 1);

    // Ruleset mode with the bundled partial transcription stops honestly.
    RuleSet partial = RuleSet::load_file(std::string(WKIT_SOURCE_DIR) +
                                         "/data/ruleset_first_sum.json");
    WMemo memo;
    RealSurfaceModel m0 = models[0];
    BundledData::apply_example_bh(m0);
    CHECK_THROWS_AS(table1_pipeline(m0, partial, memo), IncompleteRulesetError);
}

TEST_CASE("asymptotic probe: synthetic factorial series") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    DivisorClass D = pair.surface.anticanonical(); // -D.K = 2
    AsymptoticSeries s = asymptotic_probe(D, 6, [](int k) { return fact(k); });

    REQUIRE(s.values.size() == 6);
    CHECK(s.values[5].second == 720);
    CHECK(s.nonpositive_k.empty());
    CHECK(s.slope_digits == 40);

    REQUIRE(s.slopes.size() == 5); // k = 2..6
    CHECK(s.slopes[0].first == 2);
    CHECK(s.slopes[0].second == Rational(1, 2)); // log 2 / (2 log 2), exactly
    for (std::size_t i = 0; i + 1 < s.slopes.size(); ++i)
        CHECK(s.slopes[i].second <= s.slopes[i + 1].second);
    CHECK(s.slopes[4].second > Rational(61, 100));
    CHECK(s.slopes[4].second < Rational(62, 100));

    // a_n = n!/(2n)! exactly.
    REQUIRE(s.a_n.size() == 6);
    const long long denom[] = {2, 12, 120, 1680, 30240, 665280};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(s.a_n[i].second == Rational(1, denom[i]));
    REQUIRE(s.lambda_est.has_value());
    CHECK(*s.lambda_est == Rational(1, 394042));
}

TEST_CASE("asymptotic probe: degenerate inputs") {
    NodalPairLattice pair = NodalPairLattice::canonical_degree2();
    DivisorClass D = pair.surface.anticanonical();
    CHECK_THROWS_AS(asymptotic_probe(D, 0, [](int) { return Integer(1); }),
                    ConfigurationError);

    AsymptoticSeries one = asymptotic_probe(D, 1, [](int k) { return fact(k); });
    CHECK(one.values.size() == 1);
    CHECK(one.slopes.empty());
    CHECK_FALSE(one.lambda_est.has_value());

    // A zero value is flagged and skipped in the slope list.
    AsymptoticSeries gap =
        asymptotic_probe(D, 6, [](int k) { return k == 3 ? Integer(0) : fact(k); });
    CHECK(gap.nonpositive_k == std::vector<int>{3});
    CHECK(gap.slopes.size() == 4);

    // D.K = 0 disables the normalized-term diagnostics.
    AsymptoticSeries flat = asymptotic_probe(pair.e, 4, [](int k) { return fact(k); });
    CHECK(flat.a_n.empty());
    CHECK_FALSE(flat.lambda_est.has_value());
    CHECK(flat.slopes.size() == 3);
}
