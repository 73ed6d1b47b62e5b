#include "wkit/reduction_engine.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <json.hpp>

namespace wkit {

namespace {

Integer json_integer(const nlohmann::json& v) {
    if (v.is_string()) return parse_decimal(v.get<std::string>());
    if (v.is_number_integer()) return Integer(v.get<long long>());
    throw ConfigurationError("integer values must be decimal strings or integers");
}

} // namespace

// --- backends -----------------------------------------------------------------

GenusZeroBackend GenusZeroBackend::from_map(std::map<std::string, Integer> by_class,
                                            bool zero_default) {
    GenusZeroBackend b;
    b.kind_ = Kind::OracleTable;
    b.zero_default_ = zero_default;
    b.table_ = std::move(by_class);
    return b;
}

GenusZeroBackend GenusZeroBackend::from_table_json(const SurfaceLattice& lattice,
                                                   const std::string& json_text,
                                                   bool zero_default) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("backend table is not valid JSON: ") + e.what());
    }
    if (!j.is_array())
        throw ConfigurationError("backend table must be a JSON array of {class, value}");
    std::map<std::string, Integer> table;
    for (const auto& row : j) {
        if (!row.contains("class") || !row.contains("value"))
            throw ConfigurationError("backend row lacks \"class\" or \"value\"");
        // Parse for validation and to normalize the key.
        DivisorClass D = DivisorClass::parse(lattice, row.at("class").get<std::string>());
        table[D.str()] = json_integer(row.at("value"));
    }
    return from_map(std::move(table), zero_default);
}

GenusZeroBackend GenusZeroBackend::from_table_file(const SurfaceLattice& lattice,
                                                   const std::string& path,
                                                   bool zero_default) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open backend table " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_table_json(lattice, ss.str(), zero_default);
}

GenusZeroBackend GenusZeroBackend::from_evaluator(
    std::function<Integer(const DivisorClass&)> fn) {
    GenusZeroBackend b;
    b.kind_ = Kind::Ruleset;
    b.fn_ = std::move(fn);
    return b;
}

Integer GenusZeroBackend::value(const DivisorClass& D) const {
    if (kind_ == Kind::Ruleset) return fn_(D);
    auto it = table_.find(D.str());
    if (it != table_.end()) return it->second;
    if (zero_default_) return 0;
    throw BackendError("backend table has no entry for class " + D.str());
}

// --- transfer -------------------------------------------------------------------

DivisorClass extend_to_rank(const DivisorClass& D, const SurfaceLattice& target) {
    if (target.k < D.k())
        throw LatticeMismatchError("cannot extend a class to a smaller lattice");
    std::vector<int> coeffs = D.coeffs();
    coeffs.resize(static_cast<std::size_t>(target.rank()), 0);
    return DivisorClass(target, std::move(coeffs));
}

WState transfer_to_pair(const InvariantDescriptor& desc) {
    if (desc.g != 1)
        throw RegimeError("the transfer to a nodal pair is a genus-1 statement; got g = " +
                          std::to_string(desc.g));
    if (desc.eps != std::vector<int>{1, 1})
        throw RegimeError("the transfer is only stated for eps = (1,1)");
    if (desc.phi.tag == PhiTag::Custom)
        throw CapabilityError("custom phi classes are not supported by the transfer");
    validate_selection(desc.model, desc.selection);
    if (desc.selection.size() != 2)
        throw ConfigurationError("a genus-1 descriptor selects exactly two components");

    int degree = desc.model.degree();
    if (degree > 4)
        throw CapabilityError("degree " + std::to_string(degree) +
                              " descriptor is not normalizable directly: blow up " +
                              std::to_string(degree - 4) +
                              " more real point(s) to reach degree <= 4 first");
    if (degree < 2)
        throw CapabilityError("degree-1 surfaces are outside the supported range");
    if (!is_nef(desc.D) || !is_big(desc.D))
        throw ConfigurationError("the transfer requires a nef and big class; " +
                                 desc.D.str() + " is not");

    NodalPairLattice pair = NodalPairLattice::canonical_degree2();

    // Embed by padding with the new exceptional directions, then pick the
    // labeling of the exceptional basis (an isometry of the whole setup)
    // that puts the class into the orthogonal complement of E = E_6 - E_7:
    // sort the multiplicities and steer an equal pair into the last two
    // slots.  A class with seven pairwise distinct multiplicities admits no
    // such vanishing cycle and is rejected.
    std::vector<int> mult;
    for (int i = 1; i <= desc.D.k(); ++i) mult.push_back(desc.D.m(i));
    mult.resize(static_cast<std::size_t>(pair.surface.k), 0);
    std::sort(mult.begin(), mult.end(), std::greater<int>());
    int eq = -1;
    for (int i = 0; i + 1 < static_cast<int>(mult.size()); ++i)
        if (mult[static_cast<std::size_t>(i)] == mult[static_cast<std::size_t>(i) + 1]) eq = i;
    if (eq < 0)
        throw ConfigurationError("class " + desc.D.str() + " has pairwise distinct "
                                 "multiplicities; no exceptional relabeling makes it "
                                 "orthogonal to the (-2)-class");
    int v = mult[static_cast<std::size_t>(eq)];
    mult.erase(mult.begin() + eq, mult.begin() + eq + 2);
    mult.push_back(v);
    mult.push_back(v);
    std::vector<int> coeffs{desc.D.d()};
    coeffs.insert(coeffs.end(), mult.begin(), mult.end());
    DivisorClass pD(pair.surface, std::move(coeffs));

    // phi picks up the class of the complement of the selected components.
    PhiTag phi = desc.phi.tag == PhiTag::Zero ? PhiTag::ComplementClass : PhiTag::Zero;
    return WState(pair, pD - pair.e, {}, TangencyVector::parse("1^2"), phi);
}

// --- degeneration sums -------------------------------------------------------------

std::pair<Integer, Integer> genus1_degeneration_sums(const NodalPairLattice& pair,
                                                     const DivisorClass& D,
                                                     const std::map<int, Integer>& w_oracle) {
    Integer plus = 0, minus = 0;
    for (int m = 1;; ++m) {
        if (m > 512)
            throw Error("degeneration sum failed to truncate by m = 512; "
                        "the effectiveness cascade should have cut off long ago");
        if (!is_effective(D - m * pair.e, pair)) break;
        auto it = w_oracle.find(m);
        if (it == w_oracle.end())
            throw BackendError("degeneration sum needs W(Y, D - " + std::to_string(m) +
                               "E) but the oracle has no entry for it");
        Integer term = (Integer(1) << (m - 1)) * m * it->second;
        plus += (m % 2 == 1) ? term : -term;
        minus += term;
    }
    return {plus, minus};
}

namespace {

Integer half_plus_twists(const NodalPairLattice& pair, const DivisorClass& D,
                         const GenusZeroBackend& backend, const char* formula) {
    Integer lead = backend.value(D);
    if (lead % 2 != 0)
        throw IntegralityError(std::string(formula) + ": W(" + D.str() + ") = " +
                               to_decimal(lead) + " is odd; the halving must be exact "
                               "(bad backend data)");
    Integer total = lead / 2;
    for (int m = 1;; ++m) {
        if (m > 512)
            throw Error(std::string(formula) + ": m-sum failed to truncate by m = 512");
        DivisorClass Dm = D - (2 * m) * pair.e;
        if (!is_effective(Dm, pair)) break;
        total += backend.value(Dm);
    }
    return total;
}

} // namespace

Integer combo_e14(const NodalPairLattice& pair, const DivisorClass& D,
                  const GenusZeroBackend& backend) {
    return half_plus_twists(pair, D, backend, "combined genus-1 invariant");
}

Integer genus2_e15(const NodalPairLattice& pair, const DivisorClass& D,
                   const GenusZeroBackend& genus1_backend) {
    return half_plus_twists(pair, D, genus1_backend, "genus-2 reduction");
}

Integer genus3_e16(const NodalPairLattice& pair, const DivisorClass& D,
                   const GenusZeroBackend& genus2_backend) {
    return half_plus_twists(pair, D, genus2_backend, "genus-3 reduction");
}

// --- Table 1 pipeline ------------------------------------------------------------

Table1Oracle Table1Oracle::load(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("oracle file is not valid JSON: ") + e.what());
    }
    try {
        if (!j.contains("oracle_version") || j.at("oracle_version").get<int>() != 1)
            throw ConfigurationError("oracle_version must be present and equal to 1");
        Table1Oracle o;
        for (const auto& row : j.at("entries")) {
            std::string model = row.at("model").get<std::string>();
            std::string state = row.at("state").get<std::string>();
            o.entries_[{model, state}] = json_integer(row.at("value"));
        }
        return o;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("oracle document malformed: ") + e.what());
    }
}

Table1Oracle Table1Oracle::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open oracle file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load(ss.str());
}

Integer Table1Oracle::value(const std::string& model_tag, const std::string& state_key) const {
    auto it = entries_.find({model_tag, state_key});
    if (it == entries_.end())
        throw BackendError("oracle has no value for model " + model_tag + ", state " +
                           state_key);
    return it->second;
}

namespace {

InvariantDescriptor table1_descriptor(const RealSurfaceModel& model) {
    InvariantDescriptor desc;
    desc.model = model;
    desc.D = -2 * model.lattice.canonical();
    desc.g = 1;
    desc.selection = {0, 1};
    desc.eps = {1, 1};
    desc.phi = PhiClass::zero();
    return desc;
}

} // namespace

PipelineResult table1_pipeline(const RealSurfaceModel& model, const Table1Oracle& oracle) {
    InvariantDescriptor desc = table1_descriptor(model);
    WState state = transfer_to_pair(desc);
    InvariantValue v;
    v.value = oracle.value(model.tag(), state.key());
    v.provenance = Provenance::Oracle;
    v.descriptor = desc.serialize();
    return PipelineResult{std::move(desc), std::move(state), std::move(v)};
}

PipelineResult table1_pipeline(const RealSurfaceModel& model, const RuleSet& rules,
                               WMemo& memo) {
    InvariantDescriptor desc = table1_descriptor(model);
    WState state = transfer_to_pair(desc);
    InvariantValue v;
    v.value = evaluate(state, rules, memo);
    v.provenance = Provenance::Recursion;
    v.descriptor = desc.serialize();
    return PipelineResult{std::move(desc), std::move(state), std::move(v)};
}

// --- asymptotics -------------------------------------------------------------------

namespace {

Integer factorial(long long n) {
    Integer r = 1;
    for (long long i = 2; i <= n; ++i) r *= i;
    return r;
}

} // namespace

AsymptoticSeries asymptotic_probe(const DivisorClass& D, int k_max,
                                  const std::function<Integer(int)>& evaluator) {
    if (k_max < 1) throw ConfigurationError("asymptotic probe needs k_max >= 1");
    AsymptoticSeries out;
    out.D = D;
    for (int k = 1; k <= k_max; ++k) {
        Integer w = evaluator(k);
        if (w <= 0) out.nonpositive_k.push_back(k);
        out.values.emplace_back(k, std::move(w));
    }

    using Float = boost::multiprecision::cpp_bin_float_100;
    out.slope_digits = 40;
    const Integer scale = boost::multiprecision::pow(Integer(10), out.slope_digits);
    for (const auto& [k, w] : out.values) {
        if (k < 2 || w <= 0) continue;
        Float slope = log(Float(w)) / (Float(k) * log(Float(k)));
        Integer num = (slope * Float(scale)).convert_to<Integer>();
        out.slopes.emplace_back(k, Rational(num, scale));
    }

    SurfaceLattice lat(D.k());
    long long dk = -intersect(D, lat.canonical());
    if (dk > 0) {
        Rational prefix = 0;
        for (const auto& [k, w] : out.values) {
            Rational an = Rational(w) / Rational(factorial(k * dk));
            if (k >= 2 && prefix > 0) {
                Rational cand = an / prefix;
                if (!out.lambda_est || cand < *out.lambda_est) out.lambda_est = cand;
            }
            prefix += an;
            out.a_n.emplace_back(k, std::move(an));
        }
    }
    return out;
}

} // namespace wkit
