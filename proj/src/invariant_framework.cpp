#include "wkit/invariant_framework.hpp"

#include <functional>

#include <json.hpp>

namespace wkit {

std::string PhiClass::str() const {
    switch (tag) {
    case PhiTag::Zero: return "zero";
    case PhiTag::ComplementClass: return "complement";
    case PhiTag::Custom: return "custom:" + custom_id;
    }
    throw Error("corrupt phi tag");
}

PhiClass PhiClass::parse(const std::string& text) {
    if (text == "zero" || text == "0") return zero();
    if (text == "complement") return complement();
    if (text.rfind("custom:", 0) == 0) return custom(text.substr(7));
    throw ConfigurationError("unknown phi class \"" + text + "\"");
}

std::string InvariantDescriptor::serialize() const {
    std::string out = model.tag();
    out += "|D=" + D.str();
    out += "|g=" + std::to_string(g);
    out += "|F=";
    for (std::size_t i = 0; i < selection.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(selection[i]);
    }
    out += "|r=";
    if (distribution) {
        for (std::size_t i = 0; i < distribution->r.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(distribution->r[i]);
        }
        out += "|m=" + std::to_string(distribution->m);
    } else {
        out += "-|m=-";
    }
    out += "|eps=";
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (i) out += ',';
        out += (eps[i] >= 0 ? "+1" : "-1");
    }
    out += "|phi=" + phi.str();
    return out;
}

std::string provenance_name(Provenance p) {
    switch (p) {
    case Provenance::ClosedForm: return "closed_form";
    case Provenance::Reduction: return "reduction";
    case Provenance::Recursion: return "recursion";
    case Provenance::Oracle: return "oracle";
    }
    throw Error("corrupt provenance");
}

bool ValidationReport::all_ok() const {
    for (const auto& it : items)
        if (!it.pass) return false;
    return true;
}

const CheckItem* ValidationReport::find(const std::string& name) const {
    for (const auto& it : items)
        if (it.name == name) return &it;
    return nullptr;
}

namespace {

void run_check(ValidationReport& rep, const std::string& name, bool dependencies_ok,
               const std::function<std::pair<bool, std::string>()>& fn) {
    CheckItem item;
    item.name = name;
    if (!dependencies_ok) {
        item.pass = false;
        item.message = "skipped: structural checks failed";
        rep.items.push_back(std::move(item));
        return;
    }
    try {
        auto [ok, msg] = fn();
        item.pass = ok;
        item.message = msg;
    } catch (const Error& e) {
        item.pass = false;
        item.message = e.what();
    }
    rep.items.push_back(std::move(item));
}

} // namespace

ValidationReport validate_hypotheses(const InvariantDescriptor& desc) {
    ValidationReport rep;

    bool structural = true;
    {
        CheckItem item;
        item.name = "structural";
        try {
            if (desc.g < 1)
                throw ConfigurationError("genus must be >= 1, got " + std::to_string(desc.g));
            if (static_cast<int>(desc.selection.size()) != desc.g + 1)
                throw ConfigurationError("selection has " + std::to_string(desc.selection.size()) +
                                         " components, genus " + std::to_string(desc.g) +
                                         " needs exactly g+1 = " + std::to_string(desc.g + 1));
            validate_selection(desc.model, desc.selection);
            if (desc.D.k() != desc.model.lattice.k)
                throw LatticeMismatchError("divisor class rank does not match the model lattice");
            if (!desc.eps.empty()) {
                if (static_cast<int>(desc.eps.size()) != desc.g + 1)
                    throw ConfigurationError("eps vector must have g+1 entries");
                for (int e : desc.eps)
                    if (e != 1 && e != -1)
                        throw ConfigurationError("eps entries must be +1 or -1");
            }
            item.pass = true;
        } catch (const Error& e) {
            item.pass = false;
            item.message = e.what();
            structural = false;
        }
        rep.items.push_back(std::move(item));
    }

    const RealSurfaceModel& model = desc.model;
    const DivisorClass& D = desc.D;

    run_check(rep, "nef", structural, [&] {
        bool ok = is_nef(D);
        return std::make_pair(ok, ok ? "" : "D pairs negatively with a (-1)-curve");
    });
    run_check(rep, "big", structural, [&] {
        bool ok = is_big(D);
        return std::make_pair(ok, ok ? "" : "D.D = " + std::to_string(self_intersection(D)) + " <= 0");
    });
    run_check(rep, "fhat_compatible", structural, [&] {
        bool ok = check_f_hat_compatible(model, desc.selection, D);
        return std::make_pair(ok, ok ? "" : "a non-selected component has nonzero parity on D");
    });
    run_check(rep, "genus_bound", structural, [&] {
        long long pa = arithmetic_genus(D);
        bool ok = pa >= desc.g;
        return std::make_pair(ok, "p_a(D) = " + std::to_string(pa));
    });
    run_check(rep, "degree_inequality", structural, [&] {
        long long dk = intersect(D, model.lattice.canonical());
        long long parsum = 0;
        for (int i : desc.selection) parsum += model.bh_parity(i, D);
        bool ok = -dk >= desc.g + 1 - parsum;
        return std::make_pair(ok, "-D.K = " + std::to_string(-dk) + ", g+1-sum(parities) = " +
                                      std::to_string(desc.g + 1 - parsum));
    });
    run_check(rep, "parity_congruence", structural, [&] {
        bool ok = check_parity_congruence(model, desc.selection, D);
        return std::make_pair(ok, ok ? "" : "D.K and the selected parities disagree mod 2");
    });
    run_check(rep, "distribution_feasible", structural, [&] {
        auto all = enumerate_distributions(model, desc.selection, D);
        if (all.empty()) return std::make_pair(false, std::string("no admissible distribution"));
        if (desc.distribution && !check_distribution(model, desc.selection, D, *desc.distribution))
            return std::make_pair(false, std::string("supplied distribution violates (e6)"));
        return std::make_pair(true, std::to_string(all.size()) + " admissible distributions");
    });

    if (structural) {
        for (int i : desc.selection)
            if (model.components[static_cast<std::size_t>(i)].bh_unverified)
                rep.bh_unverified.push_back(i);
    }
    return rep;
}

InvariantValue closed_form_equal_genus(const InvariantDescriptor& desc, int half_curve_parity) {
    long long pa = arithmetic_genus(desc.D);
    if (pa != desc.g)
        throw RegimeError("equal-genus closed form needs p_a(D) = g; here p_a = " +
                          std::to_string(pa) + ", g = " + std::to_string(desc.g));
    int parity = (desc.phi.tag == PhiTag::Zero) ? 0 : ((half_curve_parity % 2 + 2) % 2);
    InvariantValue v;
    v.value = (parity == 0) ? 1 : -1;
    v.provenance = Provenance::ClosedForm;
    v.descriptor = desc.serialize();
    return v;
}

InvariantValue closed_form_pencil(const InvariantDescriptor& desc) {
    long long pa = arithmetic_genus(desc.D);
    if (pa != desc.g + 1)
        throw RegimeError("pencil closed form needs p_a(D) = g + 1; here p_a = " +
                          std::to_string(pa) + ", g = " + std::to_string(desc.g));
    if (!desc.distribution)
        throw ConfigurationError("pencil closed form needs a point distribution (r; m)");
    if (static_cast<int>(desc.eps.size()) != desc.g + 1)
        throw ConfigurationError("pencil closed form needs an eps vector of length g+1");
    if (desc.phi.tag == PhiTag::Custom)
        throw CapabilityError("pencil closed form supports only phi = zero or the complement "
                              "class; custom phi classes are out of scope");
    if (!check_distribution(desc.model, desc.selection, desc.D, *desc.distribution))
        throw ConfigurationError("supplied distribution violates (e6)");

    Integer w = 0;
    for (std::size_t i = 0; i < desc.selection.size(); ++i) {
        int chi = euler_char(desc.model.components[static_cast<std::size_t>(desc.selection[i])].type);
        w += Integer(desc.eps[i]) * (desc.distribution->r[i] + 1 - chi);
    }
    if (desc.phi.tag == PhiTag::ComplementClass)
        w -= euler_complement(desc.model, desc.selection);

    InvariantValue v;
    v.value = std::move(w);
    v.provenance = Provenance::ClosedForm;
    v.descriptor = desc.serialize();
    return v;
}

Integer cubic_elliptic_example(int r0, int r1, int eps0, int eps1) {
    if ((eps0 != 1 && eps0 != -1) || (eps1 != 1 && eps1 != -1))
        throw ConfigurationError("eps entries must be +1 or -1");
    if (r0 < 0 || r1 < 0 || r0 + r1 > 5 || (5 - r0 - r1) % 2 != 0)
        throw ConfigurationError("need r_0 + r_1 + 2m = 5 with r_0, r_1 >= 0");
    if (r0 % 2 != 0 || r1 % 2 != 1)
        throw ConfigurationError("the cubic example forces r_0 even and r_1 odd");
    return Integer(eps0) * r0 + Integer(eps1) * (r1 - 1);
}

bool gw_bound_check(const InvariantValue& v, const Integer& gw) {
    if (gw < 0) throw ConfigurationError("GW reference bound must be nonnegative");
    return abs(v.value) <= gw;
}

void InvariantLedger::add(const InvariantValue& v) {
    auto it = entries_.find(v.descriptor);
    if (it == entries_.end()) {
        entries_.emplace(v.descriptor, v);
        return;
    }
    if (it->second.value != v.value)
        throw MismatchError("ledger conflict for " + v.descriptor + ": " +
                            to_decimal(it->second.value) + " vs " + to_decimal(v.value));
}

const InvariantValue* InvariantLedger::find(const std::string& descriptor) const {
    auto it = entries_.find(descriptor);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string InvariantLedger::to_csv() const {
    std::string out = "descriptor,value,provenance\n";
    for (const auto& [k, v] : entries_) {
        out += '"' + k + "\"," + to_decimal(v.value) + ',' + provenance_name(v.provenance) + '\n';
    }
    return out;
}

std::string InvariantLedger::to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [k, v] : entries_) {
        nlohmann::ordered_json row;
        row["descriptor"] = k;
        row["value"] = to_decimal(v.value);
        row["provenance"] = provenance_name(v.provenance);
        arr.push_back(std::move(row));
    }
    return arr.dump(2);
}

} // namespace wkit
