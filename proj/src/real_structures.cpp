#include "wkit/real_structures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace wkit {

int euler_char(ComponentType t) {
    switch (t) {
    case ComponentType::RP2: return 1;
    case ComponentType::S2: return 2;
    case ComponentType::KLEIN: return 0;
    }
    throw Error("unknown component type");
}

std::string component_type_name(ComponentType t) {
    switch (t) {
    case ComponentType::RP2: return "RP2";
    case ComponentType::S2: return "S2";
    case ComponentType::KLEIN: return "RP2#RP2";
    }
    throw Error("unknown component type");
}

ComponentType parse_component_type(const std::string& name) {
    if (name == "RP2") return ComponentType::RP2;
    if (name == "S2") return ComponentType::S2;
    if (name == "RP2#RP2" || name == "KLEIN") return ComponentType::KLEIN;
    throw ConfigurationError("unknown real component type \"" + name + "\"");
}

BhTable BhTable::linear(std::vector<int> pattern) {
    for (int b : pattern)
        if (b != 0 && b != 1)
            throw ConfigurationError("bh pattern entries must be 0 or 1");
    BhTable t;
    t.mode = Mode::Linear;
    t.pattern = std::move(pattern);
    return t;
}

BhTable BhTable::table(std::map<std::string, int> entries) {
    for (const auto& [k, v] : entries)
        if (v != 0 && v != 1)
            throw ConfigurationError("bh parity must be 0 or 1 (key " + k + ")");
    BhTable t;
    t.mode = Mode::Table;
    t.entries = std::move(entries);
    return t;
}

std::string mod2_key(const DivisorClass& D) {
    std::string out = std::to_string(((D.d() % 2) + 2) % 2);
    for (int i = 1; i <= D.k(); ++i) {
        out += (i == 1) ? ';' : ',';
        out += std::to_string(((D.m(i) % 2) + 2) % 2);
    }
    return out;
}

std::string RealSurfaceModel::tag() const {
    std::string out = "deg=" + std::to_string(degree()) + "|RX=";
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (i) out += '+';
        out += component_type_name(components[i].type);
    }
    return out;
}

int RealSurfaceModel::bh_parity(int component, const DivisorClass& D) const {
    if (component < 0 || component >= static_cast<int>(components.size()))
        throw ConfigurationError("component index " + std::to_string(component) +
                                 " out of range");
    const RealComponent& c = components[static_cast<std::size_t>(component)];
    if (c.type == ComponentType::S2) return 0; // spheres carry no 1-cycles
    const std::string who = "component " + std::to_string(component) + " (" +
                            component_type_name(c.type) + ")";
    switch (c.bh.mode) {
    case BhTable::Mode::Unset:
        throw ConfigurationError(who + ": bh table not configured");
    case BhTable::Mode::Linear: {
        if (static_cast<int>(c.bh.pattern.size()) != lattice.rank())
            throw ConfigurationError(who + ": bh pattern rank mismatch");
        long long acc = 0;
        for (int i = 0; i <= D.k(); ++i)
            acc += static_cast<long long>(c.bh.pattern[static_cast<std::size_t>(i)]) *
                   D.coeffs()[static_cast<std::size_t>(i)];
        return static_cast<int>(((acc % 2) + 2) % 2);
    }
    case BhTable::Mode::Table: {
        auto it = c.bh.entries.find(mod2_key(D));
        if (it == c.bh.entries.end())
            throw ConfigurationError(who + ": missing bh entry for class " +
                                     mod2_key(D) + " (mod 2)");
        return it->second;
    }
    }
    throw Error("corrupt bh table mode");
}

long long RealSurfaceModel::euler_total() const {
    long long chi = 0;
    for (const auto& c : components) chi += euler_char(c.type);
    return chi;
}

const std::vector<RealSurfaceModel>& catalog() {
    static const std::vector<RealSurfaceModel> models = [] {
        auto make = [](int degree, std::vector<ComponentType> types) {
            RealSurfaceModel m;
            m.lattice = SurfaceLattice(9 - degree);
            for (ComponentType t : types) m.components.push_back(RealComponent{t, {}, false});
            return m;
        };
        using CT = ComponentType;
        std::vector<RealSurfaceModel> v;
        v.push_back(make(4, {CT::S2, CT::S2}));
        v.push_back(make(3, {CT::RP2, CT::S2}));
        v.push_back(make(2, {CT::RP2, CT::RP2}));
        v.push_back(make(2, {CT::KLEIN, CT::S2}));
        v.push_back(make(2, {CT::S2, CT::S2}));
        v.push_back(make(2, {CT::S2, CT::S2, CT::S2}));
        v.push_back(make(2, {CT::S2, CT::S2, CT::S2, CT::S2}));
        return v;
    }();
    return models;
}

const RealSurfaceModel& find_catalog_model(int degree,
                                           const std::vector<ComponentType>& types) {
    for (const auto& m : catalog()) {
        if (m.degree() != degree) continue;
        if (m.components.size() != types.size()) continue;
        bool same = true;
        for (std::size_t i = 0; i < types.size(); ++i)
            if (m.components[i].type != types[i]) same = false;
        if (same) return m;
    }
    std::string want;
    for (std::size_t i = 0; i < types.size(); ++i) {
        if (i) want += '+';
        want += component_type_name(types[i]);
    }
    throw CapabilityError("no catalog model of degree " + std::to_string(degree) +
                          " with real part " + want +
                          "; only the seven disconnected deformation classes of "
                          "degree >= 2 are supported");
}

namespace {

BhTable bh_from_json(const nlohmann::json& j, const SurfaceLattice& lattice) {
    if (j.is_string()) {
        DivisorClass pat = DivisorClass::parse(lattice, j.get<std::string>());
        std::vector<int> bits;
        for (int v : pat.coeffs()) {
            if (v != 0 && v != 1)
                throw ConfigurationError("linear bh pattern entries must be 0 or 1");
            bits.push_back(v);
        }
        return BhTable::linear(std::move(bits));
    }
    if (j.is_object()) {
        std::map<std::string, int> entries;
        for (auto it = j.begin(); it != j.end(); ++it) {
            DivisorClass key = DivisorClass::parse(lattice, it.key());
            entries[mod2_key(key)] = it.value().get<int>();
        }
        return BhTable::table(std::move(entries));
    }
    throw ConfigurationError("bh entry must be a pattern string or a table object");
}

RealSurfaceModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("degree") || !j.contains("components"))
        throw ConfigurationError("model config needs \"degree\" and \"components\"");
    int degree = j.at("degree").get<int>();
    if (degree < 2 || degree > 7)
        throw CapabilityError("model config: degree " + std::to_string(degree) +
                              " out of supported range [2, 7]");
    RealSurfaceModel m;
    m.lattice = SurfaceLattice(9 - degree);
    for (const auto& c : j.at("components")) {
        RealComponent comp;
        comp.type = parse_component_type(c.at("type").get<std::string>());
        m.components.push_back(std::move(comp));
    }
    if (m.components.empty())
        throw ConfigurationError("model config: empty component list");
    if (j.contains("bh")) {
        for (auto it = j.at("bh").begin(); it != j.at("bh").end(); ++it) {
            int idx = std::stoi(it.key());
            if (idx < 0 || idx >= static_cast<int>(m.components.size()))
                throw ConfigurationError("bh config names component " + it.key() +
                                         " which does not exist");
            m.components[static_cast<std::size_t>(idx)].bh = bh_from_json(it.value(), m.lattice);
        }
    }
    return m;
}

} // namespace

RealSurfaceModel load_model_config(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("model config is not valid JSON: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("model config malformed: ") + e.what());
    }
}

RealSurfaceModel load_model_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open model config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model_config(ss.str());
}

void validate_selection(const RealSurfaceModel& model, const ComponentSelection& sel) {
    if (sel.size() < 2)
        throw ConfigurationError("selection needs g+1 >= 2 components (g >= 1)");
    if (sel.size() > model.components.size())
        throw ConfigurationError("selection of " + std::to_string(sel.size()) +
                                 " components exceeds the " +
                                 std::to_string(model.components.size()) +
                                 " components of the real part");
    std::vector<int> seen;
    for (int i : sel) {
        if (i < 0 || i >= static_cast<int>(model.components.size()))
            throw ConfigurationError("selection index " + std::to_string(i) + " out of range");
        if (std::find(seen.begin(), seen.end(), i) != seen.end())
            throw ConfigurationError("selection repeats component " + std::to_string(i));
        seen.push_back(i);
    }
}

long long euler_complement(const RealSurfaceModel& model, const ComponentSelection& sel) {
    long long chi = 0;
    for (int i = 0; i < static_cast<int>(model.components.size()); ++i)
        if (std::find(sel.begin(), sel.end(), i) == sel.end())
            chi += euler_char(model.components[static_cast<std::size_t>(i)].type);
    return chi;
}

bool check_f_hat_compatible(const RealSurfaceModel& model,
                            const ComponentSelection& sel, const DivisorClass& D) {
    validate_selection(model, sel);
    for (int i = 0; i < static_cast<int>(model.components.size()); ++i)
        if (std::find(sel.begin(), sel.end(), i) == sel.end())
            if (model.bh_parity(i, D) != 0) return false;
    return true;
}

bool check_parity_congruence(const RealSurfaceModel& model,
                             const ComponentSelection& sel, const DivisorClass& D) {
    validate_selection(model, sel);
    long long dk = intersect(D, model.lattice.canonical());
    long long sum = 0;
    for (int i : sel) sum += model.bh_parity(i, D);
    return ((dk - sum) % 2) == 0;
}

long long expected_dimension(const DivisorClass& D, int g) {
    SurfaceLattice S(D.k());
    return -intersect(D, S.canonical()) + g - 1;
}

std::vector<PointDistribution> enumerate_distributions(const RealSurfaceModel& model,
                                                       const ComponentSelection& sel,
                                                       const DivisorClass& D) {
    validate_selection(model, sel);
    const int g = static_cast<int>(sel.size()) - 1;
    const long long total = expected_dimension(D, g);
    std::vector<PointDistribution> out;
    if (total < 0) return out;

    std::vector<int> req; // required parity of r_i
    for (int i : sel) req.push_back((model.bh_parity(i, D) + 1) % 2);

    // m ascending, then r_g, r_{g-1}, ..., r_1 ascending; r_0 closes the sum.
    for (int m = 0; 2 * m <= total; ++m) {
        std::vector<int> r(static_cast<std::size_t>(g + 1), 0);
        long long rem = total - 2 * m;
        auto assign = [&](auto&& self, int pos, long long left) -> void {
            if (pos == 0) {
                if (left % 2 == req[0] % 2) {
                    r[0] = static_cast<int>(left);
                    out.push_back(PointDistribution{r, m});
                }
                return;
            }
            for (int v = req[static_cast<std::size_t>(pos)] % 2; v <= left; v += 2) {
                r[static_cast<std::size_t>(pos)] = v;
                self(self, pos - 1, left - v);
            }
        };
        // descend g, g-1, ..., 1 with ascending loops: recursion order makes
        // the innermost (pos = 1) vary fastest, so sort afterwards by the
        // documented key (m, r_g, ..., r_1).
        assign(assign, g, rem);
    }
    std::stable_sort(out.begin(), out.end(), [g](const PointDistribution& a, const PointDistribution& b) {
        if (a.m != b.m) return a.m < b.m;
        for (int i = g; i >= 1; --i)
            if (a.r[static_cast<std::size_t>(i)] != b.r[static_cast<std::size_t>(i)])
                return a.r[static_cast<std::size_t>(i)] < b.r[static_cast<std::size_t>(i)];
        return false;
    });
    return out;
}

bool check_distribution(const RealSurfaceModel& model, const ComponentSelection& sel,
                        const DivisorClass& D, const PointDistribution& dist) {
    validate_selection(model, sel);
    const int g = static_cast<int>(sel.size()) - 1;
    if (static_cast<int>(dist.r.size()) != g + 1 || dist.m < 0) return false;
    long long sum = 0;
    for (std::size_t i = 0; i < dist.r.size(); ++i) {
        if (dist.r[i] < 0) return false;
        sum += dist.r[i];
        int want = (model.bh_parity(sel[i], D) + 1) % 2;
        if (dist.r[i] % 2 != want) return false;
    }
    return sum + 2 * dist.m == expected_dimension(D, g);
}

} // namespace wkit
