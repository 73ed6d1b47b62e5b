#include "wkit/store.hpp"

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

namespace wkit {

const std::vector<Table1Column>& BundledData::table1() {
    static const std::vector<Table1Column> columns = {
        {"deg=4|RX=S2+S2", 112, 12300},
        {"deg=3|RX=RP2+S2", 36, 1740},
        {"deg=2|RX=RP2+RP2", 12, 204},
        {"deg=2|RX=RP2#RP2+S2", 12, 204},
        {"deg=2|RX=S2+S2", 4, 204},
        {"deg=2|RX=S2+S2+S2", 8, 204},
        {"deg=2|RX=S2+S2+S2+S2", 16, 204},
    };
    return columns;
}

const std::string& BundledData::table1_oracle_json() {
    static const std::string text = R"({
  "oracle_version": 1,
  "entries": [
    {"model": "deg=4|RX=S2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;0,0,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "112"},
    {"model": "deg=3|RX=RP2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;0,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "36"},
    {"model": "deg=2|RX=RP2+RP2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "12"},
    {"model": "deg=2|RX=RP2#RP2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "12"},
    {"model": "deg=2|RX=S2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "4"},
    {"model": "deg=2|RX=S2+S2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "8"},
    {"model": "deg=2|RX=S2+S2+S2+S2",
     "state": "k=7|E=0;0,0,0,0,0,1,-1|D=6;-2,-2,-2,-2,-2,-3,-1|a=0|b=1^2|phi=complement",
     "value": "16"}
  ]
})";
    return text;
}

void BundledData::apply_example_bh(RealSurfaceModel& model) {
    for (auto& comp : model.components) {
        if (comp.type == ComponentType::S2) continue; // parity vanishes anyway
        std::vector<int> ones(static_cast<std::size_t>(model.lattice.rank()), 1);
        comp.bh = BhTable::linear(std::move(ones));
        // On the two-component cubic the congruence forces this pattern;
        // elsewhere it is example data.
        comp.bh_unverified = model.degree() != 3;
    }
}

std::string RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["report_version"] = 1;
    j["descriptor"] = descriptor;
    j["value"] = value;
    j["provenance"] = provenance;
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (const auto& [name, pass] : flags) {
        nlohmann::ordered_json it;
        it["name"] = name;
        it["pass"] = pass;
        items.push_back(std::move(it));
    }
    j["flags"] = std::move(items);
    j["elapsed_us"] = elapsed_us;
    j["cache"] = {{"hits", cache_hits},
                  {"misses", cache_misses},
                  {"entries", cache_entries},
                  {"loaded", cache_loaded}};
    return j.dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("report_version").get<int>() != 1)
            throw ConfigurationError("unsupported report version");
        RunReport r;
        r.descriptor = j.at("descriptor").get<std::string>();
        r.value = j.at("value").get<std::string>();
        r.provenance = j.at("provenance").get<std::string>();
        for (const auto& it : j.at("flags"))
            r.flags.emplace_back(it.at("name").get<std::string>(), it.at("pass").get<bool>());
        r.elapsed_us = j.at("elapsed_us").get<long long>();
        r.cache_hits = j.at("cache").at("hits").get<std::uint64_t>();
        r.cache_misses = j.at("cache").at("misses").get<std::uint64_t>();
        r.cache_entries = j.at("cache").at("entries").get<std::uint64_t>();
        r.cache_loaded = j.at("cache").at("loaded").get<std::uint64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigurationError(std::string("malformed run report: ") + e.what());
    }
}

std::optional<std::string> resolve_cache_file(const std::string& cli_dir) {
    std::string dir = cli_dir;
    if (const char* env = std::getenv("WKIT_CACHE"); env && *env) dir = env;
    if (dir.empty()) return std::nullopt;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigurationError("cannot create cache directory " + dir + ": " + ec.message());
    return dir + "/memo.log";
}

} // namespace wkit
