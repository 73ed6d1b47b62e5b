#include "wkit/cli.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wkit/errors.hpp"
#include "wkit/invariant_framework.hpp"
#include "wkit/picard_lattice.hpp"
#include "wkit/real_structures.hpp"
#include "wkit/reduction_engine.hpp"
#include "wkit/store.hpp"
#include "wkit/wnumber_engine.hpp"

namespace wkit {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (const std::string& tok : split(text, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw ConfigurationError("bad " + what + " entry \"" + tok + "\"");
        }
    }
    return out;
}

std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct Opts {
    int degree = 0;
    std::string rx;
    std::string model_file;
    std::string D_text;
    int g = 1;
    std::string F_text;
    std::string r_text;
    int m = -1;
    std::string eps_text;
    std::string phi_text = "zero";
    int half_parity = 0;
    std::string ruleset;
    std::string oracle;
    std::string cache;
    std::string format = "text";
    int kmax = 6;
    std::string synthetic;
    bool clear = false;
};

RealSurfaceModel resolve_model(const Opts& o) {
    if (!o.model_file.empty()) return load_model_config_file(o.model_file);
    if (o.rx.empty())
        throw ConfigurationError("a real structure is needed here: pass --rx (catalog) "
                                 "or --model FILE");
    std::vector<ComponentType> types;
    for (const std::string& tok : split(o.rx, '+')) types.push_back(parse_component_type(tok));
    RealSurfaceModel model = find_catalog_model(o.degree, types);
    BundledData::apply_example_bh(model);
    return model;
}

InvariantDescriptor build_descriptor(const Opts& o) {
    InvariantDescriptor desc;
    desc.model = resolve_model(o);
    if (o.D_text.empty()) throw ConfigurationError("--D is required");
    desc.D = DivisorClass::parse(desc.model.lattice, o.D_text);
    desc.g = o.g;
    if (o.F_text.empty()) {
        for (int i = 0; i <= o.g; ++i) desc.selection.push_back(i);
    } else {
        desc.selection = parse_int_list(o.F_text, "--F");
    }
    if (o.eps_text.empty()) {
        desc.eps.assign(static_cast<std::size_t>(o.g) + 1, 1);
    } else {
        desc.eps = parse_int_list(o.eps_text, "--eps");
    }
    desc.phi = PhiClass::parse(o.phi_text);
    if (!o.r_text.empty() || o.m >= 0) {
        if (o.r_text.empty() || o.m < 0)
            throw ConfigurationError("--r and --m describe one distribution; pass both");
        desc.distribution = PointDistribution{parse_int_list(o.r_text, "--r"), o.m};
    }
    return desc;
}

// --- surface ---------------------------------------------------------------

int cmd_surface(const Opts& o, std::ostream& out) {
    if (o.degree < 1 || o.degree > 9)
        throw ConfigurationError("--degree must be between 1 and 9");
    SurfaceLattice lat(9 - o.degree);
    const auto& curves = minus_one_curves(lat);

    std::vector<std::string> tags;
    if (!o.rx.empty() || !o.model_file.empty()) {
        tags.push_back(resolve_model(o).tag());
    } else {
        for (const auto& m : catalog())
            if (m.degree() == o.degree) tags.push_back(m.tag());
    }

    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["degree"] = o.degree;
        j["k"] = lat.k;
        j["rank"] = lat.rank();
        j["K"] = lat.canonical().str();
        j["K.K"] = o.degree;
        j["minus_one_curves"] = curves.size();
        j["models"] = tags;
        out << j.dump(2) << '\n';
        return 0;
    }
    out << "degree " << o.degree << " (k = " << lat.k << ", rank " << lat.rank() << ")\n";
    out << "K = " << lat.canonical().str() << ", K.K = " << o.degree << '\n';
    out << "(-1)-curves: " << curves.size() << '\n';
    if (tags.empty()) {
        out << "catalog models: none at this degree\n";
    } else {
        out << "catalog models:\n";
        for (const auto& t : tags) out << "  " << t << '\n';
    }
    return 0;
}

// --- check -----------------------------------------------------------------

int print_report(const std::vector<CheckItem>& items, const std::vector<int>& bh_unverified,
                 const std::vector<std::pair<std::string, std::string>>& facts,
                 const std::string& format, std::ostream& out) {
    bool all = true;
    for (const auto& it : items) all = all && it.pass;

    if (format == "json") {
        nlohmann::ordered_json j;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& it : items) {
            nlohmann::ordered_json e;
            e["name"] = it.name;
            e["pass"] = it.pass;
            e["message"] = it.message;
            arr.push_back(std::move(e));
        }
        j["checks"] = std::move(arr);
        nlohmann::ordered_json f;
        for (const auto& [k, v] : facts) f[k] = v;
        j["facts"] = std::move(f);
        j["bh_unverified_components"] = bh_unverified;
        j["ok"] = all;
        out << j.dump(2) << '\n';
    } else if (format == "csv") {
        out << "name,pass,message\n";
        for (const auto& it : items)
            out << it.name << ',' << (it.pass ? "true" : "false") << ','
                << csv_quote(it.message) << '\n';
    } else {
        for (const auto& [k, v] : facts) out << k << " = " << v << '\n';
        for (const auto& it : items) {
            out << (it.pass ? "  ok   " : "  FAIL ") << it.name;
            if (!it.message.empty()) out << "  (" << it.message << ')';
            out << '\n';
        }
        if (!bh_unverified.empty()) {
            out << "note: unverified bh data on component(s)";
            for (int i : bh_unverified) out << ' ' << i;
            out << '\n';
        }
        out << (all ? "all checks passed" : "validation failed") << '\n';
    }
    return all ? 0 : 2;
}

int cmd_check(const Opts& o, std::ostream& out) {
    if (o.degree < 1 || o.degree > 9)
        throw ConfigurationError("--degree must be between 1 and 9");
    if (o.D_text.empty()) throw ConfigurationError("--D is required");

    if (o.rx.empty() && o.model_file.empty()) {
        // Lattice-level checks only.
        SurfaceLattice lat(9 - o.degree);
        DivisorClass D = DivisorClass::parse(lat, o.D_text);
        std::vector<CheckItem> items;
        auto add = [&](const std::string& name, auto&& fn) {
            CheckItem it{name, false, ""};
            try {
                it.pass = fn();
            } catch (const Error& e) {
                it.message = e.what();
            }
            items.push_back(std::move(it));
        };
        add("effective", [&] { return is_effective(D); });
        add("nef", [&] { return is_nef(D); });
        add("big", [&] { return is_big(D); });
        std::vector<std::pair<std::string, std::string>> facts = {
            {"D", D.str()},
            {"D.D", std::to_string(self_intersection(D))},
            {"-D.K", std::to_string(-intersect(D, lat.canonical()))},
            {"p_a(D)", std::to_string(arithmetic_genus(D))},
        };
        return print_report(items, {}, facts, o.format, out);
    }

    InvariantDescriptor desc = build_descriptor(o);
    ValidationReport rep = validate_hypotheses(desc);
    std::vector<std::pair<std::string, std::string>> facts = {
        {"descriptor", desc.serialize()},
        {"p_a(D)", std::to_string(arithmetic_genus(desc.D))},
        {"expected_dimension", std::to_string(expected_dimension(desc.D, desc.g))},
    };
    return print_report(rep.items, rep.bh_unverified, facts, o.format, out);
}

// --- eval ------------------------------------------------------------------

int cmd_eval(const Opts& o, std::ostream& out, std::ostream& err) {
    auto t0 = std::chrono::steady_clock::now();
    InvariantDescriptor desc = build_descriptor(o);
    ValidationReport rep = validate_hypotheses(desc);

    RunReport report;
    report.descriptor = desc.serialize();
    for (const auto& it : rep.items) report.flags.emplace_back(it.name, it.pass);

    if (!rep.all_ok()) {
        err << "hypotheses failed:\n";
        for (const auto& it : rep.items)
            if (!it.pass) err << "  " << it.name << "  " << it.message << '\n';
        return 2;
    }

    WMemo memo;
    std::uint64_t loaded = 0;
    InvariantValue v;
    long long pa = arithmetic_genus(desc.D);
    if (pa == desc.g) {
        v = closed_form_equal_genus(desc, o.half_parity);
    } else if (pa == desc.g + 1) {
        v = closed_form_pencil(desc);
    } else if (desc.g == 1 && !o.ruleset.empty()) {
        WState state = transfer_to_pair(desc);
        RuleSet rules = RuleSet::load_file(o.ruleset);
        auto cache = resolve_cache_file(o.cache);
        std::vector<std::string> loaded_keys;
        if (cache) loaded = load_cache_log(*cache, rules.hash(), memo, &loaded_keys);
        v.value = evaluate(state, rules, memo);
        v.provenance = Provenance::Recursion;
        v.descriptor = desc.serialize();
        if (cache) {
            std::set<std::string> seen(loaded_keys.begin(), loaded_keys.end());
            std::vector<std::pair<std::string, Integer>> fresh;
            for (const auto& kv : memo.snapshot())
                if (!seen.count(kv.first)) fresh.push_back(kv);
            append_cache_log(*cache, rules.hash(), fresh);
        }
    } else if (desc.g == 1 && !o.oracle.empty()) {
        WState state = transfer_to_pair(desc);
        Table1Oracle oracle = Table1Oracle::load_file(o.oracle);
        v.value = oracle.value(desc.model.tag(), state.key());
        v.provenance = Provenance::Oracle;
        v.descriptor = desc.serialize();
    } else {
        throw CapabilityError("p_a(D) = " + std::to_string(pa) + " with g = " +
                              std::to_string(desc.g) + " is outside the closed forms "
                              "(p_a in {g, g+1}); pass --ruleset or --oracle (genus 1)");
    }

    auto t1 = std::chrono::steady_clock::now();
    report.value = to_decimal(v.value);
    report.provenance = provenance_name(v.provenance);
    report.elapsed_us =
        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
    report.cache_hits = memo.hits();
    report.cache_misses = memo.misses();
    report.cache_entries = memo.size();
    report.cache_loaded = loaded;

    if (o.format == "json") {
        out << report.to_json() << '\n';
    } else if (o.format == "csv") {
        out << "descriptor,value,provenance\n"
            << csv_quote(report.descriptor) << ',' << report.value << ','
            << report.provenance << '\n';
    } else {
        out << "W = " << report.value << "  [" << report.provenance << "]\n";
        if (!rep.bh_unverified.empty()) {
            out << "note: unverified bh data on component(s)";
            for (int i : rep.bh_unverified) out << ' ' << i;
            out << '\n';
        }
    }
    return 0;
}

// --- table1 ----------------------------------------------------------------

int cmd_table1(const Opts& o, std::ostream& out) {
    std::optional<RuleSet> rules;
    if (!o.ruleset.empty()) rules = RuleSet::load_file(o.ruleset);
    Table1Oracle oracle = o.oracle.empty() ? Table1Oracle::load(BundledData::table1_oracle_json())
                                           : Table1Oracle::load_file(o.oracle);
    WMemo memo;
    if (rules) {
        if (auto cache = resolve_cache_file(o.cache))
            load_cache_log(*cache, rules->hash(), memo);
    }

    const auto& columns = BundledData::table1();
    const auto& models = catalog();
    if (columns.size() != models.size()) throw Error("bundled data out of sync with catalog");

    bool all = true;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& col = columns[i];
        if (models[i].tag() != col.model_tag) throw Error("bundled data out of sync with catalog");
        PipelineResult pr = rules ? table1_pipeline(models[i], *rules, memo)
                                  : table1_pipeline(models[i], oracle);
        bool match = pr.value.value == col.w1;
        bool bound = gw_bound_check(pr.value, col.gw1);
        all = all && match && bound;
        if (o.format == "json") {
            nlohmann::ordered_json row;
            row["model"] = col.model_tag;
            row["W"] = to_decimal(pr.value.value);
            row["expected"] = to_decimal(col.w1);
            row["GW"] = to_decimal(col.gw1);
            row["provenance"] = provenance_name(pr.value.provenance);
            row["pass"] = match && bound;
            rows.push_back(std::move(row));
        } else if (o.format == "csv") {
            if (i == 0) out << "model,W,expected,GW,provenance,pass\n";
            out << col.model_tag << ',' << to_decimal(pr.value.value) << ','
                << to_decimal(col.w1) << ',' << to_decimal(col.gw1) << ','
                << provenance_name(pr.value.provenance) << ','
                << ((match && bound) ? "true" : "false") << '\n';
        } else {
            out << (match && bound ? "PASS " : "FAIL ") << col.model_tag << "  W = "
                << to_decimal(pr.value.value) << " (expected " << to_decimal(col.w1)
                << ", |W| <= GW = " << to_decimal(col.gw1) << ") ["
                << provenance_name(pr.value.provenance) << "]\n";
        }
    }
    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["rows"] = std::move(rows);
        j["ok"] = all;
        out << j.dump(2) << '\n';
    } else if (o.format == "text") {
        out << (all ? "table reproduced" : "table mismatch") << '\n';
    }
    return all ? 0 : 3;
}

// --- asymptotics -------------------------------------------------------------

int cmd_asymptotics(const Opts& o, std::ostream& out) {
    if (o.degree < 1 || o.degree > 9)
        throw ConfigurationError("--degree must be between 1 and 9");
    if (o.D_text.empty()) throw ConfigurationError("--D is required");
    SurfaceLattice lat(9 - o.degree);
    DivisorClass D = DivisorClass::parse(lat, o.D_text);

    std::function<Integer(int)> evaluator;
    std::optional<RuleSet> rules;
    WMemo memo;
    std::optional<RealSurfaceModel> model;
    if (o.synthetic == "factorial") {
        evaluator = [](int k) {
            Integer r = 1;
            for (int i = 2; i <= k; ++i) r *= i;
            return r;
        };
    } else if (!o.synthetic.empty()) {
        throw ConfigurationError("unknown synthetic series \"" + o.synthetic +
                                 "\"; supported: factorial");
    } else if (!o.ruleset.empty()) {
        rules = RuleSet::load_file(o.ruleset);
        if (auto cache = resolve_cache_file(o.cache))
            load_cache_log(*cache, rules->hash(), memo);
        model = resolve_model(o);
        evaluator = [&](int k) {
            InvariantDescriptor desc;
            desc.model = *model;
            desc.D = k * D;
            desc.g = 1;
            desc.selection = {0, 1};
            desc.eps = {1, 1};
            desc.phi = PhiClass::zero();
            return evaluate(transfer_to_pair(desc), *rules, memo);
        };
    } else {
        throw CapabilityError("asymptotics needs an evaluator: pass --ruleset FILE or "
                              "--synthetic factorial");
    }

    AsymptoticSeries series = asymptotic_probe(D, o.kmax, evaluator);

    auto rational_str = [](const Rational& r) {
        return to_decimal(boost::multiprecision::numerator(r)) + "/" +
               to_decimal(boost::multiprecision::denominator(r));
    };
    if (o.format == "json") {
        nlohmann::ordered_json j;
        j["D"] = series.D.str();
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (const auto& [k, w] : series.values)
            vals.push_back({{"k", k}, {"W", to_decimal(w)}});
        j["values"] = std::move(vals);
        nlohmann::ordered_json slopes = nlohmann::ordered_json::array();
        for (const auto& [k, s] : series.slopes)
            slopes.push_back({{"k", k}, {"slope", rational_str(s)}});
        j["slopes"] = std::move(slopes);
        j["slope_digits"] = series.slope_digits;
        nlohmann::ordered_json an = nlohmann::ordered_json::array();
        for (const auto& [k, a] : series.a_n)
            an.push_back({{"n", k}, {"a_n", rational_str(a)}});
        j["a_n"] = std::move(an);
        j["lambda"] = series.lambda_est ? rational_str(*series.lambda_est) : "";
        j["nonpositive_k"] = series.nonpositive_k;
        out << j.dump(2) << '\n';
    } else {
        out << "D = " << series.D.str() << '\n';
        for (const auto& [k, w] : series.values) out << "W(" << k << "D) = " << to_decimal(w) << '\n';
        for (const auto& [k, s] : series.slopes)
            out << "slope(" << k << ") = " << rational_str(s) << "  (" << series.slope_digits
                << " digits)\n";
        for (const auto& [k, a] : series.a_n) out << "a_" << k << " = " << rational_str(a) << '\n';
        if (series.lambda_est) out << "lambda >= " << rational_str(*series.lambda_est) << '\n';
        if (!series.nonpositive_k.empty()) {
            out << "defect: nonpositive W at k =";
            for (int k : series.nonpositive_k) out << ' ' << k;
            out << '\n';
        }
    }
    return series.nonpositive_k.empty() ? 0 : 3;
}

// --- cache -------------------------------------------------------------------

int cmd_cache(const Opts& o, std::ostream& out) {
    auto file = resolve_cache_file(o.cache);
    if (!file) {
        out << "no cache configured (pass --cache DIR or set WKIT_CACHE)\n";
        return 0;
    }
    if (o.clear) {
        std::ofstream trunc(*file, std::ios::trunc);
        out << "cache cleared: " << *file << '\n';
        return 0;
    }
    std::map<std::string, std::size_t> per_hash;
    std::size_t total = 0;
    std::ifstream in(*file);
    std::string line;
    while (in && std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string hash;
        ls >> hash;
        ++per_hash[hash];
        ++total;
    }
    out << "cache file: " << *file << '\n';
    out << "entries: " << total << '\n';
    for (const auto& [hash, n] : per_hash)
        out << "  ruleset " << hash << ": " << n << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Opts o;
    CLI::App app{"Exact curve-counting toolkit for real del Pezzo surfaces"};
    app.name("wkit");
    app.require_subcommand(0, 1);

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--degree", o.degree, "surface degree (K.K)");
        sub->add_option("--rx", o.rx, "real part, e.g. RP2+S2 (catalog lookup)");
        sub->add_option("--model", o.model_file, "model config JSON file");
        sub->add_option("--D", o.D_text, "divisor class \"d;m1,...,mk\"");
        sub->add_option("--format", o.format, "output format: text|json|csv");
    };

    CLI::App* sc_surface = app.add_subcommand("surface", "describe a lattice / catalog models");
    add_common(sc_surface);

    CLI::App* sc_check = app.add_subcommand("check", "validate a class or a full descriptor");
    add_common(sc_check);
    sc_check->add_option("--g", o.g, "genus (default 1)");
    sc_check->add_option("--F", o.F_text, "selected components, e.g. 0,1");
    sc_check->add_option("--r", o.r_text, "real points per component, e.g. 2,1");
    sc_check->add_option("--m", o.m, "conjugate point pairs");
    sc_check->add_option("--eps", o.eps_text, "signs, e.g. +1,-1");
    sc_check->add_option("--phi", o.phi_text, "phi class: zero|complement|custom:<id>");

    CLI::App* sc_eval = app.add_subcommand("eval", "evaluate an invariant");
    add_common(sc_eval);
    sc_eval->add_option("--g", o.g, "genus (default 1)");
    sc_eval->add_option("--F", o.F_text, "selected components");
    sc_eval->add_option("--r", o.r_text, "real points per component");
    sc_eval->add_option("--m", o.m, "conjugate point pairs");
    sc_eval->add_option("--eps", o.eps_text, "signs");
    sc_eval->add_option("--phi", o.phi_text, "phi class");
    sc_eval->add_option("--half-parity", o.half_parity, "parity of C_1/2 . phi (default 0)");
    sc_eval->add_option("--ruleset", o.ruleset, "recursion ruleset JSON");
    sc_eval->add_option("--oracle", o.oracle, "oracle table JSON");
    sc_eval->add_option("--cache", o.cache, "cache directory");

    CLI::App* sc_table1 = app.add_subcommand("table1", "reproduce the elliptic table");
    sc_table1->add_option("--ruleset", o.ruleset, "recursion ruleset JSON");
    sc_table1->add_option("--oracle", o.oracle, "oracle table JSON (default: bundled)");
    sc_table1->add_option("--cache", o.cache, "cache directory");
    sc_table1->add_option("--format", o.format, "output format: text|json|csv");

    CLI::App* sc_asym = app.add_subcommand("asymptotics", "slope / a_n diagnostics for W(kD)");
    add_common(sc_asym);
    sc_asym->add_option("--kmax", o.kmax, "largest multiple (default 6)");
    sc_asym->add_option("--ruleset", o.ruleset, "recursion ruleset JSON");
    sc_asym->add_option("--synthetic", o.synthetic, "synthetic series (factorial)");
    sc_asym->add_option("--cache", o.cache, "cache directory");

    CLI::App* sc_cache = app.add_subcommand("cache", "cache statistics / maintenance");
    sc_cache->add_option("--cache", o.cache, "cache directory");
    sc_cache->add_flag("--clear", o.clear, "truncate the cache log");

    std::vector<const char*> argv;
    argv.push_back("wkit");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (sc_surface->parsed()) return cmd_surface(o, out);
        if (sc_check->parsed()) return cmd_check(o, out);
        if (sc_eval->parsed()) return cmd_eval(o, out, err);
        if (sc_table1->parsed()) return cmd_table1(o, out);
        if (sc_asym->parsed()) return cmd_asymptotics(o, out);
        if (sc_cache->parsed()) return cmd_cache(o, out);
        out << app.help();
        return 0;
    } catch (const MismatchError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const IntegralityError& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const CapabilityError& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const IncompleteRulesetError& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const BackendError& e) {
        err << "error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace wkit
