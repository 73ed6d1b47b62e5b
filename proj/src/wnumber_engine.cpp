#include "wkit/wnumber_engine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <json.hpp>

namespace wkit {

// --- tangency vectors -------------------------------------------------------

TangencyVector TangencyVector::unit(int j) {
    TangencyVector v;
    v.add(j);
    return v;
}

TangencyVector TangencyVector::parse(const std::string& text) {
    TangencyVector v;
    if (text == "0" || text.empty()) return v;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto plus = text.find('+', pos);
        std::string tok = text.substr(pos, plus == std::string::npos ? plus : plus - pos);
        auto caret = tok.find('^');
        try {
            int j = std::stoi(tok.substr(0, caret));
            int c = caret == std::string::npos ? 1 : std::stoi(tok.substr(caret + 1));
            v.add(j, c);
        } catch (const std::exception&) {
            throw ConfigurationError("bad tangency vector \"" + text + "\"");
        }
        if (plus == std::string::npos) break;
        pos = plus + 1;
    }
    return v;
}

std::string TangencyVector::str() const {
    if (e_.empty()) return "0";
    std::string out;
    for (const auto& [j, c] : e_) {
        if (!out.empty()) out += '+';
        out += std::to_string(j) + '^' + std::to_string(c);
    }
    return out;
}

long long TangencyVector::norm() const {
    long long n = 0;
    for (const auto& [j, c] : e_) n += c;
    return n;
}

long long TangencyVector::iweight() const {
    long long n = 0;
    for (const auto& [j, c] : e_) n += static_cast<long long>(j) * c;
    return n;
}

bool TangencyVector::odd_support() const {
    for (const auto& [j, c] : e_)
        if (j % 2 == 0) return false;
    return true;
}

int TangencyVector::at(int j) const {
    auto it = e_.find(j);
    return it == e_.end() ? 0 : it->second;
}

TangencyVector& TangencyVector::add(int j, int count) {
    if (j < 1) throw ConfigurationError("tangency index must be >= 1, got " + std::to_string(j));
    if (count < 0) throw ConfigurationError("cannot add a negative tangency count");
    if (count == 0) return *this;
    e_[j] += count;
    return *this;
}

TangencyVector& TangencyVector::remove(int j, int count) {
    if (count < 0) throw ConfigurationError("cannot remove a negative tangency count");
    if (count == 0) return *this;
    auto it = e_.find(j);
    if (it == e_.end() || it->second < count)
        throw ConfigurationError("tangency underflow at index " + std::to_string(j));
    it->second -= count;
    if (it->second == 0) e_.erase(it);
    return *this;
}

TangencyVector operator+(TangencyVector a, const TangencyVector& b) {
    for (const auto& [j, c] : b.e_) a.add(j, c);
    return a;
}

std::vector<TangencyVector> submultisets(const TangencyVector& v) {
    long long combos = 1;
    for (const auto& [j, c] : v.entries()) {
        combos *= (c + 1);
        if (combos > 4096)
            throw RulesetError("tangency split of " + v.str() + " has too many parts");
    }
    std::vector<TangencyVector> out{TangencyVector{}};
    for (const auto& [j, c] : v.entries()) {
        std::vector<TangencyVector> next;
        next.reserve(out.size() * static_cast<std::size_t>(c + 1));
        for (const auto& base : out)
            for (int take = 0; take <= c; ++take) {
                TangencyVector t = base;
                t.add(j, take);
                next.push_back(std::move(t));
            }
        out = std::move(next);
    }
    return out;
}

namespace {

Integer binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    Integer r = 1;
    for (int i = 1; i <= k; ++i) {
        r *= (n - k + i);
        r /= i;
    }
    return r;
}

} // namespace

Integer split_multiplicity(const TangencyVector& v, const TangencyVector& part) {
    Integer r = 1;
    for (const auto& [j, c] : part.entries()) {
        r *= binomial(v.at(j), c);
        if (r == 0) return 0;
    }
    return r;
}

// --- states ------------------------------------------------------------------

WState::WState(NodalPairLattice pair_, DivisorClass D_, TangencyVector alpha_,
               TangencyVector beta_, PhiTag phi_)
    : pair(std::move(pair_)), D(std::move(D_)), alpha(std::move(alpha_)),
      beta(std::move(beta_)), phi(phi_) {
    if (D.k() != pair.surface.k)
        throw LatticeMismatchError("state divisor lives in a different lattice than the pair");
    if (phi != PhiTag::Zero && phi != PhiTag::ComplementClass)
        throw ConfigurationError("w-number states carry phi = zero or complement only");
    long long de = intersect(D, pair.e);
    long long iw = alpha.iweight() + beta.iweight();
    if (de != iw)
        throw ConfigurationError("conservation violated: I(alpha+beta) = " + std::to_string(iw) +
                                 " but D.E = " + std::to_string(de));
}

std::string WState::key() const {
    return "k=" + std::to_string(pair.surface.k) + "|E=" + pair.e.str() + "|D=" + D.str() +
           "|a=" + alpha.str() + "|b=" + beta.str() +
           "|phi=" + (phi == PhiTag::Zero ? "zero" : "complement");
}

long long induction_measure(const WState& s) {
    DivisorClass kpe = s.pair.surface.canonical() + s.pair.e;
    return -intersect(kpe, s.D) + s.beta.norm() - 1;
}

std::vector<WState> first_sum_expand(const WState& s) {
    std::vector<WState> out;
    for (const auto& [j, c] : s.beta.entries()) {
        TangencyVector a = s.alpha;
        TangencyVector b = s.beta;
        a.add(j);
        b.remove(j);
        out.emplace_back(s.pair, s.D, std::move(a), std::move(b), s.phi);
    }
    return out;
}

// --- expression language ------------------------------------------------------

namespace {

struct ExprCtx {
    const std::map<std::string, long long>* vars = nullptr;
    const std::map<std::string, std::vector<long long>>* tables = nullptr;
};

struct Expr {
    virtual ~Expr() = default;
    virtual long long eval(const ExprCtx&) const = 0;
};
using ExprPtr = std::shared_ptr<const Expr>;

struct ConstExpr : Expr {
    long long v;
    explicit ConstExpr(long long v_) : v(v_) {}
    long long eval(const ExprCtx&) const override { return v; }
};

struct VarExpr : Expr {
    std::string name;
    explicit VarExpr(std::string n) : name(std::move(n)) {}
    long long eval(const ExprCtx& c) const override {
        auto it = c.vars->find(name);
        if (it == c.vars->end())
            throw RulesetError("variable " + name + " not bound in this rule");
        return it->second;
    }
};

struct TableExpr : Expr {
    std::string name;
    ExprPtr idx;
    long long eval(const ExprCtx& c) const override {
        const auto& tab = c.tables->at(name);
        long long i = idx->eval(c);
        if (i < 0 || i >= static_cast<long long>(tab.size())) return 0;
        return tab[static_cast<std::size_t>(i)];
    }
};

struct NegExpr : Expr {
    ExprPtr inner;
    long long eval(const ExprCtx& c) const override { return -inner->eval(c); }
};

struct BinExpr : Expr {
    char op; // 'L' is <=, 'G' is >=, '!' is !=
    ExprPtr lhs, rhs;
    long long eval(const ExprCtx& c) const override {
        long long a = lhs->eval(c), b = rhs->eval(c);
        switch (op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '<': return a < b;
        case '>': return a > b;
        case 'L': return a <= b;
        case 'G': return a >= b;
        case '=': return a == b;
        case '!': return a != b;
        }
        throw Error("corrupt expression");
    }
};

class ExprParser {
public:
    ExprParser(std::string_view text, const std::vector<std::string>& vars,
               const std::vector<std::string>& tables)
        : s_(text), vars_(vars), tables_(tables) {}

    ExprPtr parse() {
        ExprPtr e = compare();
        skip_ws();
        if (pos_ != s_.size())
            throw RulesetError("trailing characters in expression \"" + std::string(s_) + "\"");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    const std::vector<std::string>& vars_;
    const std::vector<std::string>& tables_;

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    ExprPtr compare() {
        ExprPtr e = sum();
        skip_ws();
        char op = 0;
        if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '=' &&
            (s_[pos_] == '<' || s_[pos_] == '>' || s_[pos_] == '=' || s_[pos_] == '!')) {
            op = s_[pos_] == '<' ? 'L' : s_[pos_] == '>' ? 'G' : s_[pos_] == '=' ? '=' : '!';
            pos_ += 2;
        } else if (pos_ < s_.size() && (s_[pos_] == '<' || s_[pos_] == '>')) {
            op = s_[pos_++];
        }
        if (op == 0) return e;
        auto b = std::make_shared<BinExpr>(); b->op = op; b->lhs = e; b->rhs = sum();
        return b;
    }

    ExprPtr sum() {
        ExprPtr e = product();
        while (true) {
            if (eat('+')) {
                auto b = std::make_shared<BinExpr>(); b->op = '+'; b->lhs = e; b->rhs = product(); e = b;
            } else if (eat('-')) {
                auto b = std::make_shared<BinExpr>(); b->op = '-'; b->lhs = e; b->rhs = product(); e = b;
            } else return e;
        }
    }

    ExprPtr product() {
        ExprPtr e = unary();
        while (eat('*')) {
            auto b = std::make_shared<BinExpr>(); b->op = '*'; b->lhs = e; b->rhs = unary(); e = b;
        }
        return e;
    }

    ExprPtr unary() {
        if (eat('-')) {
            auto n = std::make_shared<NegExpr>(); n->inner = unary(); return n;
        }
        return atom();
    }

    ExprPtr atom() {
        skip_ws();
        if (pos_ >= s_.size())
            throw RulesetError("unexpected end of expression \"" + std::string(s_) + "\"");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            ExprPtr e = compare();
            if (!eat(')')) throw RulesetError("missing ')' in expression \"" + std::string(s_) + "\"");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            long long v = 0;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                v = v * 10 + (s_[pos_++] - '0');
            return std::make_shared<ConstExpr>(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string name;
            while (pos_ < s_.size() &&
                   (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
                name += s_[pos_++];
            if (eat('[')) {
                if (std::find(tables_.begin(), tables_.end(), name) == tables_.end())
                    throw RulesetError("unknown table \"" + name + "\" in expression");
                auto t = std::make_shared<TableExpr>();
                t->name = name;
                t->idx = sum();
                if (!eat(']'))
                    throw RulesetError("missing ']' in expression \"" + std::string(s_) + "\"");
                return t;
            }
            if (std::find(vars_.begin(), vars_.end(), name) == vars_.end())
                throw RulesetError("unknown identifier \"" + name + "\" in expression");
            return std::make_shared<VarExpr>(name);
        }
        throw RulesetError("bad character '" + std::string(1, c) + "' in expression \"" +
                           std::string(s_) + "\"");
    }
};

ExprPtr parse_expr_json(const nlohmann::json& j, const std::vector<std::string>& vars,
                        const std::vector<std::string>& tables) {
    if (j.is_number_integer()) return std::make_shared<ConstExpr>(j.get<long long>());
    if (j.is_string()) return ExprParser(j.get<std::string>(), vars, tables).parse();
    throw RulesetError("expression must be an integer or a string");
}

// --- ruleset internals ---------------------------------------------------------

struct VecMod {
    int index = 1;
    ExprPtr count;
};

struct VecTemplate {
    std::string base = "zero"; // alpha|beta|alpha0|alpha1|beta0|beta1|zero
    std::vector<VecMod> add, remove;
};

struct FactorTemplate {
    std::map<std::string, ExprPtr> divisor; // over D, E, K, K+E
    VecTemplate alpha, beta;
    int phi_mode = 0; // 0 same, 1 zero, 2 complement
};

struct SplitRuleSpec {
    std::string name;
    bool has_l = false, has_m = false;
    long long l_max = 0, m_max = 0;
    bool alpha_split = false, beta_split = false;
    ExprPtr guard;       // may be null
    ExprPtr coefficient; // required
    std::vector<FactorTemplate> factors;
};

struct BasePattern {
    std::optional<std::map<std::string, long long>> divisor; // over E, K, L
    std::optional<std::string> class_text;
    std::optional<TangencyVector> alpha, beta;
    std::optional<long long> beta_norm;
    std::optional<PhiTag> phi;
    Integer value;
};

} // namespace

struct RuleSet::Impl {
    std::map<std::string, std::vector<long long>> tables;
    std::vector<BasePattern> base_cases;
    std::vector<SplitRuleSpec> splitting;
};

std::size_t RuleSet::splitting_rule_count() const { return impl->splitting.size(); }
std::size_t RuleSet::base_case_count() const { return impl->base_cases.size(); }

namespace {

void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                  const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed)
            if (it.key() == a) ok = true;
        if (!ok)
            throw RulesetError("unknown key \"" + it.key() + "\" in " + where);
    }
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

VecTemplate parse_vec_template(const nlohmann::json& j, const std::vector<std::string>& vars,
                               const std::vector<std::string>& tables, bool odd_only,
                               const std::string& where) {
    VecTemplate t;
    if (j.is_string()) {
        t.base = j.get<std::string>();
    } else if (j.is_object()) {
        require_keys(j, {"base", "add", "remove"}, where);
        t.base = j.value("base", "zero");
        auto parse_mods = [&](const char* key, std::vector<VecMod>& out) {
            if (!j.contains(key)) return;
            for (const auto& mod : j.at(key)) {
                require_keys(mod, {"index", "count"}, where);
                VecMod vm;
                vm.index = mod.at("index").get<int>();
                if (vm.index < 1)
                    throw RulesetError(where + ": tangency index must be >= 1");
                if (odd_only && vm.index % 2 == 0)
                    throw RulesetError(where + ": even tangency index " +
                                       std::to_string(vm.index) +
                                       " conflicts with odd_support_preserving");
                vm.count = mod.contains("count") ? parse_expr_json(mod.at("count"), vars, tables)
                                                 : std::make_shared<ConstExpr>(1);
                out.push_back(std::move(vm));
            }
        };
        parse_mods("add", t.add);
        parse_mods("remove", t.remove);
    } else {
        throw RulesetError(where + ": vector template must be a string or object");
    }
    static const char* bases[] = {"alpha", "beta", "alpha0", "alpha1", "beta0", "beta1", "zero"};
    if (std::find_if(std::begin(bases), std::end(bases),
                     [&](const char* b) { return t.base == b; }) == std::end(bases))
        throw RulesetError(where + ": unknown vector base \"" + t.base + "\"");
    return t;
}

DivisorClass base_divisor_target(const std::map<std::string, long long>& combo,
                                 const NodalPairLattice& pair) {
    DivisorClass out = pair.surface.zero();
    for (const auto& [gen, c] : combo) {
        int ci = static_cast<int>(c);
        if (gen == "K") out += ci * pair.surface.canonical();
        else if (gen == "E") out += ci * pair.e;
        else if (gen == "L") out += ci * pair.surface.line();
        else throw RulesetError("base case divisor generator \"" + gen + "\" unknown");
    }
    return out;
}

} // namespace

RuleSet RuleSet::load(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw RulesetError(std::string("ruleset is not valid JSON: ") + e.what());
    }

    try {
        require_keys(j, {"ruleset_version", "name", "odd_support_preserving", "first_sum",
                         "tables", "base_cases", "splitting"}, "ruleset");
        if (!j.contains("ruleset_version") || j.at("ruleset_version").get<int>() != 1)
            throw RulesetError("ruleset_version must be present and equal to 1");

        RuleSet rs;
        auto impl = std::make_shared<Impl>();
        rs.name_ = j.value("name", "");
        rs.odd_support_ = j.value("odd_support_preserving", false);
        if (j.contains("first_sum")) {
            require_keys(j.at("first_sum"), {"enabled"}, "first_sum");
            rs.first_sum_ = j.at("first_sum").value("enabled", false);
        }

        std::vector<std::string> table_names;
        if (j.contains("tables")) {
            for (auto it = j.at("tables").begin(); it != j.at("tables").end(); ++it) {
                std::vector<long long> vals;
                for (const auto& v : it.value()) vals.push_back(v.get<long long>());
                impl->tables[it.key()] = std::move(vals);
                table_names.push_back(it.key());
            }
        }

        if (j.contains("base_cases")) {
            for (const auto& b : j.at("base_cases")) {
                require_keys(b, {"divisor", "class", "alpha", "beta", "beta_norm", "phi", "value"},
                             "base case");
                BasePattern p;
                if (!b.contains("value")) throw RulesetError("base case without value");
                p.value = parse_decimal(b.at("value").is_string()
                                            ? b.at("value").get<std::string>()
                                            : std::to_string(b.at("value").get<long long>()));
                if (b.contains("divisor")) {
                    std::map<std::string, long long> combo;
                    for (auto it = b.at("divisor").begin(); it != b.at("divisor").end(); ++it)
                        combo[it.key()] = it.value().get<long long>();
                    p.divisor = std::move(combo);
                }
                if (b.contains("class")) p.class_text = b.at("class").get<std::string>();
                if (b.contains("alpha") && b.at("alpha").get<std::string>() != "any")
                    p.alpha = TangencyVector::parse(b.at("alpha").get<std::string>());
                if (b.contains("beta") && b.at("beta").get<std::string>() != "any")
                    p.beta = TangencyVector::parse(b.at("beta").get<std::string>());
                if (b.contains("beta_norm")) p.beta_norm = b.at("beta_norm").get<long long>();
                if (b.contains("phi")) {
                    std::string ph = b.at("phi").get<std::string>();
                    if (ph != "any") p.phi = PhiClass::parse(ph).tag;
                }
                impl->base_cases.push_back(std::move(p));
            }
        }

        if (j.contains("splitting")) {
            for (const auto& r : j.at("splitting")) {
                require_keys(r, {"name", "params", "guard", "coefficient", "factors",
                                 "alpha_split", "beta_split"}, "splitting rule");
                SplitRuleSpec spec;
                spec.name = r.value("name", "unnamed");
                spec.alpha_split = r.value("alpha_split", false);
                spec.beta_split = r.value("beta_split", false);

                std::vector<std::string> vars;
                if (r.contains("params")) {
                    require_keys(r.at("params"), {"l", "m"}, "params of rule " + spec.name);
                    if (r.at("params").contains("l")) {
                        spec.has_l = true;
                        spec.l_max = r.at("params").at("l").get<long long>();
                        if (spec.l_max < 0) throw RulesetError("negative l bound");
                        vars.push_back("l");
                    }
                    if (r.at("params").contains("m")) {
                        spec.has_m = true;
                        spec.m_max = r.at("params").at("m").get<long long>();
                        if (spec.m_max < 0) throw RulesetError("negative m bound");
                        vars.push_back("m");
                    }
                }
                if (spec.alpha_split) vars.push_back("c_alpha");
                if (spec.beta_split) vars.push_back("c_beta");

                if (!r.contains("coefficient"))
                    throw RulesetError("rule " + spec.name + " lacks a coefficient");
                spec.coefficient = parse_expr_json(r.at("coefficient"), vars, table_names);
                if (r.contains("guard"))
                    spec.guard = parse_expr_json(r.at("guard"), vars, table_names);

                if (!r.contains("factors") || r.at("factors").empty())
                    throw RulesetError("rule " + spec.name + " lacks factors");
                for (const auto& f : r.at("factors")) {
                    require_keys(f, {"divisor", "alpha", "beta", "phi"},
                                 "factor of rule " + spec.name);
                    FactorTemplate ft;
                    if (!f.contains("divisor"))
                        throw RulesetError("factor of rule " + spec.name + " lacks a divisor");
                    for (auto it = f.at("divisor").begin(); it != f.at("divisor").end(); ++it) {
                        std::string gen = it.key();
                        if (gen != "D" && gen != "E" && gen != "K" && gen != "K+E")
                            throw RulesetError("unknown divisor generator \"" + gen + "\" in rule " +
                                               spec.name);
                        ft.divisor[gen] = parse_expr_json(it.value(), vars, table_names);
                    }
                    ft.alpha = f.contains("alpha")
                                   ? parse_vec_template(f.at("alpha"), vars, table_names,
                                                        rs.odd_support_, "rule " + spec.name)
                                   : VecTemplate{};
                    ft.beta = f.contains("beta")
                                  ? parse_vec_template(f.at("beta"), vars, table_names,
                                                       rs.odd_support_, "rule " + spec.name)
                                  : VecTemplate{};
                    if (f.contains("phi")) {
                        std::string ph = f.at("phi").get<std::string>();
                        if (ph == "same") ft.phi_mode = 0;
                        else if (ph == "zero") ft.phi_mode = 1;
                        else if (ph == "complement") ft.phi_mode = 2;
                        else throw RulesetError("factor phi must be same/zero/complement");
                    }
                    spec.factors.push_back(std::move(ft));
                }
                impl->splitting.push_back(std::move(spec));
            }
        }

        rs.impl = impl;
        rs.hash_ = hex64(fnv1a(j.dump()));

        // Probe battery: reject rules that break the measure or conservation
        // guards before anyone evaluates with them.
        NodalPairLattice pair = NodalPairLattice::canonical_degree2();
        const DivisorClass K = pair.surface.canonical();
        const DivisorClass E7 = pair.surface.exceptional(7);
        std::vector<std::pair<TangencyVector, TangencyVector>> tv_batch = {
            {{}, {}},
            {{}, TangencyVector::unit(1)},
            {{}, TangencyVector::parse("1^2")},
            {TangencyVector::unit(1), TangencyVector::unit(1)},
            {{}, TangencyVector::parse("1^1+3^1")},
            {TangencyVector::parse("1^2"), {}},
            {{}, TangencyVector::parse("1^3")},
            {TangencyVector::unit(3), TangencyVector::unit(1)},
        };
        for (int kmult : {-2, -3}) {
            for (const auto& [a, b] : tv_batch) {
                long long t = a.iweight() + b.iweight();
                DivisorClass D = kmult * K + static_cast<int>(t) * E7;
                for (PhiTag phi : {PhiTag::Zero, PhiTag::ComplementClass}) {
                    WState probe(pair, D, a, b, phi);
                    (void)expand_once(probe, rs); // throws RulesetError on defects
                }
            }
        }
        return rs;
    } catch (const nlohmann::json::exception& e) {
        throw RulesetError(std::string("ruleset document malformed: ") + e.what());
    }
}

RuleSet RuleSet::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open ruleset file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return load(ss.str());
}

namespace {

TangencyVector build_vector(const VecTemplate& t, const TangencyVector& alpha,
                            const TangencyVector& beta, const TangencyVector& a0,
                            const TangencyVector& a1, const TangencyVector& b0,
                            const TangencyVector& b1, const ExprCtx& ctx, bool& ok) {
    TangencyVector v;
    if (t.base == "alpha") v = alpha;
    else if (t.base == "beta") v = beta;
    else if (t.base == "alpha0") v = a0;
    else if (t.base == "alpha1") v = a1;
    else if (t.base == "beta0") v = b0;
    else if (t.base == "beta1") v = b1;
    for (const auto& mod : t.add) {
        long long c = mod.count->eval(ctx);
        if (c < 0) throw RulesetError("vector add with negative count");
        v.add(mod.index, static_cast<int>(c));
    }
    for (const auto& mod : t.remove) {
        long long c = mod.count->eval(ctx);
        if (c < 0) throw RulesetError("vector remove with negative count");
        if (v.at(mod.index) < c) { ok = false; return v; } // inapplicable instance
        v.remove(mod.index, static_cast<int>(c));
    }
    return v;
}

} // namespace

Expansion expand_once(const WState& s, const RuleSet& rules) {
    Expansion out;
    const long long parent_measure = induction_measure(s);

    if (rules.first_sum_enabled() && s.beta.norm() >= 1) {
        for (auto& succ : first_sum_expand(s))
            out.terms.push_back(ExpansionTerm{Integer(1), {std::move(succ)}, "first_sum"});
        out.reducible = true;
    }

    const auto& impl = *rules.impl;
    for (const auto& rule : impl.splitting) {
        auto alpha_parts = rule.alpha_split ? submultisets(s.alpha)
                                            : std::vector<TangencyVector>{TangencyVector{}};
        auto beta_parts = rule.beta_split ? submultisets(s.beta)
                                          : std::vector<TangencyVector>{TangencyVector{}};
        for (long long l = 0; l <= (rule.has_l ? rule.l_max : 0); ++l)
        for (long long m = 0; m <= (rule.has_m ? rule.m_max : 0); ++m)
        for (const auto& a0 : alpha_parts)
        for (const auto& b0 : beta_parts) {
            TangencyVector a1 = s.alpha, b1 = s.beta;
            Integer c_alpha = 1, c_beta = 1;
            if (rule.alpha_split) {
                for (const auto& [j, c] : a0.entries()) a1.remove(j, c);
                c_alpha = split_multiplicity(s.alpha, a0);
            }
            if (rule.beta_split) {
                for (const auto& [j, c] : b0.entries()) b1.remove(j, c);
                c_beta = split_multiplicity(s.beta, b0);
            }

            std::map<std::string, long long> vars;
            if (rule.has_l) vars["l"] = l;
            if (rule.has_m) vars["m"] = m;
            // split multiplicities can exceed long long only for absurd
            // vectors; expressions see them saturated through Integer below.
            if (rule.alpha_split) vars["c_alpha"] = static_cast<long long>(c_alpha);
            if (rule.beta_split) vars["c_beta"] = static_cast<long long>(c_beta);
            ExprCtx ctx{&vars, &impl.tables};

            if (rule.guard && rule.guard->eval(ctx) == 0) continue;
            long long coeff = rule.coefficient->eval(ctx);

            bool applicable = true;
            std::vector<WState> factors;
            for (const auto& ft : rule.factors) {
                DivisorClass D = s.pair.surface.zero();
                for (const auto& [gen, expr] : ft.divisor) {
                    int c = static_cast<int>(expr->eval(ctx));
                    if (gen == "D") D += c * s.D;
                    else if (gen == "E") D += c * s.pair.e;
                    else if (gen == "K") D += c * s.pair.surface.canonical();
                    else D += c * (s.pair.surface.canonical() + s.pair.e);
                }
                TangencyVector fa = build_vector(ft.alpha, s.alpha, s.beta, a0, a1, b0, b1,
                                                 ctx, applicable);
                if (!applicable) break;
                TangencyVector fb = build_vector(ft.beta, s.alpha, s.beta, a0, a1, b0, b1,
                                                 ctx, applicable);
                if (!applicable) break;
                PhiTag phi = s.phi;
                if (ft.phi_mode == 1) phi = PhiTag::Zero;
                if (ft.phi_mode == 2) phi = PhiTag::ComplementClass;
                try {
                    factors.emplace_back(s.pair, std::move(D), std::move(fa), std::move(fb), phi);
                } catch (const ConfigurationError& e) {
                    throw RulesetError("rule \"" + rule.name + "\" (l=" + std::to_string(l) +
                                       ", m=" + std::to_string(m) + ") breaks conservation from state " +
                                       s.key() + ": " + e.what());
                }
            }
            if (!applicable) continue;
            out.reducible = true;
            if (coeff == 0) continue;

            bool effective = true;
            for (const auto& f : factors)
                if (!is_effective(f.D, f.pair)) { effective = false; break; }
            if (!effective) continue; // W vanishes on non-effective classes

            for (const auto& f : factors) {
                if (induction_measure(f) >= parent_measure)
                    throw RulesetError("rule \"" + rule.name + "\" does not decrease the "
                                       "induction measure: state " + s.key() + " (measure " +
                                       std::to_string(parent_measure) + ") -> " + f.key() +
                                       " (measure " + std::to_string(induction_measure(f)) + ")");
                if (rules.odd_support_preserving() && s.alpha.odd_support() &&
                    s.beta.odd_support() && !(f.alpha.odd_support() && f.beta.odd_support()))
                    throw RulesetError("rule \"" + rule.name + "\" leaves the odd-support class "
                                       "at state " + s.key());
            }

            out.terms.push_back(ExpansionTerm{Integer(coeff) * c_alpha * c_beta,
                                              std::move(factors), rule.name});
        }
    }
    return out;
}

std::optional<Integer> match_base_case(const WState& s, const RuleSet& rules) {
    for (const auto& p : rules.impl->base_cases) {
        if (p.divisor) {
            if (s.D != base_divisor_target(*p.divisor, s.pair)) continue;
        }
        if (p.class_text) {
            try {
                if (s.D != DivisorClass::parse(s.pair.surface, *p.class_text)) continue;
            } catch (const Error&) {
                continue; // pattern for a different lattice
            }
        }
        if (p.alpha && !(s.alpha == *p.alpha)) continue;
        if (p.beta && !(s.beta == *p.beta)) continue;
        if (p.beta_norm && s.beta.norm() != *p.beta_norm) continue;
        if (p.phi && s.phi != *p.phi) continue;
        return p.value;
    }
    return std::nullopt;
}

// --- memo ---------------------------------------------------------------------

std::optional<Integer> WMemo::get(const std::string& key) const {
    std::shared_lock lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        misses_.fetch_add(1, std::memory_order_relaxed);
        return std::nullopt;
    }
    hits_.fetch_add(1, std::memory_order_relaxed);
    return it->second;
}

void WMemo::put(const std::string& key, const Integer& value) {
    std::unique_lock lock(mu_);
    auto [it, inserted] = map_.emplace(key, value);
    if (!inserted && it->second != value)
        throw MismatchError("memo conflict for " + key + ": " + to_decimal(it->second) +
                            " vs " + to_decimal(value));
}

std::size_t WMemo::size() const {
    std::shared_lock lock(mu_);
    return map_.size();
}

void WMemo::clear() {
    std::unique_lock lock(mu_);
    map_.clear();
}

std::vector<std::pair<std::string, Integer>> WMemo::snapshot() const {
    std::shared_lock lock(mu_);
    std::vector<std::pair<std::string, Integer>> out(map_.begin(), map_.end());
    lock.unlock();
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

// --- evaluation -----------------------------------------------------------------

namespace {

Integer evaluate_impl(const WState& s, const RuleSet& rules, WMemo& memo, int depth) {
    if (depth > 100000)
        throw RulesetError("evaluation depth exceeded; the ruleset presumably fails to terminate");
    const std::string key = s.key();
    if (auto v = memo.get(key)) return *v;
    if (auto b = match_base_case(s, rules)) {
        memo.put(key, *b);
        return *b;
    }
    Expansion e = expand_once(s, rules);
    if (!e.reducible)
        throw IncompleteRulesetError("incomplete ruleset: state " + key +
                                     " matches no base case and no rule reduces it");
    Integer total = 0;
    for (const auto& term : e.terms) {
        Integer prod = term.coefficient;
        for (const auto& f : term.factors) {
            if (prod == 0) break;
            prod *= evaluate_impl(f, rules, memo, depth + 1);
        }
        total += prod;
    }
    memo.put(key, total);
    return total;
}

} // namespace

Integer evaluate(const WState& s, const RuleSet& rules, WMemo& memo) {
    return evaluate_impl(s, rules, memo, 0);
}

ProbeReport positivity_probe(const NodalPairLattice& pair, const DivisorClass& Dprime,
                             const RuleSet& rules, WMemo& memo, PhiTag phi) {
    if (!is_nef(Dprime, pair))
        throw ConfigurationError("positivity probe needs a nef class on the pair");
    if (intersect(Dprime, pair.e) != 2)
        throw ConfigurationError("positivity probe needs D'.E = 2, got " +
                                 std::to_string(intersect(Dprime, pair.e)));
    WState s(pair, Dprime, {}, TangencyVector::parse("1^2"), phi);
    ProbeReport rep;
    rep.state_key = s.key();
    rep.value = evaluate(s, rules, memo);
    rep.ok = rep.value >= 1;
    rep.message = rep.ok ? "" : "positivity violated: expected W >= 1; the ruleset "
                                "transcription is defective";
    return rep;
}

ProbeReport nonneg_probe(const WState& s, const RuleSet& rules, WMemo& memo) {
    if (!s.alpha.odd_support() || !s.beta.odd_support())
        throw ConfigurationError("nonnegativity probe needs odd-supported tangency vectors");
    ProbeReport rep;
    rep.state_key = s.key();
    rep.value = evaluate(s, rules, memo);
    rep.ok = rep.value >= 0;
    rep.message = rep.ok ? "" : "nonnegativity violated; the ruleset transcription is defective";
    return rep;
}

// --- cache log -------------------------------------------------------------------

std::size_t load_cache_log(const std::string& path, const std::string& ruleset_hash,
                           WMemo& memo, std::vector<std::string>* loaded_keys) {
    std::ifstream in(path);
    if (!in) return 0;
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string hash, key, value;
        if (!(ls >> hash >> key >> value))
            throw ConfigurationError("corrupt cache line: \"" + line + "\"");
        if (hash != ruleset_hash) continue;
        memo.put(key, parse_decimal(value));
        if (loaded_keys) loaded_keys->push_back(key);
        ++n;
    }
    return n;
}

void append_cache_log(const std::string& path, const std::string& ruleset_hash,
                      const std::vector<std::pair<std::string, Integer>>& entries) {
    if (entries.empty()) return;
    std::string buf;
    for (const auto& [k, v] : entries)
        buf += ruleset_hash + ' ' + k + ' ' + to_decimal(v) + '\n';
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw ConfigurationError("cannot open cache file " + path);
    ::flock(fd, LOCK_EX);
    ssize_t rc = ::write(fd, buf.data(), buf.size());
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (rc != static_cast<ssize_t>(buf.size()))
        throw ConfigurationError("short write to cache file " + path);
}

} // namespace wkit
