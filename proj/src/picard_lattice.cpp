#include "wkit/picard_lattice.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <mutex>

namespace wkit {

SurfaceLattice::SurfaceLattice(int k_) : k(k_) {
    if (k < 0 || k > 8)
        throw CapabilityError("surface lattice supports 0 <= k <= 8, got k=" + std::to_string(k_));
}

DivisorClass SurfaceLattice::zero() const {
    return DivisorClass(*this, std::vector<int>(static_cast<std::size_t>(rank()), 0));
}

DivisorClass SurfaceLattice::line() const {
    std::vector<int> c(static_cast<std::size_t>(rank()), 0);
    c[0] = 1;
    return DivisorClass(*this, std::move(c));
}

DivisorClass SurfaceLattice::exceptional(int i) const {
    if (i < 1 || i > k)
        throw LatticeMismatchError("exceptional index " + std::to_string(i) +
                                   " out of range for k=" + std::to_string(k));
    std::vector<int> c(static_cast<std::size_t>(rank()), 0);
    c[static_cast<std::size_t>(i)] = 1;
    return DivisorClass(*this, std::move(c));
}

DivisorClass SurfaceLattice::canonical() const {
    std::vector<int> c(static_cast<std::size_t>(rank()), 1);
    c[0] = -3;
    return DivisorClass(*this, std::move(c));
}

DivisorClass SurfaceLattice::anticanonical() const { return -canonical(); }

DivisorClass::DivisorClass(const SurfaceLattice& lattice, std::vector<int> coeffs)
    : c_(std::move(coeffs)) {
    if (static_cast<int>(c_.size()) != lattice.rank())
        throw LatticeMismatchError("coefficient vector has length " +
                                   std::to_string(c_.size()) + ", lattice rank is " +
                                   std::to_string(lattice.rank()));
}

namespace {

int parse_int_token(std::string_view tok, const std::string& whole) {
    int value = 0;
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(b, e, value);
    if (ec != std::errc{} || p != e)
        throw ConfigurationError("bad class string: \"" + whole + "\"");
    return value;
}

} // namespace

DivisorClass DivisorClass::parse(const SurfaceLattice& lattice, const std::string& text) {
    std::vector<int> c;
    c.reserve(static_cast<std::size_t>(lattice.rank()));
    std::string_view rest = text;
    auto semi = rest.find(';');
    c.push_back(parse_int_token(rest.substr(0, semi), text));
    if (semi != std::string_view::npos) {
        rest.remove_prefix(semi + 1);
        if (!rest.empty()) {
            while (true) {
                auto comma = rest.find(',');
                c.push_back(parse_int_token(rest.substr(0, comma), text));
                if (comma == std::string_view::npos) break;
                rest.remove_prefix(comma + 1);
            }
        }
    }
    if (static_cast<int>(c.size()) != lattice.rank())
        throw LatticeMismatchError("class string \"" + text + "\" has " +
                                   std::to_string(c.size() - 1) + " exceptional entries, lattice has k=" +
                                   std::to_string(lattice.k));
    return DivisorClass(lattice, std::move(c));
}

std::string DivisorClass::str() const {
    std::string out = std::to_string(c_[0]);
    for (std::size_t i = 1; i < c_.size(); ++i) {
        out += (i == 1) ? ';' : ',';
        out += std::to_string(c_[i]);
    }
    return out;
}

DivisorClass& DivisorClass::operator+=(const DivisorClass& o) {
    if (c_.size() != o.c_.size())
        throw LatticeMismatchError("divisor class rank mismatch in +");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

DivisorClass& DivisorClass::operator-=(const DivisorClass& o) {
    if (c_.size() != o.c_.size())
        throw LatticeMismatchError("divisor class rank mismatch in -");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

DivisorClass operator*(int n, DivisorClass a) {
    for (auto& x : a.c_) x *= n;
    return a;
}

DivisorClass DivisorClass::operator-() const { return -1 * *this; }

std::strong_ordering operator<=>(const DivisorClass& a, const DivisorClass& b) {
    return a.c_ <=> b.c_;
}

long long intersect(const DivisorClass& a, const DivisorClass& b) {
    if (a.c_.size() != b.c_.size())
        throw LatticeMismatchError("intersection of classes from different lattices");
    long long acc = static_cast<long long>(a.c_[0]) * b.c_[0];
    for (std::size_t i = 1; i < a.c_.size(); ++i)
        acc -= static_cast<long long>(a.c_[i]) * b.c_[i];
    return acc;
}

long long self_intersection(const DivisorClass& a) { return intersect(a, a); }

long long arithmetic_genus(const DivisorClass& D) {
    SurfaceLattice S(D.k());
    long long n = self_intersection(D) + intersect(D, S.canonical());
    if (n % 2 != 0)
        throw Error("D.D + D.K is odd; intersection form corrupted");
    return n / 2 + 1;
}

NodalPairLattice::NodalPairLattice(SurfaceLattice s, DivisorClass e_class)
    : surface(s), e(std::move(e_class)) {
    if (e.k() != surface.k)
        throw LatticeMismatchError("nodal class lives in a different lattice");
    if (self_intersection(e) != -2)
        throw ConfigurationError("nodal class must have E.E = -2, got " +
                                 std::to_string(self_intersection(e)));
    if (intersect(e, surface.canonical()) != 0)
        throw ConfigurationError("nodal class must satisfy K.E = 0");
}

NodalPairLattice NodalPairLattice::canonical_degree2() {
    SurfaceLattice s(7);
    return NodalPairLattice(s, s.exceptional(6) - s.exceptional(7));
}

namespace {

// Solutions of m_1^2+...+m_k^2 = q, m_1+...+m_k = t with |m_i| <= bound,
// appended to out as full coefficient vectors with leading entry d.
void enumerate_tail(int d, int k, int idx, int q, int t, int bound,
                    std::vector<int>& cur, std::vector<DivisorClass>& out) {
    if (idx > k) {
        if (q == 0 && t == 0)
            out.emplace_back(SurfaceLattice(k), cur);
        return;
    }
    int rem = k - idx; // coordinates after this one
    for (int m = -bound; m <= bound; ++m) {
        int q2 = q - m * m;
        int t2 = t - m;
        if (q2 < 0) continue;
        if (q2 > rem * bound * bound) continue;
        if (std::abs(t2) > rem * bound) continue;
        cur[static_cast<std::size_t>(idx)] = m;
        enumerate_tail(d, k, idx + 1, q2, t2, bound, cur, out);
    }
    cur[static_cast<std::size_t>(idx)] = 0;
}

std::vector<DivisorClass> search_minus_one_curves(int k) {
    std::vector<DivisorClass> found;
    int empty_streak = 0;
    for (int d = 0; empty_streak < 2; ++d) {
        std::size_t before = found.size();
        // E'.E' = -1  =>  sum m_i^2 = d^2 + 1;  E'.K = -1  =>  sum m_i = 1 - 3d.
        int q = d * d + 1;
        int t = 1 - 3 * d;
        int bound = static_cast<int>(std::sqrt(static_cast<double>(q))) + 1;
        while (bound * bound > q) --bound;
        std::vector<int> cur(static_cast<std::size_t>(k + 1), 0);
        cur[0] = d;
        enumerate_tail(d, k, 1, q, t, bound, cur, found);
        empty_streak = (found.size() == before) ? empty_streak + 1 : 0;
    }
    std::sort(found.begin(), found.end());
    return found;
}

} // namespace

const std::vector<DivisorClass>& minus_one_curves(const SurfaceLattice& lattice) {
    static std::mutex mu;
    static std::map<int, std::vector<DivisorClass>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        if (auto it = cache.find(lattice.k); it != cache.end()) return it->second;
    }
    auto computed = search_minus_one_curves(lattice.k);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(lattice.k, std::move(computed)).first->second;
}

bool is_nef(const DivisorClass& D) {
    SurfaceLattice S(D.k());
    if (S.degree() < 2)
        throw CapabilityError("nef scan over (-1)-curves is only valid on degree >= 2 "
                              "(k <= 7); degree-1 surfaces are out of scope");
    for (const auto& c : minus_one_curves(S))
        if (intersect(D, c) < 0) return false;
    return true;
}

bool is_nef(const DivisorClass& D, const NodalPairLattice& pair) {
    if (intersect(D, pair.e) < 0) return false;
    return is_nef(D);
}

bool is_big(const DivisorClass& D) { return self_intersection(D) > 0; }

namespace {

bool cascade(DivisorClass cur, const NodalPairLattice* pair) {
    SurfaceLattice S(cur.k());
    const DivisorClass K = S.canonical();
    const auto& curves = minus_one_curves(S);
    while (true) {
        // Each (-1)-subtraction lowers -D.K by exactly one and the
        // (-2)-subtraction keeps it fixed, so a negative value can never
        // recover to pass the final test.
        if (-intersect(cur, K) < 0) return false;
        if (pair && intersect(cur, pair->e) < 0) {
            cur -= pair->e;
            continue;
        }
        const DivisorClass* neg = nullptr;
        for (const auto& c : curves)
            if (intersect(cur, c) < 0) { neg = &c; break; }
        if (!neg) return cur.d() >= 0; // -cur.K >= 0 already holds here
        cur -= *neg;
    }
}

} // namespace

bool is_effective(const DivisorClass& D) { return cascade(D, nullptr); }

bool is_effective(const DivisorClass& D, const NodalPairLattice& pair) {
    if (D.k() != pair.surface.k)
        throw LatticeMismatchError("class and pair live in different lattices");
    return cascade(D, &pair);
}

} // namespace wkit
