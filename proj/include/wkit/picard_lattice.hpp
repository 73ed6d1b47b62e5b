#ifndef WKIT_PICARD_LATTICE_HPP
#define WKIT_PICARD_LATTICE_HPP

#include <compare>
#include <string>
#include <vector>

#include "wkit/errors.hpp"

namespace wkit {

class DivisorClass;

// Picard lattice of a del Pezzo surface presented as a blow-up of the
// plane in k points: basis (L, E_1, ..., E_k), intersection form
// diag(+1, -1, ..., -1).  degree() = K.K = 9 - k.
struct SurfaceLattice {
    int k = 0;

    SurfaceLattice() = default;
    explicit SurfaceLattice(int k_);

    int rank() const { return k + 1; }
    int degree() const { return 9 - k; }

    DivisorClass zero() const;
    DivisorClass line() const;
    DivisorClass exceptional(int i) const; // E_i, 1-based
    DivisorClass canonical() const;        // K = (-3; 1, ..., 1)
    DivisorClass anticanonical() const;

    friend bool operator==(const SurfaceLattice&, const SurfaceLattice&) = default;
};

// Integer vector (d; m_1, ..., m_k) of coefficients in the basis
// (L, E_1, ..., E_k).  Immutable value semantics; all arithmetic is exact.
class DivisorClass {
public:
    DivisorClass() = default;
    DivisorClass(const SurfaceLattice& lattice, std::vector<int> coeffs);

    // Canonical text form "d;m1,m2,...,mk" ("d" alone when k = 0).
    static DivisorClass parse(const SurfaceLattice& lattice, const std::string& text);
    std::string str() const;

    int k() const { return static_cast<int>(c_.size()) - 1; }
    int d() const { return c_[0]; }
    int m(int i) const { return c_[static_cast<std::size_t>(i)]; } // 1-based
    const std::vector<int>& coeffs() const { return c_; }

    DivisorClass& operator+=(const DivisorClass& o);
    DivisorClass& operator-=(const DivisorClass& o);
    friend DivisorClass operator+(DivisorClass a, const DivisorClass& b) { return a += b; }
    friend DivisorClass operator-(DivisorClass a, const DivisorClass& b) { return a -= b; }
    friend DivisorClass operator*(int n, DivisorClass a);
    DivisorClass operator-() const;

    friend bool operator==(const DivisorClass&, const DivisorClass&) = default;
    friend std::strong_ordering operator<=>(const DivisorClass& a, const DivisorClass& b);

private:
    std::vector<int> c_; // (d, m_1, ..., m_k)

    friend long long intersect(const DivisorClass&, const DivisorClass&);
};

// Intersection number d1*d2 - sum(m1_i * m2_i).
// Throws LatticeMismatchError when the ranks differ.
long long intersect(const DivisorClass& a, const DivisorClass& b);
long long self_intersection(const DivisorClass& a);

// p_a(D) = (D.D + D.K)/2 + 1.  The numerator is always even on these
// lattices; this is asserted, not assumed.
long long arithmetic_genus(const DivisorClass& D);

// Uninodal pair (Y, E): Picard lattice of Y together with the class of the
// (-2)-curve E.  Validates E.E = -2 and K.E = 0.  The sublattice orthogonal
// to E is identified with the Picard group of the smoothing.
struct NodalPairLattice {
    SurfaceLattice surface;
    DivisorClass e;

    NodalPairLattice(SurfaceLattice s, DivisorClass e_class);

    // Degree-2 pair on (L, E_1..E_7) with E = E_6 - E_7; this is the pair
    // every genus-1 pipeline run normalizes to.
    static NodalPairLattice canonical_degree2();

    long long pair_with_e(const DivisorClass& D) const { return intersect(D, e); }
    bool orthogonal_to_e(const DivisorClass& D) const { return pair_with_e(D) == 0; }
};

// Complete list of classes with E'.E' = E'.K = -1, found by bounded
// exhaustive search and cached per rank.  Deterministic (sorted) order.
// Counts: 0,1,3,6,10,16,27,56,240 for k = 0..8.
const std::vector<DivisorClass>& minus_one_curves(const SurfaceLattice& lattice);

// Nef test by full scan over minus_one_curves (plus D.E >= 0 on a pair).
// Only valid on degrees >= 2: k = 8 raises CapabilityError because the
// (-1)-scan criterion breaks down on degree 1.
bool is_nef(const DivisorClass& D);
bool is_nef(const DivisorClass& D, const NodalPairLattice& pair);

// Bigness test D.D > 0; meaningful on nef classes.
bool is_big(const DivisorClass& D);

// Effectiveness by (-1)-cascade: repeatedly subtract a (-1)-curve E' with
// D.E' < 0 (and on a pair the (-2)-class E while D.E < 0), then accept iff
// the terminal class pairs nonnegatively with -K and has d >= 0.  Each E'
// subtraction lowers -D.K by one and E subtractions never raise it, so the
// cascade rejects as soon as -D.K < 0; that makes termination a counting
// argument instead of a loop bound.
bool is_effective(const DivisorClass& D);
bool is_effective(const DivisorClass& D, const NodalPairLattice& pair);

} // namespace wkit

#endif
