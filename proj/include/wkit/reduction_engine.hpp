#ifndef WKIT_REDUCTION_ENGINE_HPP
#define WKIT_REDUCTION_ENGINE_HPP

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wkit/bigint.hpp"
#include "wkit/invariant_framework.hpp"
#include "wkit/picard_lattice.hpp"
#include "wkit/wnumber_engine.hpp"

namespace wkit {

// Supplier of lower-genus invariants for the reduction formulas.  A backend
// is total on the classes a formula queries: a missing entry is an error,
// never an implicit zero (tables may opt in to an explicit zero default for
// synthetic data).
class GenusZeroBackend {
public:
    enum class Kind { OracleTable, Ruleset };

    // JSON: [{"class": "d;m1,...", "value": "<decimal>"}, ...]
    static GenusZeroBackend from_table_json(const SurfaceLattice& lattice,
                                            const std::string& json_text,
                                            bool zero_default = false);
    static GenusZeroBackend from_table_file(const SurfaceLattice& lattice,
                                            const std::string& path,
                                            bool zero_default = false);
    static GenusZeroBackend from_map(std::map<std::string, Integer> by_class,
                                     bool zero_default = false);
    // Ruleset-style backend: the caller owns the state mapping.
    static GenusZeroBackend from_evaluator(std::function<Integer(const DivisorClass&)> fn);

    Kind kind() const { return kind_; }
    std::size_t size() const { return table_.size(); }
    Integer value(const DivisorClass& D) const; // BackendError when missing

private:
    Kind kind_ = Kind::OracleTable;
    bool zero_default_ = false;
    std::map<std::string, Integer> table_;
    std::function<Integer(const DivisorClass&)> fn_;
};

// Append zero coefficients so a class on a blow-down lives on the bigger
// lattice (the exceptional directions of the extra blow-ups).
DivisorClass extend_to_rank(const DivisorClass& D, const SurfaceLattice& target);

// Genus-1, eps = (1,1) descriptors transfer to the relative state
// (D - E, alpha = 0, beta = 2e_1) on the canonical degree-2 pair, with phi
// shifted by the class of the complement of the selected components.
// Degrees 3 and 4 are first normalized by extending the lattice; degrees
// above 4 are rejected with instructions to blow up down to degree <= 4.
WState transfer_to_pair(const InvariantDescriptor& desc);

// Degeneration sums over m >= 1 while D - mE stays effective on the pair:
//   W_plus  = sum (-1)^(m-1) 2^(m-1) m W_m
//   W_minus = sum          2^(m-1) m W_m
// The oracle maps m to W(Y, D - mE); a missing entry before the truncation
// point is a BackendError.  W_plus + W_minus keeps only odd m (doubled).
std::pair<Integer, Integer> genus1_degeneration_sums(const NodalPairLattice& pair,
                                                     const DivisorClass& D,
                                                     const std::map<int, Integer>& w_oracle);

// The common shape of the genus-lowering formulas:
//   (1/2) B(D) + sum_{m >= 1, D - 2mE effective} B(D - 2mE)
// with exact halving (odd B(D) is an IntegralityError: it signals bad
// backend data).  The m-sum provably truncates: with D.E = 0 the genus
// p_a(D - 2mE) = p_a(D) - 4m^2 drops without bound, and the effectiveness
// cascade cuts off at finite m (asserted with a hard bound).
Integer combo_e14(const NodalPairLattice& pair, const DivisorClass& D,
                  const GenusZeroBackend& backend);
Integer genus2_e15(const NodalPairLattice& pair, const DivisorClass& D,
                   const GenusZeroBackend& genus1_backend);
Integer genus3_e16(const NodalPairLattice& pair, const DivisorClass& D,
                   const GenusZeroBackend& genus2_backend);

// Reference values keyed by (model tag, state key); the bundled Table 1
// backend for oracle-mode pipeline runs.
class Table1Oracle {
public:
    static Table1Oracle load(const std::string& json_text);
    static Table1Oracle load_file(const std::string& path);

    std::size_t size() const { return entries_.size(); }
    Integer value(const std::string& model_tag, const std::string& state_key) const;

private:
    std::map<std::pair<std::string, std::string>, Integer> entries_;
};

struct PipelineResult {
    InvariantDescriptor desc; // the genus-1 descriptor for D = -2K
    WState state;             // its transfer to the canonical pair
    InvariantValue value;
};

// The elliptic pipeline for one catalog model and D = -2K: build the
// descriptor, normalize and transfer, then evaluate through the bundled
// oracle or a transcribed ruleset.
PipelineResult table1_pipeline(const RealSurfaceModel& model, const Table1Oracle& oracle);
PipelineResult table1_pipeline(const RealSurfaceModel& model, const RuleSet& rules, WMemo& memo);

struct AsymptoticSeries {
    DivisorClass D;
    std::vector<std::pair<int, Integer>> values;  // (k, W(kD)) exact
    std::vector<std::pair<int, Rational>> slopes; // log W_k/(k log k), k >= 2, W_k > 0
    unsigned slope_digits = 0;                    // decimal digits retained in slopes
    std::vector<std::pair<int, Rational>> a_n;    // W_n / (-n D.K)!
    std::optional<Rational> lambda_est;           // min_n a_n / sum_{i<n} a_i
    std::vector<int> nonpositive_k;               // k with W_k <= 0 (defect flags)
};

// Evaluates W(kD) for k = 1..k_max through the supplied evaluator and
// derives slope/normalized-term/lambda diagnostics.  Values are exact;
// slopes are rational snapshots of a 100-digit floating evaluation and
// carry their retained precision.
AsymptoticSeries asymptotic_probe(const DivisorClass& D, int k_max,
                                  const std::function<Integer(int)>& evaluator);

} // namespace wkit

#endif
