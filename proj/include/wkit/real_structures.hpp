#ifndef WKIT_REAL_STRUCTURES_HPP
#define WKIT_REAL_STRUCTURES_HPP

#include <map>
#include <string>
#include <vector>

#include "wkit/picard_lattice.hpp"

namespace wkit {

// Connected-component homeomorphism types occurring in the catalog.
enum class ComponentType { RP2, S2, KLEIN }; // KLEIN = RP2 # RP2

int euler_char(ComponentType t);
std::string component_type_name(ComponentType t); // "RP2", "S2", "RP2#RP2"
ComponentType parse_component_type(const std::string& name);

// Borel-Haefliger parity data of one component G: the map
// D -> (bh_G(D))^2 in {0,1}.  It factors through D mod 2 and is additive,
// so a linear functional on the mod-2 lattice is the generic encoding; an
// explicit value table is accepted as well (missing entries are a
// configuration error).  Spheres carry identically zero parity and need no
// configuration.
struct BhTable {
    enum class Mode { Unset, Linear, Table };
    Mode mode = Mode::Unset;
    std::vector<int> pattern;           // Linear: length k+1, entries in {0,1}
    std::map<std::string, int> entries; // Table: normalized mod-2 class -> parity

    static BhTable linear(std::vector<int> pattern);
    static BhTable table(std::map<std::string, int> entries);
};

std::string mod2_key(const DivisorClass& D);

struct RealComponent {
    ComponentType type = ComponentType::S2;
    BhTable bh;
    bool bh_unverified = false; // carried into validation reports
};

// One deformation class of real del Pezzo surfaces with disconnected real
// part: the ambient lattice plus the list of real components.
struct RealSurfaceModel {
    SurfaceLattice lattice;
    std::vector<RealComponent> components;

    int degree() const { return lattice.degree(); }
    std::string tag() const; // "deg=2|RX=RP2#RP2+S2"

    // (bh_{F_i}(D))^2 for component i; throws ConfigurationError when the
    // component has no usable bh data.
    int bh_parity(int component, const DivisorClass& D) const;

    long long euler_total() const;
};

// The seven deformation classes with disconnected real part and degree >= 2,
// in the fixed reporting order: degree 4 / 2S2; degree 3 / RP2+S2;
// degree 2 / 2RP2, (RP2#RP2)+S2, 2S2, 3S2, 4S2.  bh tables are left
// unconfigured; callers attach their own (the bundled example tables live
// with the store).
const std::vector<RealSurfaceModel>& catalog();

// Catalog lookup by degree and component types; anything else (connected
// real part, degree 1, ...) is out of scope.
const RealSurfaceModel& find_catalog_model(int degree,
                                           const std::vector<ComponentType>& types);

// JSON ingestion: {"degree": n, "components": [{"type": "RP2"}, ...],
// "bh": {"0": "1;1,1,1,1,1,1" | {"<mod2 class>": 0/1, ...}}}.
RealSurfaceModel load_model_config(const std::string& json_text);
RealSurfaceModel load_model_config_file(const std::string& path);

// Selection F-hat = (F_0, ..., F_g): distinct component indices.
using ComponentSelection = std::vector<int>;

void validate_selection(const RealSurfaceModel& model, const ComponentSelection& sel);

// Euler characteristic of RX minus the selected components.
long long euler_complement(const RealSurfaceModel& model, const ComponentSelection& sel);

// True iff every non-selected component has vanishing parity on D.
bool check_f_hat_compatible(const RealSurfaceModel& model,
                            const ComponentSelection& sel, const DivisorClass& D);

// True iff D.K = sum of selected parities mod 2.
bool check_parity_congruence(const RealSurfaceModel& model,
                             const ComponentSelection& sel, const DivisorClass& D);

// n = -D.K + g - 1.
long long expected_dimension(const DivisorClass& D, int g);

// Real point distribution (r_0, ..., r_g; m): r_i points on F_i and m pairs
// of conjugate points, subject to sum r_i + 2m = -D.K + g - 1 and
// r_i = (bh_{F_i}(D))^2 + 1 mod 2.
struct PointDistribution {
    std::vector<int> r;
    int m = 0;
};

// All admissible distributions, ordered by m ascending, then r_g, ..., r_1
// ascending (r_0 is determined by the total).  Infeasible parity data
// yields an empty list.
std::vector<PointDistribution> enumerate_distributions(const RealSurfaceModel& model,
                                                       const ComponentSelection& sel,
                                                       const DivisorClass& D);

// Re-validation of both admissibility clauses for a single distribution.
bool check_distribution(const RealSurfaceModel& model, const ComponentSelection& sel,
                        const DivisorClass& D, const PointDistribution& dist);

} // namespace wkit

#endif
