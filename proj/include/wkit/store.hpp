#ifndef WKIT_STORE_HPP
#define WKIT_STORE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wkit/bigint.hpp"
#include "wkit/real_structures.hpp"

namespace wkit {

struct Table1Column {
    std::string model_tag;
    Integer w1;
    Integer gw1;
};

// Reference data compiled into the library.
struct BundledData {
    // The seven columns, in catalog order.
    static const std::vector<Table1Column>& table1();

    // The same seven values keyed by (model tag, transfer state), as an
    // oracle document; data/table1_oracle.json ships the identical text.
    static const std::string& table1_oracle_json();

    // Parity tables for the catalog models: the two-component cubic gets
    // its forced all-ones pattern; the degree-2 non-sphere components get
    // the bundled example pattern and are flagged unverified.
    static void apply_example_bh(RealSurfaceModel& model);
};

// One evaluation, ready for serialization.  Field order in the JSON form is
// fixed, so equal reports serialize identically.
struct RunReport {
    std::string descriptor;
    std::string value; // decimal
    std::string provenance;
    std::vector<std::pair<std::string, bool>> flags;
    long long elapsed_us = 0;
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_misses = 0;
    std::uint64_t cache_entries = 0;
    std::uint64_t cache_loaded = 0;

    std::string to_json() const;
    static RunReport from_json(const std::string& text);

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

// Cache location policy: the WKIT_CACHE environment variable overrides the
// --cache flag; an empty result means no persistence.  The directory is
// created on demand; the memo log lives at <dir>/memo.log.
std::optional<std::string> resolve_cache_file(const std::string& cli_dir);

} // namespace wkit

#endif
