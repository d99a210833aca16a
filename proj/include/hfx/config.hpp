#pragma once
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "hfx/dipole.hpp"
#include "hfx/geometry.hpp"
#include "hfx/lattice.hpp"

namespace hfx {

// Flat "key = value" configuration text. Repeated keys are allowed, last one
// wins; '#' starts a comment. CLI flags are applied on top via set().
struct KeyValues {
    std::map<std::string, std::string> kv;

    static KeyValues parse_stream(std::istream& in, const std::string& origin);
    static KeyValues parse_file(const std::string& path);

    void set(const std::string& key, const std::string& value) { kv[key] = value; }
    bool has(const std::string& key) const { return kv.count(key) != 0; }
};

// Resolved run settings shared by all subcommands. Every field maps to one
// documented key; unknown keys are rejected at load time.
struct RunConfig {
    // paths
    std::string density_path;
    std::string contact_table_path;
    std::string dataset_path;
    std::string table_path;      // compare/position input; default output_dir/tensors.csv
    std::string output_dir = "."; // products land here
    std::string constants_path;  // empty: built-in table
    std::string recipe_path;     // synth
    std::string input_path;      // convert
    std::string output_path;     // convert/synth explicit output file

    // physics / geometry
    double cutoff = 30.0;              // Angstrom
    double lattice_parameter = 3.567;  // Angstrom, conventional diamond edge
    DipoleBackend backend = DipoleBackend::isolated_direct;
    ExclusionSpec exclusion;
    double spin_s = 1.0;
    Vec3 axis = Vec3(1.0, 1.0, 1.0).normalized();
    std::optional<DefectSpec> defect;
    std::optional<Vec3> defect_center_frac; // overrides the midpoint rule
    bool site_source_roster = true;         // false: ideal motif sites in-cell
    std::map<std::string, std::string> isotope_by_species = {
        {"C", "13C"}, {"N", "14N"}, {"H", "1H"}};

    // io / comparison
    std::string dataset_tag = "user"; // I, II, III, user
    std::string unit = "MHz";         // MHz or kHz
    bool single_block_is_spin = false;
    bool allow_support_contact = false;
    double margin_k = 3.0;
    double theory_tol_rel = 0.02;
    double position_radius = 0.3; // Angstrom

    // field
    double resolution = 0.0;       // Angstrom; required by cmd_field
    std::string field_isotope = "13C";

    // execution
    int threads = 0;                          // 0: library default
    size_t mem_limit_bytes = size_t(6) << 30; // FFT buffer budget

    // the fully resolved key/value view, for the run manifest
    std::map<std::string, std::string> resolved;
};

// Validates every key and value; unknown keys raise ConfigError naming the
// key. File existence is checked by the subcommands that use each path.
RunConfig load_run_config(const KeyValues& kv);

} // namespace hfx
