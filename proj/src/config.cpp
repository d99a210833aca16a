#include <fstream>
#include <set>
#include <sstream>

#include "hfx/config.hpp"
#include "hfx/errors.hpp"

namespace hfx {

namespace {

std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

KeyValues KeyValues::parse_stream(std::istream& in, const std::string& origin) {
    KeyValues out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw_config("ConfigError", origin + " line " + std::to_string(lineno) +
                                            ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw_config("ConfigError",
                         origin + " line " + std::to_string(lineno) + ": empty key");
        out.kv[key] = val; // repeated key: last wins
    }
    return out;
}

KeyValues KeyValues::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("ConfigError", "cannot open config file " + path);
    return parse_stream(in, path);
}

namespace {

double to_num(const std::string& key, const std::string& val) {
    try {
        size_t pos = 0;
        const double x = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        return x;
    } catch (const std::exception&) {
        throw_config("ConfigError", "key " + key + ": bad number '" + val + "'");
    }
}

bool to_bool(const std::string& key, const std::string& val) {
    if (val == "1" || val == "true" || val == "yes" || val == "on") return true;
    if (val == "0" || val == "false" || val == "no" || val == "off") return false;
    throw_config("ConfigError", "key " + key + ": bad boolean '" + val + "'");
}

Vec3 to_vec3(const std::string& key, const std::string& val) {
    std::istringstream ss(val);
    double x, y, z;
    if (!(ss >> x >> y >> z)) throw_config("ConfigError", "key " + key + ": need 3 numbers");
    std::string rest;
    if (ss >> rest) throw_config("ConfigError", "key " + key + ": need exactly 3 numbers");
    return Vec3(x, y, z);
}

} // namespace

RunConfig load_run_config(const KeyValues& kvs) {
    RunConfig c;
    bool have_vacancy = false, have_subst = false;
    DefectSpec defect;

    for (const auto& [key, val] : kvs.kv) {
        if (key == "density") {
            c.density_path = val;
        } else if (key == "contact_table") {
            c.contact_table_path = val;
        } else if (key == "dataset") {
            c.dataset_path = val;
        } else if (key == "table") {
            c.table_path = val;
        } else if (key == "output_dir") {
            c.output_dir = val;
        } else if (key == "constants") {
            c.constants_path = val;
        } else if (key == "recipe") {
            c.recipe_path = val;
        } else if (key == "input") {
            c.input_path = val;
        } else if (key == "output") {
            c.output_path = val;
        } else if (key == "cutoff_A") {
            c.cutoff = to_num(key, val);
            if (!(c.cutoff > 0)) throw_config("ConfigError", "cutoff_A must be positive");
        } else if (key == "lattice_parameter_A") {
            c.lattice_parameter = to_num(key, val);
            if (!(c.lattice_parameter > 0))
                throw_config("ConfigError", "lattice_parameter_A must be positive");
        } else if (key == "backend") {
            if (val == "isolated_direct") {
                c.backend = DipoleBackend::isolated_direct;
            } else if (val == "isolated_fft") {
                c.backend = DipoleBackend::isolated_fft;
            } else if (val == "periodic_recip") {
                c.backend = DipoleBackend::periodic_recip;
            } else {
                throw_config("ConfigError", "backend must be isolated_direct, isolated_fft or "
                                            "periodic_recip, got '" + val + "'");
            }
        } else if (key == "exclusion_mode") {
            if (val == "voxel_center") {
                c.exclusion.mode = ExclusionSpec::Mode::voxel_center;
            } else if (val == "none") {
                c.exclusion.mode = ExclusionSpec::Mode::none;
            } else {
                throw_config("ConfigError",
                             "exclusion_mode must be voxel_center or none, got '" + val + "'");
            }
        } else if (key.rfind("exclusion_radius.", 0) == 0) {
            const std::string sym = key.substr(17);
            if (sym.empty()) throw_config("ConfigError", "exclusion_radius. needs a species");
            const double r = to_num(key, val);
            if (!(r > 0)) throw_config("ConfigError", key + " must be positive");
            c.exclusion.radius_by_species[sym] = r;
        } else if (key == "spin_S") {
            c.spin_s = to_num(key, val);
        } else if (key == "axis") {
            const Vec3 a = to_vec3(key, val);
            if (a.norm() < 1e-12) throw_config("BadAxis", "axis must be nonzero");
            c.axis = a.normalized();
        } else if (key == "vacancy_frac") {
            defect.vacancy_frac = to_vec3(key, val);
            have_vacancy = true;
        } else if (key == "substitution_frac") {
            defect.substitution_frac = to_vec3(key, val);
            have_subst = true;
        } else if (key == "substitution_species") {
            defect.substitution_species = val;
        } else if (key == "defect_center_frac") {
            c.defect_center_frac = to_vec3(key, val);
        } else if (key == "site_source") {
            if (val == "roster") {
                c.site_source_roster = true;
            } else if (val == "ideal") {
                c.site_source_roster = false;
            } else {
                throw_config("ConfigError",
                             "site_source must be roster or ideal, got '" + val + "'");
            }
        } else if (key.rfind("isotope.", 0) == 0) {
            const std::string sym = key.substr(8);
            if (sym.empty()) throw_config("ConfigError", "isotope. needs a species");
            c.isotope_by_species[sym] = val;
        } else if (key == "dataset_tag") {
            if (val != "I" && val != "II" && val != "III" && val != "user")
                throw_config("ConfigError", "dataset_tag must be I, II, III or user");
            c.dataset_tag = val;
        } else if (key == "unit") {
            if (val != "MHz" && val != "kHz")
                throw_config("ConfigError", "unit must be MHz or kHz");
            c.unit = val;
        } else if (key == "single_block_is_spin") {
            c.single_block_is_spin = to_bool(key, val);
        } else if (key == "allow_support_contact") {
            c.allow_support_contact = to_bool(key, val);
        } else if (key == "margin_k") {
            c.margin_k = to_num(key, val);
            if (c.margin_k < 0) throw_config("ConfigError", "margin_k must be >= 0");
        } else if (key == "theory_tol_rel") {
            c.theory_tol_rel = to_num(key, val);
            if (c.theory_tol_rel < 0) throw_config("ConfigError", "theory_tol_rel must be >= 0");
        } else if (key == "position_radius_A") {
            c.position_radius = to_num(key, val);
            if (!(c.position_radius > 0))
                throw_config("ConfigError", "position_radius_A must be positive");
        } else if (key == "resolution_A") {
            c.resolution = to_num(key, val);
            if (!(c.resolution > 0)) throw_config("BadResolution", "resolution_A must be positive");
        } else if (key == "field_isotope") {
            c.field_isotope = val;
        } else if (key == "threads") {
            c.threads = int(to_num(key, val));
            if (c.threads < 0) throw_config("ConfigError", "threads must be >= 0");
        } else if (key == "mem_limit_mib") {
            const double m = to_num(key, val);
            if (!(m > 0)) throw_config("ConfigError", "mem_limit_mib must be positive");
            c.mem_limit_bytes = size_t(m * (size_t(1) << 20));
        } else {
            throw_config("ConfigError", "unknown configuration key '" + key + "'");
        }
    }

    if (have_vacancy != have_subst)
        throw_config("BadDefectSpec",
                     "vacancy_frac and substitution_frac must be given together");
    if (have_vacancy) {
        defect.axis = c.axis;
        c.defect = defect;
    }
    c.resolved = kvs.kv;
    return c;
}

} // namespace hfx
