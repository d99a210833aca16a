#include "hfx/commands.hpp"

#include "hfx/assembly.hpp"
#include "hfx/compare.hpp"
#include "hfx/dipole.hpp"
#include "hfx/errors.hpp"
#include "hfx/lattice.hpp"
#include "hfx/manifest.hpp"
#include "hfx/synth.hpp"
#include "hfx/table.hpp"
#include "hfx/volgrid.hpp"

#include <json.hpp>
#include <omp.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace hfx {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Re-throws a module error with the file path prepended, keeping category
// and code so the exit code is unchanged.
template <typename F>
auto with_file_context(const std::string& path, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        std::string msg = e.what();
        const std::string prefix = e.code() + ": ";
        if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
        throw Error(e.category(), e.code(), path + ": " + msg);
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_config("ConfigError", "cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_config("ConfigError", "cannot write file: " + path);
    return out;
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) throw_config("ConfigError", "cannot create output_dir " + cfg.output_dir + ": " +
                                            ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

ConstantsTable load_constants(const RunConfig& cfg) {
    if (cfg.constants_path.empty()) return ConstantsTable::codata2018();
    auto in = open_input(cfg.constants_path);
    return with_file_context(cfg.constants_path, [&] { return ConstantsTable::load(in); });
}

int effective_threads(const RunConfig& cfg) {
    return cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
}

RunManifest base_manifest(const RunConfig& cfg, const std::string& command,
                          const std::string& constants_version) {
    RunManifest m;
    m.command = command;
    m.settings = cfg.resolved;
    m.constants_version = constants_version;
    m.threads = effective_threads(cfg);
    return m;
}

std::string exclusion_string(const ExclusionSpec& excl) {
    if (excl.mode == ExclusionSpec::Mode::none) return "none";
    std::string s = "voxel_center";
    for (const auto& [sym, r] : excl.radius_by_species) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %s=%.12g", sym.c_str(), r);
        s += buf;
    }
    return s;
}

// "13C" -> "C": the element symbol is the trailing letter run.
std::string element_of_isotope(const std::string& isotope) {
    size_t i = isotope.size();
    while (i > 0 && std::isalpha(static_cast<unsigned char>(isotope[i - 1]))) --i;
    if (i == isotope.size())
        throw_config("ConfigError", "isotope label has no element symbol: " + isotope);
    return isotope.substr(i);
}

// The ideal crystal behind the density cell: an axis-aligned n1 x n2 x n3
// diamond supercell with cubic edge `a`. Synthetic cells that are not
// commensurate with 3.567 A work by setting lattice_parameter_A.
AtomRoster pristine_supercell(const CellGeometry& cell, double a, int n_out[3]) {
    for (int axis = 0; axis < 3; ++axis) {
        const Vec3 row = cell.lattice.row(axis);
        const int n = std::max(1, int(std::lround(row.norm() / a)));
        Vec3 want = Vec3::Zero();
        want[axis] = a * n;
        if ((row - want).cwiseAbs().maxCoeff() > 0.05)
            throw_config("ConfigError",
                         "density cell is not an axis-aligned diamond supercell of "
                         "lattice_parameter_A; adjust lattice_parameter_A to the cubic edge "
                         "the cell is built from");
        n_out[axis] = n;
    }
    return replicate_motif(diamond_conventional("C"), n_out[0], n_out[1], n_out[2]);
}

DatasetTag parse_tag(const std::string& s) {
    if (s == "I") return DatasetTag::I;
    if (s == "II") return DatasetTag::II;
    if (s == "III") return DatasetTag::III;
    return DatasetTag::user;
}

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

// Shared by cmd_compare and cmd_position: load table + dataset, run the
// matcher. Outputs differ per command.
struct MatchedData {
    TensorTable table;
    std::vector<ExperimentalRecord> records;
    Quantity quantity = Quantity::A_zz;
    std::vector<MatchResult> matches;
    std::string table_path;
};

MatchedData run_matching(const RunConfig& cfg) {
    MatchedData d;
    d.table_path = cfg.table_path.empty() ? join_path(cfg.output_dir, "tensors.csv")
                                          : cfg.table_path;
    {
        std::ifstream tin(d.table_path, std::ios::binary);
        if (!tin)
            throw_parse("NotComputed", "tensor table not found: " + d.table_path +
                                           " (run the compute step first)");
        d.table = with_file_context(d.table_path, [&] { return read_tensor_table(tin); });
    }
    if (cfg.dataset_path.empty())
        throw_config("ConfigError", "comparison requires dataset=<file>");
    {
        auto din = open_input(cfg.dataset_path);
        d.records = with_file_context(
            cfg.dataset_path, [&] { return load_dataset(din, parse_tag(cfg.dataset_tag)); });
    }
    d.quantity = d.records.empty() ? Quantity::A_zz : d.records.front().quantity;

    std::vector<TheoryEntry> theory;
    theory.reserve(d.table.rows.size());
    for (const SiteResult& r : d.table.rows) {
        TheoryEntry t;
        t.site_index = r.site_index;
        t.value_mhz = d.quantity == Quantity::A_z ? r.a_z_mhz : r.a_zz_mhz;
        t.distance = r.distance;
        t.pos = r.pos - d.table.meta.defect_center; // dataset positions are defect-relative
        theory.push_back(t);
    }

    MatchParams params;
    params.margin_k = cfg.margin_k;
    params.theory_tol_rel = cfg.theory_tol_rel;
    params.position_radius = cfg.position_radius;
    d.matches = position_spins(d.records, theory, params);
    return d;
}

} // namespace

int cmd_compute(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    if (cfg.density_path.empty())
        throw_config("ConfigError", "compute requires density=<file>");
    ensure_output_dir(cfg);

    const ConstantsTable constants = load_constants(cfg);
    SpinSystem spin;
    spin.S = cfg.spin_s;
    spin.axis = cfg.axis;
    spin.validate();

    auto din = open_input(cfg.density_path);
    ParseOptions popt;
    popt.single_block_is_spin = cfg.single_block_is_spin;
    auto [grid, roster] =
        with_file_context(cfg.density_path, [&] { return parse_volumetric(din, popt); });
    std::cerr << "compute: density " << grid.dims[0] << "x" << grid.dims[1] << "x"
              << grid.dims[2] << ", integral " << fmt_g(grid.integral()) << " e\n";

    int nrep[3];
    const AtomRoster pristine = pristine_supercell(grid.cell, cfg.lattice_parameter, nrep);

    const DefectSpec* defect = cfg.defect ? &*cfg.defect : nullptr;
    const AtomRoster* in_cell = cfg.site_source_roster ? &roster : nullptr;
    std::optional<Vec3> center;
    if (cfg.defect_center_frac) center = grid.cell.frac_to_cart(*cfg.defect_center_frac);

    const SiteSet sites =
        generate_site_set(grid.cell, pristine, defect, cfg.cutoff, in_cell, center);
    int n_in_cell = 0;
    for (const Site& s : sites.sites)
        if (s.region == Region::in_cell) ++n_in_cell;
    std::cerr << "compute: " << sites.sites.size() << " sites within " << cfg.cutoff
              << " A (" << n_in_cell << " in cell)\n";

    std::map<int, ContactEntry> contact;
    if (!cfg.contact_table_path.empty()) {
        auto cin_ = open_input(cfg.contact_table_path);
        // Contact rows key the roster order of the density cell.
        const int n_roster = cfg.site_source_roster ? roster.total() : pristine.total();
        contact = with_file_context(cfg.contact_table_path,
                                    [&] { return ingest_contact_table(cin_, n_roster); });
    }

    ExclusionSpec excl = cfg.exclusion;
    excl.validate();
    ExecContext ctx;
    ctx.threads = cfg.threads;

    std::vector<Vec3> probes;
    std::vector<std::string> probe_species;
    probes.reserve(sites.sites.size());
    probe_species.reserve(sites.sites.size());
    for (const Site& s : sites.sites) {
        probes.push_back(s.pos);
        probe_species.push_back(s.species);
    }

    std::vector<DipoleTensor> w;
    if (cfg.backend == DipoleBackend::isolated_direct) {
        w = dipole_isolated_direct_many(grid, probes, probe_species, excl, ctx);
    } else if (cfg.backend == DipoleBackend::periodic_recip) {
        std::cerr << "compute: periodic_recip backend, exclusion spec not applied "
                     "(reciprocal sum has no near-field carve-out)\n";
        const PeriodicRecip engine(grid);
        w.resize(probes.size());
        std::exception_ptr err;
        const int nt = ctx.threads > 0 ? ctx.threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
        for (long long p = 0; p < (long long)probes.size(); ++p) {
            try {
                w[p] = engine.eval_frac(grid.cell.cart_to_frac(probes[p]));
            } catch (...) {
#pragma omp critical
                if (!err) err = std::current_exception();
            }
        }
        if (err) std::rethrow_exception(err);
    } else {
        throw_config("ConfigError",
                     "backend isolated_fft evaluates on-grid fields; nuclear sites are "
                     "off-grid, use isolated_direct (or the field command)");
    }

    std::vector<SiteResult> rows;
    rows.reserve(sites.sites.size());
    for (size_t i = 0; i < sites.sites.size(); ++i) {
        const Site& s = sites.sites[i];
        auto iso = cfg.isotope_by_species.find(s.species);
        if (iso == cfg.isotope_by_species.end())
            throw_config("ConfigError", "no isotope mapping for species '" + s.species +
                                            "' (add isotope." + s.species + " = <label>)");
        const NuclearSpecies& nuc = constants.nucleus(iso->second);

        std::optional<double> fc;
        std::optional<Sym3> oc;
        if (s.region == Region::in_cell) {
            auto it = contact.find(s.index);
            if (it != contact.end()) {
                fc = it->second.fc_mhz;
                oc = it->second.one_center;
            }
        }
        const HyperfineTensor h =
            assemble_tensor(w[i], fc, oc, spin, nuc, constants,
                            s.region == Region::in_cell, cfg.allow_support_contact);

        SiteResult r;
        r.site_index = s.index;
        r.species = s.species;
        r.isotope = nuc.isotope;
        r.in_cell = s.region == Region::in_cell;
        r.pos = s.pos;
        r.distance = s.distance;
        r.a_mhz = h.a;
        r.fc_mhz = h.fermi_contact;
        r.contact_present = h.contact_present;
        r.one_center_present = h.one_center_present;
        r.a_zz_mhz = a_zz(h.a, spin.axis);
        r.a_z_mhz = splitting_Az(h.a, spin.axis);
        rows.push_back(std::move(r));
    }

    TableMeta meta;
    meta.unit = cfg.unit;
    meta.lattice_parameter = cfg.lattice_parameter;
    meta.grid_dims = grid.dims;
    meta.backend = backend_name(cfg.backend);
    meta.exclusion = cfg.backend == DipoleBackend::periodic_recip
                         ? "not applied (periodic_recip)"
                         : exclusion_string(excl);
    meta.constants_version = constants.version;
    meta.axis = spin.axis;
    meta.defect_center = sites.defect_center;

    const std::string table_path = join_path(cfg.output_dir, "tensors.csv");
    {
        auto out = open_output(table_path);
        write_tensor_table(out, meta, rows);
        if (!out) throw_config("ConfigError", "write failed: " + table_path);
    }
    std::cerr << "compute: wrote " << table_path << "\n";

    RunManifest m = base_manifest(cfg, "compute", constants.version);
    m.inputs.push_back(file_ref(cfg.density_path));
    if (!cfg.contact_table_path.empty()) m.inputs.push_back(file_ref(cfg.contact_table_path));
    if (!cfg.constants_path.empty()) m.inputs.push_back(file_ref(cfg.constants_path));
    m.outputs.push_back(file_ref(table_path));
    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "compute_manifest.json"), m);
    return 0;
}

int cmd_field(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    if (cfg.density_path.empty())
        throw_config("ConfigError", "field requires density=<file>");
    if (!(cfg.resolution > 0))
        throw_config("BadResolution", "field requires resolution_A > 0");
    ensure_output_dir(cfg);

    const ConstantsTable constants = load_constants(cfg);
    SpinSystem spin;
    spin.S = cfg.spin_s;
    spin.axis = cfg.axis;
    spin.validate();
    const NuclearSpecies& nuc = constants.nucleus(cfg.field_isotope);

    auto din = open_input(cfg.density_path);
    ParseOptions popt;
    popt.single_block_is_spin = cfg.single_block_is_spin;
    auto [grid, roster] =
        with_file_context(cfg.density_path, [&] { return parse_volumetric(din, popt); });

    const Vec3 h = grid.spacing();
    if (cfg.resolution < h.minCoeff() * (1.0 - 1e-9))
        throw_config("BadResolution",
                     "requested resolution " + fmt_g(cfg.resolution) +
                         " A is finer than the source grid spacing " + fmt_g(h.minCoeff()) +
                         " A");
    // Largest stride whose sampling step stays at or below the request on
    // every axis, reduced until it divides all dims.
    int stride = std::max(1, int(std::floor(cfg.resolution / h.maxCoeff() + 1e-9)));
    stride = std::min({stride, grid.dims[0], grid.dims[1], grid.dims[2]});
    while (stride > 1 && (grid.dims[0] % stride || grid.dims[1] % stride ||
                          grid.dims[2] % stride))
        --stride;

    ExclusionSpec excl = cfg.exclusion;
    excl.validate();
    ExecContext ctx;
    ctx.threads = cfg.threads;
    const std::string probe_sym = element_of_isotope(cfg.field_isotope);

    std::cerr << "field: stride " << stride << " -> " << grid.dims[0] / stride << "x"
              << grid.dims[1] / stride << "x" << grid.dims[2] / stride << " probes\n";

    FftFieldEngine engine(grid, cfg.mem_limit_bytes);
    const std::vector<DipoleTensor> tens = engine.field(stride, excl, probe_sym, ctx);

    const double unit_scale = cfg.unit == "kHz" ? 1e3 : 1.0;
    const double pref = dipolar_prefactor_mhz(constants, nuc, spin.S) * unit_scale;

    static const char* comp_names[6] = {"xx", "yy", "zz", "xy", "xz", "yz"};
    double (*getters[6])(const Sym3&) = {
        [](const Sym3& s) { return s.xx; }, [](const Sym3& s) { return s.yy; },
        [](const Sym3& s) { return s.zz; }, [](const Sym3& s) { return s.xy; },
        [](const Sym3& s) { return s.xz; }, [](const Sym3& s) { return s.yz; }};

    RunManifest m = base_manifest(cfg, "field", constants.version);
    m.inputs.push_back(file_ref(cfg.density_path));
    if (!cfg.constants_path.empty()) m.inputs.push_back(file_ref(cfg.constants_path));

    VolumetricGrid sub;
    sub.cell = grid.cell;
    sub.dims = {grid.dims[0] / stride, grid.dims[1] / stride, grid.dims[2] / stride};
    sub.values.resize(sub.size());
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (int c = 0; c < 6; ++c) {
        for (size_t p = 0; p < tens.size(); ++p)
            sub.values[p] = getters[c](tens[p].w) * pref;
        const std::string name = std::string("field_") + comp_names[c] + ".vasp";
        const std::string path = join_path(cfg.output_dir, name);
        auto out = open_output(path);
        write_volumetric_single(out, sub, roster);
        if (!out) throw_config("ConfigError", "write failed: " + path);
        files[comp_names[c]] = name;
        m.outputs.push_back(file_ref(path));
    }

    nlohmann::ordered_json j;
    j["command"] = "field";
    j["unit"] = cfg.unit;
    j["isotope"] = cfg.field_isotope;
    j["spin_S"] = spin.S;
    j["prefactor_unit_per_A3"] = pref;
    j["source_dims"] = {grid.dims[0], grid.dims[1], grid.dims[2]};
    j["field_dims"] = {sub.dims[0], sub.dims[1], sub.dims[2]};
    j["stride"] = stride;
    j["resolution_requested_A"] = cfg.resolution;
    j["resolution_effective_A"] = {stride * h[0], stride * h[1], stride * h[2]};
    j["exclusion"] = exclusion_string(excl);
    j["component_order"] = {"xx", "yy", "zz", "xy", "xz", "yz"};
    j["files"] = files;
    j["storage_note"] =
        "CHGCAR convention: stored numbers are component * cell volume; the bundled "
        "reader undoes the scaling (parse with single_block_is_spin)";
    const std::string sidecar = join_path(cfg.output_dir, "field.json");
    {
        auto out = open_output(sidecar);
        out << j.dump(2) << "\n";
    }
    m.outputs.push_back(file_ref(sidecar));

    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "field_manifest.json"), m);
    return 0;
}

int cmd_compare(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    ensure_output_dir(cfg);
    MatchedData d = run_matching(cfg);

    // Metrics on magnitudes (the documented global sign convention); sign
    // flips counted on the raw signed pairs.
    std::vector<std::pair<double, double>> mag_pairs, signed_pairs;
    int n_matched = 0, n_ties = 0, n_pos_mismatch = 0;
    for (const MatchResult& r : d.matches) {
        if (r.tie) ++n_ties;
        if (r.position_mismatch) ++n_pos_mismatch;
        if (!r.matched) continue;
        ++n_matched;
        const MatchCandidate& best = r.candidates.front();
        mag_pairs.emplace_back(std::fabs(best.theory_mhz), std::fabs(r.experiment_mhz));
        signed_pairs.emplace_back(best.theory_mhz, r.experiment_mhz);
    }
    const ErrorMetrics met = error_metrics(mag_pairs);
    const int flips = count_sign_flips(signed_pairs);

    const std::string csv_path = join_path(cfg.output_dir, "comparison.csv");
    {
        auto out = open_output(csv_path);
        out << "record_id,quantity,experiment_" << (cfg.unit == "kHz" ? "kHz" : "MHz")
            << ",matched,tie,position_mismatch,n_candidates,best_site_index,best_theory,"
               "best_residual,are_pct\n";
        const double us = cfg.unit == "kHz" ? 1e3 : 1.0;
        for (const MatchResult& r : d.matches) {
            out << r.record_id << ',' << quantity_name(d.quantity) << ','
                << fmt_g(r.experiment_mhz * us) << ',' << (r.matched ? 1 : 0) << ','
                << (r.tie ? 1 : 0) << ',' << (r.position_mismatch ? 1 : 0) << ','
                << r.candidates.size();
            if (r.matched) {
                const MatchCandidate& best = r.candidates.front();
                const double are =
                    r.experiment_mhz != 0.0
                        ? std::fabs(std::fabs(best.theory_mhz) - std::fabs(r.experiment_mhz)) /
                              std::fabs(r.experiment_mhz)
                        : 0.0;
                out << ',' << best.site_index << ',' << fmt_g(best.theory_mhz * us) << ','
                    << fmt_g(best.residual_mhz * us) << ','
                    << (r.experiment_mhz != 0.0 ? fmt_g(100.0 * are) : std::string());
            } else {
                out << ",,,,";
            }
            out << '\n';
        }
    }

    nlohmann::ordered_json j;
    j["command"] = "compare";
    j["dataset"] = cfg.dataset_path;
    j["dataset_tag"] = cfg.dataset_tag;
    j["quantity"] = quantity_name(d.quantity);
    j["table"] = d.table_path;
    j["n_records"] = d.records.size();
    j["n_matched"] = n_matched;
    j["n_unmatched"] = int(d.matches.size()) - n_matched;
    j["n_ties"] = n_ties;
    j["n_position_mismatch"] = n_pos_mismatch;
    j["sign_flips"] = flips;
    j["mape_pct"] = met.mape_pct;
    j["mare_pct"] = met.mare_pct;
    j["msre_pct"] = met.msre_pct;
    j["n_used"] = met.n_used;
    j["n_excluded_zero_experiment"] = met.n_excluded_zero;
    const std::string json_path = join_path(cfg.output_dir, "comparison.json");
    {
        auto out = open_output(json_path);
        out << j.dump(2) << "\n";
    }
    std::cerr << "compare: " << n_matched << "/" << d.matches.size() << " matched, MAPE "
              << fmt_g(met.mape_pct) << "%, MSRE " << fmt_g(met.msre_pct) << "%\n";

    RunManifest m = base_manifest(cfg, "compare", d.table.meta.constants_version);
    m.inputs.push_back(file_ref(d.table_path));
    m.inputs.push_back(file_ref(cfg.dataset_path));
    m.outputs.push_back(file_ref(csv_path));
    m.outputs.push_back(file_ref(json_path));
    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "compare_manifest.json"), m);
    return 0;
}

int cmd_position(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    ensure_output_dir(cfg);
    MatchedData d = run_matching(cfg);

    const std::string csv_path = join_path(cfg.output_dir, "candidates.csv");
    {
        auto out = open_output(csv_path);
        out << "record_id,rank,site_index,distance_A,theory_MHz,residual_MHz,tie\n";
        for (const MatchResult& r : d.matches) {
            int rank = 0;
            for (const MatchCandidate& c : r.candidates) {
                out << r.record_id << ',' << rank++ << ',' << c.site_index << ','
                    << fmt_g(c.distance) << ',' << fmt_g(c.theory_mhz) << ','
                    << fmt_g(c.residual_mhz) << ',' << (r.tie ? 1 : 0) << '\n';
            }
            if (r.candidates.empty())
                std::cerr << "position: record " << r.record_id << " unmatched"
                          << (r.position_mismatch ? " (no site within position radius)" : "")
                          << "\n";
        }
    }

    RunManifest m = base_manifest(cfg, "position", d.table.meta.constants_version);
    m.inputs.push_back(file_ref(d.table_path));
    m.inputs.push_back(file_ref(cfg.dataset_path));
    m.outputs.push_back(file_ref(csv_path));
    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "position_manifest.json"), m);
    return 0;
}

namespace {

DensityRecipe parse_recipe(std::istream& in, const std::string& origin) {
    DensityRecipe recipe;
    bool have_cell = false, have_dims = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw_config("ConfigError", origin + ":" + std::to_string(lineno) +
                                            ": expected key = value");
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        std::istringstream vs(value);
        const std::string where = origin + ":" + std::to_string(lineno);

        if (key == "cubic_cell") {
            double L = 0;
            if (!(vs >> L) || !(L > 0))
                throw_config("ConfigError", where + ": cubic_cell needs one positive length");
            recipe.cell.lattice = Mat3::Identity() * L;
            recipe.cell.origin = Vec3::Zero();
            have_cell = true;
        } else if (key == "cell") {
            Mat3 lat;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    if (!(vs >> lat(r, c)))
                        throw_config("ConfigError",
                                     where + ": cell needs nine numbers (rows)");
            recipe.cell.lattice = lat;
            recipe.cell.origin = Vec3::Zero();
            have_cell = true;
        } else if (key == "dims") {
            for (int a = 0; a < 3; ++a)
                if (!(vs >> recipe.dims[a]) || recipe.dims[a] <= 0)
                    throw_config("ConfigError", where + ": dims needs three positive ints");
            have_dims = true;
        } else if (key == "component") {
            DensityComponent c;
            std::string kind;
            vs >> kind;
            if (kind == "voxel_spike")
                c.kind = DensityComponent::Kind::voxel_spike;
            else if (kind == "gaussian")
                c.kind = DensityComponent::Kind::gaussian;
            else if (kind == "lobe_set")
                c.kind = DensityComponent::Kind::lobe_set;
            else
                throw_config("ConfigError", where + ": component kind must be voxel_spike, "
                                                "gaussian or lobe_set");
            if (!(vs >> c.center[0] >> c.center[1] >> c.center[2] >> c.width >> c.weight))
                throw_config("ConfigError",
                             where + ": component needs kind cx cy cz width weight "
                                     "[ax ay az], lengths in Angstrom");
            Vec3 ax;
            if (vs >> ax[0] >> ax[1] >> ax[2]) {
                if (ax.norm() <= 0)
                    throw_config("ConfigError", where + ": zero component axis");
                c.axis = ax.normalized();
            }
            recipe.components.push_back(c);
        } else {
            throw_config("ConfigError", where + ": unknown recipe key '" + key + "'");
        }
    }
    if (!have_cell) throw_config("ConfigError", origin + ": recipe is missing cell");
    if (!have_dims) throw_config("ConfigError", origin + ": recipe is missing dims");
    if (recipe.components.empty())
        throw_config("ConfigError", origin + ": recipe has no components");
    return recipe;
}

} // namespace

int cmd_synth(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    if (cfg.recipe_path.empty())
        throw_config("ConfigError", "synth requires recipe=<file>");
    ensure_output_dir(cfg);

    auto rin = open_input(cfg.recipe_path);
    const DensityRecipe recipe = parse_recipe(rin, cfg.recipe_path);
    const VolumetricGrid grid = build_density(recipe);

    double weight_sum = 0;
    for (const auto& c : recipe.components) weight_sum += c.weight;
    if (std::fabs(weight_sum - 2.0 * cfg.spin_s) > 1e-6)
        std::cerr << "synth: warning: component weights sum to " << fmt_g(weight_sum)
                  << " e, not 2S = " << fmt_g(2.0 * cfg.spin_s) << " e\n";
    std::cerr << "synth: grid integral " << fmt_g(grid.integral()) << " e\n";

    // Placeholder roster: a single carbon at the cell origin, enough for the
    // density format's atom header. Real site lists come from site_source.
    AtomRoster roster;
    roster.species = {{"C", 1}};
    roster.positions = {Vec3::Zero()};

    const std::string out_path = cfg.output_path.empty()
                                     ? join_path(cfg.output_dir, "synth.vasp")
                                     : cfg.output_path;
    {
        auto out = open_output(out_path);
        write_volumetric(out, grid, roster);
        if (!out) throw_config("ConfigError", "write failed: " + out_path);
    }
    std::cerr << "synth: wrote " << out_path << "\n";

    RunManifest m = base_manifest(cfg, "synth", "");
    m.inputs.push_back(file_ref(cfg.recipe_path));
    m.outputs.push_back(file_ref(out_path));
    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "synth_manifest.json"), m);
    return 0;
}

int cmd_convert(const RunConfig& cfg) {
    const auto t0 = Clock::now();
    if (cfg.input_path.empty() || cfg.output_path.empty())
        throw_config("ConfigError", "convert requires input=<file> and output=<file>");
    ensure_output_dir(cfg);

    auto in = open_input(cfg.input_path);
    ParseOptions popt;
    popt.single_block_is_spin = cfg.single_block_is_spin;
    auto [grid, roster] =
        with_file_context(cfg.input_path, [&] { return parse_volumetric(in, popt); });
    {
        auto out = open_output(cfg.output_path);
        write_volumetric(out, grid, roster);
        if (!out) throw_config("ConfigError", "write failed: " + cfg.output_path);
    }
    std::cerr << "convert: " << cfg.input_path << " -> " << cfg.output_path << " ("
              << grid.dims[0] << "x" << grid.dims[1] << "x" << grid.dims[2] << ")\n";

    RunManifest m = base_manifest(cfg, "convert", "");
    m.inputs.push_back(file_ref(cfg.input_path));
    m.outputs.push_back(file_ref(cfg.output_path));
    m.timings_ms = ms_since(t0);
    write_manifest(join_path(cfg.output_dir, "convert_manifest.json"), m);
    return 0;
}

} // namespace hfx
