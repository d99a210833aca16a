#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hfx/assembly.hpp"
#include "hfx/errors.hpp"

namespace hfx {

void SpinSystem::validate() const {
    const double two_s = 2.0 * S;
    if (!(S > 0) || std::fabs(two_s - std::round(two_s)) > 1e-9)
        throw_config("ConfigError", "electron spin S must make 2S a positive integer");
    if (std::fabs(axis.norm() - 1.0) > 1e-8)
        throw_config("BadAxis", "defect axis must be a unit vector");
}

const NuclearSpecies& ConstantsTable::nucleus(const std::string& isotope) const {
    auto it = nuclei.find(isotope);
    if (it == nuclei.end())
        throw_config("ConfigError", "no gyromagnetic ratio for isotope " + isotope);
    if (it->second.gamma == 0.0)
        throw_config("ConfigError", "isotope " + isotope + " has zero gyromagnetic ratio");
    return it->second;
}

ConstantsTable ConstantsTable::codata2018() {
    ConstantsTable t;
    t.version = "codata-2018";
    t.gamma_e = 1.76085963023e11;
    t.hbar = 1.054571817e-34;
    t.h = 6.62607015e-34;
    t.mu0_over_4pi = 1.00000000055e-7;
    t.nuclei["13C"] = {"13C", 6.728284e7, 0.5};
    t.nuclei["14N"] = {"14N", 1.9337792e7, 1.0};
    t.nuclei["15N"] = {"15N", -2.71261804e7, 0.5};
    t.nuclei["1H"] = {"1H", 2.6752218744e8, 0.5};
    return t;
}

ConstantsTable ConstantsTable::load(std::istream& in) {
    ConstantsTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw_config("ConfigError",
                             "constants file line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            if (a == std::string::npos) return std::string();
            const size_t b = s.find_last_not_of(" \t\r");
            return s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw_config("ConfigError",
                         "constants file line " + std::to_string(lineno) + ": empty key or value");

        auto num = [&](const std::string& s) {
            try {
                size_t pos = 0;
                const double x = std::stod(s, &pos);
                if (pos != s.size()) throw std::invalid_argument(s);
                return x;
            } catch (const std::exception&) {
                throw_config("ConfigError", "constants file line " + std::to_string(lineno) +
                                                ": bad number '" + s + "'");
            }
        };

        if (key == "version") {
            t.version = val;
        } else if (key == "gamma_e") {
            t.gamma_e = num(val);
        } else if (key == "hbar") {
            t.hbar = num(val);
        } else if (key == "h") {
            t.h = num(val);
        } else if (key == "mu0_over_4pi") {
            t.mu0_over_4pi = num(val);
        } else if (key.rfind("gamma.", 0) == 0) {
            const std::string iso = key.substr(6);
            t.nuclei[iso].isotope = iso;
            t.nuclei[iso].gamma = num(val);
        } else if (key.rfind("spin.", 0) == 0) {
            const std::string iso = key.substr(5);
            t.nuclei[iso].isotope = iso;
            t.nuclei[iso].spin_I = num(val);
        } else {
            throw_config("ConfigError",
                         "constants file line " + std::to_string(lineno) + ": unknown key " + key);
        }
    }
    if (!(t.gamma_e > 0) || !(t.hbar > 0) || !(t.h > 0) || !(t.mu0_over_4pi > 0) ||
        t.version.empty())
        throw_config("ConfigError", "constants file is missing required entries");
    return t;
}

double dipolar_prefactor_mhz(const ConstantsTable& constants, const NuclearSpecies& species,
                             double S) {
    if (!(S > 0)) throw_config("ConfigError", "electron spin S must be positive");
    return constants.mu0_over_4pi * species.gamma * constants.gamma_e * constants.hbar *
           constants.hbar / (2.0 * S * constants.h) * 1e30 / 1e6;
}

HyperfineTensor assemble_tensor(const DipoleTensor& w, const std::optional<double>& fc_mhz,
                                const std::optional<Sym3>& oc_mhz, const SpinSystem& spin,
                                const NuclearSpecies& species, const ConstantsTable& constants,
                                bool site_in_cell, bool allow_support_contact) {
    spin.validate();
    if (!site_in_cell && (fc_mhz || oc_mhz) && !allow_support_contact)
        throw_compute("InconsistentInput",
                      "contact or one-center value supplied for a support-lattice site, where the "
                      "in-cell density approximation treats both as zero");

    HyperfineTensor t;
    t.dipolar = w.w * dipolar_prefactor_mhz(constants, species, spin.S);
    if (fc_mhz) {
        t.fermi_contact = *fc_mhz;
        t.contact_present = true;
    }
    if (oc_mhz) {
        t.one_center = *oc_mhz;
        t.one_center_present = true;
    }
    t.a = t.dipolar;
    t.a += t.one_center;
    t.a.xx += t.fermi_contact;
    t.a.yy += t.fermi_contact;
    t.a.zz += t.fermi_contact;
    return t;
}

namespace {

// Right-handed orthonormal frame (u, v, axis), deterministic in the axis.
void axis_frame(const Vec3& axis, Vec3& u, Vec3& v) {
    if (std::fabs(axis.norm() - 1.0) > 1e-8)
        throw_config("BadAxis", "reporting axis must be a unit vector");
    const Vec3 seed = std::fabs(axis[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    u = axis.cross(seed).normalized();
    v = axis.cross(u);
}

} // namespace

double splitting_Az(const Sym3& a_mhz, const Vec3& axis) {
    Vec3 u, v;
    axis_frame(axis, u, v);
    Mat3 rot;
    rot.row(0) = u;
    rot.row(1) = v;
    rot.row(2) = axis;
    const Mat3 af = rot * a_mhz.mat() * rot.transpose();
    return std::sqrt(af(0, 2) * af(0, 2) + af(1, 2) * af(1, 2) + af(2, 2) * af(2, 2));
}

double a_zz(const Sym3& a_mhz, const Vec3& axis) {
    Vec3 u, v;
    axis_frame(axis, u, v); // shares the BadAxis check
    return axis.dot(a_mhz.mat() * axis);
}

std::map<int, ContactEntry> ingest_contact_table(std::istream& in, int n_in_cell_sites) {
    std::map<int, ContactEntry> out;
    std::string line;
    int lineno = 0;
    bool header_allowed = true;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (line.find_first_not_of(" \t\r,") == std::string::npos) continue;

        std::vector<std::string> fields;
        std::string cur;
        std::istringstream ls(line);
        while (std::getline(ls, cur, ',')) {
            const size_t a = cur.find_first_not_of(" \t\r");
            const size_t b = cur.find_last_not_of(" \t\r");
            fields.push_back(a == std::string::npos ? std::string() : cur.substr(a, b - a + 1));
        }

        // One optional header row: first field not an integer.
        if (header_allowed) {
            header_allowed = false;
            try {
                size_t pos = 0;
                (void)std::stoi(fields[0], &pos);
                if (pos != fields[0].size()) throw std::invalid_argument(fields[0]);
            } catch (const std::exception&) {
                continue;
            }
        }

        auto bad = [&](const std::string& why) {
            throw_parse("BadContactTable", "line " + std::to_string(lineno) + ": " + why);
        };
        if (fields.size() != 2 && fields.size() != 11)
            bad("expected 2 columns (index, fc) or 11 (index, fc, 9 one-center entries), got " +
                std::to_string(fields.size()));

        int idx = 0;
        std::vector<double> vals;
        try {
            size_t pos = 0;
            idx = std::stoi(fields[0], &pos);
            if (pos != fields[0].size()) throw std::invalid_argument(fields[0]);
            for (size_t f = 1; f < fields.size(); ++f) {
                const double x = std::stod(fields[f], &pos);
                if (pos != fields[f].size()) throw std::invalid_argument(fields[f]);
                vals.push_back(x);
            }
        } catch (const Error&) {
            throw;
        } catch (const std::exception&) {
            bad("unparseable numeric field");
        }

        if (idx < 0 || idx >= n_in_cell_sites)
            bad("site index " + std::to_string(idx) + " outside the in-cell roster [0, " +
                std::to_string(n_in_cell_sites) + ")");
        if (out.count(idx)) bad("duplicate site index " + std::to_string(idx));

        ContactEntry e;
        e.fc_mhz = vals[0];
        if (vals.size() == 10) {
            Mat3 m;
            m << vals[1], vals[2], vals[3],
                 vals[4], vals[5], vals[6],
                 vals[7], vals[8], vals[9];
            const Mat3 sym = 0.5 * (m + m.transpose());
            const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
            if (asym > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff()))
                std::cerr << "warning: contact table line " << lineno
                          << ": one-center block not symmetric (max asymmetry " << asym
                          << " MHz), symmetrized as (M + M^T)/2\n";
            e.one_center = Sym3::from_mat(sym);
        }
        out[idx] = e;
    }
    return out;
}

} // namespace hfx
