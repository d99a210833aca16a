#pragma once
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "hfx/tensor.hpp"

namespace hfx {

// Electron spin quantum number plus the defect axis used for A_zz / A_z
// reporting. 2S must be a positive integer.
struct SpinSystem {
    double S = 1.0;
    Vec3 axis = Vec3(1.0, 1.0, 1.0).normalized();

    void validate() const;
};

// One nuclear isotope: signed gyromagnetic ratio in rad s^-1 T^-1 and the
// nuclear spin quantum number.
struct NuclearSpecies {
    std::string isotope; // e.g. "13C"
    double gamma = 0.0;
    double spin_I = 0.0;
};

// Versioned physical constants (SI). Shipped as a data file and compiled in;
// the two must agree, which a test pins.
struct ConstantsTable {
    double gamma_e = 0.0;      // rad s^-1 T^-1, magnitude
    double hbar = 0.0;         // J s
    double h = 0.0;            // J s
    double mu0_over_4pi = 0.0; // T m A^-1
    std::string version;
    std::map<std::string, NuclearSpecies> nuclei; // keyed by isotope label

    const NuclearSpecies& nucleus(const std::string& isotope) const;

    static ConstantsTable codata2018();
    // Flat "key = value" file: version, gamma_e, hbar, h, mu0_over_4pi,
    // gamma.<isotope>, spin.<isotope>. '#' comments allowed.
    static ConstantsTable load(std::istream& in);
};

// MHz per Angstrom^-3 of dipolar integral:
//   (mu0/4pi) * gamma_J * gamma_e * hbar^2 / (2 S h) * 1e30 / 1e6.
// The mu0/4pi factor makes the expression dimensionally an energy; dividing
// by h and 1e6 turns it into MHz, and 1e30 converts A^-3 to m^-3. Signed
// through gamma_J.
double dipolar_prefactor_mhz(const ConstantsTable& constants, const NuclearSpecies& species,
                             double S);

// Full per-site tensor in MHz: isotropic Fermi contact plus traceless
// dipolar part plus the optional one-center correction.
struct HyperfineTensor {
    Sym3 a;                    // fermi_contact * I + dipolar + one_center
    Sym3 dipolar;
    Sym3 one_center;
    double fermi_contact = 0.0;
    bool contact_present = false;
    bool one_center_present = false;
};

// Contact and one-center values are short-range quantities defined by the
// in-cell density, so providing them for a support-lattice site is an
// InconsistentInput error unless explicitly overridden; absent values mean
// zero and are flagged so downstream analyses can segregate those sites.
HyperfineTensor assemble_tensor(const DipoleTensor& w, const std::optional<double>& fc_mhz,
                                const std::optional<Sym3>& oc_mhz, const SpinSystem& spin,
                                const NuclearSpecies& species, const ConstantsTable& constants,
                                bool site_in_cell = true, bool allow_support_contact = false);

// Splitting along the defect axis: rotate the tensor into a frame whose
// z-axis is `axis`, then take the z-column norm sqrt(A_xz^2 + A_yz^2 +
// A_zz^2). Invariant under rotations about the axis. BadAxis unless |axis|
// is 1 within 1e-8.
double splitting_Az(const Sym3& a_mhz, const Vec3& axis);

// zz component in the defect-axis frame, i.e. axis^T A axis.
double a_zz(const Sym3& a_mhz, const Vec3& axis);

struct ContactEntry {
    double fc_mhz = 0.0;
    std::optional<Sym3> one_center; // MHz, symmetrized on ingest
};

// CSV rows "site_index, fc_MHz" or "site_index, fc_MHz, oc_xx .. oc_zz"
// (nine row-major entries). Indices key the in-cell roster order; missing
// rows mean contact absent. Out-of-range or duplicate indices, or any other
// malformed row, raise BadContactTable. Non-symmetric one-center blocks are
// symmetrized as (M + M^T)/2 with a warning.
std::map<int, ContactEntry> ingest_contact_table(std::istream& in, int n_in_cell_sites);

} // namespace hfx
