#pragma once
#include <optional>
#include <string>
#include <vector>

#include "hfx/geometry.hpp"
#include "hfx/volgrid.hpp"

namespace hfx {

enum class Region { in_cell, support };

struct Site {
    Vec3 pos = Vec3::Zero(); // Cartesian, Angstrom
    std::string species;
    Region region = Region::in_cell;
    int index = -1;          // in-cell: roster order; support: appended after
    double distance = 0;     // from defect center
};

struct SiteSet {
    std::vector<Site> sites; // sorted by (distance, lexicographic position)
    Vec3 defect_center = Vec3::Zero();
    double cutoff = 0;
};

// Vacancy + substitutional defect on the pristine motif. Positions are
// fractional w.r.t. the supercell. axis is the symmetry axis used for
// A_zz / A_z reporting (unit vector, crystal Cartesian frame).
struct DefectSpec {
    Vec3 vacancy_frac = Vec3(0.5, 0.5, 0.5);
    Vec3 substitution_frac = Vec3(0.5, 0.5, 0.5);
    std::string substitution_species = "N";
    Vec3 axis = Vec3(1, 1, 1).normalized();
};

// Nuclear sites inside the cutoff sphere: supercell sites (vacancy removed,
// substitution applied) plus the aligned ideal lattice outside the cell.
//
// pristine: the ideal crystal motif of the supercell (fractional positions);
//           used to build the support lattice, and the in-cell sites unless
//           in_cell_override is given.
// defect:   nullptr means no vacancy/substitution (plain lattice).
// in_cell_override: relaxed roster for in-cell positions (already containing
//           the defect, e.g. from the density file header); used as-is.
// center_override: defect center; default is the vacancy/substitution midpoint
//           (or the cell center when defect is null).
SiteSet generate_site_set(const CellGeometry& cell, const AtomRoster& pristine,
                          const DefectSpec* defect, double cutoff,
                          const AtomRoster* in_cell_override = nullptr,
                          const std::optional<Vec3>& center_override = std::nullopt);

// Half-open fractional interval [0,1) decides in_cell vs support.
// Positions beyond the cutoff sphere raise OutOfDomain.
Region classify_site(const SiteSet& set, const CellGeometry& cell, const Vec3& pos);

// Conventional diamond cell, 8-site basis (fcc x 2-atom motif), fractional.
// The cubic edge enters through the CellGeometry this is used with.
AtomRoster diamond_conventional(const std::string& symbol = "C");

// Replicates a one-cell basis nx x ny x nz times into supercell fractional
// coordinates (positions divided by the replication factors).
AtomRoster replicate_motif(const AtomRoster& basis, int nx, int ny, int nz);

} // namespace hfx
