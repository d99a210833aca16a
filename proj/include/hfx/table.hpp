#pragma once
#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "hfx/tensor.hpp"

namespace hfx {

// One row of the per-site data product. Tensor in the crystal frame, MHz;
// A_zz and A_z are the defect-axis-frame scalars.
struct SiteResult {
    int site_index = -1;
    std::string species; // element symbol at the site
    std::string isotope; // isotope whose gamma was applied
    bool in_cell = false;
    Vec3 pos = Vec3::Zero(); // Cartesian, Angstrom
    double distance = 0.0;   // from the defect center, Angstrom
    Sym3 a_mhz;              // full tensor (contact + dipolar + one-center)
    double fc_mhz = 0.0;
    bool contact_present = false;
    bool one_center_present = false;
    double a_zz_mhz = 0.0;
    double a_z_mhz = 0.0;
};

struct TableMeta {
    std::string unit = "MHz"; // MHz or kHz; stored values use this unit
    double lattice_parameter = 0.0;
    std::array<int, 3> grid_dims = {0, 0, 0};
    std::string backend;
    std::string exclusion; // e.g. "voxel_center C=0.79 N=0.79" or "none"
    std::string constants_version;
    Vec3 axis = Vec3::Zero();
    Vec3 defect_center = Vec3::Zero();
};

// CSV with a '#'-prefixed metadata header. Rows sorted by (distance, site
// index); all numeric fields printed with 12 significant digits so rewrites
// of the same data are byte-identical. Values are written in meta.unit
// (rows are given in MHz; kHz scales by 1000 on write).
void write_tensor_table(std::ostream& out, const TableMeta& meta, std::vector<SiteResult> rows);

struct TensorTable {
    TableMeta meta;
    std::vector<SiteResult> rows; // normalized back to MHz on read
};

// Inverse of write_tensor_table. Any structural problem raises NotComputed:
// the caller asked to consume a table that does not (validly) exist.
TensorTable read_tensor_table(std::istream& in);

} // namespace hfx
