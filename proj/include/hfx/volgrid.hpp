#pragma once
#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hfx/geometry.hpp"

namespace hfx {

// Atom header of a density file. Positions are fractional, wrapped to [0,1).
struct AtomRoster {
    std::vector<std::pair<std::string, int>> species; // (symbol, count), file order
    std::vector<Vec3> positions;

    int total() const {
        int n = 0;
        for (auto& s : species) n += s.second;
        return n;
    }
    std::string species_of(int idx) const; // symbol owning position index idx
    void validate() const;
};

// Scalar field on a regular grid over the cell. values[flat], flat index
// fastest along a1: flat = i + n1*(j + n2*k), sample point at fractional
// (i/n1, j/n2, k/n3). Units: electrons / Angstrom^3 (spin up minus down).
struct VolumetricGrid {
    CellGeometry cell;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<double> values;

    size_t size() const { return size_t(dims[0]) * dims[1] * dims[2]; }
    double voxel_volume() const { return cell.volume() / (double(dims[0]) * dims[1] * dims[2]); }
    Vec3 spacing() const; // per-axis step length |a_i| / n_i

    Vec3 frac_of(int i, int j, int k) const {
        return Vec3(double(i) / dims[0], double(j) / dims[1], double(k) / dims[2]);
    }
    double& at(int i, int j, int k) { return values[size_t(i) + size_t(dims[0]) * (j + size_t(dims[1]) * k)]; }
    double at(int i, int j, int k) const { return values[size_t(i) + size_t(dims[0]) * (j + size_t(dims[1]) * k)]; }

    double integral() const; // sum * voxel volume
    void validate() const;
};

struct ParseOptions {
    bool single_block_is_spin = false; // accept a one-block file as spin density
};

// CHGCAR-format reader. Two-block files: first block total, SECOND block spin;
// the second is returned. Raw values are density * cell volume and are
// normalized to e/A^3 here. Augmentation sections between blocks are skipped.
std::pair<VolumetricGrid, AtomRoster> parse_volumetric(std::istream& in,
                                                       const ParseOptions& opt = {});

// Emits a two-block file (total block copied from spin) so that
// parse_volumetric(write_volumetric(g)) == g at printed precision.
void write_volumetric(std::ostream& out, const VolumetricGrid& grid, const AtomRoster& roster);

// Single-block variant used for field components; parse with single_block_is_spin.
void write_volumetric_single(std::ostream& out, const VolumetricGrid& grid,
                             const AtomRoster& roster);

} // namespace hfx
