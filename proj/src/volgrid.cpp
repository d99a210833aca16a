#include "hfx/volgrid.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "hfx/errors.hpp"

namespace hfx {

std::string AtomRoster::species_of(int idx) const {
    int n = 0;
    for (auto& [sym, count] : species) {
        n += count;
        if (idx < n) return sym;
    }
    throw_compute("OutOfDomain", "roster index " + std::to_string(idx) + " out of range");
}

void AtomRoster::validate() const {
    if (total() != int(positions.size()))
        throw_parse("MalformedGrid", "species counts do not match number of positions");
}

Vec3 VolumetricGrid::spacing() const {
    Vec3 s;
    for (int i = 0; i < 3; ++i) s[i] = cell.lattice.row(i).norm() / dims[i];
    return s;
}

double VolumetricGrid::integral() const {
    // plain pairwise-ish sum is fine here; this is informational
    long double acc = 0;
    for (double v : values) acc += v;
    return double(acc) * voxel_volume();
}

void VolumetricGrid::validate() const {
    cell.validate();
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
        throw_parse("BadGeometry", "grid dims must be positive");
    if (values.size() != size_t(dims[0]) * dims[1] * dims[2])
        throw_parse("MalformedGrid", "value count does not match dims");
}

namespace {

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line))
        throw_parse("MalformedGrid", std::string("unexpected end of file reading ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

std::vector<std::string> tokens_of(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string t;
    while (ss >> t) out.push_back(t);
    return out;
}

double to_double(const std::string& t, const char* what) {
    try {
        size_t pos = 0;
        double v = std::stod(t, &pos);
        if (pos != t.size()) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw_parse("MalformedGrid", std::string("expected a number for ") + what + ", got '" + t + "'");
    }
}

bool to_int_strict(const std::string& t, long& out) {
    try {
        size_t pos = 0;
        out = std::stol(t, &pos);
        return pos == t.size();
    } catch (const std::exception&) {
        return false;
    }
}

Vec3 wrap_frac(Vec3 f) {
    for (int i = 0; i < 3; ++i) {
        f[i] -= std::floor(f[i]);
        if (f[i] >= 1.0) f[i] = 0.0; // floor(1-eps) edge
    }
    return f;
}

// Reads dims[0]*dims[1]*dims[2] whitespace-separated values following the
// current stream position. Layout within lines is free.
void read_block(std::istream& in, size_t n, std::vector<double>& out) {
    out.resize(n);
    for (size_t i = 0; i < n; ++i) {
        if (!(in >> out[i]))
            throw_parse("MalformedGrid", "density block ended after " + std::to_string(i) +
                                             " of " + std::to_string(n) + " values");
    }
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
}

} // namespace

std::pair<VolumetricGrid, AtomRoster> parse_volumetric(std::istream& in, const ParseOptions& opt) {
    next_line(in, "comment line");
    double scale = to_double(tokens_of(next_line(in, "scale factor")).at(0), "scale factor");
    if (!(scale > 0)) throw_parse("BadGeometry", "scale factor must be positive");

    CellGeometry cell;
    for (int r = 0; r < 3; ++r) {
        auto t = tokens_of(next_line(in, "lattice vector"));
        if (t.size() < 3) throw_parse("MalformedGrid", "lattice vector line needs 3 numbers");
        for (int c = 0; c < 3; ++c) cell.lattice(r, c) = scale * to_double(t[c], "lattice vector");
    }
    if (!(cell.lattice.determinant() > 1e-12))
        throw_parse("BadGeometry", "singular or left-handed lattice");

    AtomRoster roster;
    auto symtok = tokens_of(next_line(in, "species symbols"));
    if (symtok.empty()) throw_parse("MalformedGrid", "species symbols line is empty");
    auto cnttok = tokens_of(next_line(in, "species counts"));
    if (cnttok.size() != symtok.size())
        throw_parse("MalformedGrid", "species counts line does not match symbols line");
    for (size_t i = 0; i < symtok.size(); ++i) {
        long c;
        if (!to_int_strict(cnttok[i], c) || c < 0)
            throw_parse("MalformedGrid", "bad species count '" + cnttok[i] + "'");
        roster.species.emplace_back(symtok[i], int(c));
    }

    std::string mode = next_line(in, "coordinate mode");
    char m0 = 0;
    for (char ch : mode)
        if (!std::isspace(static_cast<unsigned char>(ch))) { m0 = char(std::tolower(ch)); break; }
    bool cartesian;
    if (m0 == 'd') cartesian = false;
    else if (m0 == 'c' || m0 == 'k') cartesian = true;
    else throw_parse("MalformedGrid", "expected Direct or Cartesian, got '" + mode + "'");

    int natoms = roster.total();
    for (int a = 0; a < natoms; ++a) {
        auto t = tokens_of(next_line(in, "atom position"));
        if (t.size() < 3) throw_parse("MalformedGrid", "atom position line needs 3 numbers");
        Vec3 p(to_double(t[0], "position"), to_double(t[1], "position"), to_double(t[2], "position"));
        if (cartesian) p = cell.cart_to_frac(p * scale);
        roster.positions.push_back(wrap_frac(p));
    }

    // blank separator line(s) before the grid dims
    std::string line;
    std::vector<std::string> t;
    do {
        line = next_line(in, "grid dims");
        t = tokens_of(line);
    } while (t.empty());
    if (t.size() != 3) throw_parse("MalformedGrid", "grid dims line needs 3 integers");

    VolumetricGrid grid;
    grid.cell = cell;
    for (int i = 0; i < 3; ++i) {
        long d;
        if (!to_int_strict(t[i], d) || d <= 0)
            throw_parse("BadGeometry", "grid dims must be positive integers");
        grid.dims[i] = int(d);
    }
    size_t n = size_t(grid.dims[0]) * grid.dims[1] * grid.dims[2];

    std::vector<double> block1;
    read_block(in, n, block1);

    // Look for a second block: scan for a line repeating the dims triplet.
    // Augmentation sections in between (different token shape) are skipped.
    bool have_second = false;
    std::vector<double> block2;
    while (std::getline(in, line)) {
        auto lt = tokens_of(line);
        if (lt.size() == 3) {
            long a, b, c;
            if (to_int_strict(lt[0], a) && to_int_strict(lt[1], b) && to_int_strict(lt[2], c) &&
                a == grid.dims[0] && b == grid.dims[1] && c == grid.dims[2]) {
                read_block(in, n, block2);
                have_second = true;
                break;
            }
        }
    }

    if (!have_second && !opt.single_block_is_spin)
        throw_parse("MissingSpinBlock",
                    "file has a single density block; pass single-block-is-spin to accept it");

    grid.values = have_second ? std::move(block2) : std::move(block1);
    double vol = cell.volume();
    for (double& v : grid.values) v /= vol; // raw CHGCAR values are density * volume
    grid.validate();
    roster.validate();
    return {std::move(grid), std::move(roster)};
}

namespace {

void write_header(std::ostream& out, const VolumetricGrid& grid, const AtomRoster& roster) {
    char buf[128];
    out << "volumetric spin density grid\n";
    out << "   1.0\n";
    for (int r = 0; r < 3; ++r) {
        std::snprintf(buf, sizeof buf, " %20.12f %20.12f %20.12f\n", grid.cell.lattice(r, 0),
                      grid.cell.lattice(r, 1), grid.cell.lattice(r, 2));
        out << buf;
    }
    std::string syms, cnts;
    for (auto& [s, c] : roster.species) {
        syms += "  " + s;
        cnts += "  " + std::to_string(c);
    }
    out << syms << "\n" << cnts << "\n" << "Direct\n";
    for (auto& p : roster.positions) {
        std::snprintf(buf, sizeof buf, " %18.12f %18.12f %18.12f\n", p[0], p[1], p[2]);
        out << buf;
    }
    out << "\n";
}

void write_block(std::ostream& out, const VolumetricGrid& grid) {
    char buf[32];
    out << grid.dims[0] << " " << grid.dims[1] << " " << grid.dims[2] << "\n";
    double vol = grid.cell.volume();
    size_t n = grid.values.size();
    for (size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof buf, " %.11E", grid.values[i] * vol);
        out << buf;
        if (i % 5 == 4 || i + 1 == n) out << "\n";
    }
}

} // namespace

void write_volumetric(std::ostream& out, const VolumetricGrid& grid, const AtomRoster& roster) {
    grid.validate();
    roster.validate();
    write_header(out, grid, roster);
    write_block(out, grid); // block 1: total (same field; spin is what we carry)
    write_block(out, grid); // block 2: spin
}

void write_volumetric_single(std::ostream& out, const VolumetricGrid& grid,
                             const AtomRoster& roster) {
    grid.validate();
    roster.validate();
    write_header(out, grid, roster);
    write_block(out, grid);
}

} // namespace hfx
