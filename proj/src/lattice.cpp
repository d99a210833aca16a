#include "hfx/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "hfx/errors.hpp"

namespace hfx {

namespace {

bool frac_close(const Vec3& a, const Vec3& b, double tol) {
    // periodic comparison on fractional coordinates
    for (int i = 0; i < 3; ++i) {
        double d = std::fabs(a[i] - b[i]);
        d = std::min(d, std::fabs(d - 1.0));
        if (d > tol) return false;
    }
    return true;
}

bool pos_less(const Vec3& a, const Vec3& b) {
    for (int i = 0; i < 3; ++i) {
        if (a[i] < b[i] - 1e-12) return true;
        if (a[i] > b[i] + 1e-12) return false;
    }
    return false;
}

void sort_sites(std::vector<Site>& sites) {
    std::sort(sites.begin(), sites.end(), [](const Site& a, const Site& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return pos_less(a.pos, b.pos);
    });
}

} // namespace

SiteSet generate_site_set(const CellGeometry& cell, const AtomRoster& pristine,
                          const DefectSpec* defect, double cutoff,
                          const AtomRoster* in_cell_override,
                          const std::optional<Vec3>& center_override) {
    cell.validate();
    pristine.validate();
    if (!(cutoff > 0)) throw_config("ConfigError", "cutoff must be positive");

    const double frac_tol = 1e-3;
    if (defect && frac_close(defect->vacancy_frac, defect->substitution_frac, frac_tol))
        throw_config("BadDefectSpec", "vacancy and substitution must be distinct sites");

    Vec3 center;
    if (center_override) {
        center = *center_override;
    } else if (defect) {
        center = 0.5 * (cell.frac_to_cart(defect->vacancy_frac) +
                        cell.frac_to_cart(defect->substitution_frac));
    } else {
        center = cell.frac_to_cart(Vec3(0.5, 0.5, 0.5));
    }

    // In-cell sites. With an override roster the defect is assumed baked in.
    std::vector<Site> sites;
    int n_in = 0;
    if (in_cell_override) {
        in_cell_override->validate();
        const AtomRoster& r = *in_cell_override;
        for (int i = 0; i < int(r.positions.size()); ++i) {
            Vec3 p = cell.frac_to_cart(r.positions[i]);
            double d = (p - center).norm();
            if (d <= cutoff)
                sites.push_back({p, r.species_of(i), Region::in_cell, i, d});
        }
        n_in = int(r.positions.size());
    } else {
        bool vacancy_found = false, subst_found = false;
        for (int i = 0; i < int(pristine.positions.size()); ++i) {
            const Vec3& f = pristine.positions[i];
            std::string sym = pristine.species_of(i);
            if (defect && frac_close(f, defect->vacancy_frac, frac_tol)) {
                vacancy_found = true;
                continue;
            }
            if (defect && frac_close(f, defect->substitution_frac, frac_tol)) {
                subst_found = true;
                sym = defect->substitution_species;
            }
            Vec3 p = cell.frac_to_cart(f);
            double d = (p - center).norm();
            if (d <= cutoff)
                sites.push_back({p, sym, Region::in_cell, i, d});
        }
        if (defect && !vacancy_found)
            throw_config("BadDefectSpec", "vacancy position matches no basis site");
        if (defect && !subst_found)
            throw_config("BadDefectSpec", "substitution position matches no basis site");
        n_in = int(pristine.positions.size());
    }

    // Support lattice: pristine motif translated by nonzero integer multiples
    // of the supercell vectors, kept when inside the cutoff sphere. A nonzero
    // translation of an in-cell fractional position is always outside [0,1)^3.
    int lim[3];
    for (int i = 0; i < 3; ++i) {
        double alen = cell.lattice.row(i).norm();
        lim[i] = int(std::ceil(cutoff / alen)) + 1;
    }
    // circumscribed radius of the cell around its midpoint, for the quick reject
    double cell_rad = 0;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int sz : {-1, 1})
                cell_rad = std::max(cell_rad,
                                    0.5 * (sx * cell.lattice.row(0) + sy * cell.lattice.row(1) +
                                           sz * cell.lattice.row(2)).norm());
    std::vector<Site> support;
    for (int tz = -lim[2]; tz <= lim[2]; ++tz)
        for (int ty = -lim[1]; ty <= lim[1]; ++ty)
            for (int tx = -lim[0]; tx <= lim[0]; ++tx) {
                if (tx == 0 && ty == 0 && tz == 0) continue;
                Vec3 tf(tx, ty, tz);
                Vec3 mid = cell.frac_to_cart(tf + Vec3(0.5, 0.5, 0.5));
                if ((mid - center).norm() > cutoff + cell_rad + 1e-9) continue;
                for (size_t b = 0; b < pristine.positions.size(); ++b) {
                    Vec3 p = cell.frac_to_cart(pristine.positions[b] + tf);
                    double d = (p - center).norm();
                    if (d <= cutoff)
                        support.push_back({p, pristine.species_of(int(b)), Region::support, 0, d});
                }
            }

    sort_sites(support);
    for (size_t i = 0; i < support.size(); ++i) support[i].index = n_in + int(i);
    sites.insert(sites.end(), support.begin(), support.end());
    sort_sites(sites);

    // Duplicate guard: any pair closer than 0.1 A indicates inconsistent input.
    // Sites are distance-sorted, so candidates sit in a narrow window.
    const double dup = 0.1;
    for (size_t i = 0; i < sites.size(); ++i)
        for (size_t j = i + 1; j < sites.size() && sites[j].distance - sites[i].distance < dup; ++j)
            if ((sites[i].pos - sites[j].pos).norm() < dup)
                throw_compute("DuplicateSites", "two sites closer than 0.1 A");

    if (support.empty())
        std::cerr << "warning: EmptySupport: cutoff " << cutoff
                  << " A leaves no support sites outside the cell\n";

    SiteSet out;
    out.sites = std::move(sites);
    out.defect_center = center;
    out.cutoff = cutoff;
    return out;
}

Region classify_site(const SiteSet& set, const CellGeometry& cell, const Vec3& pos) {
    if ((pos - set.defect_center).norm() > set.cutoff + 1e-9)
        throw_compute("OutOfDomain", "position beyond the cutoff sphere");
    return cell.contains(pos) ? Region::in_cell : Region::support;
}

AtomRoster diamond_conventional(const std::string& symbol) {
    AtomRoster r;
    r.species = {{symbol, 8}};
    const double q = 0.25;
    r.positions = {
        {0, 0, 0},       {0.5, 0.5, 0}, {0.5, 0, 0.5},     {0, 0.5, 0.5},
        {q, q, q},       {q + 0.5, q + 0.5, q}, {q + 0.5, q, q + 0.5}, {q, q + 0.5, q + 0.5},
    };
    return r;
}

AtomRoster replicate_motif(const AtomRoster& basis, int nx, int ny, int nz) {
    if (nx <= 0 || ny <= 0 || nz <= 0)
        throw_config("ConfigError", "replication factors must be positive");
    AtomRoster out;
    // keep per-species grouping so species_of stays valid
    for (auto& [sym, count] : basis.species)
        out.species.emplace_back(sym, count * nx * ny * nz);
    for (auto& [sym, count] : basis.species) {
        (void)count;
        for (int b = 0; b < int(basis.positions.size()); ++b) {
            if (basis.species_of(b) != sym) continue;
            for (int k = 0; k < nz; ++k)
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i)
                        out.positions.push_back(Vec3((basis.positions[b][0] + i) / nx,
                                                     (basis.positions[b][1] + j) / ny,
                                                     (basis.positions[b][2] + k) / nz));
        }
    }
    return out;
}

} // namespace hfx
