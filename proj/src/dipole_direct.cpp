#include <omp.h>

#include <algorithm>
#include <cmath>

#include "hfx/dipole.hpp"
#include "hfx/errors.hpp"

namespace hfx {

double ExclusionSpec::radius_for(const std::string& species) const {
    auto it = radius_by_species.find(species);
    if (it == radius_by_species.end())
        throw_config("ConfigError", "no exclusion radius configured for species " + species);
    return it->second;
}

void ExclusionSpec::validate() const {
    if (mode != Mode::voxel_center) return;
    for (auto& [sym, r] : radius_by_species)
        if (!(r > 0))
            throw_config("ConfigError", "exclusion radius for " + sym + " must be positive");
}

namespace {

constexpr double kSingularDist = 1e-6;           // Angstrom
constexpr double kSingularDist2 = kSingularDist * kSingularDist;

// Core voxel sum for one probe. Flat-index (x-fastest) traversal, Kahan
// accumulation, zero voxels skipped. excl_r2 < 0 means no exclusion sphere;
// then any voxel within kSingularDist of the probe is an error (counted by
// the caller via the return value).
struct ProbeSum {
    Sym3 w;
    long singular_hits = 0;
};

ProbeSum integrate_probe(const VolumetricGrid& grid, const Vec3& probe, double excl_r2) {
    const int n1 = grid.dims[0], n2 = grid.dims[1], n3 = grid.dims[2];
    const Vec3 s1 = grid.cell.lattice.row(0) / n1;
    const Vec3 s2 = grid.cell.lattice.row(1) / n2;
    const Vec3 s3 = grid.cell.lattice.row(2) / n3;
    const Vec3 base = grid.cell.origin - probe;

    KahanSym3 acc;
    double kv[6];
    long singular = 0;
    const double* v = grid.values.data();
    size_t flat = 0;
    for (int k = 0; k < n3; ++k) {
        for (int j = 0; j < n2; ++j) {
            const Vec3 row = base + double(j) * s2 + double(k) * s3;
            for (int i = 0; i < n1; ++i, ++flat) {
                const double sig = v[flat];
                const double dx = row[0] + i * s1[0];
                const double dy = row[1] + i * s1[1];
                const double dz = row[2] + i * s1[2];
                const double r2 = dx * dx + dy * dy + dz * dz;
                if (excl_r2 >= 0.0) {
                    if (r2 < excl_r2) continue;
                } else if (r2 < kSingularDist2) {
                    ++singular;
                    continue;
                }
                if (sig == 0.0) continue;
                dipole_kernel(dx, dy, dz, kv);
                acc.add(kv, sig);
            }
        }
    }
    ProbeSum out;
    out.w = acc.result(grid.voxel_volume());
    out.singular_hits = singular;
    return out;
}

DipoleTensor direct_one(const VolumetricGrid& grid, const Vec3& probe, const ExclusionSpec& excl,
                        const std::string& species) {
    grid.validate();
    excl.validate();
    const bool in_cell = grid.cell.contains(probe);
    double excl_r2 = -1.0;
    if (in_cell && excl.mode == ExclusionSpec::Mode::voxel_center) {
        double r = excl.radius_for(species);
        excl_r2 = r * r;
    }
    ProbeSum s = integrate_probe(grid, probe, excl_r2);
    if (excl_r2 < 0.0 && in_cell && s.singular_hits > 0)
        throw_compute("SingularKernel",
                      std::to_string(s.singular_hits) +
                          " voxel(s) within 1e-6 A of the probe and no exclusion sphere");
    return DipoleTensor{s.w, probe, DipoleBackend::isolated_direct};
}

} // namespace

DipoleTensor dipole_isolated_direct_serial(const VolumetricGrid& grid, const Vec3& probe,
                                           const ExclusionSpec& excl,
                                           const std::string& probe_species) {
    return direct_one(grid, probe, excl, probe_species);
}

DipoleTensor dipole_isolated_direct(const VolumetricGrid& grid, const Vec3& probe,
                                    const ExclusionSpec& excl, const std::string& probe_species) {
    // Single-probe evaluation is serial by design: parallelism lives at the
    // probe level, and a fixed per-probe order keeps results thread-count
    // independent.
    return direct_one(grid, probe, excl, probe_species);
}

std::vector<DipoleTensor> dipole_isolated_direct_many(const VolumetricGrid& grid,
                                                      const std::vector<Vec3>& probes,
                                                      const std::vector<std::string>& probe_species,
                                                      const ExclusionSpec& excl,
                                                      const ExecContext& ctx) {
    grid.validate();
    excl.validate();
    if (!probe_species.empty() && probe_species.size() != probes.size())
        throw_config("ConfigError", "probe_species must be empty or match probes");

    const int nt = ctx.threads > 0 ? ctx.threads : omp_get_max_threads();
    std::vector<DipoleTensor> out(probes.size());
    std::exception_ptr err;

#pragma omp parallel for schedule(static) num_threads(nt)
    for (long p = 0; p < long(probes.size()); ++p) {
        try {
            const std::string& sp = probe_species.empty() ? std::string("C") : probe_species[p];
            out[p] = direct_one(grid, probes[p], excl, sp);
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

} // namespace hfx
