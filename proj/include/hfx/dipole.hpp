#pragma once
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hfx/tensor.hpp"
#include "hfx/volgrid.hpp"

namespace hfx {

// Near-field exclusion around an in-cell probe (one sphere per species).
struct ExclusionSpec {
    enum class Mode { voxel_center, none };
    Mode mode = Mode::voxel_center;
    std::map<std::string, double> radius_by_species = {{"C", 0.79}, {"N", 0.79}};

    double radius_for(const std::string& species) const;
    void validate() const;
};

// Worker-pool context handed down from the CLI. threads <= 0 means the
// OpenMP default. All parallel paths merge deterministically, so results do
// not depend on this value.
struct ExecContext {
    int threads = 0;
};

// Real-space voxel sum over the cell, fixed flat-index order, compensated
// accumulation. In-cell probes get the exclusion sphere; out-of-cell probes
// integrate the full cell. Exactly-zero voxels are skipped (documented: the
// skip is value-based, so traversal order and Kahan state stay reproducible).
DipoleTensor dipole_isolated_direct(const VolumetricGrid& grid, const Vec3& probe,
                                    const ExclusionSpec& excl,
                                    const std::string& probe_species = "C");

// Serial reference: same arithmetic, no OpenMP anywhere in the call tree.
// Kept as the comparison baseline for the parallel paths (bitwise identical).
DipoleTensor dipole_isolated_direct_serial(const VolumetricGrid& grid, const Vec3& probe,
                                           const ExclusionSpec& excl,
                                           const std::string& probe_species = "C");

// Batch over probes, OpenMP-parallel across probes, per-probe order fixed.
// probe_species may be empty (all "C") or one entry per probe.
std::vector<DipoleTensor> dipole_isolated_direct_many(const VolumetricGrid& grid,
                                                      const std::vector<Vec3>& probes,
                                                      const std::vector<std::string>& probe_species,
                                                      const ExclusionSpec& excl,
                                                      const ExecContext& ctx = {});

// Zero-padded FFT convolution of the density with the six kernel components.
// Probes are grid points (stride >= 1 per axis). Exclusion is applied by
// subtracting the direct near-field sum around each probe, so results match
// dipole_isolated_direct at every probe. Exclusion mode none is rejected:
// every on-grid probe sits on a voxel center, which the direct backend
// treats as singular without an exclusion sphere.
class FftFieldEngine {
public:
    FftFieldEngine(const VolumetricGrid& grid, size_t memory_limit_bytes = size_t(6) << 30);
    ~FftFieldEngine();
    FftFieldEngine(const FftFieldEngine&) = delete;
    FftFieldEngine& operator=(const FftFieldEngine&) = delete;

    // Tensors at explicit grid points, matching dipole_isolated_direct at
    // each of them (same exclusion decisions, same excluded-voxel set).
    std::vector<DipoleTensor> tensors_at(const std::vector<std::array<int, 3>>& probe_idx,
                                         const ExclusionSpec& excl,
                                         const std::string& probe_species,
                                         const ExecContext& ctx);

    // Full tensor field on the stride sub-grid, exclusion by `excl` per probe
    // (all probes treated as species `probe_species`).
    std::vector<DipoleTensor> field(int stride, const ExclusionSpec& excl,
                                    const std::string& probe_species, const ExecContext& ctx);

    // Raw component grids on the stride sub-grid with only the self voxel
    // excluded (kernel zero at zero displacement). Order: xx yy zz xy xz yz.
    std::vector<VolumetricGrid> component_grids(int stride, const ExecContext& ctx);

private:
    const VolumetricGrid& grid_;
    size_t mem_limit_;
    std::array<int, 3> pad_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
    void convolve_component(int comp, std::vector<double>& out) const;
};

std::vector<DipoleTensor> dipole_isolated_fft(const VolumetricGrid& grid,
                                              const std::vector<std::array<int, 3>>& probe_idx,
                                              const ExclusionSpec& excl,
                                              const ExecContext& ctx = {},
                                              size_t memory_limit_bytes = size_t(6) << 30);

// Reciprocal-space periodic tensor: -4 pi sum_G (G_i G_j / G^2 - delta_ij/3)
// sigma(G) e^{i G R} over the grid's G set. The G = 0 term is dropped
// entirely: it is the only traceless choice and the one that matches the
// spherically ordered image sum (see tests). Probe in fractional coordinates.
// Exact for densities resolved on their grid (spectrally small alias error).
class PeriodicRecip {
public:
    explicit PeriodicRecip(const VolumetricGrid& grid);
    ~PeriodicRecip();
    PeriodicRecip(const PeriodicRecip&) = delete;
    PeriodicRecip& operator=(const PeriodicRecip&) = delete;

    DipoleTensor eval_frac(const Vec3& probe_frac) const;

private:
    std::array<int, 3> dims_;
    CellGeometry cell_;
    Mat3 recip_rows_;
    std::vector<double> spectrum_; // interleaved re,im of sigma(G)/N, r2c layout
};

DipoleTensor dipole_periodic_recip(const VolumetricGrid& grid, const Vec3& probe_frac);

// Brute-force periodic oracle: spherically ordered direct sum of the isolated
// backend over image translations |T| <= shells * (shortest cell vector).
// Optional per-shell Cauchy deltas (max |increment| over each unit shell).
DipoleTensor dipole_periodic_image_oracle(const VolumetricGrid& grid, const Vec3& probe,
                                          int shells,
                                          std::vector<double>* shell_deltas = nullptr);

} // namespace hfx
