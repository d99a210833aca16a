#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>
#include <vector>

#include "hfx/dipole.hpp"
#include "hfx/errors.hpp"

namespace hfx {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

PeriodicRecip::PeriodicRecip(const VolumetricGrid& grid) {
    grid.validate();
    dims_ = grid.dims;
    cell_ = grid.cell;
    recip_rows_ = reciprocal_rows(grid.cell);

    const size_t n1 = dims_[0], n2 = dims_[1], n3 = dims_[2];
    const size_t ncx = (n1 / 2 + 1) * n2 * n3;
    double* in = fftw_alloc_real(grid.size());
    fftw_complex* out = fftw_alloc_complex(ncx);
    if (!in || !out) {
        fftw_free(in);
        fftw_free(out);
        throw_compute("ResourceLimit", "spectrum buffer allocation failed");
    }
    fftw_plan plan = fftw_plan_dft_r2c_3d(int(n3), int(n2), int(n1), in, out, FFTW_ESTIMATE);
    if (!plan) {
        fftw_free(in);
        fftw_free(out);
        throw_compute("ResourceLimit", "FFTW plan creation failed");
    }
    std::memcpy(in, grid.values.data(), sizeof(double) * grid.size());
    fftw_execute(plan);
    fftw_destroy_plan(plan);

    // sigma(G_m) = (1/N) sum_v sigma_v e^{-i 2 pi m . v/n}. Probe phases use
    // fractional coordinates too, so any cell origin cancels.
    spectrum_.resize(2 * ncx);
    const double inv_n = 1.0 / double(grid.size());
    const double* o = &out[0][0];
    for (size_t t = 0; t < 2 * ncx; ++t) spectrum_[t] = o[t] * inv_n;
    fftw_free(in);
    fftw_free(out);
}

PeriodicRecip::~PeriodicRecip() = default;

// -4 pi sum over the grid's G set of (G_i G_j / G^2 - delta_ij/3) sigma(G)
// e^{i G R}. The half-spectrum storage pairs each m1 > 0 entry with its
// unstored conjugate at -m; both carry the same even-in-G coefficient, so the
// pair contributes twice the real part. Nyquist planes (m_a = n_a/2 on even
// axes) have no conjugate partner on the grid and are dropped, as is G = 0.
DipoleTensor PeriodicRecip::eval_frac(const Vec3& probe_frac) const {
    const int n1 = dims_[0], n2 = dims_[1], n3 = dims_[2];
    const int n1c = n1 / 2 + 1;
    const Vec3 b1 = recip_rows_.row(0);
    const Vec3 b2 = recip_rows_.row(1);
    const Vec3 b3 = recip_rows_.row(2);
    const double two_pi = 2.0 * kPi;

    KahanSym3 acc;
    double term[6];
    for (int k = 0; k < n3; ++k) {
        const int m3 = k <= n3 / 2 ? k : k - n3;
        if (n3 % 2 == 0 && k == n3 / 2) continue;
        for (int j = 0; j < n2; ++j) {
            const int m2 = j <= n2 / 2 ? j : j - n2;
            if (n2 % 2 == 0 && j == n2 / 2) continue;
            const Vec3 g23 = double(m2) * b2 + double(m3) * b3;
            const double ph23 = m2 * probe_frac[1] + m3 * probe_frac[2];
            const size_t line = (size_t(k) * n2 + j) * n1c;
            for (int m1 = 0; m1 < n1c; ++m1) {
                if (n1 % 2 == 0 && m1 == n1 / 2) continue;
                if (m1 == 0 && m2 == 0 && m3 == 0) continue;
                const double gx = g23[0] + m1 * b1[0];
                const double gy = g23[1] + m1 * b1[1];
                const double gz = g23[2] + m1 * b1[2];
                const double g2 = gx * gx + gy * gy + gz * gz;
                const double phase = two_pi * (m1 * probe_frac[0] + ph23);
                const double sr = spectrum_[2 * (line + m1)];
                const double si = spectrum_[2 * (line + m1) + 1];
                // weight * Re[sigma(G) e^{i phase}]
                const double re = (m1 == 0 ? 1.0 : 2.0) *
                                  (sr * std::cos(phase) - si * std::sin(phase));
                const double ig2 = re / g2;
                const double third = re / 3.0;
                term[0] = gx * gx * ig2 - third;
                term[1] = gy * gy * ig2 - third;
                term[2] = gz * gz * ig2 - third;
                term[3] = gx * gy * ig2;
                term[4] = gx * gz * ig2;
                term[5] = gy * gz * ig2;
                acc.add(term, 1.0);
            }
        }
    }
    DipoleTensor out;
    out.w = acc.result(-4.0 * kPi);
    out.probe = cell_.frac_to_cart(probe_frac);
    out.backend = DipoleBackend::periodic_recip;
    return out;
}

DipoleTensor dipole_periodic_recip(const VolumetricGrid& grid, const Vec3& probe_frac) {
    return PeriodicRecip(grid).eval_frac(probe_frac);
}

// Spherically ordered sum of full-cell direct integrals over image
// translations. Each term skips exactly-zero voxels and silently skips
// voxels within the near-singular guard distance; it never raises
// SingularKernel (the oracle has no exclusion concept, matching the
// reciprocal backend it vouches for). With no singular voxel in range the
// shells=0 value is bitwise identical to dipole_isolated_direct without
// exclusion: the nonzero voxels are visited in the same flat order with the
// same displacement arithmetic.
DipoleTensor dipole_periodic_image_oracle(const VolumetricGrid& grid, const Vec3& probe,
                                          int shells, std::vector<double>* shell_deltas) {
    grid.validate();
    if (shells < 0) throw_config("ConfigError", "image shells must be >= 0");

    const int n1 = grid.dims[0], n2 = grid.dims[1], n3 = grid.dims[2];
    const Vec3 s1 = grid.cell.lattice.row(0) / n1;
    const Vec3 s2 = grid.cell.lattice.row(1) / n2;
    const Vec3 s3 = grid.cell.lattice.row(2) / n3;

    // Nonzero voxels in flat order, indices kept so displacements evaluate
    // with the same expressions as the direct backend.
    struct Voxel {
        int i, j, k;
        double sig;
    };
    std::vector<Voxel> voxels;
    {
        const double* v = grid.values.data();
        size_t flat = 0;
        for (int k = 0; k < n3; ++k)
            for (int j = 0; j < n2; ++j)
                for (int i = 0; i < n1; ++i, ++flat)
                    if (v[flat] != 0.0) voxels.push_back({i, j, k, v[flat]});
    }

    const double l_min = std::min({grid.cell.lattice.row(0).norm(), grid.cell.lattice.row(1).norm(),
                                   grid.cell.lattice.row(2).norm()});
    const double radius = shells * l_min;

    // Integer translation candidates, pruned by the dual-basis bound and
    // sorted by distance (lexicographic tie-break keeps symmetric shells in a
    // platform-independent order).
    struct Image {
        double d2;
        int t1, t2, t3;
    };
    std::vector<Image> images;
    {
        const Mat3 lat_inv = grid.cell.lattice.inverse();
        int lim[3];
        for (int a = 0; a < 3; ++a) lim[a] = int(std::floor(radius * lat_inv.col(a).norm())) + 1;
        const double r2max = radius * radius * (1.0 + 1e-12) + 1e-18;
        for (int t3 = -lim[2]; t3 <= lim[2]; ++t3)
            for (int t2 = -lim[1]; t2 <= lim[1]; ++t2)
                for (int t1 = -lim[0]; t1 <= lim[0]; ++t1) {
                    const Vec3 T = double(t1) * grid.cell.lattice.row(0) +
                                   double(t2) * grid.cell.lattice.row(1) +
                                   double(t3) * grid.cell.lattice.row(2);
                    const double d2 = T.squaredNorm();
                    if (d2 <= r2max) images.push_back({d2, t1, t2, t3});
                }
        std::sort(images.begin(), images.end(), [](const Image& a, const Image& b) {
            return std::tie(a.d2, a.t1, a.t2, a.t3) < std::tie(b.d2, b.t1, b.t2, b.t3);
        });
    }

    if (shell_deltas) shell_deltas->assign(size_t(shells) + 1, 0.0);

    const double dv = grid.voxel_volume();
    constexpr double kSingularDist2 = 1e-12; // (1e-6 A)^2, same guard as the direct backend
    KahanSym3 total;
    Sym3 before_shell{};
    int cur_shell = 0;
    double kv[6];

    for (const Image& im : images) {
        // Shell index by distance; record the Cauchy increment of the shell
        // just completed before starting the next one.
        const int shell =
            (im.t1 == 0 && im.t2 == 0 && im.t3 == 0)
                ? 0
                : std::max(1, int(std::ceil(std::sqrt(im.d2) / l_min - 1e-9)));
        if (shell_deltas && shell != cur_shell) {
            const Sym3 now = total.result();
            (*shell_deltas)[cur_shell] = (now - before_shell).max_abs();
            before_shell = now;
            cur_shell = shell;
        }

        const Vec3 T = double(im.t1) * grid.cell.lattice.row(0) +
                       double(im.t2) * grid.cell.lattice.row(1) +
                       double(im.t3) * grid.cell.lattice.row(2);
        // Image copy of the density at r + T, i.e. the isolated integral with
        // the probe shifted to probe - T.
        const Vec3 base = grid.cell.origin - (probe - T);
        KahanSym3 acc;
        for (const Voxel& vox : voxels) {
            const Vec3 row = base + double(vox.j) * s2 + double(vox.k) * s3;
            const double dx = row[0] + vox.i * s1[0];
            const double dy = row[1] + vox.i * s1[1];
            const double dz = row[2] + vox.i * s1[2];
            const double r2 = dx * dx + dy * dy + dz * dz;
            if (r2 < kSingularDist2) continue;
            dipole_kernel(dx, dy, dz, kv);
            acc.add(kv, vox.sig);
        }
        total.add_sym(acc.result(dv));
    }
    if (shell_deltas) (*shell_deltas)[cur_shell] = (total.result() - before_shell).max_abs();

    DipoleTensor out;
    out.w = total.result();
    out.probe = probe;
    out.backend = DipoleBackend::periodic_image_oracle;
    return out;
}

} // namespace hfx
