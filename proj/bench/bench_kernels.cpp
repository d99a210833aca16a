// Kernel benchmark: the OpenMP paths against the serial reference. Timing is
// informational; the bitwise-equality checks are load-bearing (the parallel
// merge order must not change a single bit), so a mismatch fails the run.
//
//   hfx_bench [--quick] [--threads N]
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "hfx/dipole.hpp"
#include "hfx/synth.hpp"
#include "hfx/volgrid.hpp"

using namespace hfx;
using Clock = std::chrono::steady_clock;

namespace {

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

VolumetricGrid random_grid(double L, int n, uint64_t seed) {
    VolumetricGrid g;
    g.cell.lattice = Mat3::Identity() * L;
    g.dims = {n, n, n};
    g.values.resize(g.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double& v : g.values) v = dist(rng);
    return g;
}

bool bitwise_equal(const Sym3& a, const Sym3& b) {
    return std::memcmp(&a, &b, sizeof(Sym3)) == 0;
}

} // namespace

int main(int argc, char** argv) {
    bool quick = false;
    int threads = omp_get_max_threads();
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0)
            quick = true;
        else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            threads = std::atoi(argv[++i]);
        else {
            std::fprintf(stderr, "usage: hfx_bench [--quick] [--threads N]\n");
            return 2;
        }
    }

    const int n = quick ? 48 : 96;
    const int n_probes = quick ? 48 : 256;
    const double L = n * 0.15;
    std::printf("grid %d^3 (%.2f A cube), %d probes, %d worker threads%s\n", n, L, n_probes,
                threads, quick ? " [quick]" : "");

    const VolumetricGrid grid = random_grid(L, n, 42);
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> pos(0.0, L);
    std::vector<Vec3> probes;
    for (int k = 0; k < n_probes; ++k) probes.push_back(Vec3(pos(rng), pos(rng), pos(rng)));
    const ExclusionSpec excl; // production default: voxel_center spheres

    // Serial reference, one probe at a time.
    const auto t_ser = Clock::now();
    std::vector<DipoleTensor> ref;
    for (const Vec3& p : probes) ref.push_back(dipole_isolated_direct_serial(grid, p, excl));
    const double serial_s = secs(t_ser);

    // OpenMP batch over probes.
    ExecContext ctx;
    ctx.threads = threads;
    const auto t_par = Clock::now();
    const std::vector<DipoleTensor> par = dipole_isolated_direct_many(grid, probes, {}, excl, ctx);
    const double parallel_s = secs(t_par);

    int mismatches = 0;
    for (size_t k = 0; k < probes.size(); ++k)
        if (!bitwise_equal(ref[k].w, par[k].w)) ++mismatches;

    std::printf("direct   serial %8.3f s   omp %8.3f s   speedup %.2fx   bitwise: %s\n",
                serial_s, parallel_s, serial_s / parallel_s,
                mismatches == 0 ? "identical" : "MISMATCH");

    // FFT field engine on the stride-2 sub-grid (the tensor-field product
    // path; stride keeps the quick run inside the smoke-test budget).
    const auto t_fft = Clock::now();
    FftFieldEngine engine(grid);
    const std::vector<DipoleTensor> field = engine.field(quick ? 4 : 2, excl, "C", ctx);
    const double fft_s = secs(t_fft);
    std::printf("fft      field  %8.3f s   (%zu probes via zero-padded convolution)\n", fft_s,
                field.size());

    // Reciprocal periodic backend, spectrum build plus a probe sweep.
    const auto t_rec = Clock::now();
    PeriodicRecip recip(grid);
    Sym3 acc{};
    for (const Vec3& p : probes) acc += recip.eval_frac(grid.cell.cart_to_frac(p)).w;
    const double recip_s = secs(t_rec);
    std::printf("periodic recip  %8.3f s   (%d probes; checksum %.3e)\n", recip_s, n_probes,
                acc.max_abs());

    if (mismatches != 0) {
        std::fprintf(stderr, "error: %d of %d parallel results differ from the serial "
                             "reference\n", mismatches, n_probes);
        return 1;
    }
    return 0;
}
