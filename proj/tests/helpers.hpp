#pragma once
#include <cmath>
#include <random>
#include <string>

#include "hfx/errors.hpp"
#include "hfx/volgrid.hpp"

namespace hfx::test {

inline CellGeometry cubic_cell(double L) {
    CellGeometry c;
    c.lattice = Mat3::Identity() * L;
    c.origin = Vec3::Zero();
    return c;
}

// One voxel carrying `weight` electrons, everything else zero.
inline VolumetricGrid spike_grid(double L, int n, int i, int j, int k, double weight = 1.0) {
    VolumetricGrid g;
    g.cell = cubic_cell(L);
    g.dims = {n, n, n};
    g.values.assign(g.size(), 0.0);
    g.at(i, j, k) = weight / g.voxel_volume();
    return g;
}

inline VolumetricGrid random_grid(double L, int n, uint64_t seed, double lo = -1.0,
                                  double hi = 1.0) {
    VolumetricGrid g;
    g.cell = cubic_cell(L);
    g.dims = {n, n, n};
    g.values.resize(g.size());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : g.values) v = dist(rng);
    return g;
}

inline double rel_diff(double a, double ref) {
    return std::fabs(a - ref) / std::fabs(ref);
}

// Runs f, returns the hfx::Error code it throws ("" when nothing is thrown).
template <typename F>
std::string thrown_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

template <typename F>
int thrown_exit(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.exit_code();
    }
    return 0;
}

} // namespace hfx::test
