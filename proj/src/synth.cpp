#include <cmath>
#include <iostream>

#include "hfx/errors.hpp"
#include "hfx/synth.hpp"

namespace hfx {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Tetrahedral directions: unit vectors at cos(109.47 deg) = -1/3 with the
// axis, 120 degrees apart around it, plus the axis itself for the negative
// lobe. Frame construction matches the reporting-axis frame: deterministic
// in the axis.
std::array<Vec3, 3> tetrahedral_directions(const Vec3& axis) {
    const Vec3 seed = std::fabs(axis[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 u = axis.cross(seed).normalized();
    const Vec3 v = axis.cross(u);
    const double c = -1.0 / 3.0;
    const double s = 2.0 * std::sqrt(2.0) / 3.0;
    std::array<Vec3, 3> t;
    for (int k = 0; k < 3; ++k) {
        const double th = 2.0 * kPi * k / 3.0;
        t[k] = c * axis + s * (std::cos(th) * u + std::sin(th) * v);
    }
    return t;
}

// lobe_set -> four gaussians. Positive lobes sit part-way toward the three
// dangling-bond neighbors (0.55 A), the negative lobe at the substituted
// neighbor site (1.545 A along +axis) with a tighter width. Weights 3 x
// +0.35 and -0.05 of the component weight, so the total is preserved.
std::vector<DensityComponent> expand_lobe_set(const DensityComponent& c) {
    if (std::fabs(c.axis.norm() - 1.0) > 1e-8)
        throw_config("BadAxis", "lobe_set axis must be a unit vector");
    std::vector<DensityComponent> out;
    for (const Vec3& t : tetrahedral_directions(c.axis)) {
        DensityComponent g;
        g.kind = DensityComponent::Kind::gaussian;
        g.center = c.center + 0.55 * t;
        g.width = c.width;
        g.weight = 0.35 * c.weight;
        out.push_back(g);
    }
    DensityComponent n;
    n.kind = DensityComponent::Kind::gaussian;
    n.center = c.center + 1.545 * c.axis;
    n.width = 0.7 * c.width;
    n.weight = -0.05 * c.weight;
    out.push_back(n);
    return out;
}

void add_spike(VolumetricGrid& grid, const DensityComponent& c) {
    const Vec3 frac = grid.cell.cart_to_frac(c.center);
    int idx[3];
    bool snapped = false;
    for (int a = 0; a < 3; ++a) {
        const double x = frac[a] * grid.dims[a];
        idx[a] = int(std::lround(x));
        if (std::fabs(x - idx[a]) > 1e-9) snapped = true;
        idx[a] = ((idx[a] % grid.dims[a]) + grid.dims[a]) % grid.dims[a];
    }
    if (snapped)
        std::cerr << "warning: spike center off-grid, snapped to voxel (" << idx[0] << ", "
                  << idx[1] << ", " << idx[2] << ")\n";
    grid.at(idx[0], idx[1], idx[2]) += c.weight / grid.voxel_volume();
}

void add_gaussian(VolumetricGrid& grid, const DensityComponent& c) {
    if (!(c.width > 0)) throw_config("ConfigError", "gaussian width must be positive");
    const auto sp = grid.spacing();
    const double max_sp = std::max({sp[0], sp[1], sp[2]});
    if (c.width < 2.0 * max_sp)
        throw_config("ConfigError", "gaussian width " + std::to_string(c.width) +
                                        " A is under two voxel spacings (" +
                                        std::to_string(2.0 * max_sp) + " A); refine the grid");

    const int n1 = grid.dims[0], n2 = grid.dims[1], n3 = grid.dims[2];
    const Vec3 s1 = grid.cell.lattice.row(0) / n1;
    const Vec3 s2 = grid.cell.lattice.row(1) / n2;
    const Vec3 s3 = grid.cell.lattice.row(2) / n3;
    const double r_trunc = 6.0 * c.width;
    const double r2_trunc = r_trunc * r_trunc;
    const double inv_2w2 = 1.0 / (2.0 * c.width * c.width);

    // Index box covering every periodic image of the truncation sphere. The
    // box lives in unwrapped index space; each visited index is a distinct
    // image contribution added into the wrapped voxel, which also sums
    // overlapping images correctly when 12 widths exceed a cell edge.
    const Vec3 cfrac = grid.cell.cart_to_frac(c.center);
    const Mat3 lat_inv = grid.cell.lattice.inverse();
    int c_idx[3], ext[3];
    for (int a = 0; a < 3; ++a) {
        c_idx[a] = int(std::lround(cfrac[a] * grid.dims[a]));
        ext[a] = int(std::floor(r_trunc * grid.dims[a] * lat_inv.col(a).norm())) + 1;
    }

    // Contributions buffered so the component can be renormalized to carry
    // exactly its weight despite the truncation.
    std::vector<std::pair<size_t, double>> contrib;
    double gsum = 0.0;
    for (int bk = c_idx[2] - ext[2]; bk <= c_idx[2] + ext[2]; ++bk)
        for (int bj = c_idx[1] - ext[1]; bj <= c_idx[1] + ext[1]; ++bj)
            for (int bi = c_idx[0] - ext[0]; bi <= c_idx[0] + ext[0]; ++bi) {
                const Vec3 pos = grid.cell.origin + double(bi) * s1 + double(bj) * s2 +
                                 double(bk) * s3;
                const double r2 = (pos - c.center).squaredNorm();
                if (r2 > r2_trunc) continue;
                const double g = std::exp(-r2 * inv_2w2);
                const int i = ((bi % n1) + n1) % n1;
                const int j = ((bj % n2) + n2) % n2;
                const int k = ((bk % n3) + n3) % n3;
                contrib.emplace_back(size_t(i) + size_t(n1) * (size_t(j) + size_t(n2) * k), g);
                gsum += g;
            }
    if (gsum <= 0.0) throw_config("ConfigError", "gaussian truncation sphere covers no voxel");
    const double scale = c.weight / (gsum * grid.voxel_volume());
    for (const auto& [flat, g] : contrib) grid.values[flat] += scale * g;
}

} // namespace

VolumetricGrid build_density(const DensityRecipe& recipe) {
    recipe.cell.validate();
    for (int a = 0; a < 3; ++a)
        if (recipe.dims[a] <= 0) throw_config("ConfigError", "recipe dims must be positive");

    VolumetricGrid grid;
    grid.cell = recipe.cell;
    grid.dims = recipe.dims;
    grid.values.assign(grid.size(), 0.0);

    for (const DensityComponent& c : recipe.components) {
        switch (c.kind) {
            case DensityComponent::Kind::voxel_spike:
                add_spike(grid, c);
                break;
            case DensityComponent::Kind::gaussian:
                add_gaussian(grid, c);
                break;
            case DensityComponent::Kind::lobe_set:
                for (const DensityComponent& g : expand_lobe_set(c)) add_gaussian(grid, g);
                break;
        }
    }
    return grid;
}

DipoleTensor analytic_point_tensor(const Vec3& center, double weight, const Vec3& probe) {
    const Vec3 d = probe - center;
    if (d.squaredNorm() < 1e-12)
        throw_compute("SingularKernel", "probe coincides with the point-mass center");
    double kv[6];
    dipole_kernel(d[0], d[1], d[2], kv);
    DipoleTensor out;
    out.w = Sym3{kv[0] * weight, kv[1] * weight, kv[2] * weight,
                 kv[3] * weight, kv[4] * weight, kv[5] * weight};
    out.probe = probe;
    out.backend = DipoleBackend::isolated_direct;
    return out;
}

std::vector<std::pair<Vec3, double>> recipe_point_masses(const DensityRecipe& recipe) {
    std::vector<std::pair<Vec3, double>> out;
    for (const DensityComponent& c : recipe.components) {
        if (c.kind == DensityComponent::Kind::lobe_set) {
            for (const DensityComponent& g : expand_lobe_set(c))
                out.emplace_back(g.center, g.weight);
        } else {
            out.emplace_back(c.center, c.weight);
        }
    }
    return out;
}

} // namespace hfx
