#pragma once
#include <array>
#include <utility>
#include <vector>

#include "hfx/tensor.hpp"
#include "hfx/volgrid.hpp"

namespace hfx {

// One synthetic density feature. Centers and widths in Angstrom, weights in
// electrons (signed). lobe_set expands to three positive gaussians displaced
// toward the tetrahedral directions that make cos(109.47 deg) with `axis`,
// plus a small negative gaussian along +axis: the qualitative defect-density
// topology with a closed-form point-mass decomposition.
struct DensityComponent {
    enum class Kind { voxel_spike, gaussian, lobe_set };
    Kind kind = Kind::voxel_spike;
    Vec3 center = Vec3::Zero();
    double width = 0.0;  // gaussian std dev; ignored for voxel_spike
    double weight = 0.0; // total electrons carried by the component
    Vec3 axis = Vec3(1.0, 1.0, 1.0).normalized(); // lobe_set only
};

struct DensityRecipe {
    CellGeometry cell;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<DensityComponent> components;
};

// Rasterize the recipe. Spikes land on the nearest voxel (warning when the
// center is off-grid); gaussians are periodic (all images), truncated at six
// widths and renormalized so each component integrates to its weight
// exactly. Gaussian widths must be at least two voxel spacings.
VolumetricGrid build_density(const DensityRecipe& recipe);

// Closed-form point-mass tensor: weight * kernel(probe - center), in A^-3.
DipoleTensor analytic_point_tensor(const Vec3& center, double weight, const Vec3& probe);

// The (center, weight) point masses a recipe reduces to when every component
// is collapsed to its center: the far-field reference for the engines.
std::vector<std::pair<Vec3, double>> recipe_point_masses(const DensityRecipe& recipe);

} // namespace hfx
