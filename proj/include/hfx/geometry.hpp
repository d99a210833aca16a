#pragma once
#include <Eigen/Dense>

#include "hfx/errors.hpp"

namespace hfx {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Periodic cell. Rows of `lattice` are the cell vectors a1, a2, a3 in Angstrom,
// so cartesian = lattice^T * fractional + origin.
struct CellGeometry {
    Mat3 lattice = Mat3::Identity();
    Vec3 origin = Vec3::Zero();

    double volume() const { return lattice.determinant(); }

    void validate() const {
        if (!(lattice.determinant() > 1e-12))
            throw_parse("BadGeometry", "cell must be right-handed and non-degenerate (det <= 0)");
    }

    Vec3 frac_to_cart(const Vec3& f) const { return lattice.transpose() * f + origin; }

    Vec3 cart_to_frac(const Vec3& r) const {
        return lattice.transpose().inverse() * (r - origin);
    }

    // Half-open convention: inside means every fractional coordinate in [0, 1).
    bool contains(const Vec3& cart) const {
        Vec3 f = cart_to_frac(cart);
        for (int i = 0; i < 3; ++i)
            if (!(f[i] >= 0.0 && f[i] < 1.0)) return false;
        return true;
    }

};

// Reciprocal lattice: rows b_i satisfy a_i . b_j = 2 pi delta_ij, i.e.
// B = 2 pi (lattice^T)^{-1} with b_i as rows.
inline Mat3 reciprocal_rows(const CellGeometry& cell) {
    return 2.0 * M_PI * cell.lattice.inverse().transpose();
}

} // namespace hfx
