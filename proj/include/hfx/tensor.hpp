#pragma once
#include <algorithm>
#include <cmath>

#include "hfx/geometry.hpp"

namespace hfx {

// Symmetric 3x3 stored as six independent components, order xx yy zz xy xz yz.
struct Sym3 {
    double xx = 0, yy = 0, zz = 0, xy = 0, xz = 0, yz = 0;

    Mat3 mat() const {
        Mat3 m;
        m << xx, xy, xz,
             xy, yy, yz,
             xz, yz, zz;
        return m;
    }
    static Sym3 from_mat(const Mat3& m) {
        return {m(0, 0), m(1, 1), m(2, 2), m(0, 1), m(0, 2), m(1, 2)};
    }
    double trace() const { return xx + yy + zz; }
    double max_abs() const {
        return std::max({std::fabs(xx), std::fabs(yy), std::fabs(zz),
                         std::fabs(xy), std::fabs(xz), std::fabs(yz)});
    }
    double frobenius() const {
        return std::sqrt(xx * xx + yy * yy + zz * zz + 2 * (xy * xy + xz * xz + yz * yz));
    }
    Sym3& operator+=(const Sym3& o) {
        xx += o.xx; yy += o.yy; zz += o.zz; xy += o.xy; xz += o.xz; yz += o.yz;
        return *this;
    }
    Sym3 operator-(const Sym3& o) const {
        return {xx - o.xx, yy - o.yy, zz - o.zz, xy - o.xy, xz - o.xz, yz - o.yz};
    }
    Sym3 operator*(double s) const { return {xx * s, yy * s, zz * s, xy * s, xz * s, yz * s}; }
};

// Point dipole kernel: k_ij(d) = 3 d_i d_j / r^5 - delta_ij / r^3, units 1/r^3.
// Traceless by construction; even in d.
inline void dipole_kernel(double dx, double dy, double dz, double out[6]) {
    double r2 = dx * dx + dy * dy + dz * dz;
    double r = std::sqrt(r2);
    double ir3 = 1.0 / (r2 * r);
    double ir5 = ir3 / r2;
    out[0] = 3.0 * dx * dx * ir5 - ir3;
    out[1] = 3.0 * dy * dy * ir5 - ir3;
    out[2] = 3.0 * dz * dz * ir5 - ir3;
    out[3] = 3.0 * dx * dy * ir5;
    out[4] = 3.0 * dx * dz * ir5;
    out[5] = 3.0 * dy * dz * ir5;
}

// Kahan-compensated accumulator for six components. Summation order is the
// caller's contract; this only removes the round-off growth.
struct KahanSym3 {
    double s[6] = {0, 0, 0, 0, 0, 0};
    double c[6] = {0, 0, 0, 0, 0, 0};

    inline void add(const double v[6], double scale) {
        for (int n = 0; n < 6; ++n) {
            double y = v[n] * scale - c[n];
            double t = s[n] + y;
            c[n] = (t - s[n]) - y;
            s[n] = t;
        }
    }
    inline void add_sym(const Sym3& w) {
        const double v[6] = {w.xx, w.yy, w.zz, w.xy, w.xz, w.yz};
        add(v, 1.0);
    }
    Sym3 result(double scale = 1.0) const {
        return Sym3{s[0], s[1], s[2], s[3], s[4], s[5]} * scale;
    }
};

enum class DipoleBackend { isolated_direct, isolated_fft, periodic_recip, periodic_image_oracle };

inline const char* backend_name(DipoleBackend b) {
    switch (b) {
        case DipoleBackend::isolated_direct: return "isolated_direct";
        case DipoleBackend::isolated_fft: return "isolated_fft";
        case DipoleBackend::periodic_recip: return "periodic_recip";
        case DipoleBackend::periodic_image_oracle: return "periodic_image_oracle";
    }
    return "?";
}

// Geometric dipole integral at one probe, units 1/Angstrom^3.
struct DipoleTensor {
    Sym3 w;
    Vec3 probe = Vec3::Zero();
    DipoleBackend backend = DipoleBackend::isolated_direct;
};

} // namespace hfx
