#include "patchforge/math.hpp"

#include <cmath>

namespace pf {

namespace {

// Inverse of the upper 3x3 block via adjugate; returns false when singular.
bool invert3(const Mat4& t, double inv[9]) {
    const double a = t.m[0], b = t.m[1], c = t.m[2];
    const double d = t.m[4], e = t.m[5], f = t.m[6];
    const double g = t.m[8], h = t.m[9], i = t.m[10];
    const double co00 = e * i - f * h;
    const double co01 = -(d * i - f * g);
    const double co02 = d * h - e * g;
    const double det = a * co00 + b * co01 + c * co02;
    if (!(std::abs(det) > 1e-300)) return false;
    const double s = 1.0 / det;
    inv[0] = co00 * s;
    inv[1] = (c * h - b * i) * s;
    inv[2] = (b * f - c * e) * s;
    inv[3] = co01 * s;
    inv[4] = (a * i - c * g) * s;
    inv[5] = (c * d - a * f) * s;
    inv[6] = co02 * s;
    inv[7] = (b * g - a * h) * s;
    inv[8] = (a * e - b * d) * s;
    return true;
}

}  // namespace

Mat4 normal_matrix(const Mat4& t) {
    double inv[9];
    if (!invert3(t, inv)) {
        throw InvalidParameterError("transform has a singular linear part");
    }
    Mat4 r;
    // transpose of the inverse
    r.m[0] = inv[0];
    r.m[1] = inv[3];
    r.m[2] = inv[6];
    r.m[4] = inv[1];
    r.m[5] = inv[4];
    r.m[6] = inv[7];
    r.m[8] = inv[2];
    r.m[9] = inv[5];
    r.m[10] = inv[8];
    r.m[3] = r.m[7] = r.m[11] = 0.0;
    return r;
}

Mat4 affine_inverse(const Mat4& t) {
    double inv[9];
    if (!invert3(t, inv)) {
        throw InvalidParameterError("transform has a singular linear part");
    }
    Mat4 r;
    r.m[0] = inv[0];
    r.m[1] = inv[1];
    r.m[2] = inv[2];
    r.m[4] = inv[3];
    r.m[5] = inv[4];
    r.m[6] = inv[5];
    r.m[8] = inv[6];
    r.m[9] = inv[7];
    r.m[10] = inv[8];
    const Vec3 t3 = {t.m[3], t.m[7], t.m[11]};
    const Vec3 it = r.apply_direction(t3);
    r.m[3] = -it.x;
    r.m[7] = -it.y;
    r.m[11] = -it.z;
    return r;
}

}  // namespace pf
