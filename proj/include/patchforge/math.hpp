#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "patchforge/error.hpp"

namespace pf {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline Vec3 normalized(const Vec3& a) {
    const double n = norm(a);
    return n > 0.0 ? a / n : Vec3{0.0, 0.0, 0.0};
}

struct Rgb {
    double r = 0.0, g = 0.0, b = 0.0;

    Rgb operator+(const Rgb& o) const { return {r + o.r, g + o.g, b + o.b}; }
    Rgb operator*(double s) const { return {r * s, g * s, b * s}; }
    Rgb operator*(const Rgb& o) const { return {r * o.r, g * o.g, b * o.b}; }
};

// Column-major-free 4x4 affine transform, stored row-major. Only the top
// three rows are ever non-trivial; the last row stays (0,0,0,1).
struct Mat4 {
    std::array<double, 16> m{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};

    static Mat4 identity() { return {}; }

    static Mat4 translation(const Vec3& t) {
        Mat4 r;
        r.m[3] = t.x;
        r.m[7] = t.y;
        r.m[11] = t.z;
        return r;
    }

    static Mat4 scale(const Vec3& s) {
        Mat4 r;
        r.m[0] = s.x;
        r.m[5] = s.y;
        r.m[10] = s.z;
        return r;
    }

    static Mat4 rotation_x(double rad) {
        Mat4 r;
        const double c = std::cos(rad), s = std::sin(rad);
        r.m[5] = c;
        r.m[6] = -s;
        r.m[9] = s;
        r.m[10] = c;
        return r;
    }

    static Mat4 rotation_y(double rad) {
        Mat4 r;
        const double c = std::cos(rad), s = std::sin(rad);
        r.m[0] = c;
        r.m[2] = s;
        r.m[8] = -s;
        r.m[10] = c;
        return r;
    }

    static Mat4 rotation_z(double rad) {
        Mat4 r;
        const double c = std::cos(rad), s = std::sin(rad);
        r.m[0] = c;
        r.m[1] = -s;
        r.m[4] = s;
        r.m[5] = c;
        return r;
    }

    Mat4 operator*(const Mat4& o) const {
        Mat4 r;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 4; ++k) acc += m[i * 4 + k] * o.m[k * 4 + j];
                r.m[i * 4 + j] = acc;
            }
        }
        return r;
    }

    Vec3 apply_point(const Vec3& p) const {
        return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
                m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
                m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
    }

    Vec3 apply_direction(const Vec3& d) const {
        return {m[0] * d.x + m[1] * d.y + m[2] * d.z,
                m[4] * d.x + m[5] * d.y + m[6] * d.z,
                m[8] * d.x + m[9] * d.y + m[10] * d.z};
    }

    bool finite() const {
        for (double v : m)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Inverse-transpose of the upper 3x3 block, for transforming normals under
// non-uniform scale. Throws on a singular linear part.
Mat4 normal_matrix(const Mat4& t);
Mat4 affine_inverse(const Mat4& t);

// Dense H x W x C grid of doubles, row-major with channels last. Used for
// rendered images, model tensors, and intermediate buffers alike.
struct Array3 {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    Array3() = default;
    Array3(int h_, int w_, int c_) : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, 0.0) {}

    double& at(int y, int x, int ch) { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }
    double at(int y, int x, int ch) const { return v[(static_cast<size_t>(y) * w + x) * c + ch]; }

    size_t size() const { return v.size(); }
    bool same_shape(const Array3& o) const { return h == o.h && w == o.w && c == o.c; }
};

using Image = Array3;  // H x W x 3, values in [0,1]

}  // namespace pf
