#pragma once

#include <array>
#include <string>
#include <vector>

#include "patchforge/math.hpp"

namespace pf {

struct TriangleMesh {
    std::vector<Vec3> vertices;          // meters, object-local
    std::vector<Vec3> normals;           // per-vertex, unit length
    std::vector<std::array<int, 3>> triangles;
    // Per-vertex patch-surface coordinates; only meaningful for the strip.
    std::vector<std::array<double, 2>> uvs;

    void append(const TriangleMesh& other);
    void validate() const;  // index range + unit normals (1e-6)
};

enum class PrimitiveKind { Cube, Cylinder, CylinderStrip, Cone, Sphere };

PrimitiveKind primitive_kind_from_string(const std::string& s);

struct PrimitiveParams {
    double edge = 1.0;          // cube
    double radius = 1.0;        // cylinder / cone / sphere / strip
    double height = 1.0;        // cylinder / cone
    double z_lo = 0.0;          // strip height span
    double z_hi = 1.0;
    double azimuth_lo = 0.0;    // strip azimuth span, radians
    double azimuth_hi = kPi;
    int segments = 32;
};

// Solids are watertight and origin-based: cube centered at the origin,
// cylinder/cone/strip axis along +z with the base at z=0, sphere centered at
// the origin. The strip is an open one-sided surface with outward normals
// and carries uvs (u along azimuth, v from top of the span down).
TriangleMesh build_primitive(PrimitiveKind kind, const PrimitiveParams& params);

// Side wall with differing base/top radii; used for the cone-like mug body.
TriangleMesh build_frustum(double radius_bottom, double radius_top, double height, int segments);

// Arc of a torus lying in the x-z plane (ring axis = y). Open ends; used as
// a mug handle whose end disks sit inside the mug body.
TriangleMesh build_torus_segment(double major_radius, double minor_radius, double arc_lo,
                                 double arc_hi, int major_segments, int minor_segments);

TriangleMesh transformed(const TriangleMesh& mesh, const Mat4& t);

}  // namespace pf
