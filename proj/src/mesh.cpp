#include "patchforge/mesh.hpp"

#include <cmath>

namespace pf {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidParameterError(std::string("primitive dimension must be positive: ") + name);
    }
}

void require_segments(int segments) {
    if (segments < 3) {
        throw InvalidParameterError("segment count must be >= 3");
    }
}

TriangleMesh make_cube(double edge) {
    require_positive(edge, "edge");
    TriangleMesh m;
    const double h = edge / 2.0;
    for (int i = 0; i < 8; ++i) {
        const double x = (i & 1) ? h : -h;
        const double y = (i & 2) ? h : -h;
        const double z = (i & 4) ? h : -h;
        m.vertices.push_back({x, y, z});
        m.normals.push_back(normalized({x, y, z}));
    }
    // 12 triangles, outward winding (CCW seen from outside).
    const int faces[6][4] = {
        {0, 2, 3, 1},  // -z
        {4, 5, 7, 6},  // +z
        {0, 1, 5, 4},  // -y
        {2, 6, 7, 3},  // +y
        {0, 4, 6, 2},  // -x
        {1, 3, 7, 5},  // +x
    };
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

TriangleMesh make_side_wall(double r_bottom, double r_top, double height, int segments) {
    TriangleMesh m;
    const double slope = (r_bottom - r_top) / height;  // outward tilt of the wall
    for (int ring = 0; ring < 2; ++ring) {
        const double z = ring == 0 ? 0.0 : height;
        const double r = ring == 0 ? r_bottom : r_top;
        for (int s = 0; s < segments; ++s) {
            const double a = 2.0 * kPi * s / segments;
            const double ca = std::cos(a), sa = std::sin(a);
            m.vertices.push_back({r * ca, r * sa, z});
            m.normals.push_back(normalized({ca, sa, slope}));
        }
    }
    for (int s = 0; s < segments; ++s) {
        const int s1 = (s + 1) % segments;
        const int b0 = s, b1 = s1;
        const int t0 = segments + s, t1 = segments + s1;
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
    }
    return m;
}

void add_cap(TriangleMesh& m, double radius, double z, int segments, bool up) {
    const int center = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0.0, 0.0, z});
    m.normals.push_back({0.0, 0.0, up ? 1.0 : -1.0});
    const int ring0 = static_cast<int>(m.vertices.size());
    for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * kPi * s / segments;
        m.vertices.push_back({radius * std::cos(a), radius * std::sin(a), z});
        m.normals.push_back({0.0, 0.0, up ? 1.0 : -1.0});
    }
    for (int s = 0; s < segments; ++s) {
        const int s1 = (s + 1) % segments;
        if (up) {
            m.triangles.push_back({center, ring0 + s, ring0 + s1});
        } else {
            m.triangles.push_back({center, ring0 + s1, ring0 + s});
        }
    }
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
    require_positive(radius, "radius");
    require_positive(height, "height");
    require_segments(segments);
    TriangleMesh m = make_side_wall(radius, radius, height, segments);
    add_cap(m, radius, 0.0, segments, false);
    add_cap(m, radius, height, segments, true);
    return m;
}

TriangleMesh make_cone(double radius, double height, int segments) {
    require_positive(radius, "radius");
    require_positive(height, "height");
    require_segments(segments);
    TriangleMesh m;
    for (int s = 0; s < segments; ++s) {
        const double a = 2.0 * kPi * s / segments;
        const double ca = std::cos(a), sa = std::sin(a);
        m.vertices.push_back({radius * ca, radius * sa, 0.0});
        m.normals.push_back(normalized({ca * height, sa * height, radius}));
    }
    const int apex = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0.0, 0.0, height});
    m.normals.push_back({0.0, 0.0, 1.0});
    for (int s = 0; s < segments; ++s) {
        const int s1 = (s + 1) % segments;
        m.triangles.push_back({s, s1, apex});
    }
    add_cap(m, radius, 0.0, segments, false);
    return m;
}

TriangleMesh make_sphere(double radius, int segments) {
    require_positive(radius, "radius");
    require_segments(segments);
    const int rings = std::max(3, segments / 2);
    TriangleMesh m;
    const int south = 0;
    m.vertices.push_back({0.0, 0.0, -radius});
    m.normals.push_back({0.0, 0.0, -1.0});
    for (int r = 1; r < rings; ++r) {
        const double phi = kPi * r / rings - kPi / 2.0;  // -pi/2 .. pi/2
        for (int s = 0; s < segments; ++s) {
            const double a = 2.0 * kPi * s / segments;
            const Vec3 n = {std::cos(phi) * std::cos(a), std::cos(phi) * std::sin(a), std::sin(phi)};
            m.vertices.push_back(n * radius);
            m.normals.push_back(n);
        }
    }
    const int north = static_cast<int>(m.vertices.size());
    m.vertices.push_back({0.0, 0.0, radius});
    m.normals.push_back({0.0, 0.0, 1.0});

    auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) {
        m.triangles.push_back({south, ring_vertex(1, s + 1), ring_vertex(1, s)});
        m.triangles.push_back({north, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
    }
    for (int r = 1; r < rings - 1; ++r) {
        for (int s = 0; s < segments; ++s) {
            const int a0 = ring_vertex(r, s), a1 = ring_vertex(r, s + 1);
            const int b0 = ring_vertex(r + 1, s), b1 = ring_vertex(r + 1, s + 1);
            m.triangles.push_back({a0, a1, b1});
            m.triangles.push_back({a0, b1, b0});
        }
    }
    return m;
}

TriangleMesh make_strip(const PrimitiveParams& p) {
    require_positive(p.radius, "radius");
    require_segments(p.segments);
    const double span = p.azimuth_hi - p.azimuth_lo;
    if (!(span > 0.0) || span >= 2.0 * kPi) {
        throw InvalidParameterError("strip azimuth span must lie in (0, 2*pi)");
    }
    if (!(p.z_hi > p.z_lo)) {
        throw InvalidParameterError("strip height span must be positive");
    }
    TriangleMesh m;
    for (int ring = 0; ring < 2; ++ring) {
        const double z = ring == 0 ? p.z_lo : p.z_hi;
        for (int s = 0; s <= p.segments; ++s) {
            const double a = p.azimuth_lo + span * s / p.segments;
            const double ca = std::cos(a), sa = std::sin(a);
            m.vertices.push_back({p.radius * ca, p.radius * sa, z});
            m.normals.push_back({ca, sa, 0.0});
            const double u = static_cast<double>(s) / p.segments;
            const double v = ring == 0 ? 1.0 : 0.0;  // v=0 at the top edge
            m.uvs.push_back({u, v});
        }
    }
    const int top = p.segments + 1;
    for (int s = 0; s < p.segments; ++s) {
        m.triangles.push_back({s, s + 1, top + s + 1});
        m.triangles.push_back({s, top + s + 1, top + s});
    }
    return m;
}

}  // namespace

void TriangleMesh::append(const TriangleMesh& other) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    if (!uvs.empty() || !other.uvs.empty()) {
        uvs.resize(vertices.size() - other.vertices.size(), {0.0, 0.0});
        if (other.uvs.empty()) {
            uvs.resize(vertices.size(), {0.0, 0.0});
        } else {
            uvs.insert(uvs.end(), other.uvs.begin(), other.uvs.end());
        }
    }
    for (const auto& t : other.triangles) {
        triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
    }
}

void TriangleMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    if (normals.size() != vertices.size()) {
        throw ContractViolationError("mesh normals/vertices size mismatch");
    }
    for (const auto& t : triangles) {
        for (int idx : t) {
            if (idx < 0 || idx >= n) throw ContractViolationError("triangle index out of range");
        }
    }
    for (const auto& nrm : normals) {
        if (std::abs(norm(nrm) - 1.0) > 1e-6) {
            throw ContractViolationError("mesh normal is not unit length");
        }
    }
}

PrimitiveKind primitive_kind_from_string(const std::string& s) {
    if (s == "cube") return PrimitiveKind::Cube;
    if (s == "cylinder") return PrimitiveKind::Cylinder;
    if (s == "cylinder_strip") return PrimitiveKind::CylinderStrip;
    if (s == "cone") return PrimitiveKind::Cone;
    if (s == "sphere") return PrimitiveKind::Sphere;
    throw InvalidParameterError("unknown primitive kind: " + s);
}

TriangleMesh build_primitive(PrimitiveKind kind, const PrimitiveParams& params) {
    switch (kind) {
        case PrimitiveKind::Cube:
            return make_cube(params.edge);
        case PrimitiveKind::Cylinder:
            return make_cylinder(params.radius, params.height, params.segments);
        case PrimitiveKind::CylinderStrip:
            return make_strip(params);
        case PrimitiveKind::Cone:
            return make_cone(params.radius, params.height, params.segments);
        case PrimitiveKind::Sphere:
            return make_sphere(params.radius, params.segments);
    }
    throw InvalidParameterError("unknown primitive kind");
}

TriangleMesh build_frustum(double radius_bottom, double radius_top, double height, int segments) {
    require_positive(radius_bottom, "radius_bottom");
    require_positive(radius_top, "radius_top");
    require_positive(height, "height");
    require_segments(segments);
    TriangleMesh m = make_side_wall(radius_bottom, radius_top, height, segments);
    add_cap(m, radius_bottom, 0.0, segments, false);
    add_cap(m, radius_top, height, segments, true);
    return m;
}

TriangleMesh build_torus_segment(double major_radius, double minor_radius, double arc_lo,
                                 double arc_hi, int major_segments, int minor_segments) {
    require_positive(major_radius, "major_radius");
    require_positive(minor_radius, "minor_radius");
    require_segments(major_segments);
    require_segments(minor_segments);
    if (!(arc_hi > arc_lo)) throw InvalidParameterError("torus arc span must be positive");

    TriangleMesh m;
    for (int i = 0; i <= major_segments; ++i) {
        const double th = arc_lo + (arc_hi - arc_lo) * i / major_segments;
        const Vec3 ring_dir = {std::cos(th), 0.0, std::sin(th)};
        const Vec3 center = ring_dir * major_radius;
        for (int j = 0; j < minor_segments; ++j) {
            const double ps = 2.0 * kPi * j / minor_segments;
            const Vec3 n = ring_dir * std::cos(ps) + Vec3{0.0, 1.0, 0.0} * std::sin(ps);
            m.vertices.push_back(center + n * minor_radius);
            m.normals.push_back(n);
        }
    }
    auto vid = [&](int i, int j) { return i * minor_segments + (j % minor_segments); };
    for (int i = 0; i < major_segments; ++i) {
        for (int j = 0; j < minor_segments; ++j) {
            const int a0 = vid(i, j), a1 = vid(i, j + 1);
            const int b0 = vid(i + 1, j), b1 = vid(i + 1, j + 1);
            m.triangles.push_back({a0, b1, a1});
            m.triangles.push_back({a0, b0, b1});
        }
    }
    return m;
}

TriangleMesh transformed(const TriangleMesh& mesh, const Mat4& t) {
    TriangleMesh out = mesh;
    const Mat4 nm = normal_matrix(t);
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        out.vertices[i] = t.apply_point(mesh.vertices[i]);
        out.normals[i] = normalized(nm.apply_direction(mesh.normals[i]));
    }
    return out;
}

}  // namespace pf
