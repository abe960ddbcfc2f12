#include "patchforge/scene.hpp"

#include <algorithm>
#include <cmath>

#include "patchforge/rng.hpp"

namespace pf::scene {

const std::vector<std::string> kTransformDimensionIds = {
    "scene-rotation-x",    "scene-rotation-y",    "scene-rotation-z",
    "scene-translation-x", "scene-translation-y", "light-shift-r",
    "light-shift-g",       "light-shift-b",       "light-hue-shift",
    "camera-azimuth",      "camera-elevation",    "camera-distance",
};

bool is_known_dimension(const std::string& id) {
    return std::find(kTransformDimensionIds.begin(), kTransformDimensionIds.end(), id) !=
           kTransformDimensionIds.end();
}

TriangleMesh PatchPlacement::build_mesh() const {
    PrimitiveParams p;
    p.radius = radius;
    p.z_lo = z_lo;
    p.z_hi = z_hi;
    p.azimuth_lo = azimuth_lo;
    p.azimuth_hi = azimuth_hi;
    p.segments = segments;
    return build_primitive(PrimitiveKind::CylinderStrip, p);
}

void Scene::validate() const {
    for (const auto& obj : objects) {
        obj.mesh.validate();
        if (!obj.transform.finite()) {
            throw ConfigError("object '" + obj.name + "' has a non-finite transform");
        }
        for (double ch : {obj.albedo.r, obj.albedo.g, obj.albedo.b}) {
            if (!(ch >= 0.0 && ch <= 1.0)) {
                throw ConfigError("object '" + obj.name + "' albedo outside [0,1]");
            }
        }
    }
    for (double ch : {light.color.r, light.color.g, light.color.b, light.ambient.r,
                      light.ambient.g, light.ambient.b}) {
        if (!(ch >= 0.0) || !std::isfinite(ch)) {
            throw ConfigError("light intensity must be finite and >= 0 per channel");
        }
    }
    if (!(camera.vertical_fov > 0.0 && camera.vertical_fov < kPi)) {
        throw ConfigError("camera fov must lie in (0, pi)");
    }
    const Vec3 fwd = normalized(camera.look_at - camera.position);
    if (std::abs(dot(fwd, normalized(camera.up))) > 1.0 - 1e-9) {
        throw ConfigError("camera up vector is parallel to the view direction");
    }
    const double span = patch.azimuth_hi - patch.azimuth_lo;
    if (!(span > 0.0 && span < 2.0 * kPi)) {
        throw ConfigError("patch azimuth span must lie in (0, 2*pi)");
    }
    if (!(patch.z_hi > patch.z_lo)) {
        throw ConfigError("patch height span must be positive");
    }
}

size_t Scene::object_index_by_tag(const std::string& tag) const {
    for (size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].class_tag == tag) return i;
    }
    throw ConfigError("no scene object carries class tag '" + tag + "'");
}

double TransformSample::value_or(const std::string& id, double fallback) const {
    for (const auto& [k, v] : values) {
        if (k == id) return v;
    }
    return fallback;
}

namespace {

Rgb hue_rotated(const Rgb& c, double degrees) {
    // Rotation about the RGB gray axis; a standard hue-shift matrix.
    const double rad = deg_to_rad(degrees);
    const double cosv = std::cos(rad), sinv = std::sin(rad);
    const double a = cosv + (1.0 - cosv) / 3.0;
    const double b = (1.0 - cosv) / 3.0 - sinv / std::sqrt(3.0);
    const double d = (1.0 - cosv) / 3.0 + sinv / std::sqrt(3.0);
    Rgb out;
    out.r = std::max(0.0, a * c.r + b * c.g + d * c.b);
    out.g = std::max(0.0, d * c.r + a * c.g + b * c.b);
    out.b = std::max(0.0, b * c.r + d * c.g + a * c.b);
    return out;
}

}  // namespace

Scene apply_transform(const TransformSample& sample, const Scene& scene) {
    for (const auto& [id, value] : sample.values) {
        if (!is_known_dimension(id)) {
            throw ConfigError("unknown transformation dimension id: " + id);
        }
        (void)value;
    }

    Scene out = scene;

    const double rx = sample.value_or("scene-rotation-x", 0.0);
    const double ry = sample.value_or("scene-rotation-y", 0.0);
    const double rz = sample.value_or("scene-rotation-z", 0.0);
    const double tx = sample.value_or("scene-translation-x", 0.0);
    const double ty = sample.value_or("scene-translation-y", 0.0);
    if (rx != 0.0 || ry != 0.0 || rz != 0.0 || tx != 0.0 || ty != 0.0) {
        const Mat4 world = Mat4::translation({tx, ty, 0.0}) * Mat4::rotation_z(deg_to_rad(rz)) *
                           Mat4::rotation_y(deg_to_rad(ry)) * Mat4::rotation_x(deg_to_rad(rx));
        for (auto& obj : out.objects) obj.transform = world * obj.transform;
        out.patch.transform = world * out.patch.transform;
    }

    Rgb color = out.light.color;
    color.r *= 1.0 + sample.value_or("light-shift-r", 0.0);
    color.g *= 1.0 + sample.value_or("light-shift-g", 0.0);
    color.b *= 1.0 + sample.value_or("light-shift-b", 0.0);
    const double hue = sample.value_or("light-hue-shift", 0.0);
    if (hue != 0.0) color = hue_rotated(color, hue);
    out.light.color = {std::max(0.0, color.r), std::max(0.0, color.g), std::max(0.0, color.b)};

    const double d_az = sample.value_or("camera-azimuth", 0.0);
    const double d_el = sample.value_or("camera-elevation", 0.0);
    const double d_dist = sample.value_or("camera-distance", 0.0);
    if (d_az != 0.0 || d_el != 0.0 || d_dist != 0.0) {
        const Vec3 rel = out.camera.position - out.camera.look_at;
        const double dist = norm(rel);
        if (!(dist > 1e-12)) {
            throw ConfigError("camera position coincides with look_at");
        }
        const double el = std::asin(std::clamp(rel.z / dist, -1.0, 1.0));
        const double az = std::atan2(rel.y, rel.x);
        const double new_az = az + deg_to_rad(d_az);
        const double new_el =
            std::clamp(el + deg_to_rad(d_el), -kPi / 2.0 + 1e-3, kPi / 2.0 - 1e-3);
        const double new_dist = std::max(1e-3, dist + d_dist);
        const Vec3 dir = {std::cos(new_el) * std::cos(new_az), std::cos(new_el) * std::sin(new_az),
                          std::sin(new_el)};
        out.camera.position = out.camera.look_at + dir * new_dist;
    }

    return out;
}

std::vector<TransformSample> sample_random(const std::vector<TransformDistribution>& dists,
                                           int n, uint64_t seed) {
    if (n < 1) throw InvalidParameterError("sample count must be >= 1");
    Rng rng(seed);
    std::vector<TransformSample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        TransformSample s;
        s.provenance = Provenance::Random;
        s.values.reserve(dists.size());
        for (const auto& d : dists) {
            if (!(d.lo <= d.hi)) {
                throw ConfigError("distribution '" + d.id + "' has lo > hi");
            }
            s.values.emplace_back(d.id, rng.uniform(d.lo, d.hi));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<double> sample_systematic(const TransformDistribution& dist, int l) {
    if (l < 1) throw InvalidParameterError("systematic step count must be >= 1");
    if (!(dist.lo <= dist.hi)) throw ConfigError("distribution '" + dist.id + "' has lo > hi");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(l));
    for (int j = 1; j <= l; ++j) {
        out.push_back(dist.lo + static_cast<double>(j) * (dist.hi - dist.lo) / l);
    }
    return out;
}

std::vector<TransformSample> enumerate_grid(const std::vector<TransformDistribution>& dists,
                                            const std::vector<int>& per_dim_counts) {
    if (dists.size() != per_dim_counts.size()) {
        throw InvalidParameterError("grid needs one count per dimension");
    }
    std::vector<std::vector<double>> axes;
    axes.reserve(dists.size());
    long total = 1;
    for (size_t i = 0; i < dists.size(); ++i) {
        axes.push_back(sample_systematic(dists[i], per_dim_counts[i]));
        total *= per_dim_counts[i];
    }
    std::vector<TransformSample> out;
    out.reserve(static_cast<size_t>(total));
    for (long idx = 0; idx < total; ++idx) {
        TransformSample s;
        s.provenance = Provenance::Systematic;
        s.index = idx;
        long rem = idx;
        // first dimension varies slowest
        for (size_t i = 0; i < axes.size(); ++i) {
            long stride = 1;
            for (size_t k = i + 1; k < axes.size(); ++k) stride *= per_dim_counts[k];
            const long pos = rem / stride;
            rem %= stride;
            s.values.emplace_back(dists[i].id, axes[i][static_cast<size_t>(pos)]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

TriangleMesh build_mug_mesh(double radius, double height, int segments,
                            double handle_major_radius, double handle_minor_radius) {
    PrimitiveParams body;
    body.radius = radius;
    body.height = height;
    body.segments = segments;
    TriangleMesh mug = build_primitive(PrimitiveKind::Cylinder, body);

    TriangleMesh handle = build_torus_segment(handle_major_radius, handle_minor_radius,
                                              -kPi / 2.0, kPi / 2.0, 16, 10);
    mug.append(transformed(handle, Mat4::translation({radius, 0.0, height / 2.0})));
    return mug;
}

TriangleMesh build_cone_mug_mesh(double radius_bottom, double radius_top, double height,
                                 int segments, double handle_major_radius,
                                 double handle_minor_radius) {
    TriangleMesh mug = build_frustum(radius_bottom, radius_top, height, segments);
    TriangleMesh handle = build_torus_segment(handle_major_radius, handle_minor_radius,
                                              -kPi / 2.0, kPi / 2.0, 16, 10);
    const double r_mid = (radius_bottom + radius_top) / 2.0;
    mug.append(transformed(handle, Mat4::translation({r_mid, 0.0, height * 0.58})));
    return mug;
}

}  // namespace pf::scene
