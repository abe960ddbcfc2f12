#pragma once

#include <optional>
#include <string>
#include <vector>

#include "patchforge/mesh.hpp"

namespace pf::scene {

struct ObjectInstance {
    std::string name;
    TriangleMesh mesh;      // object-local coordinates
    Rgb albedo;             // diffuse, each channel in [0,1]
    Mat4 transform;         // object-local -> world
    std::string class_tag;  // dataset label; empty for scenery
    // Shade with interpolated vertex normals (curved surfaces) or the face
    // normal (boxes, slabs).
    bool smooth_shading = true;
};

struct PointLight {
    Vec3 position;
    Rgb color;    // per-channel intensity >= 0
    Rgb ambient;  // per-channel intensity >= 0
};

struct CameraSpec {
    Vec3 position;
    Vec3 look_at;
    Vec3 up = {0.0, 0.0, 1.0};
    double vertical_fov = kPi / 4.0;  // radians, in (0, pi)
    int width = 64;
    int height = 64;
};

// The patch host: an azimuthal strip of a cylinder, concentric with the
// object it wraps. `transform` places the canonical strip (axis +z through
// the origin) in the world; uv runs u along azimuth, v down the height span.
struct PatchPlacement {
    double radius = 0.05;
    double z_lo = 0.0;
    double z_hi = 0.05;
    double azimuth_lo = -kPi / 2.0;  // radians
    double azimuth_hi = kPi / 2.0;
    int segments = 96;
    Mat4 transform;

    TriangleMesh build_mesh() const;
};

struct Scene {
    std::vector<ObjectInstance> objects;
    PointLight light;
    CameraSpec camera;
    PatchPlacement patch;
    Rgb background_color;
    bool cast_shadows = false;

    void validate() const;
    // Index of the object with the given class tag; throws if absent.
    size_t object_index_by_tag(const std::string& tag) const;
};

// One transformation dimension with its uniform range [lo, hi]. All
// dimensions are parameterized as deltas so that value 0 is a no-op:
// rotations in degrees, translations in meters, light shifts as relative
// per-channel scale offsets, camera azimuth/elevation in degrees and
// distance in meters relative to the base camera orbit around look_at.
struct TransformDistribution {
    std::string id;
    double lo = 0.0;
    double hi = 0.0;
};

// Known dimension ids.
extern const std::vector<std::string> kTransformDimensionIds;
bool is_known_dimension(const std::string& id);

enum class Provenance { Random, Systematic };

struct TransformSample {
    std::vector<std::pair<std::string, double>> values;  // (dimension id, value)
    Provenance provenance = Provenance::Random;
    long index = -1;  // grid index for systematic samples

    double value_or(const std::string& id, double fallback) const;
    bool operator==(const TransformSample& o) const {
        return values == o.values;
    }
};

// Returns a transformed copy; the input scene is never modified. Scene
// rotation (Rz*Ry*Rx about the world origin) and translation premultiply
// every object transform and the patch placement; light shifts scale the
// light color; camera deltas move the camera on its orbit around look_at.
Scene apply_transform(const TransformSample& sample, const Scene& scene);

std::vector<TransformSample> sample_random(const std::vector<TransformDistribution>& dists,
                                           int n, uint64_t seed);

// Even-step values lo + j*(hi-lo)/l for j = 1..l.
std::vector<double> sample_systematic(const TransformDistribution& dist, int l);

// Cartesian product of per-dimension systematic samples, lexicographic with
// the first dimension slowest.
std::vector<TransformSample> enumerate_grid(const std::vector<TransformDistribution>& dists,
                                            const std::vector<int>& per_dim_counts);

// Mug body (capped cylinder) plus a torus-segment handle on the +x side.
TriangleMesh build_mug_mesh(double radius, double height, int segments,
                            double handle_major_radius, double handle_minor_radius);

// Shorter, cone-like mug used by the shape-swap holdout mutation.
TriangleMesh build_cone_mug_mesh(double radius_bottom, double radius_top, double height,
                                 int segments, double handle_major_radius,
                                 double handle_minor_radius);

}  // namespace pf::scene
