#pragma once

#include "patchforge/buffers.hpp"
#include "patchforge/compose.hpp"

namespace pf::raster {

// Triangles crossing this camera-space depth are clipped, not discarded.
inline constexpr double kNearPlane = 0.01;  // meters

struct Projected {
    double x = 0.0;      // pixel coordinates, origin top-left
    double y = 0.0;
    double depth = 0.0;  // camera-space depth, increases away from the camera
    bool clipped = false;
};

// Perspective projection of a world point through the camera. Points closer
// than the near plane (including points behind the camera) are flagged.
Projected project(const scene::CameraSpec& camera, const Vec3& point);

// Lambertian shading: albedo * (ambient + light.color * max(0, n.l)).
Rgb shade(const Vec3& unit_normal, const Vec3& surface_point, const Rgb& albedo,
          const scene::PointLight& light);

// Renders the transformed scene into the buffer split. The background pass
// rasterizes every object except the patch strip; a second z-buffered pass
// including the strip sets mask=1 where the strip is the nearest surface and
// fills uv plus the unit-albedo lighting multiplier there. Width/height 0
// fall back to the camera resolution. A single call is single-threaded;
// different views may render in parallel.
ViewBuffers render_buffers(const scene::Scene& sc, const scene::TransformSample& sample,
                           int width = 0, int height = 0);

// Textured render of the full scene with the patch. Bit-exact equal to
// compose(P, render_buffers(...)) by construction (shared code path).
RenderedImage render_full(const scene::Scene& sc, const compose::PatchTexture& patch,
                          const scene::TransformSample& sample, int width = 0, int height = 0);

// Inspection exports; formats are byte-stable so goldens can be compared
// directly. Background/light go to binary PPM (P6, 8-bit), the mask to PGM
// (P5, 0/255), uv to CSV rows "y,x,u,v" for masked pixels.
void export_buffers(const ViewBuffers& buffers, const std::string& path_prefix);

}  // namespace pf::raster
