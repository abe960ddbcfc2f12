#pragma once

#include <cstdint>
#include <vector>

#include "patchforge/math.hpp"
#include "patchforge/scene.hpp"

namespace pf {

using RenderedImage = Image;  // H x W x 3, clamped to [0,1]

// One rendered view split into the compositing buffers: the scene without
// the patch, plus per-pixel patch properties. `light` stores the shading
// multiplier with unit albedo so a texture color multiplies in linearly.
struct ViewBuffers {
    int h = 0, w = 0;
    Image background;            // H x W x 3 in [0,1]
    std::vector<double> uv;      // H x W x 2, valid where mask = 1
    std::vector<double> light;   // H x W x 3, >= 0
    std::vector<uint8_t> mask;   // H x W, {0,1}: patch is the nearest surface
    scene::TransformSample meta;

    ViewBuffers() = default;
    ViewBuffers(int h_, int w_)
        : h(h_),
          w(w_),
          background(h_, w_, 3),
          uv(static_cast<size_t>(h_) * w_ * 2, 0.0),
          light(static_cast<size_t>(h_) * w_ * 3, 0.0),
          mask(static_cast<size_t>(h_) * w_, 0) {}

    size_t pixel(int y, int x) const { return static_cast<size_t>(y) * w + x; }
    long mask_count() const {
        long n = 0;
        for (uint8_t m : mask) n += m;
        return n;
    }
};

}  // namespace pf
