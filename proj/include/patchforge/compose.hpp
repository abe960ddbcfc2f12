#pragma once

#include "patchforge/buffers.hpp"

namespace pf::compose {

// The optimizable patch texture P: H_p x W_p x 3 texels in [0,1].
struct PatchTexture {
    int h = 0, w = 0;
    std::vector<double> rgb;

    PatchTexture() = default;
    PatchTexture(int h_, int w_, double fill = 0.5)
        : h(h_), w(w_), rgb(static_cast<size_t>(h_) * w_ * 3, fill) {}

    double& at(int y, int x, int ch) { return rgb[(static_cast<size_t>(y) * w + x) * 3 + ch]; }
    double at(int y, int x, int ch) const { return rgb[(static_cast<size_t>(y) * w + x) * 3 + ch]; }
};

// dL/dP; same shape as the texture it differentiates.
struct PatchGradient {
    int h = 0, w = 0;
    std::vector<double> rgb;

    PatchGradient() = default;
    PatchGradient(int h_, int w_) : h(h_), w(w_), rgb(static_cast<size_t>(h_) * w_ * 3, 0.0) {}

    double& at(int y, int x, int ch) { return rgb[(static_cast<size_t>(y) * w + x) * 3 + ch]; }
    double at(int y, int x, int ch) const { return rgb[(static_cast<size_t>(y) * w + x) * 3 + ch]; }
};

// Bilinear interpolation of the 4 texels around uv, with edge-clamped
// addressing. Texel centers sit at ((x+0.5)/w, (y+0.5)/h). uv must lie in
// [0,1]^2.
Rgb sample_bilinear(const PatchTexture& p, double u, double v);

// The differentiable combine B(P, b, p):
//   out[x] = mask[x] * clamp01(sample(P, uv[x]) * light[x]) + (1-mask[x]) * background[x]
// Background pixels are copied bit-exactly.
RenderedImage compose(const PatchTexture& p, const ViewBuffers& buffers);

// Exact adjoint of compose with respect to P: scatters dOut * light through
// the bilinear weights into the 4 source texels per masked pixel, in fixed
// scanline order. Zero where mask = 0 or where the forward clamp saturated.
PatchGradient backprop_compose(const Array3& d_out, const PatchTexture& p,
                               const ViewBuffers& buffers);

}  // namespace pf::compose
