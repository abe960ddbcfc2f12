#include "patchforge/compose.hpp"

#include <cmath>

namespace pf::compose {

namespace {

struct BilinearTaps {
    int x0, x1, y0, y1;
    double w00, w01, w10, w11;  // (y,x) order: w01 pairs y0 with x1
};

BilinearTaps taps(const PatchTexture& p, double u, double v) {
    if (!(u >= 0.0 && u <= 1.0 && v >= 0.0 && v <= 1.0)) {
        throw ContractViolationError("uv outside [0,1]^2 in sample_bilinear");
    }
    // Continuous texel coordinates with centers at integers, edge-clamped.
    const double cx = std::min(std::max(u * p.w - 0.5, 0.0), static_cast<double>(p.w - 1));
    const double cy = std::min(std::max(v * p.h - 0.5, 0.0), static_cast<double>(p.h - 1));
    BilinearTaps t;
    t.x0 = static_cast<int>(cx);
    t.y0 = static_cast<int>(cy);
    t.x1 = std::min(t.x0 + 1, p.w - 1);
    t.y1 = std::min(t.y0 + 1, p.h - 1);
    const double fx = cx - t.x0;
    const double fy = cy - t.y0;
    t.w00 = (1.0 - fy) * (1.0 - fx);
    t.w01 = (1.0 - fy) * fx;
    t.w10 = fy * (1.0 - fx);
    t.w11 = fy * fx;
    return t;
}

}  // namespace

Rgb sample_bilinear(const PatchTexture& p, double u, double v) {
    if (p.h <= 0 || p.w <= 0) throw ContractViolationError("empty patch texture");
    const BilinearTaps t = taps(p, u, v);
    Rgb out;
    out.r = t.w00 * p.at(t.y0, t.x0, 0) + t.w01 * p.at(t.y0, t.x1, 0) +
            t.w10 * p.at(t.y1, t.x0, 0) + t.w11 * p.at(t.y1, t.x1, 0);
    out.g = t.w00 * p.at(t.y0, t.x0, 1) + t.w01 * p.at(t.y0, t.x1, 1) +
            t.w10 * p.at(t.y1, t.x0, 1) + t.w11 * p.at(t.y1, t.x1, 1);
    out.b = t.w00 * p.at(t.y0, t.x0, 2) + t.w01 * p.at(t.y0, t.x1, 2) +
            t.w10 * p.at(t.y1, t.x0, 2) + t.w11 * p.at(t.y1, t.x1, 2);
    return out;
}

RenderedImage compose(const PatchTexture& p, const ViewBuffers& buffers) {
    if (buffers.background.h != buffers.h || buffers.background.w != buffers.w ||
        buffers.background.c != 3) {
        throw ContractViolationError("view buffer shape mismatch in compose");
    }
    RenderedImage out = buffers.background;
    for (int y = 0; y < buffers.h; ++y) {
        for (int x = 0; x < buffers.w; ++x) {
            const size_t px = buffers.pixel(y, x);
            if (!buffers.mask[px]) continue;
            const Rgb s = sample_bilinear(p, buffers.uv[px * 2], buffers.uv[px * 2 + 1]);
            out.at(y, x, 0) = clamp01(s.r * buffers.light[px * 3]);
            out.at(y, x, 1) = clamp01(s.g * buffers.light[px * 3 + 1]);
            out.at(y, x, 2) = clamp01(s.b * buffers.light[px * 3 + 2]);
        }
    }
    return out;
}

PatchGradient backprop_compose(const Array3& d_out, const PatchTexture& p,
                               const ViewBuffers& buffers) {
    if (d_out.h != buffers.h || d_out.w != buffers.w || d_out.c != 3) {
        throw ContractViolationError("gradient shape mismatch in backprop_compose");
    }
    PatchGradient grad(p.h, p.w);
    for (int y = 0; y < buffers.h; ++y) {
        for (int x = 0; x < buffers.w; ++x) {
            const size_t px = buffers.pixel(y, x);
            if (!buffers.mask[px]) continue;
            const BilinearTaps t = taps(p, buffers.uv[px * 2], buffers.uv[px * 2 + 1]);
            const Rgb s = sample_bilinear(p, buffers.uv[px * 2], buffers.uv[px * 2 + 1]);
            const double sv[3] = {s.r, s.g, s.b};
            for (int ch = 0; ch < 3; ++ch) {
                const double light = buffers.light[px * 3 + ch];
                const double pre = sv[ch] * light;
                if (pre < 0.0 || pre > 1.0) continue;  // clamp saturated: zero gradient
                const double g = d_out.at(y, x, ch) * light;
                grad.at(t.y0, t.x0, ch) += g * t.w00;
                grad.at(t.y0, t.x1, ch) += g * t.w01;
                grad.at(t.y1, t.x0, ch) += g * t.w10;
                grad.at(t.y1, t.x1, ch) += g * t.w11;
            }
        }
    }
    return grad;
}

}  // namespace pf::compose
