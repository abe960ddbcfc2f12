#include "patchforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "patchforge/image_io.hpp"

namespace pf::raster {

namespace {

struct CameraBasis {
    Vec3 origin, right, up, forward;
    double focal = 1.0;  // pixels
    int w = 0, h = 0;

    Vec3 to_camera(const Vec3& p) const {
        const Vec3 rel = p - origin;
        return {dot(rel, right), dot(rel, up), dot(rel, forward)};
    }
};

CameraBasis make_basis(const scene::CameraSpec& cam, int width, int height) {
    CameraBasis b;
    b.origin = cam.position;
    b.forward = normalized(cam.look_at - cam.position);
    if (!(cam.vertical_fov > 0.0 && cam.vertical_fov < kPi)) {
        throw ConfigError("camera fov must lie in (0, pi)");
    }
    const Vec3 right = cross(b.forward, normalized(cam.up));
    if (norm(right) < 1e-9) {
        throw ConfigError("camera up vector is parallel to the view direction");
    }
    b.right = normalized(right);
    b.up = cross(b.right, b.forward);
    b.w = width;
    b.h = height;
    b.focal = (height / 2.0) / std::tan(cam.vertical_fov / 2.0);
    return b;
}

struct RasterVertex {
    Vec3 cam;     // camera space
    Vec3 world;
    Vec3 normal;  // world space, unit at the vertices
    double u = 0.0, v = 0.0;
};

RasterVertex lerp(const RasterVertex& a, const RasterVertex& b, double t) {
    RasterVertex r;
    r.cam = a.cam + (b.cam - a.cam) * t;
    r.world = a.world + (b.world - a.world) * t;
    r.normal = a.normal + (b.normal - a.normal) * t;
    r.u = a.u + (b.u - a.u) * t;
    r.v = a.v + (b.v - a.v) * t;
    return r;
}

// Sutherland-Hodgman against the near plane (cam.z >= near). Returns 0, 3 or
// 4 vertices.
int clip_near(const RasterVertex in[3], RasterVertex out[4]) {
    int n = 0;
    for (int i = 0; i < 3; ++i) {
        const RasterVertex& cur = in[i];
        const RasterVertex& nxt = in[(i + 1) % 3];
        const bool cur_in = cur.cam.z >= kNearPlane;
        const bool nxt_in = nxt.cam.z >= kNearPlane;
        if (cur_in) out[n++] = cur;
        if (cur_in != nxt_in) {
            const double t = (kNearPlane - cur.cam.z) / (nxt.cam.z - cur.cam.z);
            out[n++] = lerp(cur, nxt, t);
        }
    }
    return n;
}

// Rasterizes one world-space mesh with perspective-correct interpolation.
// frag(y, x, world, normal, u, v) fires only after the z-test passed and the
// depth buffer was updated. Scanline order is fixed, so output is
// deterministic for identical inputs. flat_normals shades with the face
// normal instead of the interpolated vertex normals.
template <typename FragmentFn>
void rasterize(const CameraBasis& cam, const TriangleMesh& mesh, bool backface_cull,
               bool flat_normals, std::vector<double>& zbuf, FragmentFn&& frag) {
    const bool has_uv = !mesh.uvs.empty();
    for (const auto& tri : mesh.triangles) {
        RasterVertex verts[3];
        for (int k = 0; k < 3; ++k) {
            const int idx = tri[k];
            verts[k].world = mesh.vertices[idx];
            verts[k].normal = mesh.normals[idx];
            verts[k].cam = cam.to_camera(mesh.vertices[idx]);
            if (has_uv) {
                verts[k].u = mesh.uvs[idx][0];
                verts[k].v = mesh.uvs[idx][1];
            }
        }
        const Vec3 geo_n = normalized(
            cross(verts[1].world - verts[0].world, verts[2].world - verts[0].world));
        if (backface_cull && dot(geo_n, cam.origin - verts[0].world) <= 0.0) continue;
        if (flat_normals) {
            // orient the face normal with the stored vertex normals
            const Vec3 ref = verts[0].normal + verts[1].normal + verts[2].normal;
            const Vec3 fn = dot(geo_n, ref) < 0.0 ? -geo_n : geo_n;
            for (auto& v : verts) v.normal = fn;
        }

        RasterVertex clipped[4];
        const int n = clip_near(verts, clipped);
        for (int sub = 0; sub + 2 < n; ++sub) {
            const RasterVertex* tv[3] = {&clipped[0], &clipped[sub + 1], &clipped[sub + 2]};
            double px[3], py[3], iz[3];
            for (int k = 0; k < 3; ++k) {
                const Vec3& c = tv[k]->cam;
                px[k] = cam.w / 2.0 + cam.focal * c.x / c.z;
                py[k] = cam.h / 2.0 - cam.focal * c.y / c.z;
                iz[k] = 1.0 / c.z;
            }
            double area = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0]);
            int i1 = 1, i2 = 2;
            if (area < 0.0) {
                std::swap(i1, i2);
                area = -area;
            }
            if (area < 1e-12) continue;

            const double bx0 = std::min({px[0], px[1], px[2]});
            const double bx1 = std::max({px[0], px[1], px[2]});
            const double by0 = std::min({py[0], py[1], py[2]});
            const double by1 = std::max({py[0], py[1], py[2]});
            const int x_lo = std::max(0, static_cast<int>(std::floor(bx0 - 0.5)));
            const int x_hi = std::min(cam.w - 1, static_cast<int>(std::ceil(bx1 - 0.5)));
            const int y_lo = std::max(0, static_cast<int>(std::floor(by0 - 0.5)));
            const int y_hi = std::min(cam.h - 1, static_cast<int>(std::ceil(by1 - 0.5)));

            const double ax = px[0], ay = py[0];
            const double bx = px[i1], by = py[i1];
            const double cx = px[i2], cy = py[i2];
            for (int y = y_lo; y <= y_hi; ++y) {
                const double sy = y + 0.5;
                for (int x = x_lo; x <= x_hi; ++x) {
                    const double sx = x + 0.5;
                    const double e0 = (cx - bx) * (sy - by) - (cy - by) * (sx - bx);
                    const double e1 = (ax - cx) * (sy - cy) - (ay - cy) * (sx - cx);
                    const double e2 = (bx - ax) * (sy - ay) - (by - ay) * (sx - ax);
                    if (e0 < 0.0 || e1 < 0.0 || e2 < 0.0) continue;
                    const double l0 = e0 / area;
                    const double l1 = e1 / area;
                    const double l2 = e2 / area;
                    const double w0 = l0 * iz[0], w1 = l1 * iz[i1], w2 = l2 * iz[i2];
                    const double inv_z = w0 + w1 + w2;
                    const double z = 1.0 / inv_z;
                    const size_t px_idx = static_cast<size_t>(y) * cam.w + x;
                    if (!(z < zbuf[px_idx])) continue;
                    zbuf[px_idx] = z;

                    const RasterVertex& v0 = *tv[0];
                    const RasterVertex& v1 = *tv[i1];
                    const RasterVertex& v2 = *tv[i2];
                    const Vec3 world = (v0.world * w0 + v1.world * w1 + v2.world * w2) * z;
                    const Vec3 nrm =
                        normalized((v0.normal * w0 + v1.normal * w1 + v2.normal * w2) * z);
                    const double u = (v0.u * w0 + v1.u * w1 + v2.u * w2) * z;
                    const double v = (v0.v * w0 + v1.v * w1 + v2.v * w2) * z;
                    frag(y, x, world, nrm, u, v);
                }
            }
        }
    }
}

struct WorldGeometry {
    std::vector<TriangleMesh> meshes;  // world-space, non-patch objects
    std::vector<const scene::ObjectInstance*> sources;
};

WorldGeometry world_geometry(const scene::Scene& sc) {
    WorldGeometry g;
    g.meshes.reserve(sc.objects.size());
    for (const auto& obj : sc.objects) {
        g.meshes.push_back(transformed(obj.mesh, obj.transform));
        g.sources.push_back(&obj);
    }
    return g;
}

void check_camera_outside(const scene::Scene& sc) {
    for (const auto& obj : sc.objects) {
        const Mat4 inv = affine_inverse(obj.transform);
        const Vec3 local = inv.apply_point(sc.camera.position);
        Vec3 lo = {std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::max()};
        Vec3 hi = {-lo.x, -lo.y, -lo.z};
        for (const auto& v : obj.mesh.vertices) {
            lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
            hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
        }
        if (local.x > lo.x && local.x < hi.x && local.y > lo.y && local.y < hi.y &&
            local.z > lo.z && local.z < hi.z) {
            throw DegenerateViewError("camera lies inside object '" + obj.name + "'");
        }
    }
}

// Any-hit test for the optional cast-shadow term.
bool segment_occluded(const WorldGeometry& geo, const Vec3& from, const Vec3& to) {
    const Vec3 dir = to - from;
    for (const auto& mesh : geo.meshes) {
        for (const auto& tri : mesh.triangles) {
            const Vec3& a = mesh.vertices[tri[0]];
            const Vec3 e1 = mesh.vertices[tri[1]] - a;
            const Vec3 e2 = mesh.vertices[tri[2]] - a;
            const Vec3 pv = cross(dir, e2);
            const double det = dot(e1, pv);
            if (std::abs(det) < 1e-14) continue;
            const double inv_det = 1.0 / det;
            const Vec3 tv = from - a;
            const double u = dot(tv, pv) * inv_det;
            if (u < 0.0 || u > 1.0) continue;
            const Vec3 qv = cross(tv, e1);
            const double v = dot(dir, qv) * inv_det;
            if (v < 0.0 || u + v > 1.0) continue;
            const double t = dot(e2, qv) * inv_det;
            if (t > 1e-6 && t < 1.0 - 1e-6) return true;
        }
    }
    return false;
}

}  // namespace

Projected project(const scene::CameraSpec& camera, const Vec3& point) {
    const CameraBasis b = make_basis(camera, camera.width, camera.height);
    const Vec3 c = b.to_camera(point);
    Projected out;
    out.depth = c.z;
    if (c.z < kNearPlane) {
        out.clipped = true;
        return out;
    }
    out.x = b.w / 2.0 + b.focal * c.x / c.z;
    out.y = b.h / 2.0 - b.focal * c.y / c.z;
    return out;
}

Rgb shade(const Vec3& unit_normal, const Vec3& surface_point, const Rgb& albedo,
          const scene::PointLight& light) {
    const Vec3 to_light = normalized(light.position - surface_point);
    const double lambert = std::max(0.0, dot(unit_normal, to_light));
    Rgb out = albedo * light.ambient + albedo * light.color * lambert;
    out.r = std::max(0.0, out.r);
    out.g = std::max(0.0, out.g);
    out.b = std::max(0.0, out.b);
    return out;
}

ViewBuffers render_buffers(const scene::Scene& sc_in, const scene::TransformSample& sample,
                           int width, int height) {
    const scene::Scene sc = scene::apply_transform(sample, sc_in);
    const int w = width > 0 ? width : sc.camera.width;
    const int h = height > 0 ? height : sc.camera.height;
    if (w < 16 || h < 16) throw InvalidParameterError("render resolution must be >= 16x16");
    check_camera_outside(sc);

    const CameraBasis cam = make_basis(sc.camera, w, h);
    const WorldGeometry geo = world_geometry(sc);

    ViewBuffers buffers(h, w);
    buffers.meta = sample;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            buffers.background.at(y, x, 0) = clamp01(sc.background_color.r);
            buffers.background.at(y, x, 1) = clamp01(sc.background_color.g);
            buffers.background.at(y, x, 2) = clamp01(sc.background_color.b);
        }
    }

    // Pass 1: every object except the patch strip.
    std::vector<double> zbuf(static_cast<size_t>(w) * h, std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < geo.meshes.size(); ++i) {
        const Rgb albedo = geo.sources[i]->albedo;
        rasterize(cam, geo.meshes[i], false, !geo.sources[i]->smooth_shading, zbuf,
                  [&](int y, int x, const Vec3& world, const Vec3& nrm, double, double) {
                      Rgb c = shade(nrm, world, albedo, sc.light);
                      if (sc.cast_shadows &&
                          segment_occluded(geo, world + nrm * 1e-5, sc.light.position)) {
                          c = albedo * sc.light.ambient;
                      }
                      buffers.background.at(y, x, 0) = clamp01(c.r);
                      buffers.background.at(y, x, 1) = clamp01(c.g);
                      buffers.background.at(y, x, 2) = clamp01(c.b);
                  });
    }

    // Pass 2: the strip against the scene depth. The strip is one-sided.
    const TriangleMesh strip = transformed(sc.patch.build_mesh(), sc.patch.transform);
    std::vector<double> zbuf_full = zbuf;
    const Rgb unit_albedo{1.0, 1.0, 1.0};
    rasterize(cam, strip, true, false, zbuf_full,
              [&](int y, int x, const Vec3& world, const Vec3& nrm, double u, double v) {
                  const size_t px = buffers.pixel(y, x);
                  buffers.mask[px] = 1;
                  buffers.uv[px * 2] = clamp01(u);
                  buffers.uv[px * 2 + 1] = clamp01(v);
                  Rgb c = shade(nrm, world, unit_albedo, sc.light);
                  if (sc.cast_shadows &&
                      segment_occluded(geo, world + nrm * 1e-5, sc.light.position)) {
                      c = sc.light.ambient;
                  }
                  buffers.light[px * 3] = c.r;
                  buffers.light[px * 3 + 1] = c.g;
                  buffers.light[px * 3 + 2] = c.b;
              });
    return buffers;
}

RenderedImage render_full(const scene::Scene& sc, const compose::PatchTexture& patch,
                          const scene::TransformSample& sample, int width, int height) {
    return compose::compose(patch, render_buffers(sc, sample, width, height));
}

void export_buffers(const ViewBuffers& buffers, const std::string& path_prefix) {
    io::write_ppm(path_prefix + "_background.ppm", buffers.background);
    Image light_img(buffers.h, buffers.w, 3);
    for (size_t i = 0; i < buffers.light.size(); ++i) light_img.v[i] = clamp01(buffers.light[i]);
    io::write_ppm(path_prefix + "_light.ppm", light_img);
    std::vector<uint8_t> mask_bytes(buffers.mask.size());
    for (size_t i = 0; i < buffers.mask.size(); ++i) mask_bytes[i] = buffers.mask[i] ? 255 : 0;
    io::write_pgm(path_prefix + "_mask.pgm", buffers.w, buffers.h, mask_bytes);
    io::write_uv_csv(path_prefix + "_uv.csv", buffers);
}

}  // namespace pf::raster
