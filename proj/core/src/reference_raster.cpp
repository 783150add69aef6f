#include <cmath>

#include "primcomp/projection.hpp"

namespace primcomp::proj {

using geom::Vec2;
using geom::Vec3;

// Hard z-buffer rasterizer used as the test oracle and the dataset renderer.
// Shares the projection and texture-addressing conventions with the soft
// rasterizer (affine screen-space barycentrics, nearest-texel sampling,
// camera-space z) but none of its aggregation machinery.
ReferenceImage rasterize_reference(std::span<const ReferenceItem> items, const geom::Camera& cam,
                                   real d_far) {
    geom::validate_camera(cam);
    int channels = 0;
    for (const ReferenceItem& item : items) {
        int c = item.texels.defined() ? static_cast<int>(item.texels.dim(1))
                                      : static_cast<int>(item.flat_color.size());
        check(c > 0, "reference item needs a flat color or texels");
        check(channels == 0 || channels == c, "reference items disagree on channel count");
        channels = c;
    }
    if (channels == 0) channels = 3;

    ReferenceImage img;
    img.channels = channels;
    img.height = cam.height;
    img.width = cam.width;
    const int64_t npix = int64_t(cam.height) * cam.width;
    img.color.assign(static_cast<size_t>(channels) * npix, 0);
    img.depth.assign(npix, d_far);
    img.instance.assign(npix, -1);

    for (size_t item_idx = 0; item_idx < items.size(); ++item_idx) {
        const ReferenceItem& item = items[item_idx];
        check(item.mesh != nullptr, "reference item has no mesh");
        const prim::CanonicalMesh& mesh = *item.mesh;
        size_t nverts = mesh.vertices.size();
        std::vector<real> px(nverts), py(nverts), pz(nverts);
        std::vector<char> ok(nverts);
        for (size_t v = 0; v < nverts; ++v) {
            Vec3 p = mesh.vertices[v];
            Vec3 world = item.pose.rotation * Vec3{p.x * item.pose.scale.x, p.y * item.pose.scale.y,
                                                   p.z * item.pose.scale.z} +
                         item.pose.translation;
            real depth;
            bool valid;
            Vec2 pix = geom::project_point(cam, world, depth, valid);
            px[v] = pix.x;
            py[v] = pix.y;
            pz[v] = depth;
            ok[v] = valid;
        }
        for (size_t f = 0; f < mesh.triangles.size(); ++f) {
            const auto& t = mesh.triangles[f];
            if (!ok[t[0]] || !ok[t[1]] || !ok[t[2]]) continue;
            real x0 = px[t[0]], y0 = py[t[0]];
            real x1 = px[t[1]], y1 = py[t[1]];
            real x2 = px[t[2]], y2 = py[t[2]];
            real area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0);
            if (std::abs(area2) < real(1e-12)) continue;
            int xlo = std::max(0, static_cast<int>(std::ceil(std::min({x0, x1, x2}))));
            int xhi = std::min(cam.width - 1, static_cast<int>(std::floor(std::max({x0, x1, x2}))));
            int ylo = std::max(0, static_cast<int>(std::ceil(std::min({y0, y1, y2}))));
            int yhi = std::min(cam.height - 1, static_cast<int>(std::floor(std::max({y0, y1, y2}))));
            for (int y = ylo; y <= yhi; ++y) {
                for (int x = xlo; x <= xhi; ++x) {
                    real c0 = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1);
                    real c1 = (x0 - x2) * (y - y2) - (y0 - y2) * (x - x2);
                    real c2 = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
                    bool inside = area2 > 0 ? (c0 >= 0 && c1 >= 0 && c2 >= 0)
                                            : (c0 <= 0 && c1 <= 0 && c2 <= 0);
                    if (!inside) continue;
                    real b0 = c0 / area2, b1 = c1 / area2, b2 = c2 / area2;
                    real depth = b0 * pz[t[0]] + b1 * pz[t[1]] + b2 * pz[t[2]];
                    int64_t p = int64_t(y) * cam.width + x;
                    if (depth >= img.depth[p]) continue;
                    img.depth[p] = depth;
                    img.instance[p] = static_cast<int>(item_idx);
                    if (item.texels.defined()) {
                        real u = b0 * mesh.uv[t[0]].x + b1 * mesh.uv[t[1]].x + b2 * mesh.uv[t[2]].x;
                        real v = b0 * mesh.uv[t[0]].y + b1 * mesh.uv[t[1]].y + b2 * mesh.uv[t[2]].y;
                        int64_t texel = item.texture.texel(mesh.page[f], u, v);
                        for (int c = 0; c < channels; ++c) {
                            img.color[c * npix + p] = item.texels.at(texel * channels + c);
                        }
                    } else {
                        for (int c = 0; c < channels; ++c) img.color[c * npix + p] = item.flat_color[c];
                    }
                }
            }
        }
    }
    return img;
}

}  // namespace primcomp::proj
