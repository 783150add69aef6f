#include <cmath>

#include "primcomp/projection.hpp"

namespace primcomp::proj {

namespace op = primcomp::ops;

std::shared_ptr<const prim::CanonicalMesh> MeshCache::get(prim::Kind kind, int resolution) {
    auto key = std::make_pair(kind, resolution);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto mesh = std::make_shared<prim::CanonicalMesh>(prim::canonical_mesh(kind, resolution));
    cache_.emplace(key, mesh);
    return mesh;
}

Tensor silhouette_to_alpha(const Tensor& silhouette, real kernel_radius) {
    check(silhouette.defined() && silhouette.rank() == 2,
          "silhouette must be (H,W), got " + shape_str(silhouette.shape()));
    check(kernel_radius >= 0, "kernel radius must be >= 0");
    if (kernel_radius == 0) return silhouette;

    int half = static_cast<int>(std::ceil(kernel_radius));
    int k = 2 * half + 1;
    real sigma = kernel_radius / 2;
    Tensor kernel = Tensor::zeros({1, 1, k, k});
    real total = 0;
    for (int y = -half; y <= half; ++y) {
        for (int x = -half; x <= half; ++x) {
            real r2 = real(x * x + y * y);
            real w = r2 <= kernel_radius * kernel_radius
                         ? std::exp(-r2 / (2 * sigma * sigma))
                         : real(0);  // truncated at the radius
            kernel.data()[(y + half) * k + (x + half)] = w;
            total += w;
        }
    }
    for (int64_t i = 0; i < kernel.size(); ++i) kernel.data()[i] /= total;

    int64_t h = silhouette.dim(0), w = silhouette.dim(1);
    Tensor as_image = op::reshape(silhouette, {1, h, w});
    Tensor blurred = op::conv2d(as_image, kernel, 1, half);
    return op::clamp(op::reshape(blurred, {h, w}), 0, 1);
}

namespace {

// mesh-kind projection shared by spheres, cuboids, the background, and the
// bounding cuboid of point clouds
SoftRasterOutput raster_primitive_mesh(const prim::PrimitiveAttr& attr,
                                       std::shared_ptr<const prim::CanonicalMesh> mesh,
                                       const Tensor& texels, const geom::Camera& cam,
                                       const ProjectionConfig& config) {
    int64_t nverts = static_cast<int64_t>(mesh->vertices.size());
    Tensor canonical = Tensor::zeros({nverts, 3});
    for (int64_t v = 0; v < nverts; ++v) {
        canonical.data()[3 * v] = mesh->vertices[v].x;
        canonical.data()[3 * v + 1] = mesh->vertices[v].y;
        canonical.data()[3 * v + 2] = mesh->vertices[v].z;
    }
    Tensor world = prim::transform_to_world(attr, canonical);
    geom::ProjectResult projected = geom::project(cam, world);

    SoftRasterInputs in;
    in.pixels = projected.pixels;
    in.depths = projected.depths;
    in.valid = projected.valid;
    in.mesh = std::move(mesh);
    if (texels.defined()) {
        in.texels = texels;
        in.texture = prim::texture_desc(attr.spec);
    }
    return rasterize_mesh_soft(in, cam.height, cam.width, config);
}

Tensor fill_far_where_transparent(const Tensor& depth, const Tensor& alpha,
                                  const ProjectionConfig& config) {
    Tensor cond = op::add_scalar(alpha, -config.alpha_eps).detached();
    Tensor far = Tensor::full(depth.shape(), config.d_far);
    return op::where_positive(cond, depth, far);
}

}  // namespace

std::pair<Tensor, Tensor> bbox_alpha_depth(const prim::PrimitiveAttr& attr, const geom::Camera& cam,
                                           const ProjectionConfig& config, MeshCache& meshes) {
    check(attr.spec.kind == prim::Kind::PointCloud, "bbox_alpha_depth applies to point clouds");
    auto mesh = meshes.get(prim::Kind::Cuboid, attr.spec.cuboid_mesh_res);
    SoftRasterOutput raster = raster_primitive_mesh(attr, std::move(mesh), Tensor{}, cam, config);
    Tensor alpha = silhouette_to_alpha(raster.silhouette, config.kernel_radius);
    return {alpha, raster.depth};
}

FeatureTriplet project_primitive(const prim::PrimitiveAttr& attr, const geom::Camera& cam,
                                 const ProjectionConfig& config, MeshCache& meshes) {
    geom::validate_camera(cam);
    FeatureTriplet triplet;
    switch (attr.spec.kind) {
        case prim::Kind::PointCloud: {
            Tensor world = prim::transform_to_world(attr, attr.point_locations);
            geom::ProjectResult projected = geom::project(cam, world);
            triplet.X = splat_points(projected.pixels, projected.valid, attr.point_features,
                                     cam.height, cam.width, config.sigma_splat);
            auto [alpha, depth] = bbox_alpha_depth(attr, cam, config, meshes);
            triplet.A = alpha;
            triplet.D = fill_far_where_transparent(depth, alpha, config);
            break;
        }
        case prim::Kind::Cuboid:
        case prim::Kind::Sphere: {
            auto mesh = meshes.get(attr.spec.kind, attr.spec.kind == prim::Kind::Cuboid
                                                       ? attr.spec.cuboid_mesh_res
                                                       : attr.spec.sphere_mesh_res);
            SoftRasterOutput raster =
                raster_primitive_mesh(attr, std::move(mesh), attr.texels, cam, config);
            triplet.X = raster.features;
            triplet.A = silhouette_to_alpha(raster.silhouette, config.kernel_radius);
            triplet.D = fill_far_where_transparent(raster.depth, triplet.A, config);
            break;
        }
        case prim::Kind::Background: {
            auto mesh = meshes.get(prim::Kind::Background, attr.spec.sphere_mesh_res);
            SoftRasterOutput raster =
                raster_primitive_mesh(attr, std::move(mesh), attr.texels, cam, config);
            triplet.X = raster.features;
            // The camera sits inside the background sphere, so its coverage
            // is 1 by construction. The per-triangle soft silhouette dips at
            // interior mesh edges and would understate it.
            triplet.A = Tensor::full({cam.height, cam.width}, 1);
            triplet.D = raster.depth;
            break;
        }
    }
    return triplet;
}

}  // namespace primcomp::proj
