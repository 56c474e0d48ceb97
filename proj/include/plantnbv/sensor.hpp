#pragma once

#include <string>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/rng.hpp"
#include "plantnbv/scene.hpp"

namespace plantnbv {

struct CameraModel {
    double horizontal_fov = deg_to_rad(70.0);
    double vertical_fov = deg_to_rad(55.0);
    int image_width = 320;
    int image_height = 240;
    double max_range = 0.75;       // meters
    double noise_stddev = 0.0;     // additive Gaussian depth noise hook, off by default
};

// Camera pose. orientation is world-from-camera; the optical axis is the
// camera +z axis, +x is image right, +y is image down.
struct Viewpoint {
    Vec3 position;
    Quat orientation;
};

// Pose at `position` with the optical axis through `target`, image kept
// upright relative to `up`.
Viewpoint look_at(const Vec3& position, const Vec3& target, const Vec3& up = {0.0, 0.0, 1.0});

// Pinhole ray through the center of pixel (u, v) on a width x height grid
// spanning the FOV, in camera frame (unit length).
Vec3 pixel_ray_camera(const CameraModel& cam, int u, int v);
Vec3 pixel_ray_camera(double horizontal_fov, double vertical_fov, int width, int height, int u,
                      int v);

// World-frame pixel ray. Rendering, re-projection and visibility tracing all
// use this one code path so the produced rays agree bit for bit.
Vec3 pixel_ray_world(const CameraModel& cam, const Viewpoint& view, int u, int v);

struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<double> depth;  // row-major range along the pixel ray; +inf = no hit

    static constexpr double kNoHit = std::numeric_limits<double>::infinity();

    double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
    double& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

// Renders range-along-ray depth against the mesh index. Each pixel is one
// cast_ray query, so render/cast consistency is exact by construction.
DepthImage render_depth(const BoundingVolumeIndex& scene, const CameraModel& cam,
                        const Viewpoint& view, Rng* noise_rng = nullptr);

// One world-frame point per finite pixel, row-major order.
PointCloud depth_to_cloud(const DepthImage& img, const CameraModel& cam, const Viewpoint& view);

// One max-range endpoint per no-hit pixel, row-major order: the free-space
// rays an out-of-range return carves when that mode is enabled.
PointCloud depth_to_free_endpoints(const DepthImage& img, const CameraModel& cam,
                                   const Viewpoint& view);

// Debug dump: 16-bit PGM in millimeters, 65535 marks no-hit pixels.
void save_pgm(const std::string& path, const DepthImage& img);

}  // namespace plantnbv
