#include "plantnbv/sensor.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace plantnbv {

Viewpoint look_at(const Vec3& position, const Vec3& target, const Vec3& up) {
    const Vec3 forward = (target - position).normalized();
    Vec3 right = forward.cross(up);
    const double n = right.norm();
    if (n < 1e-12) {
        // Optical axis parallel to up: fall back to a fixed right vector.
        right = forward.cross(Vec3{1.0, 0.0, 0.0});
        if (right.norm() < 1e-12) right = forward.cross(Vec3{0.0, 1.0, 0.0});
        right = right.normalized();
    } else {
        right = right / n;
    }
    const Vec3 down = forward.cross(right);
    return {position, Quat::from_columns(right, down, forward)};
}

Vec3 pixel_ray_camera(double horizontal_fov, double vertical_fov, int width, int height, int u,
                      int v) {
    const double tan_h = std::tan(horizontal_fov / 2.0);
    const double tan_v = std::tan(vertical_fov / 2.0);
    const double ndc_u = 2.0 * (u + 0.5) / width - 1.0;
    const double ndc_v = 2.0 * (v + 0.5) / height - 1.0;
    return Vec3{tan_h * ndc_u, tan_v * ndc_v, 1.0}.normalized();
}

Vec3 pixel_ray_camera(const CameraModel& cam, int u, int v) {
    return pixel_ray_camera(cam.horizontal_fov, cam.vertical_fov, cam.image_width,
                            cam.image_height, u, v);
}

Vec3 pixel_ray_world(const CameraModel& cam, const Viewpoint& view, int u, int v) {
    return view.orientation.rotate(pixel_ray_camera(cam, u, v));
}

DepthImage render_depth(const BoundingVolumeIndex& scene, const CameraModel& cam,
                        const Viewpoint& view, Rng* noise_rng) {
    DepthImage img;
    img.width = cam.image_width;
    img.height = cam.image_height;
    img.depth.assign(static_cast<std::size_t>(img.width) * img.height, DepthImage::kNoHit);

    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const Vec3 dir = pixel_ray_world(cam, view, u, v);
            const auto hit = scene.cast_ray(view.position, dir, cam.max_range);
            if (!hit) continue;
            double d = hit->distance;
            if (noise_rng && cam.noise_stddev > 0.0) {
                d = std::max(1e-6, d + noise_rng->gaussian(0.0, cam.noise_stddev));
                if (d > cam.max_range) continue;
            }
            img.at(u, v) = d;
        }
    }
    return img;
}

PointCloud depth_to_cloud(const DepthImage& img, const CameraModel& cam, const Viewpoint& view) {
    if (img.width != cam.image_width || img.height != cam.image_height)
        throw InvalidSpecError("depth image dimensions do not match the camera model");
    PointCloud cloud;
    cloud.reserve(img.depth.size() / 2);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            const double d = img.at(u, v);
            if (!std::isfinite(d)) continue;
            cloud.push_back(view.position + pixel_ray_world(cam, view, u, v) * d);
        }
    }
    return cloud;
}

PointCloud depth_to_free_endpoints(const DepthImage& img, const CameraModel& cam,
                                   const Viewpoint& view) {
    if (img.width != cam.image_width || img.height != cam.image_height)
        throw InvalidSpecError("depth image dimensions do not match the camera model");
    PointCloud rays;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            if (std::isfinite(img.at(u, v))) continue;
            rays.push_back(view.position + pixel_ray_world(cam, view, u, v) * cam.max_range);
        }
    }
    return rays;
}

void save_pgm(const std::string& path, const DepthImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write pgm file: " + path);
    out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    for (double d : img.depth) {
        std::uint16_t mm = 65535;  // sentinel
        if (std::isfinite(d))
            mm = static_cast<std::uint16_t>(
                std::min(65534.0, std::max(0.0, std::llround(d * 1000.0) * 1.0)));
        const unsigned char hi = static_cast<unsigned char>(mm >> 8);
        const unsigned char lo = static_cast<unsigned char>(mm & 0xff);
        out.put(static_cast<char>(hi));
        out.put(static_cast<char>(lo));
    }
    if (!out) throw IoError("failed writing pgm file: " + path);
}

}  // namespace plantnbv
