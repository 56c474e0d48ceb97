#include "plantnbv/gain.hpp"

#include <algorithm>
#include <cmath>

namespace plantnbv {

double voxel_entropy(double p) {
    if (p < 0.0 || p > 1.0) throw OutOfRangeError("probability outside [0,1]");
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

namespace {

// Shared frustum walk: feeds every visible voxel key into the sink, applying
// the first-occupied-voxel termination rule per ray.
template <class Sink>
void trace_frustum(const OccupancyMap& map, const CameraModel& cam, const Viewpoint& view,
                   const RayGrid& grid, double raycast_range, Sink&& sink) {
    CameraModel ray_cam = cam;
    ray_cam.image_width = grid.nu;
    ray_cam.image_height = grid.nv;
    const double threshold_logit = logit(map.config().occupancy_threshold);
    for (int v = 0; v < grid.nv; ++v) {
        for (int u = 0; u < grid.nu; ++u) {
            const Vec3 dir = pixel_ray_world(ray_cam, view, u, v);
            const Vec3 end = view.position + dir * raycast_range;
            walk_segment(view.position, end, map.resolution(), map.config().origin,
                         [&](std::int32_t i, std::int32_t j, std::int32_t k) {
                             sink(pack_voxel_key(i, j, k));
                             // Terminate at (and include) the first occupied voxel.
                             const double l = map.log_odds_at({i, j, k});
                             return l <= threshold_logit;
                         });
        }
    }
}

}  // namespace

std::vector<VoxelIndex> ray_trace_visible(const OccupancyMap& map, const CameraModel& cam,
                                          const Viewpoint& view, const RayGrid& grid,
                                          double raycast_range) {
    if (grid.nu < 2 || grid.nv < 2) throw InvalidSpecError("ray grid must be at least 2x2");
    if (raycast_range <= 0.0) throw InvalidSpecError("raycast_range must be positive");

    std::vector<std::uint64_t> keys;
    keys.reserve(static_cast<std::size_t>(grid.nu) * grid.nv * 8);
    trace_frustum(map, cam, view, grid, raycast_range,
                  [&](std::uint64_t key) { keys.push_back(key); });
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    std::vector<VoxelIndex> out;
    out.reserve(keys.size());
    for (std::uint64_t key : keys) out.push_back(VoxelIndex::from_key(key));
    return out;
}

GainReport expected_gain(const OccupancyMap& map, const CameraModel& cam, const Viewpoint& view,
                         const RegionOfInterest& roi, const RayGrid& grid,
                         double raycast_range) {
    if (grid.nu < 2 || grid.nv < 2) throw InvalidSpecError("ray grid must be at least 2x2");
    if (raycast_range <= 0.0) throw InvalidSpecError("raycast_range must be positive");

    // Entropy is accumulated per distinct stored log-odds value rather than
    // per voxel: counts are set-determined and the final sum runs over sorted
    // bucket keys, so the result is exactly invariant to ray order. Unknown
    // voxels contribute exactly 1 bit each. The visit set caches the
    // termination flag so only first visits query the occupancy table.
    thread_local VoxelVisitSet visited(1 << 16);
    thread_local VoxelTable buckets(1 << 8);  // log-odds bits -> voxel count
    visited.clear();
    buckets.clear();

    auto bucket_add = [&](double log_odds) {
        buckets.get_or_insert(std::bit_cast<std::uint64_t>(log_odds), 0.0) += 1.0;
    };

    GainReport report;
    report.viewpoint = view;
    const bool unfiltered = roi.is_none();
    std::int64_t visible = 0, roi_count = 0, unknown_roi = 0;

    CameraModel ray_cam = cam;
    ray_cam.image_width = grid.nu;
    ray_cam.image_height = grid.nv;
    const double threshold_logit = logit(map.config().occupancy_threshold);
    const double resolution = map.resolution();
    const Vec3 origin = map.config().origin;

    for (int v = 0; v < grid.nv; ++v) {
        for (int u = 0; u < grid.nu; ++u) {
            const Vec3 dir = pixel_ray_world(ray_cam, view, u, v);
            const Vec3 end = view.position + dir * raycast_range;
            walk_segment(view.position, end, resolution, origin,
                         [&](std::int32_t i, std::int32_t j, std::int32_t k) {
                             const std::uint64_t key = pack_voxel_key(i, j, k);
                             const auto [fresh, slot_idx] = visited.acquire(key);
                             if (!fresh) return visited.flag(slot_idx) == 0;
                             const double* slot = map.stored_log_odds(key);
                             const bool terminate =
                                 slot != nullptr && *slot > threshold_logit;
                             visited.set_flag(slot_idx, terminate ? 1 : 0);
                             ++visible;
                             if (unfiltered || roi.contains(map.voxel_center({i, j, k}))) {
                                 ++roi_count;
                                 if (slot)
                                     bucket_add(*slot);
                                 else
                                     ++unknown_roi;
                             }
                             return !terminate;
                         });
        }
    }

    std::vector<std::pair<std::uint64_t, double>> bucket_entries;
    buckets.for_each([&](std::uint64_t bits, double count) {
        bucket_entries.emplace_back(bits, count);
    });
    std::sort(bucket_entries.begin(), bucket_entries.end());
    double gain = static_cast<double>(unknown_roi);  // 1 bit per unknown voxel
    for (const auto& [bits, count] : bucket_entries)
        gain += count * voxel_entropy(inv_logit(std::bit_cast<double>(bits)));

    report.gain = gain;
    report.visible_voxel_count = visible;
    report.roi_voxel_count = roi_count;
    return report;
}

}  // namespace plantnbv
