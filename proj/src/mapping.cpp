#include "plantnbv/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

namespace plantnbv {

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double l) { return 1.0 / (1.0 + std::exp(-l)); }

OccupancyMap::OccupancyMap(const MapConfig& cfg)
    : cfg_(cfg),
      logit_hit_(logit(cfg.hit_probability)),
      logit_miss_(logit(cfg.miss_probability)),
      logit_min_(logit(cfg.clamp_min)),
      logit_max_(logit(cfg.clamp_max)),
      store_(1 << 16),
      hit_scratch_(1 << 12),
      miss_scratch_(1 << 16) {
    if (cfg.resolution <= 0.0) throw InvalidSpecError("map resolution must be positive");
    if (cfg.tree_depth < 1 || cfg.tree_depth > 21)
        throw InvalidSpecError("tree_depth must be in 1..21");
    // Addressable extent: 2^tree_depth voxels per axis centered on the origin.
    extent_ = static_cast<std::int32_t>(1) << (cfg.tree_depth - 1);
}

VoxelIndex OccupancyMap::voxel_at(const Vec3& p) const {
    return {detail::floor_div_index(p.x, cfg_.origin.x, cfg_.resolution),
            detail::floor_div_index(p.y, cfg_.origin.y, cfg_.resolution),
            detail::floor_div_index(p.z, cfg_.origin.z, cfg_.resolution)};
}

Vec3 OccupancyMap::voxel_center(const VoxelIndex& v) const {
    return {cfg_.origin.x + (v.i + 0.5) * cfg_.resolution,
            cfg_.origin.y + (v.j + 0.5) * cfg_.resolution,
            cfg_.origin.z + (v.k + 0.5) * cfg_.resolution};
}

bool OccupancyMap::in_extent(const VoxelIndex& v) const {
    return v.i >= -extent_ && v.i < extent_ && v.j >= -extent_ && v.j < extent_ &&
           v.k >= -extent_ && v.k < extent_;
}

void OccupancyMap::reserve_dense_core(const Box& region) {
    if (stored_voxel_count() != 0)
        throw InvalidSpecError("dense core must be reserved before any update");
    const VoxelIndex lo = voxel_at(region.min_corner());
    const VoxelIndex hi = voxel_at(region.max_corner());
    dense_lo_[0] = lo.i;
    dense_lo_[1] = lo.j;
    dense_lo_[2] = lo.k;
    dense_dim_[0] = hi.i - lo.i + 1;
    dense_dim_[1] = hi.j - lo.j + 1;
    dense_dim_[2] = hi.k - lo.k + 1;
    const std::size_t cells = static_cast<std::size_t>(dense_dim_[0]) * dense_dim_[1] *
                              static_cast<std::size_t>(dense_dim_[2]);
    if (cells > (std::size_t{1} << 28)) throw InvalidSpecError("dense core region too large");
    dense_.assign(cells, std::numeric_limits<double>::quiet_NaN());
    dense_count_ = 0;
}

void OccupancyMap::apply_update(std::uint64_t key, double delta) {
    std::int32_t i, j, k;
    unpack_voxel_key(key, i, j, k);
    if (in_dense(i, j, k)) {
        double& slot = dense_[dense_offset(i, j, k)];
        if (std::isnan(slot)) {
            slot = std::clamp(delta, logit_min_, logit_max_);
            ++dense_count_;
        } else {
            slot = std::clamp(slot + delta, logit_min_, logit_max_);
        }
        return;
    }
    double& slot = store_.get_or_insert(key, 0.0);
    slot = std::clamp(slot + delta, logit_min_, logit_max_);
}

void OccupancyMap::insert_cloud(const Vec3& sensor_origin, const PointCloud& cloud,
                                double max_range) {
    insert_cloud(sensor_origin, cloud, {}, max_range);
}

void OccupancyMap::insert_cloud(const Vec3& sensor_origin, const PointCloud& cloud,
                                const PointCloud& free_rays, double max_range) {
    if (!sensor_origin.is_finite()) throw NonFinitePointError("non-finite sensor origin");

    hit_scratch_.clear();
    miss_scratch_.clear();
    const double max_sq = max_range * max_range;

    for (const Vec3& p : cloud) {
        if (!p.is_finite()) throw NonFinitePointError("non-finite point in cloud");
        if (squared_distance(p, sensor_origin) > max_sq) continue;  // dropped, not an error

        const VoxelIndex end = voxel_at(p);
        const std::uint64_t end_key = end.key();
        if (in_extent(end)) hit_scratch_.insert(end_key);

        walk_segment(sensor_origin, p, cfg_.resolution, cfg_.origin,
                     [&](std::int32_t i, std::int32_t j, std::int32_t k) {
                         const std::uint64_t key = pack_voxel_key(i, j, k);
                         if (key != end_key) miss_scratch_.insert(key);
                         return true;
                     });
    }
    for (const Vec3& p : free_rays) {
        if (!p.is_finite()) throw NonFinitePointError("non-finite free-ray endpoint");
        Vec3 end = p;
        const double d2 = squared_distance(p, sensor_origin);
        if (d2 > max_sq)
            end = sensor_origin + (p - sensor_origin) * (max_range / std::sqrt(d2));
        walk_segment(sensor_origin, end, cfg_.resolution, cfg_.origin,
                     [&](std::int32_t i, std::int32_t j, std::int32_t k) {
                         miss_scratch_.insert(pack_voxel_key(i, j, k));
                         return true;
                     });
    }

    // Hit wins over miss when both apply within one insertion.
    hit_scratch_.for_each([&](std::uint64_t key) { apply_update(key, logit_hit_); });
    miss_scratch_.for_each([&](std::uint64_t key) {
        if (hit_scratch_.contains(key)) return;
        std::int32_t i, j, k;
        unpack_voxel_key(key, i, j, k);
        if (!in_extent({i, j, k})) return;
        apply_update(key, logit_miss_);
    });
}

std::vector<VoxelIndex> OccupancyMap::traverse_segment(const Vec3& a, const Vec3& b) const {
    std::vector<VoxelIndex> out;
    walk_segment(a, b, cfg_.resolution, cfg_.origin,
                 [&](std::int32_t i, std::int32_t j, std::int32_t k) {
                     out.push_back({i, j, k});
                     return true;
                 });
    return out;
}

double OccupancyMap::occupancy(const VoxelIndex& v) const {
    const double* slot = stored_log_odds(v.key());
    return slot ? inv_logit(*slot) : 0.5;
}

double OccupancyMap::log_odds_at(const VoxelIndex& v) const {
    const double* slot = stored_log_odds(v.key());
    return slot ? *slot : 0.0;
}

bool OccupancyMap::is_occupied(const VoxelIndex& v) const {
    return occupancy(v) > cfg_.occupancy_threshold;
}

bool OccupancyMap::is_known(const VoxelIndex& v) const {
    return stored_log_odds(v.key()) != nullptr;
}

PointCloud OccupancyMap::export_occupied_cloud() const {
    std::vector<std::uint64_t> keys;
    keys.reserve(stored_voxel_count() / 8 + 1);
    const double threshold_logit = logit(cfg_.occupancy_threshold);
    for_each_stored([&](const VoxelIndex& v, double value) {
        if (value > threshold_logit) keys.push_back(v.key());
    });
    std::sort(keys.begin(), keys.end());
    PointCloud cloud;
    cloud.reserve(keys.size());
    for (std::uint64_t key : keys) cloud.push_back(voxel_center(VoxelIndex::from_key(key)));
    return cloud;
}

void OccupancyMap::set_log_odds(const VoxelIndex& v, double log_odds) {
    const double clamped = std::clamp(log_odds, logit_min_, logit_max_);
    if (in_dense(v.i, v.j, v.k)) {
        double& slot = dense_[dense_offset(v.i, v.j, v.k)];
        if (std::isnan(slot)) ++dense_count_;
        slot = clamped;
        return;
    }
    store_.get_or_insert(v.key(), 0.0) = clamped;
}

OccupancyMap OccupancyMap::from_dump(std::istream& in, const MapConfig& base) {
    MapConfig cfg = base;
    std::string tag;
    if (!(in >> tag) || tag != "resolution") throw ParseError("map dump: missing header");
    if (!(in >> cfg.resolution >> tag >> cfg.origin.x >> cfg.origin.y >> cfg.origin.z) ||
        tag != "origin")
        throw ParseError("map dump: malformed header");
    OccupancyMap map(cfg);
    VoxelIndex v;
    double l;
    while (in >> v.i >> v.j >> v.k >> l) map.set_log_odds(v, l);
    return map;
}

void OccupancyMap::dump(std::ostream& out) const {
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(stored_voxel_count());
    for_each_stored(
        [&](const VoxelIndex& v, double value) { entries.emplace_back(v.key(), value); });
    std::sort(entries.begin(), entries.end());
    char buf[160];
    std::snprintf(buf, sizeof(buf), "resolution %.17g origin %.17g %.17g %.17g\n",
                  cfg_.resolution, cfg_.origin.x, cfg_.origin.y, cfg_.origin.z);
    out << buf;
    for (const auto& [key, value] : entries) {
        const VoxelIndex v = VoxelIndex::from_key(key);
        std::snprintf(buf, sizeof(buf), "%d %d %d %.17g\n", v.i, v.j, v.k, value);
        out << buf;
    }
}

}  // namespace plantnbv
