#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/voxel_hash.hpp"

namespace plantnbv {

struct VoxelIndex {
    std::int32_t i = 0, j = 0, k = 0;
    bool operator==(const VoxelIndex& o) const { return i == o.i && j == o.j && k == o.k; }
    bool operator!=(const VoxelIndex& o) const { return !(*this == o); }
    bool operator<(const VoxelIndex& o) const {
        if (i != o.i) return i < o.i;
        if (j != o.j) return j < o.j;
        return k < o.k;
    }
    std::uint64_t key() const { return pack_voxel_key(i, j, k); }
    static VoxelIndex from_key(std::uint64_t key) {
        VoxelIndex v;
        unpack_voxel_key(key, v.i, v.j, v.k);
        return v;
    }
};

struct MapConfig {
    double resolution = 0.003;          // leaf voxel edge, meters
    int tree_depth = 16;                // bound on the addressable extent
    Vec3 origin{0.0, 0.0, 0.0};
    double clamp_min = 0.12;            // probability clamps
    double clamp_max = 0.97;
    double occupancy_threshold = 0.5;
    double hit_probability = 0.7;
    double miss_probability = 0.4;
};

double logit(double p);
double inv_logit(double l);

// Visits the leaf voxels intersected by segment [a, b] in order, using
// incremental Amanatides-Woo stepping. The visitor returns false to stop the
// walk early. First voxel contains a, last contains b.
template <class Fn>
void walk_segment(const Vec3& a, const Vec3& b, double resolution, const Vec3& origin,
                  Fn&& visit);

// Probabilistic occupancy grid with sparse hash storage at leaf granularity.
// Unknown voxels are absent and read back as P=0.5. Writers must be
// serialized; all const queries are safe to run concurrently.
class OccupancyMap {
   public:
    explicit OccupancyMap(const MapConfig& cfg = {});

    const MapConfig& config() const { return cfg_; }
    double resolution() const { return cfg_.resolution; }

    VoxelIndex voxel_at(const Vec3& p) const;
    Vec3 voxel_center(const VoxelIndex& v) const;
    bool in_extent(const VoxelIndex& v) const;

    // Integrate one depth cloud: endpoint voxels take a hit update, voxels
    // traversed between the sensor origin and each endpoint take a miss
    // update, each voxel at most once per call with hit winning over miss.
    // Points farther than max_range from the origin are dropped. Throws
    // NonFinitePointError on non-finite input.
    void insert_cloud(const Vec3& sensor_origin, const PointCloud& cloud, double max_range);

    // Same fusion round, plus miss-only rays: each free_ray endpoint carves
    // every traversed voxel including its own (no surface there). Used for
    // out-of-range sensor returns truncated at max range.
    void insert_cloud(const Vec3& sensor_origin, const PointCloud& cloud,
                      const PointCloud& free_rays, double max_range);

    std::vector<VoxelIndex> traverse_segment(const Vec3& a, const Vec3& b) const;

    double occupancy(const VoxelIndex& v) const;
    double log_odds_at(const VoxelIndex& v) const;  // 0.0 when unknown
    bool is_occupied(const VoxelIndex& v) const;
    bool is_known(const VoxelIndex& v) const;

    // Stored log-odds slot for a packed key, nullptr when unknown. Hot-path
    // accessor for the gain tracer.
    const double* stored_log_odds(std::uint64_t key) const {
        std::int32_t i, j, k;
        unpack_voxel_key(key, i, j, k);
        if (in_dense(i, j, k)) {
            const double& slot = dense_[dense_offset(i, j, k)];
            return std::isnan(slot) ? nullptr : &slot;
        }
        return store_.find(key);
    }

    // Backs the given world-space region with a dense array so the heavily
    // trafficked workspace avoids hash probing. Call before any update;
    // observable behavior is unchanged.
    void reserve_dense_core(const Box& region);

    PointCloud export_occupied_cloud() const;

    std::size_t stored_voxel_count() const { return store_.size() + dense_count_; }

    // Direct voxel write (clamped), used by dump restoration and by tests
    // that build synthetic maps.
    void set_log_odds(const VoxelIndex& v, double log_odds);

    // Text dump, one `i j k log_odds` line per stored voxel after a header
    // line with resolution and origin. Sorted by index for determinism.
    void dump(std::ostream& out) const;
    static OccupancyMap from_dump(std::istream& in, const MapConfig& base = {});

    template <class Fn>
    void for_each_stored(Fn&& fn) const {  // fn(VoxelIndex, double log_odds)
        store_.for_each(
            [&](std::uint64_t key, double value) { fn(VoxelIndex::from_key(key), value); });
        if (dense_dim_[0] > 0) {
            std::size_t offset = 0;
            for (std::int32_t i = 0; i < dense_dim_[0]; ++i)
                for (std::int32_t j = 0; j < dense_dim_[1]; ++j)
                    for (std::int32_t k = 0; k < dense_dim_[2]; ++k, ++offset) {
                        const double value = dense_[offset];
                        if (!std::isnan(value))
                            fn(VoxelIndex{dense_lo_[0] + i, dense_lo_[1] + j,
                                          dense_lo_[2] + k},
                               value);
                    }
        }
    }

    double logit_hit() const { return logit_hit_; }
    double logit_miss() const { return logit_miss_; }
    double logit_min() const { return logit_min_; }
    double logit_max() const { return logit_max_; }

   private:
    void apply_update(std::uint64_t key, double delta);

    bool in_dense(std::int32_t i, std::int32_t j, std::int32_t k) const {
        return i >= dense_lo_[0] && i < dense_lo_[0] + dense_dim_[0] && j >= dense_lo_[1] &&
               j < dense_lo_[1] + dense_dim_[1] && k >= dense_lo_[2] &&
               k < dense_lo_[2] + dense_dim_[2];
    }
    std::size_t dense_offset(std::int32_t i, std::int32_t j, std::int32_t k) const {
        return (static_cast<std::size_t>(i - dense_lo_[0]) * dense_dim_[1] +
                (j - dense_lo_[1])) *
                   dense_dim_[2] +
               (k - dense_lo_[2]);
    }

    MapConfig cfg_;
    double logit_hit_, logit_miss_, logit_min_, logit_max_;
    std::int32_t extent_;  // max |index| addressable given tree_depth
    VoxelTable store_;
    VoxelKeySet hit_scratch_;
    VoxelKeySet miss_scratch_;
    // Optional dense backing for the workspace region; NaN marks unknown.
    std::vector<double> dense_;
    std::int32_t dense_lo_[3] = {0, 0, 0};
    std::int32_t dense_dim_[3] = {0, 0, 0};
    std::size_t dense_count_ = 0;
};

// --- implementation of the templated walker ---------------------------------

namespace detail {
inline std::int32_t floor_div_index(double coord, double origin, double resolution) {
    return static_cast<std::int32_t>(std::floor((coord - origin) / resolution));
}
}  // namespace detail

template <class Fn>
void walk_segment(const Vec3& a, const Vec3& b, double resolution, const Vec3& origin,
                  Fn&& visit) {
    std::int32_t i = detail::floor_div_index(a.x, origin.x, resolution);
    std::int32_t j = detail::floor_div_index(a.y, origin.y, resolution);
    std::int32_t k = detail::floor_div_index(a.z, origin.z, resolution);
    const std::int32_t ie = detail::floor_div_index(b.x, origin.x, resolution);
    const std::int32_t je = detail::floor_div_index(b.y, origin.y, resolution);
    const std::int32_t ke = detail::floor_div_index(b.z, origin.z, resolution);

    const Vec3 d = b - a;
    const int step_i = d.x > 0 ? 1 : (d.x < 0 ? -1 : 0);
    const int step_j = d.y > 0 ? 1 : (d.y < 0 ? -1 : 0);
    const int step_k = d.z > 0 ? 1 : (d.z < 0 ? -1 : 0);

    constexpr double kInf = std::numeric_limits<double>::infinity();
    // Parameter t in [0,1] along a->b at which the next boundary of each axis
    // is crossed, and the per-step increment.
    auto axis_setup = [&](double a0, double o0, double d0, std::int32_t idx, int step,
                          double& t_max, double& t_delta) {
        if (step == 0) {
            t_max = kInf;
            t_delta = kInf;
            return;
        }
        const double next_boundary = o0 + (idx + (step > 0 ? 1 : 0)) * resolution;
        t_max = (next_boundary - a0) / d0;
        t_delta = resolution / std::abs(d0);
    };
    double t_max_x, t_delta_x, t_max_y, t_delta_y, t_max_z, t_delta_z;
    axis_setup(a.x, origin.x, d.x, i, step_i, t_max_x, t_delta_x);
    axis_setup(a.y, origin.y, d.y, j, step_j, t_max_y, t_delta_y);
    axis_setup(a.z, origin.z, d.z, k, step_k, t_max_z, t_delta_z);

    // Upper bound on steps; floating-point noise cannot make the walk spin.
    std::int64_t remaining = std::int64_t{3} + std::abs(std::int64_t{ie} - i) +
                             std::abs(std::int64_t{je} - j) + std::abs(std::int64_t{ke} - k);
    while (true) {
        if (!visit(i, j, k)) return;
        if (i == ie && j == je && k == ke) return;
        if (--remaining <= 0) {
            // Numerical corner: land exactly on the endpoint voxel.
            visit(ie, je, ke);
            return;
        }
        if (t_max_x < t_max_y) {
            if (t_max_x < t_max_z) {
                i += step_i;
                t_max_x += t_delta_x;
            } else {
                k += step_k;
                t_max_z += t_delta_z;
            }
        } else {
            if (t_max_y < t_max_z) {
                j += step_j;
                t_max_y += t_delta_y;
            } else {
                k += step_k;
                t_max_z += t_delta_z;
            }
        }
    }
}

}  // namespace plantnbv
