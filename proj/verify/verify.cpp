#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "plantnbv/planning.hpp"
#include "plantnbv/rng.hpp"

namespace plantnbv::verify {

std::optional<RayHit> brute_force_cast_ray(const TriangleMesh& mesh, const Vec3& origin,
                                           const Vec3& direction, double max_range) {
    std::optional<RayHit> best;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const auto hit = ray_triangle_intersect(origin, direction, mesh.vertices[tri[0]],
                                                mesh.vertices[tri[1]], mesh.vertices[tri[2]]);
        if (!hit || *hit > max_range) continue;
        const int id = static_cast<int>(t);
        if (!best || *hit < best->distance || (*hit == best->distance && id < best->triangle))
            best = RayHit{*hit, id};
    }
    return best;
}

namespace {

VoxelIndex voxel_of(const Vec3& p, double resolution, const Vec3& origin) {
    return {static_cast<std::int32_t>(std::floor((p.x - origin.x) / resolution)),
            static_cast<std::int32_t>(std::floor((p.y - origin.y) / resolution)),
            static_cast<std::int32_t>(std::floor((p.z - origin.z) / resolution))};
}

int index_delta(const VoxelIndex& a, const VoxelIndex& b) {
    return std::abs(a.i - b.i) + std::abs(a.j - b.j) + std::abs(a.k - b.k);
}

// Emits the voxel sequence between two parameters whose voxels differ by more
// than one grid step, bisecting until every boundary crossing is isolated.
void refine_bracket(const Vec3& a, const Vec3& d, double resolution, const Vec3& origin,
                    double t0, const VoxelIndex& v0, double t1, const VoxelIndex& v1,
                    std::vector<VoxelIndex>& out, int depth) {
    if (v0 == v1) return;
    if (index_delta(v0, v1) == 1 || depth > 80) {
        out.push_back(v1);
        return;
    }
    const double tm = 0.5 * (t0 + t1);
    const VoxelIndex vm = voxel_of(a + d * tm, resolution, origin);
    refine_bracket(a, d, resolution, origin, t0, v0, tm, vm, out, depth + 1);
    refine_bracket(a, d, resolution, origin, tm, vm, t1, v1, out, depth + 1);
}

}  // namespace

std::vector<VoxelIndex> marching_traversal(const Vec3& a, const Vec3& b, double resolution,
                                           const Vec3& origin, double step) {
    const Vec3 d = b - a;
    const double length = d.norm();
    const std::int64_t n =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(length / step)));

    std::vector<VoxelIndex> seq;
    VoxelIndex prev = voxel_of(a, resolution, origin);
    seq.push_back(prev);
    double prev_t = 0.0;
    for (std::int64_t s = 1; s <= n; ++s) {
        const double t = static_cast<double>(s) / static_cast<double>(n);
        const VoxelIndex cur = voxel_of(a + d * t, resolution, origin);
        if (cur != prev) refine_bracket(a, d, resolution, origin, prev_t, prev, t, cur, seq, 0);
        prev = cur;
        prev_t = t;
    }
    return seq;
}

std::set<std::uint64_t> slab_traversal(const Vec3& a, const Vec3& b, double resolution,
                                       const Vec3& origin) {
    const VoxelIndex va = voxel_of(a, resolution, origin);
    const VoxelIndex vb = voxel_of(b, resolution, origin);
    const std::int32_t lo_i = std::min(va.i, vb.i), hi_i = std::max(va.i, vb.i);
    const std::int32_t lo_j = std::min(va.j, vb.j), hi_j = std::max(va.j, vb.j);
    const std::int32_t lo_k = std::min(va.k, vb.k), hi_k = std::max(va.k, vb.k);
    const Vec3 d = b - a;

    std::set<std::uint64_t> out;
    for (std::int32_t i = lo_i; i <= hi_i; ++i) {
        for (std::int32_t j = lo_j; j <= hi_j; ++j) {
            for (std::int32_t k = lo_k; k <= hi_k; ++k) {
                // Segment/AABB slab test over t in [0, 1].
                double t0 = 0.0, t1 = 1.0;
                bool hit = true;
                const double lows[3] = {origin.x + i * resolution, origin.y + j * resolution,
                                        origin.z + k * resolution};
                const double starts[3] = {a.x, a.y, a.z};
                const double deltas[3] = {d.x, d.y, d.z};
                for (int axis = 0; axis < 3 && hit; ++axis) {
                    const double lo = lows[axis], hi = lows[axis] + resolution;
                    if (std::abs(deltas[axis]) < 1e-30) {
                        if (starts[axis] < lo || starts[axis] > hi) hit = false;
                        continue;
                    }
                    double ta = (lo - starts[axis]) / deltas[axis];
                    double tb = (hi - starts[axis]) / deltas[axis];
                    if (ta > tb) std::swap(ta, tb);
                    t0 = std::max(t0, ta);
                    t1 = std::min(t1, tb);
                    if (t0 > t1) hit = false;
                }
                if (hit) out.insert(pack_voxel_key(i, j, k));
            }
        }
    }
    return out;
}

std::set<std::uint64_t> marching_visible_set(const OccupancyMap& map, const CameraModel& cam,
                                             const Viewpoint& view, const RayGrid& grid,
                                             double raycast_range, double step) {
    CameraModel ray_cam = cam;
    ray_cam.image_width = grid.nu;
    ray_cam.image_height = grid.nv;
    const double threshold = map.config().occupancy_threshold;
    std::set<std::uint64_t> out;
    for (int v = 0; v < grid.nv; ++v) {
        for (int u = 0; u < grid.nu; ++u) {
            const Vec3 dir = pixel_ray_world(ray_cam, view, u, v);
            const Vec3 end = view.position + dir * raycast_range;
            const std::vector<VoxelIndex> seq = marching_traversal(
                view.position, end, map.resolution(), map.config().origin, step);
            for (const VoxelIndex& idx : seq) {
                out.insert(idx.key());
                if (map.occupancy(idx) > threshold) break;  // first occupied terminates
            }
        }
    }
    return out;
}

namespace {
double local_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}
}  // namespace

GainEnumeration enumerate_gain(const OccupancyMap& map, const CameraModel& cam,
                               const Viewpoint& view, const RegionOfInterest& roi,
                               const RayGrid& grid, double raycast_range, double step) {
    const std::set<std::uint64_t> visible =
        marching_visible_set(map, cam, view, grid, raycast_range, step);
    GainEnumeration result;
    result.visible = static_cast<std::int64_t>(visible.size());
    for (std::uint64_t key : visible) {
        const VoxelIndex idx = VoxelIndex::from_key(key);
        if (!roi.is_none() && !roi.contains(map.voxel_center(idx))) continue;
        ++result.roi;
        result.gain += local_entropy(map.occupancy(idx));
    }
    return result;
}

int algorithm1_select(const OccupancyMap& map, const CameraModel& cam,
                      const std::vector<Viewpoint>& candidates, const RegionOfInterest& roi,
                      const RayGrid& grid, double raycast_range) {
    double best_gain = 0.0;
    int best_index = -1;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double gain_v = 0.0;
        const std::vector<VoxelIndex> visible =
            ray_trace_visible(map, cam, candidates[c], grid, raycast_range);
        for (const VoxelIndex& x : visible) {
            if (roi.is_none() || roi.contains(map.voxel_center(x)))
                gain_v += local_entropy(map.occupancy(x));
            if (gain_v > best_gain) {  // running update, exactly as written
                best_gain = gain_v;
                best_index = static_cast<int>(c);
            }
        }
    }
    return best_index;
}

double brute_force_chamfer(const PointCloud& r, const PointCloud& t) {
    if (r.empty() || t.empty()) throw EmptyCloudError("chamfer needs nonempty clouds");
    auto mean_nn = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0.0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, distance(p, q));
            sum += best;
        }
        return sum / static_cast<double>(from.size());
    };
    return mean_nn(r, t) + mean_nn(t, r);
}

PrecisionRecall brute_force_f1(const PointCloud& r, const PointCloud& t, double rho) {
    if (r.empty() || t.empty()) throw EmptyCloudError("f1 needs nonempty clouds");
    auto matched = [rho](const PointCloud& from, const PointCloud& to) {
        std::int64_t count = 0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to) best = std::min(best, distance(p, q));
            if (best < rho) ++count;
        }
        return count;
    };
    PrecisionRecall out;
    out.precision = static_cast<double>(matched(r, t)) / static_cast<double>(r.size());
    out.recall = static_cast<double>(matched(t, r)) / static_cast<double>(t.size());
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

}  // namespace plantnbv::verify
