#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/mapping.hpp"
#include "plantnbv/sensor.hpp"

namespace plantnbv {

// Attention region: a named set of axis-aligned boxes. An empty box list is
// the "none" region and disables filtering.
struct RegionOfInterest {
    std::string name = "none";
    std::vector<Box> boxes;

    bool is_none() const { return boxes.empty(); }
    bool contains(const Vec3& p) const {
        for (const Box& b : boxes) {
            if (b.contains(p)) return true;
        }
        return false;
    }
    static RegionOfInterest none() { return {}; }
};

// Shannon entropy of a binary occupancy variable, in bits. Throws
// OutOfRangeError outside [0, 1]; the 0*log2(0) limit is taken as 0.
double voxel_entropy(double p);

struct RayGrid {
    int nu = 40;
    int nv = 30;
};

// Voxels predicted visible from `view`: the union over an nu x nv pinhole ray
// grid of every voxel each ray traverses, where a ray stops at (and includes)
// the first occupied voxel or at raycast_range. Unknown and free voxels are
// traversed through. Result is deduplicated and sorted by index.
std::vector<VoxelIndex> ray_trace_visible(const OccupancyMap& map, const CameraModel& cam,
                                          const Viewpoint& view, const RayGrid& grid,
                                          double raycast_range);

struct GainReport {
    Viewpoint viewpoint;
    double gain = 0.0;                    // bits
    std::int64_t visible_voxel_count = 0;
    std::int64_t roi_voxel_count = 0;
};

// Expected information gain: sum of voxel entropies over the visible set,
// restricted to voxels whose centers lie inside the ROI (all voxels when the
// ROI is "none"). Summation runs in sorted index order so the result does not
// depend on ray order.
GainReport expected_gain(const OccupancyMap& map, const CameraModel& cam, const Viewpoint& view,
                         const RegionOfInterest& roi, const RayGrid& grid, double raycast_range);

}  // namespace plantnbv
