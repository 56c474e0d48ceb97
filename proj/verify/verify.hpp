#pragma once

// Brute-force reference implementations used to verify the fast paths. These
// stay independent of the production traversal/search code: everything here
// is enumeration, dense marching or O(n^2) scanning.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/gain.hpp"
#include "plantnbv/mapping.hpp"
#include "plantnbv/metrics.hpp"
#include "plantnbv/scene.hpp"
#include "plantnbv/sensor.hpp"

namespace plantnbv::verify {

// All-triangles ray cast with the same nearest/tie rule as the BVH.
std::optional<RayHit> brute_force_cast_ray(const TriangleMesh& mesh, const Vec3& origin,
                                           const Vec3& direction, double max_range);

// Dense ray-marching traversal oracle. Marches [a, b] at `step` and collects
// the voxel under each sample; brackets whose endpoints disagree in more than
// one axis index are bisected until every crossing is isolated, so thin
// corner cuts are not lost to sampling. Returns the ordered voxel sequence.
std::vector<VoxelIndex> marching_traversal(const Vec3& a, const Vec3& b, double resolution,
                                           const Vec3& origin, double step);

// Enumeration oracle: every voxel in the segment's index bounds whose box the
// segment passes through (slab test).
std::set<std::uint64_t> slab_traversal(const Vec3& a, const Vec3& b, double resolution,
                                       const Vec3& origin);

// Visible-set oracle: marching traversal per frustum ray with the
// first-occupied termination rule applied to the ordered sequence.
std::set<std::uint64_t> marching_visible_set(const OccupancyMap& map, const CameraModel& cam,
                                             const Viewpoint& view, const RayGrid& grid,
                                             double raycast_range, double step);

struct GainEnumeration {
    double gain = 0.0;
    std::int64_t visible = 0;
    std::int64_t roi = 0;
};

// Gain oracle: entropy summed over the marching visible set with a local
// entropy formula and explicit ROI containment.
GainEnumeration enumerate_gain(const OccupancyMap& map, const CameraModel& cam,
                               const Viewpoint& view, const RegionOfInterest& roi,
                               const RayGrid& grid, double raycast_range, double step);

// Literal transcription of the iterative attention-driven selection loop:
// running best-gain update with strict '>' and an initial best gain of 0;
// returns the chosen candidate index or -1 when no candidate ever improved.
int algorithm1_select(const OccupancyMap& map, const CameraModel& cam,
                      const std::vector<Viewpoint>& candidates, const RegionOfInterest& roi,
                      const RayGrid& grid, double raycast_range);

// O(n^2) metric oracles.
double brute_force_chamfer(const PointCloud& r, const PointCloud& t);
PrecisionRecall brute_force_f1(const PointCloud& r, const PointCloud& t, double rho);

// Runs every verification suite with fixed seeds, printing one line per
// suite. Returns the number of failed suites.
int run_all_oracles(std::ostream& out);

}  // namespace plantnbv::verify
