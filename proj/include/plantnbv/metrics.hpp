#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/gain.hpp"
#include "plantnbv/voxel_hash.hpp"

namespace plantnbv {

// Exact nearest-neighbor queries over a fixed cloud via a hash grid. The cell
// size doubles as the F1 distance threshold: any point strictly closer than
// one cell is found within the 27 neighboring cells. Full nearest-distance
// queries expand outward shell by shell until the best distance is certified,
// falling back to a linear scan for far-away queries.
class PointGrid {
   public:
    PointGrid(const PointCloud& cloud, double cell_size);

    // True when some point lies strictly within `radius` of q. Requires
    // radius <= cell_size so the 27-cell probe is sufficient.
    bool has_within(const Vec3& q, double radius) const;

    double nearest_distance(const Vec3& q) const;

    std::size_t size() const { return points_.size(); }

   private:
    std::uint64_t cell_key(std::int32_t i, std::int32_t j, std::int32_t k) const {
        return pack_voxel_key(i, j, k);
    }
    void cell_of(const Vec3& p, std::int32_t& i, std::int32_t& j, std::int32_t& k) const;

    double cell_;
    PointCloud points_;
    // Bucketed layout: cell key -> [start, end) range into order_.
    std::vector<std::uint64_t> cell_keys_;    // sorted unique
    std::vector<std::uint32_t> cell_start_;   // size = cells + 1
    std::vector<std::uint32_t> order_;        // point ids grouped by cell
};

// Points inside any ROI box (closed faces); the "none" region returns the
// input unchanged.
PointCloud trim_cloud(const PointCloud& cloud, const RegionOfInterest& roi);

// Symmetric chamfer distance: mean nearest distance R->T plus mean nearest
// distance T->R. Throws EmptyCloudError when either cloud is empty.
double chamfer_distance(const PointCloud& r, const PointCloud& t);

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Precision: fraction of r within strict distance rho of t. Recall: fraction
// of t within strict rho of r. f1 is the harmonic mean, defined 0 when both
// terms vanish. Throws EmptyCloudError when either cloud is empty.
PrecisionRecall f1_score(const PointCloud& r, const PointCloud& t, double rho);

struct ViewMetrics {
    double chamfer = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Per-view metric trace for one trial; index 0 holds view 1.
struct TrialRecord {
    std::vector<ViewMetrics> views;
};

// Smallest 1-based view index whose f1 reaches tau, or nullopt.
std::optional<int> views_to_threshold(const TrialRecord& record, double tau);

}  // namespace plantnbv
