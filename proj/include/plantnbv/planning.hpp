#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/gain.hpp"
#include "plantnbv/mapping.hpp"
#include "plantnbv/rng.hpp"
#include "plantnbv/scene.hpp"
#include "plantnbv/sensor.hpp"

namespace plantnbv {

// Admissible camera surface: a vertical cylindrical sector around the stem.
struct CylindricalSector {
    Vec3 axis_point;                      // stem base
    Vec3 axis{0.0, 0.0, 1.0};             // unit, vertical
    double radius = 0.4;
    double height = 0.7;
    double sector_angle = kPi / 2.0;      // full angular span (2*theta)
    double angular_center = kPi;          // bisector azimuth, radians
};

// Pose on the sector surface at azimuth fraction u and height fraction t,
// both in [0, 1]. The camera looks at the axis at its own height.
Viewpoint sector_viewpoint(const CylindricalSector& sector, double u, double t);

struct SamplerConfig {
    int grid_rows = 3;          // height bands
    int grid_cols = 3;          // azimuth bands
    int samples_per_cell = 3;   // 1 | 3 | 5 for replica runs
    std::uint64_t rng_seed = 0;
};

// Pseudo-random candidate sampling: the (angle x height) rectangle is split
// into a rows x cols grid and samples_per_cell viewpoints are drawn uniformly
// from each cell. Cell order is row-major bottom-up, so the candidate list is
// deterministic given the rng state.
std::vector<Viewpoint> sample_candidates(const CylindricalSector& sector,
                                         const SamplerConfig& cfg, Rng& rng);
std::vector<Viewpoint> sample_candidates(const CylindricalSector& sector,
                                         const SamplerConfig& cfg);

// The 9 grid-cell centers visited in one of four fixed orders, cycled when
// n_views > 9. Patterns (1..4) are distinct permutations of the 3x3 centers:
//   1: column-major serpentine starting bottom-left
//   2: row-major serpentine starting bottom-left
//   3: clockwise spiral outward from the center
//   4: counter-clockwise spiral inward from the bottom-left corner
std::vector<Viewpoint> predefined_sequence(const CylindricalSector& sector, int pattern_id,
                                           int n_views);

// Cell visit order (row, col) pairs for a pattern; exposed for tests.
std::vector<std::pair<int, int>> predefined_pattern_order(int pattern_id);

struct PlannerKind {
    enum class Type { nbv, predefined, random };
    Type type = Type::random;
    RegionOfInterest roi;   // nbv only
    int pattern_id = 1;     // predefined only

    static PlannerKind nbv(RegionOfInterest roi) {
        PlannerKind k;
        k.type = Type::nbv;
        k.roi = std::move(roi);
        return k;
    }
    static PlannerKind predefined(int pattern_id) {
        PlannerKind k;
        k.type = Type::predefined;
        k.pattern_id = pattern_id;
        return k;
    }
    static PlannerKind random() { return {}; }

    std::string name() const;
};

// Argmax over candidate gains; ties resolved toward the lowest index. Throws
// EmptyCandidatesError when there are no candidates.
std::pair<Viewpoint, int> select_next_view(const std::vector<Viewpoint>& candidates,
                                           const std::vector<GainReport>& reports);

struct ViewRecord {
    int view_index = 0;            // 1-based
    Viewpoint viewpoint;
    double chosen_gain = 0.0;      // gain of this viewpoint when it was chosen; 0 for view 1
    int chosen_candidate = -1;     // index into candidate_reports; -1 when not planned
    std::vector<GainReport> candidate_reports;
};

struct TrialTrace {
    std::string planner;
    std::uint64_t seed = 0;
    std::vector<ViewRecord> views;

    std::string to_json() const;
};

struct PlannerEnv {
    const BoundingVolumeIndex* scene = nullptr;
    CylindricalSector sector;
    CameraModel camera;
    MapConfig map_config;
    SamplerConfig sampler;
    RayGrid ray_grid;
    double raycast_range = 0.75;
    // Out-of-range returns carve free space up to max range, matching the
    // standard occupancy-mapping insertion the evaluation protocol assumes.
    bool carve_no_hit_rays = true;
};

// Called after each view's cloud has been inserted; the map reference is the
// post-insertion state for that view.
using ViewCallback = std::function<void(int view_index, const OccupancyMap& map,
                                        const ViewRecord& record)>;

// Executes the iterative planning loop for exactly max_views views starting
// from v0: render depth at the current viewpoint, insert the cloud, then pick
// the next viewpoint according to the planner kind (nbv: argmax expected gain
// over freshly sampled candidates evaluated on the updated map; predefined:
// next pattern pose; random: uniform choice among freshly sampled candidates).
TrialTrace run_planner(const PlannerKind& kind, const PlannerEnv& env, int max_views,
                       const Viewpoint& v0, std::uint64_t seed,
                       const ViewCallback& on_view = {});

}  // namespace plantnbv
