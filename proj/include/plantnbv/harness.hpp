#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plantnbv/common.hpp"
#include "plantnbv/gain.hpp"
#include "plantnbv/mapping.hpp"
#include "plantnbv/metrics.hpp"
#include "plantnbv/planning.hpp"
#include "plantnbv/scene.hpp"
#include "plantnbv/sensor.hpp"

namespace plantnbv {

struct MetricsConfig {
    double distance_threshold = 0.003;               // rho, meters
    std::vector<double> accuracy_thresholds{0.8, 0.9};
};

struct GroundTruthConfig {
    double samples_per_m2 = 2e6;
    double voxel_size = 0.003;
};

struct SweepAxes {
    std::vector<double> occlusion{0.0, 0.5};            // leaflet removal fractions
    std::vector<int> candidates{9, 27, 45};             // total candidate counts
    std::vector<double> resolution{0.003, 0.005, 0.007};
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    int workers = 0;  // 0 = hardware concurrency

    std::vector<std::uint64_t> plant_seeds{1, 2, 3, 4, 5};
    std::vector<double> orientations_deg{0, 60, 120, 180, 240, 300};
    std::vector<std::string> planners{"nbv_whole_plant", "nbv_main_stem", "nbv_leaf_nodes",
                                      "predefined_1",    "predefined_2",  "predefined_3",
                                      "predefined_4",    "random"};
    std::vector<std::string> attention_targets{"whole_plant", "main_stem", "leaf_nodes"};
    int max_views = 10;

    Vec3 plant_base_position{1.0, 0.0, 0.8};
    double leaflet_removal_fraction = 0.0;

    CameraModel camera;
    MapConfig map;
    RayGrid ray_grid;
    double raycast_range = 0.75;
    bool carve_no_hit_rays = true;

    CylindricalSector sector{/*axis_point=*/{1.0, 0.0, 0.8}};
    SamplerConfig sampler;
    Vec3 initial_view_position{0.646, 0.353, 1.383};

    MetricsConfig metrics;
    GroundTruthConfig ground_truth;
    SweepAxes sweep;

    // 5 seeds x 6 orientations: 30 trials per cell, runs on a desk.
    static ExperimentConfig desk_default();
    // 10 seeds x 12 orientations: the full 120-trial protocol.
    static ExperimentConfig paper_replica();

    std::string to_json() const;
    static ExperimentConfig from_json(const std::string& text);
    static ExperimentConfig load(const std::string& path);
    void validate() const;
};

// ROI construction from plant metadata. whole_plant and main_stem are single
// boxes centered on the stem axis (0.3x0.3x0.7 and 0.05x0.05x0.7); leaf_nodes
// is three 0.03x0.03x0.05 boxes on the lowest, middle and highest node
// centers. "none" yields the unfiltered region. Throws InsufficientNodesError
// when fewer than 3 nodes exist.
RegionOfInterest resolve_rois(const PlantMetadata& metadata, const std::string& target);

// The three per-node single-box regions, for per-node metric evaluation.
std::vector<RegionOfInterest> leaf_node_rois(const PlantMetadata& metadata);

struct AggregateCell {
    std::string planner;    // aggregation group: predefined_k rows merge into "predefined"
    std::string attention;
    int n_trials = 0;
    std::vector<double> mean_f1, ci_f1;            // index 0 = view 1
    std::vector<double> mean_chamfer, ci_chamfer;  // NaN-skipping means
    std::vector<int> chamfer_count;
    // Per accuracy threshold: per-trial views-to-threshold, censored at
    // max_views + 1 when never reached, plus the median.
    std::vector<double> median_views_to_threshold;
    std::vector<std::vector<int>> views_to_threshold_samples;
};

struct AggregateResult {
    std::vector<double> accuracy_thresholds;
    int max_views = 0;
    std::vector<AggregateCell> cells;

    const AggregateCell* find(const std::string& planner, const std::string& attention) const;
};

struct TrialOutcome {
    int trial_id = 0;
    std::string planner;
    std::uint64_t plant_seed = 0;
    double orientation_deg = 0.0;
    std::uint64_t trial_seed = 0;
    // attention target -> per-view metrics
    std::map<std::string, TrialRecord> records;
    std::string trace_json;
    std::string error;  // empty on success

    bool failed() const { return !error.empty(); }
};

// Runs every (plant seed x orientation x planner) trial, evaluates each
// attention target per view against trimmed ground truth, writes trials.csv,
// traces/*.json, groundtruth/*.ply, summary.csv and plots/*.svg under
// config.output_dir, and returns the aggregate. Failed trials are recorded in
// failures.csv and excluded from aggregation. Fully deterministic from
// master_seed.
AggregateResult run_experiment(const ExperimentConfig& config);

// repeats run_experiment per axis level under output_dir/sweep_<axis>/<level>.
// For the resolution axis, rho and the ground-truth downsample voxel follow
// the map resolution.
std::map<std::string, AggregateResult> run_sweep(const ExperimentConfig& config,
                                                 const std::string& axis);

// One SVG per (metric x attention): view index on x, metric on y, one line
// per planner group with a shaded confidence band. Throws IoError on an empty
// aggregate or unwritable directory.
std::vector<std::string> emit_plots(const AggregateResult& aggregate,
                                    const std::string& out_dir);

// Aggregation from raw per-trial rows; exposed so tests can recompute the
// summary from trials.csv independently of run_experiment's bookkeeping.
struct TrialRow {
    std::string planner;
    std::uint64_t plant_seed;
    double orientation_deg;
    std::string attention;
    int view;
    double chamfer, precision, recall, f1;
};
AggregateResult aggregate_rows(const std::vector<TrialRow>& rows,
                               const std::vector<double>& accuracy_thresholds, int max_views);
std::vector<TrialRow> read_trials_csv(const std::string& path);
std::string summary_csv(const AggregateResult& aggregate);

// Deterministic per-trial seed: planners added to a config never perturb the
// randomness of existing trials.
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t plant_seed,
                                double orientation_deg, const std::string& planner);

// Maps predefined_1..4 onto "predefined" for aggregation.
std::string planner_group(const std::string& planner);

PlannerKind make_planner(const std::string& name, const PlantMetadata& metadata);

// Plant spec for one study scene: growth stage and node count derive from the
// plant seed so the seed list spans different plant structures.
PlantSpec plant_spec_for_seed(const ExperimentConfig& config, std::uint64_t plant_seed,
                              double orientation_deg);

}  // namespace plantnbv
