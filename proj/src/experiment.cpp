#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "plantnbv/harness.hpp"

namespace plantnbv {

namespace fs = std::filesystem;

namespace {

int worker_count(const ExperimentConfig& config) {
    if (config.workers > 0) return config.workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, n) across `threads` workers. Exceptions propagate
// from the calling thread after all workers join.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    const int use = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    if (use == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load(std::memory_order_relaxed)) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < use; ++t) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct SceneData {
    std::uint64_t plant_seed = 0;
    double orientation_deg = 0.0;
    PlantSpec spec;
    PlantMetadata metadata;
    BoundingVolumeIndex index;
    PointCloud ground_truth;                          // full downsampled cloud
    std::map<std::string, RegionOfInterest> rois;     // per attention target
    std::map<std::string, PointCloud> gt_trimmed;     // per attention target
    std::vector<RegionOfInterest> node_rois;          // leaf_node_0..2
    std::vector<PointCloud> gt_nodes;
};

struct TrialTask {
    int trial_id = 0;
    std::string planner;
    std::size_t scene_index = 0;
    std::uint64_t trial_seed = 0;
};

ViewMetrics evaluate_pair(const PointCloud& reconstruction, const PointCloud& truth,
                          double rho) {
    ViewMetrics m;
    if (reconstruction.empty() || truth.empty()) {
        // Nothing reconstructed inside the region yet: completeness is zero
        // and chamfer is undefined for this view.
        m.chamfer = std::numeric_limits<double>::quiet_NaN();
        return m;
    }
    const PrecisionRecall pr = f1_score(reconstruction, truth, rho);
    m.precision = pr.precision;
    m.recall = pr.recall;
    m.f1 = pr.f1;
    m.chamfer = chamfer_distance(reconstruction, truth);
    return m;
}

std::string orientation_label(double deg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", deg);
    return buf;
}

std::string trial_stem(const TrialTask& task, const SceneData& scene) {
    return task.planner + "_plant" + std::to_string(scene.plant_seed) + "_yaw" +
           orientation_label(scene.orientation_deg);
}

TrialOutcome run_trial(const ExperimentConfig& config, const TrialTask& task,
                       const SceneData& scene) {
    TrialOutcome outcome;
    outcome.trial_id = task.trial_id;
    outcome.planner = task.planner;
    outcome.plant_seed = scene.plant_seed;
    outcome.orientation_deg = scene.orientation_deg;
    outcome.trial_seed = task.trial_seed;

    try {
        const PlannerKind kind = make_planner(task.planner, scene.metadata);

        PlannerEnv env;
        env.scene = &scene.index;
        env.sector = config.sector;
        env.sector.axis_point = config.plant_base_position;
        env.camera = config.camera;
        env.map_config = config.map;
        env.sampler = config.sampler;
        env.ray_grid = config.ray_grid;
        env.raycast_range = config.raycast_range;
        env.carve_no_hit_rays = config.carve_no_hit_rays;

        // Initial viewpoint: configured position, level gaze at the stem axis.
        const Vec3 v0_target{config.plant_base_position.x, config.plant_base_position.y,
                             config.initial_view_position.z};
        const Viewpoint v0 = look_at(config.initial_view_position, v0_target);

        for (const std::string& target : config.attention_targets)
            outcome.records[target].views.reserve(config.max_views);

        const double rho = config.metrics.distance_threshold;
        const auto on_view = [&](int /*view*/, const OccupancyMap& map, const ViewRecord&) {
            const PointCloud reconstruction = map.export_occupied_cloud();
            for (const std::string& target : config.attention_targets) {
                ViewMetrics metrics;
                if (target == "leaf_nodes") {
                    // Metrics per node box, then averaged; an unseen node
                    // contributes zeros to f1/precision/recall and is skipped
                    // in the chamfer mean.
                    double chamfer_sum = 0.0;
                    int chamfer_n = 0;
                    for (std::size_t n = 0; n < scene.node_rois.size(); ++n) {
                        const PointCloud r = trim_cloud(reconstruction, scene.node_rois[n]);
                        const ViewMetrics vm = evaluate_pair(r, scene.gt_nodes[n], rho);
                        metrics.precision += vm.precision;
                        metrics.recall += vm.recall;
                        metrics.f1 += vm.f1;
                        if (std::isfinite(vm.chamfer)) {
                            chamfer_sum += vm.chamfer;
                            ++chamfer_n;
                        }
                    }
                    const double n_nodes = static_cast<double>(scene.node_rois.size());
                    metrics.precision /= n_nodes;
                    metrics.recall /= n_nodes;
                    metrics.f1 /= n_nodes;
                    metrics.chamfer = chamfer_n > 0
                                          ? chamfer_sum / chamfer_n
                                          : std::numeric_limits<double>::quiet_NaN();
                } else {
                    const PointCloud r = trim_cloud(reconstruction, scene.rois.at(target));
                    metrics = evaluate_pair(r, scene.gt_trimmed.at(target), rho);
                }
                outcome.records[target].views.push_back(metrics);
            }
        };

        const TrialTrace trace =
            run_planner(kind, env, config.max_views, v0, task.trial_seed, on_view);
        outcome.trace_json = trace.to_json();
    } catch (const std::exception& e) {
        outcome.error = e.what();
    }
    return outcome;
}

SceneData build_scene(const ExperimentConfig& config, std::uint64_t plant_seed,
                      double orientation_deg) {
    SceneData scene;
    scene.plant_seed = plant_seed;
    scene.orientation_deg = orientation_deg;
    scene.spec = plant_spec_for_seed(config, plant_seed, orientation_deg);
    auto [mesh, metadata] = generate_plant(scene.spec);
    scene.metadata = std::move(metadata);
    scene.index = BoundingVolumeIndex(mesh);
    scene.ground_truth = sample_ground_truth(mesh, config.ground_truth.samples_per_m2,
                                             config.ground_truth.voxel_size);
    for (const std::string& target : config.attention_targets) {
        scene.rois[target] = resolve_rois(scene.metadata, target);
        scene.gt_trimmed[target] = trim_cloud(scene.ground_truth, scene.rois[target]);
    }
    const bool needs_nodes =
        scene.rois.count("leaf_nodes") != 0 ||
        std::any_of(config.planners.begin(), config.planners.end(),
                    [](const std::string& p) { return p == "nbv_leaf_nodes"; });
    if (needs_nodes) {
        scene.node_rois = leaf_node_rois(scene.metadata);
        for (const RegionOfInterest& roi : scene.node_rois)
            scene.gt_nodes.push_back(trim_cloud(scene.ground_truth, roi));
    }
    return scene;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

AggregateResult run_experiment(const ExperimentConfig& config) {
    config.validate();

    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);
    fs::create_directories(out_dir / "traces");
    fs::create_directories(out_dir / "plots");
    fs::create_directories(out_dir / "groundtruth");

    write_text_file(out_dir / "config.json", config.to_json());

    // Scenes are shared by every planner running on the same plant instance.
    std::vector<std::pair<std::uint64_t, double>> scene_keys;
    for (std::uint64_t seed : config.plant_seeds)
        for (double deg : config.orientations_deg) scene_keys.emplace_back(seed, deg);

    const int threads = worker_count(config);
    std::vector<SceneData> scenes(scene_keys.size());
    parallel_for(scene_keys.size(), threads, [&](std::size_t i) {
        scenes[i] = build_scene(config, scene_keys[i].first, scene_keys[i].second);
    });

    for (const SceneData& scene : scenes) {
        const std::string name = "plant" + std::to_string(scene.plant_seed) + "_yaw" +
                                 orientation_label(scene.orientation_deg) + ".ply";
        save_ply((out_dir / "groundtruth" / name).string(), scene.ground_truth);
        write_text_file(out_dir / "groundtruth" /
                            ("plant" + std::to_string(scene.plant_seed) + "_yaw" +
                             orientation_label(scene.orientation_deg) + "_metadata.json"),
                        scene.metadata.to_json());
    }

    std::vector<TrialTask> tasks;
    int trial_id = 0;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        for (const std::string& planner : config.planners) {
            TrialTask task;
            task.trial_id = trial_id++;
            task.planner = planner;
            task.scene_index = s;
            task.trial_seed = derive_trial_seed(config.master_seed, scenes[s].plant_seed,
                                                scenes[s].orientation_deg, planner);
            tasks.push_back(std::move(task));
        }
    }

    std::vector<TrialOutcome> outcomes(tasks.size());
    parallel_for(tasks.size(), threads, [&](std::size_t i) {
        outcomes[i] = run_trial(config, tasks[i], scenes[tasks[i].scene_index]);
    });

    // Single-writer output pass keeps file contents and ordering deterministic.
    std::vector<TrialRow> rows;
    std::ostringstream trials;
    trials << "planner,plant_seed,orientation_deg,attention,view,chamfer_m,precision,recall,"
              "f1\n";
    std::ostringstream failures;
    failures << "planner,plant_seed,orientation_deg,trial_seed,error\n";
    char buf[256];
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const TrialOutcome& outcome = outcomes[i];
        if (outcome.failed()) {
            failures << outcome.planner << ',' << outcome.plant_seed << ','
                     << orientation_label(outcome.orientation_deg) << ',' << outcome.trial_seed
                     << ',' << '"' << outcome.error << '"' << "\n";
            continue;
        }
        for (const std::string& target : config.attention_targets) {
            const TrialRecord& record = outcome.records.at(target);
            for (std::size_t v = 0; v < record.views.size(); ++v) {
                const ViewMetrics& m = record.views[v];
                TrialRow row{outcome.planner, outcome.plant_seed, outcome.orientation_deg,
                             target,          static_cast<int>(v) + 1,
                             m.chamfer,       m.precision,
                             m.recall,        m.f1};
                rows.push_back(row);
                std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g", m.chamfer,
                              m.precision, m.recall, m.f1);
                trials << outcome.planner << ',' << outcome.plant_seed << ','
                       << orientation_label(outcome.orientation_deg) << ',' << target << ','
                       << v + 1 << ',' << buf << "\n";
            }
        }
        const std::string stem = trial_stem(tasks[i], scenes[tasks[i].scene_index]);
        write_text_file(out_dir / "traces" / (stem + ".json"), outcome.trace_json);
    }
    write_text_file(out_dir / "trials.csv", trials.str());
    write_text_file(out_dir / "failures.csv", failures.str());

    AggregateResult aggregate =
        aggregate_rows(rows, config.metrics.accuracy_thresholds, config.max_views);
    write_text_file(out_dir / "summary.csv", summary_csv(aggregate));
    emit_plots(aggregate, (out_dir / "plots").string());
    return aggregate;
}

std::map<std::string, AggregateResult> run_sweep(const ExperimentConfig& config,
                                                 const std::string& axis) {
    config.validate();
    std::map<std::string, AggregateResult> results;
    const fs::path base(config.output_dir);

    auto level_label = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };

    if (axis == "occlusion") {
        for (double level : config.sweep.occlusion) {
            ExperimentConfig level_cfg = config;
            level_cfg.leaflet_removal_fraction = level;
            level_cfg.output_dir =
                (base / ("sweep_occlusion") / level_label(level)).string();
            results[level_label(level)] = run_experiment(level_cfg);
        }
    } else if (axis == "candidates") {
        for (int level : config.sweep.candidates) {
            ExperimentConfig level_cfg = config;
            const int cells = config.sampler.grid_rows * config.sampler.grid_cols;
            if (level % cells != 0)
                throw InvalidSpecError("candidate count " + std::to_string(level) +
                                       " is not a multiple of the grid cell count");
            level_cfg.sampler.samples_per_cell = level / cells;
            level_cfg.output_dir =
                (base / "sweep_candidates" / std::to_string(level)).string();
            results[std::to_string(level)] = run_experiment(level_cfg);
        }
    } else if (axis == "resolution") {
        for (double level : config.sweep.resolution) {
            ExperimentConfig level_cfg = config;
            level_cfg.map.resolution = level;
            // Evaluation criteria follow the voxel resolution.
            level_cfg.metrics.distance_threshold = level;
            level_cfg.ground_truth.voxel_size = level;
            level_cfg.output_dir =
                (base / "sweep_resolution" / level_label(level)).string();
            results[level_label(level)] = run_experiment(level_cfg);
        }
    } else {
        throw InvalidSpecError("unknown sweep axis: " + axis +
                               " (expected occlusion | candidates | resolution)");
    }
    return results;
}

}  // namespace plantnbv
