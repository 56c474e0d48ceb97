#include "plantnbv/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "plantnbv/rng.hpp"

namespace plantnbv {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Regions of interest

namespace {
Box stem_box(const PlantMetadata& meta, double xy_size) {
    // Both stem-centered boxes use the fixed 0.7 m workspace height.
    return Box{meta.stem_base + Vec3{0.0, 0.0, 0.35}, {xy_size, xy_size, 0.7}};
}

std::array<std::size_t, 3> pick_node_indices(const PlantMetadata& meta) {
    const std::size_t n = meta.leaf_node_centers.size();
    if (n < 3)
        throw InsufficientNodesError("leaf-node attention needs at least 3 nodes, plant has " +
                                     std::to_string(n));
    return {0, n / 2, n - 1};  // lowest, middle, highest
}
}  // namespace

RegionOfInterest resolve_rois(const PlantMetadata& metadata, const std::string& target) {
    RegionOfInterest roi;
    roi.name = target;
    if (target == "none") return roi;
    if (target == "whole_plant") {
        roi.boxes.push_back(stem_box(metadata, 0.3));
        return roi;
    }
    if (target == "main_stem") {
        roi.boxes.push_back(stem_box(metadata, 0.05));
        return roi;
    }
    if (target == "leaf_nodes") {
        for (std::size_t idx : pick_node_indices(metadata))
            roi.boxes.push_back(Box{metadata.leaf_node_centers[idx], {0.03, 0.03, 0.05}});
        return roi;
    }
    throw InvalidSpecError("unknown attention target: " + target);
}

std::vector<RegionOfInterest> leaf_node_rois(const PlantMetadata& metadata) {
    std::vector<RegionOfInterest> out;
    int n = 0;
    for (std::size_t idx : pick_node_indices(metadata)) {
        RegionOfInterest roi;
        roi.name = "leaf_node_" + std::to_string(n++);
        roi.boxes.push_back(Box{metadata.leaf_node_centers[idx], {0.03, 0.03, 0.05}});
        out.push_back(std::move(roi));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config

ExperimentConfig ExperimentConfig::desk_default() { return {}; }

ExperimentConfig ExperimentConfig::paper_replica() {
    ExperimentConfig cfg;
    cfg.plant_seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    cfg.orientations_deg.clear();
    for (int i = 0; i < 12; ++i) cfg.orientations_deg.push_back(30.0 * i);
    return cfg;
}

void ExperimentConfig::validate() const {
    if (plant_seeds.empty()) throw InvalidSpecError("plant_seeds must not be empty");
    if (orientations_deg.empty()) throw InvalidSpecError("orientations_deg must not be empty");
    if (planners.empty()) throw InvalidSpecError("planners must not be empty");
    if (attention_targets.empty())
        throw InvalidSpecError("attention_targets must not be empty");
    if (max_views < 1) throw InvalidSpecError("max_views must be >= 1");
    if (map.resolution <= 0.0) throw InvalidSpecError("map resolution must be positive");
    if (metrics.distance_threshold <= 0.0) throw InvalidSpecError("rho must be positive");
    if (sampler.samples_per_cell < 1)
        throw InvalidSpecError("samples_per_cell must be >= 1");
    for (const std::string& p : planners) {
        if (p != "random" && p.rfind("nbv_", 0) != 0 && p.rfind("predefined_", 0) != 0)
            throw InvalidSpecError("unknown planner name: " + p);
    }
    for (const std::string& a : attention_targets) {
        if (a != "whole_plant" && a != "main_stem" && a != "leaf_nodes" && a != "none")
            throw InvalidSpecError("unknown attention target: " + a);
    }
}

namespace {
json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from_json(const json& a) { return {a.at(0), a.at(1), a.at(2)}; }

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}
void maybe_vec(const json& j, const char* key, Vec3& out) {
    if (j.contains(key)) out = vec_from_json(j.at(key));
}
}  // namespace

std::string ExperimentConfig::to_json() const {
    json j;
    j["master_seed"] = master_seed;
    j["output_dir"] = output_dir;
    j["workers"] = workers;
    j["plant_seeds"] = plant_seeds;
    j["orientations_deg"] = orientations_deg;
    j["planners"] = planners;
    j["attention_targets"] = attention_targets;
    j["max_views"] = max_views;
    j["plant"]["base_position"] = vec_to_json(plant_base_position);
    j["plant"]["leaflet_removal_fraction"] = leaflet_removal_fraction;
    j["camera"]["horizontal_fov_deg"] = rad_to_deg(camera.horizontal_fov);
    j["camera"]["vertical_fov_deg"] = rad_to_deg(camera.vertical_fov);
    j["camera"]["image_width"] = camera.image_width;
    j["camera"]["image_height"] = camera.image_height;
    j["camera"]["max_range"] = camera.max_range;
    j["camera"]["noise_stddev"] = camera.noise_stddev;
    j["map"]["resolution"] = map.resolution;
    j["map"]["tree_depth"] = map.tree_depth;
    j["map"]["origin"] = vec_to_json(map.origin);
    j["map"]["clamp_min"] = map.clamp_min;
    j["map"]["clamp_max"] = map.clamp_max;
    j["map"]["occupancy_threshold"] = map.occupancy_threshold;
    j["map"]["hit_probability"] = map.hit_probability;
    j["map"]["miss_probability"] = map.miss_probability;
    j["gain"]["ray_grid"] = json::array({ray_grid.nu, ray_grid.nv});
    j["gain"]["raycast_range"] = raycast_range;
    j["map"]["carve_no_hit_rays"] = carve_no_hit_rays;
    j["sector"]["radius"] = sector.radius;
    j["sector"]["height"] = sector.height;
    j["sector"]["sector_angle_deg"] = rad_to_deg(sector.sector_angle);
    j["sector"]["angular_center_deg"] = rad_to_deg(sector.angular_center);
    j["sampler"]["grid_rows"] = sampler.grid_rows;
    j["sampler"]["grid_cols"] = sampler.grid_cols;
    j["sampler"]["samples_per_cell"] = sampler.samples_per_cell;
    j["initial_view_position"] = vec_to_json(initial_view_position);
    j["metrics"]["distance_threshold"] = metrics.distance_threshold;
    j["metrics"]["accuracy_thresholds"] = metrics.accuracy_thresholds;
    j["ground_truth"]["samples_per_m2"] = ground_truth.samples_per_m2;
    j["ground_truth"]["voxel_size"] = ground_truth.voxel_size;
    j["sweep"]["occlusion"] = sweep.occlusion;
    j["sweep"]["candidates"] = sweep.candidates;
    j["sweep"]["resolution"] = sweep.resolution;
    return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    ExperimentConfig cfg;
    maybe(j, "master_seed", cfg.master_seed);
    maybe(j, "output_dir", cfg.output_dir);
    maybe(j, "workers", cfg.workers);
    maybe(j, "plant_seeds", cfg.plant_seeds);
    maybe(j, "orientations_deg", cfg.orientations_deg);
    maybe(j, "planners", cfg.planners);
    maybe(j, "attention_targets", cfg.attention_targets);
    maybe(j, "max_views", cfg.max_views);
    if (j.contains("plant")) {
        const json& p = j.at("plant");
        maybe_vec(p, "base_position", cfg.plant_base_position);
        maybe(p, "leaflet_removal_fraction", cfg.leaflet_removal_fraction);
    }
    if (j.contains("camera")) {
        const json& c = j.at("camera");
        if (c.contains("horizontal_fov_deg"))
            cfg.camera.horizontal_fov = deg_to_rad(c.at("horizontal_fov_deg").get<double>());
        if (c.contains("vertical_fov_deg"))
            cfg.camera.vertical_fov = deg_to_rad(c.at("vertical_fov_deg").get<double>());
        maybe(c, "image_width", cfg.camera.image_width);
        maybe(c, "image_height", cfg.camera.image_height);
        maybe(c, "max_range", cfg.camera.max_range);
        maybe(c, "noise_stddev", cfg.camera.noise_stddev);
    }
    if (j.contains("map")) {
        const json& m = j.at("map");
        maybe(m, "resolution", cfg.map.resolution);
        maybe(m, "tree_depth", cfg.map.tree_depth);
        maybe_vec(m, "origin", cfg.map.origin);
        maybe(m, "clamp_min", cfg.map.clamp_min);
        maybe(m, "clamp_max", cfg.map.clamp_max);
        maybe(m, "occupancy_threshold", cfg.map.occupancy_threshold);
        maybe(m, "hit_probability", cfg.map.hit_probability);
        maybe(m, "miss_probability", cfg.map.miss_probability);
        maybe(m, "carve_no_hit_rays", cfg.carve_no_hit_rays);
    }
    if (j.contains("gain")) {
        const json& g = j.at("gain");
        if (g.contains("ray_grid")) {
            cfg.ray_grid.nu = g.at("ray_grid").at(0);
            cfg.ray_grid.nv = g.at("ray_grid").at(1);
        }
        maybe(g, "raycast_range", cfg.raycast_range);
    }
    if (j.contains("sector")) {
        const json& s = j.at("sector");
        maybe(s, "radius", cfg.sector.radius);
        maybe(s, "height", cfg.sector.height);
        if (s.contains("sector_angle_deg"))
            cfg.sector.sector_angle = deg_to_rad(s.at("sector_angle_deg").get<double>());
        if (s.contains("angular_center_deg"))
            cfg.sector.angular_center = deg_to_rad(s.at("angular_center_deg").get<double>());
    }
    if (j.contains("sampler")) {
        const json& s = j.at("sampler");
        maybe(s, "grid_rows", cfg.sampler.grid_rows);
        maybe(s, "grid_cols", cfg.sampler.grid_cols);
        maybe(s, "samples_per_cell", cfg.sampler.samples_per_cell);
    }
    maybe_vec(j, "initial_view_position", cfg.initial_view_position);
    if (j.contains("metrics")) {
        const json& m = j.at("metrics");
        maybe(m, "distance_threshold", cfg.metrics.distance_threshold);
        maybe(m, "accuracy_thresholds", cfg.metrics.accuracy_thresholds);
    }
    if (j.contains("ground_truth")) {
        const json& g = j.at("ground_truth");
        maybe(g, "samples_per_m2", cfg.ground_truth.samples_per_m2);
        maybe(g, "voxel_size", cfg.ground_truth.voxel_size);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        maybe(s, "occlusion", cfg.sweep.occlusion);
        maybe(s, "candidates", cfg.sweep.candidates);
        maybe(s, "resolution", cfg.sweep.resolution);
    }
    // The sector is anchored at the plant base.
    cfg.sector.axis_point = cfg.plant_base_position;
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

// ---------------------------------------------------------------------------
// Trial bookkeeping

std::string planner_group(const std::string& planner) {
    if (planner.rfind("predefined_", 0) == 0) return "predefined";
    return planner;
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t plant_seed,
                                double orientation_deg, const std::string& planner) {
    std::uint64_t h = hash_combine(master_seed, plant_seed);
    h = hash_combine(h, std::bit_cast<std::uint64_t>(orientation_deg));
    h = hash_string(h, planner);
    return h;
}

PlannerKind make_planner(const std::string& name, const PlantMetadata& metadata) {
    if (name == "random") return PlannerKind::random();
    if (name.rfind("predefined_", 0) == 0) {
        const int id = std::stoi(name.substr(std::string("predefined_").size()));
        return PlannerKind::predefined(id);
    }
    if (name.rfind("nbv_", 0) == 0) {
        const std::string target = name.substr(4);
        return PlannerKind::nbv(resolve_rois(metadata, target));
    }
    throw InvalidSpecError("unknown planner name: " + name);
}

PlantSpec plant_spec_for_seed(const ExperimentConfig& config, std::uint64_t plant_seed,
                              double orientation_deg) {
    std::uint64_t h = plant_seed;
    const std::uint64_t h1 = splitmix64(h);
    const std::uint64_t h2 = splitmix64(h);
    PlantSpec spec;
    // Mature stages: the canopy spans most of the 0.7 m workspace the ROI
    // boxes cover, as with the greenhouse-scale models the protocol assumes.
    spec.growth_stage = 6 + static_cast<int>(h1 % 5);      // 6..10
    spec.leaf_node_count = 7 + static_cast<int>(h2 % 4);   // 7..10
    spec.leaflet_removal_fraction = config.leaflet_removal_fraction;
    spec.base_position = config.plant_base_position;
    spec.base_yaw = deg_to_rad(orientation_deg);
    spec.rng_seed = plant_seed;
    return spec;
}

// ---------------------------------------------------------------------------
// Aggregation

const AggregateCell* AggregateResult::find(const std::string& planner,
                                           const std::string& attention) const {
    for (const AggregateCell& cell : cells) {
        if (cell.planner == planner && cell.attention == attention) return &cell;
    }
    return nullptr;
}

namespace {
struct MeanCi {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double ci = 0.0;
    int n = 0;
};

MeanCi mean_ci(const std::vector<double>& values) {
    MeanCi out;
    out.n = static_cast<int>(values.size());
    if (values.empty()) return out;
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / values.size();
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        const double sd = std::sqrt(ss / (values.size() - 1));
        out.ci = 1.96 * sd / std::sqrt(static_cast<double>(values.size()));
    }
    return out;
}

double median(std::vector<int> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}
}  // namespace

AggregateResult aggregate_rows(const std::vector<TrialRow>& rows,
                               const std::vector<double>& accuracy_thresholds, int max_views) {
    AggregateResult result;
    result.accuracy_thresholds = accuracy_thresholds;
    result.max_views = max_views;

    // Group rows by (planner group, attention), then by trial identity for
    // the views-to-threshold statistics.
    struct TrialKey {
        std::string planner;
        std::uint64_t seed;
        double orientation;
        bool operator<(const TrialKey& o) const {
            if (planner != o.planner) return planner < o.planner;
            if (seed != o.seed) return seed < o.seed;
            return orientation < o.orientation;
        }
    };
    std::map<std::pair<std::string, std::string>,
             std::map<TrialKey, std::vector<const TrialRow*>>>
        groups;
    for (const TrialRow& row : rows) {
        groups[{planner_group(row.planner), row.attention}]
              [{row.planner, row.plant_seed, row.orientation_deg}]
                  .push_back(&row);
    }

    for (auto& [cell_key, trials] : groups) {
        AggregateCell cell;
        cell.planner = cell_key.first;
        cell.attention = cell_key.second;
        cell.n_trials = static_cast<int>(trials.size());
        cell.views_to_threshold_samples.resize(accuracy_thresholds.size());

        std::vector<std::vector<double>> f1_per_view(max_views);
        std::vector<std::vector<double>> chamfer_per_view(max_views);
        for (auto& [trial_key, trial_rows] : trials) {
            std::vector<double> f1_series(max_views,
                                          std::numeric_limits<double>::quiet_NaN());
            for (const TrialRow* row : trial_rows) {
                if (row->view < 1 || row->view > max_views) continue;
                f1_per_view[row->view - 1].push_back(row->f1);
                f1_series[row->view - 1] = row->f1;
                if (std::isfinite(row->chamfer))
                    chamfer_per_view[row->view - 1].push_back(row->chamfer);
            }
            for (std::size_t t = 0; t < accuracy_thresholds.size(); ++t) {
                int reached = max_views + 1;  // censored
                for (int v = 0; v < max_views; ++v) {
                    if (std::isfinite(f1_series[v]) && f1_series[v] >= accuracy_thresholds[t]) {
                        reached = v + 1;
                        break;
                    }
                }
                cell.views_to_threshold_samples[t].push_back(reached);
            }
        }
        for (int v = 0; v < max_views; ++v) {
            const MeanCi f1 = mean_ci(f1_per_view[v]);
            const MeanCi ch = mean_ci(chamfer_per_view[v]);
            cell.mean_f1.push_back(f1.mean);
            cell.ci_f1.push_back(f1.ci);
            cell.mean_chamfer.push_back(ch.mean);
            cell.ci_chamfer.push_back(ch.ci);
            cell.chamfer_count.push_back(ch.n);
        }
        for (std::size_t t = 0; t < accuracy_thresholds.size(); ++t)
            cell.median_views_to_threshold.push_back(
                median(cell.views_to_threshold_samples[t]));
        result.cells.push_back(std::move(cell));
    }
    return result;
}

namespace {
std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace

std::string summary_csv(const AggregateResult& aggregate) {
    std::ostringstream out;
    out << "planner,attention,view,n_trials,mean_f1,ci95_f1,mean_chamfer_m,ci95_chamfer_m,"
           "n_chamfer";
    for (double tau : aggregate.accuracy_thresholds)
        out << ",median_views_to_f1_" << tau;
    out << "\n";
    for (const AggregateCell& cell : aggregate.cells) {
        for (int v = 0; v < aggregate.max_views; ++v) {
            out << cell.planner << ',' << cell.attention << ',' << v + 1 << ','
                << cell.n_trials << ',' << format_double(cell.mean_f1[v]) << ','
                << format_double(cell.ci_f1[v]) << ',' << format_double(cell.mean_chamfer[v])
                << ',' << format_double(cell.ci_chamfer[v]) << ',' << cell.chamfer_count[v];
            for (double m : cell.median_views_to_threshold) out << ',' << format_double(m);
            out << "\n";
        }
    }
    return out.str();
}

std::vector<TrialRow> read_trials_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("cannot open trials csv: " + path);
    std::vector<TrialRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        TrialRow row;
        std::getline(ls, row.planner, ',');
        std::getline(ls, field, ',');
        row.plant_seed = std::stoull(field);
        std::getline(ls, field, ',');
        row.orientation_deg = std::stod(field);
        std::getline(ls, row.attention, ',');
        std::getline(ls, field, ',');
        row.view = std::stoi(field);
        auto read_double = [&](double& out_val) {
            std::getline(ls, field, ',');
            out_val = field == "nan" ? std::numeric_limits<double>::quiet_NaN()
                                     : std::stod(field);
        };
        read_double(row.chamfer);
        read_double(row.precision);
        read_double(row.recall);
        read_double(row.f1);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace plantnbv
