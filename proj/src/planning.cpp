#include "plantnbv/planning.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace plantnbv {

namespace {

// Orthonormal radial basis perpendicular to the sector axis. For the vertical
// axis this is the world x/y pair, so azimuth 0 points along +x.
void sector_basis(const CylindricalSector& sector, Vec3& e1, Vec3& e2) {
    const Vec3 w = sector.axis.normalized();
    Vec3 c = Vec3{0.0, 0.0, 1.0}.cross(w);
    if (c.norm() < 1e-9) {
        e1 = {1.0, 0.0, 0.0};
        e2 = w.cross(e1);
    } else {
        // Axis not vertical: build any stable frame.
        e2 = c.normalized();
        e1 = e2.cross(w);
    }
}

}  // namespace

Viewpoint sector_viewpoint(const CylindricalSector& sector, double u, double t) {
    Vec3 e1, e2;
    sector_basis(sector, e1, e2);
    const Vec3 w = sector.axis.normalized();
    const double azimuth = sector.angular_center + (u - 0.5) * sector.sector_angle;
    const Vec3 radial = e1 * std::cos(azimuth) + e2 * std::sin(azimuth);
    const Vec3 on_axis = sector.axis_point + w * (t * sector.height);
    const Vec3 position = on_axis + radial * sector.radius;
    return look_at(position, on_axis);
}

std::vector<Viewpoint> sample_candidates(const CylindricalSector& sector,
                                         const SamplerConfig& cfg, Rng& rng) {
    std::vector<Viewpoint> out;
    out.reserve(static_cast<std::size_t>(cfg.grid_rows) * cfg.grid_cols * cfg.samples_per_cell);
    for (int r = 0; r < cfg.grid_rows; ++r) {
        for (int c = 0; c < cfg.grid_cols; ++c) {
            for (int s = 0; s < cfg.samples_per_cell; ++s) {
                const double u = (c + rng.uniform()) / cfg.grid_cols;
                const double t = (r + rng.uniform()) / cfg.grid_rows;
                out.push_back(sector_viewpoint(sector, u, t));
            }
        }
    }
    return out;
}

std::vector<Viewpoint> sample_candidates(const CylindricalSector& sector,
                                         const SamplerConfig& cfg) {
    Rng rng(cfg.rng_seed);
    return sample_candidates(sector, cfg, rng);
}

std::vector<std::pair<int, int>> predefined_pattern_order(int pattern_id) {
    // (row, col) pairs on the 3x3 grid, row 0 at the sector bottom.
    switch (pattern_id) {
        case 1:  // column-major serpentine from bottom-left
            return {{0, 0}, {1, 0}, {2, 0}, {2, 1}, {1, 1}, {0, 1}, {0, 2}, {1, 2}, {2, 2}};
        case 2:  // row-major serpentine from bottom-left
            return {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {1, 1}, {1, 0}, {2, 0}, {2, 1}, {2, 2}};
        case 3:  // clockwise spiral outward from the center
            return {{1, 1}, {2, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}, {0, 0}, {1, 0}, {2, 0}};
        case 4:  // counter-clockwise spiral inward from the bottom-left corner
            return {{0, 0}, {0, 1}, {0, 2}, {1, 2}, {2, 2}, {2, 1}, {2, 0}, {1, 0}, {1, 1}};
        default:
            throw UnknownPatternError("pattern_id must be in 1..4, got " +
                                      std::to_string(pattern_id));
    }
}

std::vector<Viewpoint> predefined_sequence(const CylindricalSector& sector, int pattern_id,
                                           int n_views) {
    if (n_views < 1) throw InvalidSpecError("n_views must be >= 1");
    const auto order = predefined_pattern_order(pattern_id);
    std::vector<Viewpoint> out;
    out.reserve(n_views);
    for (int i = 0; i < n_views; ++i) {
        const auto [r, c] = order[i % order.size()];
        out.push_back(sector_viewpoint(sector, (c + 0.5) / 3.0, (r + 0.5) / 3.0));
    }
    return out;
}

namespace {

// Padded box around the plant workspace: the dense map core and the free-ray
// clipping both use it.
Box workspace_box(const CylindricalSector& sector) {
    return Box{sector.axis_point + sector.axis * (sector.height / 2.0),
               {0.42, 0.42, sector.height + 0.08}};
}

// Free-space carving only influences planning inside the attention workspace,
// so no-hit rays are truncated where they leave a padded box around the
// sector volume. Rays that never enter it are dropped; everything else keeps
// the origin-anchored insert semantics with a shorter endpoint.
PointCloud clip_free_rays(const DepthImage& img, const CameraModel& cam,
                          const Viewpoint& view, const CylindricalSector& sector) {
    const Box box = workspace_box(sector);
    const Vec3 center = box.center;
    const Vec3 half = box.size * 0.5;

    PointCloud rays;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            if (std::isfinite(img.at(u, v))) continue;
            const Vec3 dir = pixel_ray_world(cam, view, u, v);
            double t0 = 0.0, t1 = cam.max_range;
            bool inside = true;
            for (int axis = 0; axis < 3 && inside; ++axis) {
                const double o = axis == 0 ? view.position.x
                                           : (axis == 1 ? view.position.y : view.position.z);
                const double d = axis == 0 ? dir.x : (axis == 1 ? dir.y : dir.z);
                const double lo = (axis == 0 ? center.x : (axis == 1 ? center.y : center.z)) -
                                  (axis == 0 ? half.x : (axis == 1 ? half.y : half.z));
                const double hi = (axis == 0 ? center.x : (axis == 1 ? center.y : center.z)) +
                                  (axis == 0 ? half.x : (axis == 1 ? half.y : half.z));
                if (std::abs(d) < 1e-12) {
                    if (o < lo || o > hi) inside = false;
                    continue;
                }
                double ta = (lo - o) / d;
                double tb = (hi - o) / d;
                if (ta > tb) std::swap(ta, tb);
                t0 = std::max(t0, ta);
                t1 = std::min(t1, tb);
                if (t0 > t1) inside = false;
            }
            if (!inside || t1 <= 0.0) continue;
            rays.push_back(view.position + dir * t1);
        }
    }
    return rays;
}

}  // namespace

std::string PlannerKind::name() const {
    switch (type) {
        case Type::nbv: return "nbv_" + roi.name;
        case Type::predefined: return "predefined_" + std::to_string(pattern_id);
        case Type::random: return "random";
    }
    return "random";
}

std::pair<Viewpoint, int> select_next_view(const std::vector<Viewpoint>& candidates,
                                           const std::vector<GainReport>& reports) {
    if (candidates.empty()) throw EmptyCandidatesError("no candidate viewpoints");
    if (reports.size() != candidates.size())
        throw InvalidSpecError("one gain report per candidate required");
    int best = 0;
    for (int i = 1; i < static_cast<int>(reports.size()); ++i) {
        if (reports[i].gain > reports[best].gain) best = i;  // strict: first maximum wins
    }
    return {candidates[best], best};
}

TrialTrace run_planner(const PlannerKind& kind, const PlannerEnv& env, int max_views,
                       const Viewpoint& v0, std::uint64_t seed, const ViewCallback& on_view) {
    if (max_views < 1) throw InvalidSpecError("max_views must be >= 1");
    if (env.scene == nullptr) throw InvalidSpecError("planner environment lacks a scene");

    OccupancyMap map(env.map_config);
    map.reserve_dense_core(workspace_box(env.sector));
    Rng rng(seed);

    std::vector<Viewpoint> pattern;
    if (kind.type == PlannerKind::Type::predefined && max_views > 1)
        pattern = predefined_sequence(env.sector, kind.pattern_id, max_views - 1);

    TrialTrace trace;
    trace.planner = kind.name();
    trace.seed = seed;

    ViewRecord record;
    record.view_index = 1;
    record.viewpoint = v0;

    for (int view = 1; view <= max_views; ++view) {
        const DepthImage img = render_depth(*env.scene, env.camera, record.viewpoint);
        const PointCloud cloud = depth_to_cloud(img, env.camera, record.viewpoint);
        const PointCloud free_rays =
            env.carve_no_hit_rays
                ? clip_free_rays(img, env.camera, record.viewpoint, env.sector)
                : PointCloud{};
        map.insert_cloud(record.viewpoint.position, cloud, free_rays, env.camera.max_range);

        trace.views.push_back(record);
        if (on_view) on_view(view, map, trace.views.back());
        if (view == max_views) break;

        ViewRecord next;
        next.view_index = view + 1;
        switch (kind.type) {
            case PlannerKind::Type::nbv: {
                const std::vector<Viewpoint> candidates =
                    sample_candidates(env.sector, env.sampler, rng);
                std::vector<GainReport> reports;
                reports.reserve(candidates.size());
                for (const Viewpoint& c : candidates)
                    reports.push_back(expected_gain(map, env.camera, c, kind.roi, env.ray_grid,
                                                    env.raycast_range));
                const auto [chosen, index] = select_next_view(candidates, reports);
                next.viewpoint = chosen;
                next.chosen_candidate = index;
                next.chosen_gain = reports[index].gain;
                next.candidate_reports = std::move(reports);
                break;
            }
            case PlannerKind::Type::predefined: {
                next.viewpoint = pattern[view - 1];
                break;
            }
            case PlannerKind::Type::random: {
                const std::vector<Viewpoint> candidates =
                    sample_candidates(env.sector, env.sampler, rng);
                const int index = static_cast<int>(rng.uniform_index(candidates.size()));
                next.viewpoint = candidates[index];
                next.chosen_candidate = index;
                break;
            }
        }
        record = std::move(next);
    }
    return trace;
}

std::string TrialTrace::to_json() const {
    nlohmann::json j;
    j["planner"] = planner;
    j["seed"] = seed;
    auto& arr = j["views"] = nlohmann::json::array();
    for (const ViewRecord& rec : views) {
        nlohmann::json v;
        v["view_index"] = rec.view_index;
        v["position"] = {rec.viewpoint.position.x, rec.viewpoint.position.y,
                         rec.viewpoint.position.z};
        v["quaternion"] = {rec.viewpoint.orientation.x, rec.viewpoint.orientation.y,
                           rec.viewpoint.orientation.z, rec.viewpoint.orientation.w};
        v["chosen_gain"] = rec.chosen_gain;
        v["chosen_candidate"] = rec.chosen_candidate;
        auto& gains = v["candidate_gains"] = nlohmann::json::array();
        auto& visible = v["candidate_visible_voxels"] = nlohmann::json::array();
        auto& roi_counts = v["candidate_roi_voxels"] = nlohmann::json::array();
        for (const GainReport& r : rec.candidate_reports) {
            gains.push_back(r.gain);
            visible.push_back(r.visible_voxel_count);
            roi_counts.push_back(r.roi_voxel_count);
        }
        arr.push_back(std::move(v));
    }
    return j.dump(2);
}

}  // namespace plantnbv
