#include <algorithm>
#include <cmath>
#include <ostream>

#include "plantnbv/planning.hpp"
#include "plantnbv/rng.hpp"
#include "verify.hpp"

// Randomized parity suites between the production paths and the brute-force
// references. Fixed seeds keep every run identical.

namespace plantnbv::verify {

namespace {

TriangleMesh random_soup(Rng& rng, int count, double scale) {
    TriangleMesh mesh;
    while (static_cast<int>(mesh.triangles.size()) < count) {
        const Vec3 a{rng.uniform() * scale, rng.uniform() * scale, rng.uniform() * scale};
        const Vec3 b = a + Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                rng.uniform(-0.2, 0.2)} * scale;
        const Vec3 c = a + Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                                rng.uniform(-0.2, 0.2)} * scale;
        if (0.5 * (b - a).cross(c - a).norm() < 1e-8) continue;
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(a);
        mesh.vertices.push_back(b);
        mesh.vertices.push_back(c);
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    return mesh;
}

Vec3 random_unit(Rng& rng) {
    while (true) {
        const Vec3 v{rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
        const double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

// Synthetic block map: a size^3 region mixing unknown, free and occupied
// voxels via direct log-odds writes.
OccupancyMap random_block_map(Rng& rng, int size, double resolution) {
    MapConfig cfg;
    cfg.resolution = resolution;
    OccupancyMap map(cfg);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            for (int k = 0; k < size; ++k) {
                const double roll = rng.uniform();
                const int n = rng.uniform_int(1, 3);
                if (roll < 0.60) continue;  // unknown
                const double delta = roll < 0.85 ? map.logit_miss() : map.logit_hit();
                map.set_log_odds({i, j, k}, n * delta);
            }
        }
    }
    return map;
}

Viewpoint random_block_view(Rng& rng, int size, double resolution) {
    const double extent = size * resolution;
    // Camera on a loose sphere around the block, aimed at a random interior point.
    const Vec3 center{extent / 2, extent / 2, extent / 2};
    const Vec3 pos = center + random_unit(rng) * (extent * rng.uniform(0.9, 1.6));
    const Vec3 target = center + random_unit(rng) * (extent * 0.3 * rng.uniform());
    return look_at(pos, target);
}

struct Check {
    int failures = 0;
    std::ostream& out;
    explicit Check(std::ostream& o) : out(o) {}
    void report(const char* name, bool ok, const std::string& detail = "") {
        out << (ok ? "[PASS] " : "[FAIL] ") << name;
        if (!ok && !detail.empty()) out << " (" << detail << ")";
        out << "\n";
        if (!ok) ++failures;
    }
};

}  // namespace

int run_all_oracles(std::ostream& out) {
    Check check(out);

    // Ray casting: BVH vs all-triangles scan.
    {
        Rng rng(101);
        const TriangleMesh mesh = random_soup(rng, 300, 1.0);
        const BoundingVolumeIndex index(mesh);
        int mismatches = 0;
        for (int r = 0; r < 10000; ++r) {
            const Vec3 origin{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5),
                              rng.uniform(-0.5, 1.5)};
            const Vec3 dir = random_unit(rng);
            const auto fast = index.cast_ray(origin, dir, 2.0);
            const auto slow = brute_force_cast_ray(mesh, origin, dir, 2.0);
            if (fast.has_value() != slow.has_value()) {
                ++mismatches;
                continue;
            }
            if (fast && (fast->triangle != slow->triangle ||
                         std::abs(fast->distance - slow->distance) > 1e-9))
                ++mismatches;
        }
        check.report("ray cast parity (10000 rays vs all-triangles scan)", mismatches == 0,
                     std::to_string(mismatches) + " mismatches");
    }

    // Segment traversal: incremental stepping vs dense marching and slab
    // enumeration on a 16^3 grid.
    {
        Rng rng(202);
        const double res = 0.003;
        const double extent = 16 * res;
        MapConfig cfg;
        cfg.resolution = res;
        const OccupancyMap map(cfg);
        int set_mismatches = 0, slab_mismatches = 0;
        for (int s = 0; s < 1000; ++s) {
            const Vec3 a{rng.uniform() * extent, rng.uniform() * extent,
                         rng.uniform() * extent};
            const Vec3 b{rng.uniform() * extent, rng.uniform() * extent,
                         rng.uniform() * extent};
            const auto traversed = map.traverse_segment(a, b);
            const auto marched = marching_traversal(a, b, res, {}, res / 50.0);
            std::set<std::uint64_t> fast_set, march_set;
            for (const VoxelIndex& v : traversed) fast_set.insert(v.key());
            for (const VoxelIndex& v : marched) march_set.insert(v.key());
            if (fast_set != march_set) ++set_mismatches;
            if (fast_set != slab_traversal(a, b, res, {})) ++slab_mismatches;
        }
        check.report("segment traversal parity (1000 segments vs dense marching)",
                     set_mismatches == 0, std::to_string(set_mismatches) + " mismatches");
        check.report("segment traversal parity (1000 segments vs slab enumeration)",
                     slab_mismatches == 0, std::to_string(slab_mismatches) + " mismatches");
    }

    // Visible-set and expected-gain enumeration on random 8^3 maps.
    {
        Rng rng(303);
        const double res = 0.05;
        CameraModel cam;
        cam.horizontal_fov = deg_to_rad(60.0);
        cam.vertical_fov = deg_to_rad(45.0);
        const RayGrid grid{4, 4};
        const double range = 8 * res * 2.2;
        int visible_mismatches = 0, gain_mismatches = 0, ball_mismatches = 0;
        for (int m = 0; m < 50; ++m) {
            const OccupancyMap map = random_block_map(rng, 8, res);
            const Viewpoint view = random_block_view(rng, 8, res);

            const auto visible = ray_trace_visible(map, cam, view, grid, range);
            std::set<std::uint64_t> fast_set;
            for (const VoxelIndex& v : visible) fast_set.insert(v.key());
            if (fast_set != marching_visible_set(map, cam, view, grid, range, res / 50.0))
                ++visible_mismatches;

            RegionOfInterest roi;
            roi.name = "random_box";
            const int n_boxes = rng.uniform_int(1, 2);
            const double extent = 8 * res;
            for (int bx = 0; bx < n_boxes; ++bx) {
                Box box;
                box.center = {rng.uniform() * extent, rng.uniform() * extent,
                              rng.uniform() * extent};
                box.size = {rng.uniform(0.2, 0.9) * extent, rng.uniform(0.2, 0.9) * extent,
                            rng.uniform(0.2, 0.9) * extent};
                roi.boxes.push_back(box);
            }
            const GainReport fast = expected_gain(map, cam, view, roi, grid, range);
            const GainEnumeration slow =
                enumerate_gain(map, cam, view, roi, grid, range, res / 50.0);
            if (std::abs(fast.gain - slow.gain) > 1e-9 || fast.visible_voxel_count != slow.visible ||
                fast.roi_voxel_count != slow.roi)
                ++gain_mismatches;

            // roi = none must equal an ROI covering the whole raycast ball.
            RegionOfInterest ball;
            ball.name = "ball";
            ball.boxes.push_back(Box{view.position, {2.2 * range, 2.2 * range, 2.2 * range}});
            const GainReport unfiltered =
                expected_gain(map, cam, view, RegionOfInterest::none(), grid, range);
            const GainReport covered = expected_gain(map, cam, view, ball, grid, range);
            if (unfiltered.gain != covered.gain ||
                unfiltered.roi_voxel_count != covered.roi_voxel_count)
                ++ball_mismatches;
        }
        check.report("visible-set parity (50 maps vs dense marching)", visible_mismatches == 0,
                     std::to_string(visible_mismatches) + " mismatches");
        check.report("expected-gain parity (50 maps vs enumeration)", gain_mismatches == 0,
                     std::to_string(gain_mismatches) + " mismatches");
        check.report("gain(none) equals gain(full-ball ROI)", ball_mismatches == 0,
                     std::to_string(ball_mismatches) + " mismatches");
    }

    // Selection: argmax over reports vs the literal iterative-step loop.
    {
        Rng rng(404);
        const double res = 0.05;
        CameraModel cam;
        cam.horizontal_fov = deg_to_rad(60.0);
        cam.vertical_fov = deg_to_rad(45.0);
        const RayGrid grid{3, 3};
        const double range = 8 * res * 2.0;
        int mismatches = 0, decided = 0;
        for (int m = 0; m < 100; ++m) {
            const OccupancyMap map = random_block_map(rng, 8, res);
            std::vector<Viewpoint> candidates;
            const int n = rng.uniform_int(3, 12);
            for (int c = 0; c < n; ++c) candidates.push_back(random_block_view(rng, 8, res));
            RegionOfInterest roi = RegionOfInterest::none();
            if (rng.uniform() < 0.5) {
                const double extent = 8 * res;
                roi.name = "box";
                roi.boxes.push_back(Box{{extent / 2, extent / 2, extent / 2},
                                        {extent * 0.8, extent * 0.8, extent * 0.8}});
            }
            std::vector<GainReport> reports;
            for (const Viewpoint& c : candidates)
                reports.push_back(expected_gain(map, cam, c, roi, grid, range));
            const auto [chosen, index] = select_next_view(candidates, reports);
            (void)chosen;
            const int literal = algorithm1_select(map, cam, candidates, roi, grid, range);
            if (literal >= 0) {
                ++decided;
                if (literal != index) ++mismatches;
            }
        }
        check.report("selection parity (100 candidate sets vs literal loop)",
                     mismatches == 0 && decided > 90,
                     std::to_string(mismatches) + " mismatches, " + std::to_string(decided) +
                         " decided");
    }

    // Metrics: grid-accelerated chamfer / F1 vs O(n^2) scans.
    {
        Rng rng(505);
        int chamfer_mismatches = 0, f1_mismatches = 0;
        for (int round = 0; round < 10; ++round) {
            PointCloud r, t;
            for (int i = 0; i < 200; ++i) {
                r.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
                t.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
            }
            if (std::abs(chamfer_distance(r, t) - brute_force_chamfer(r, t)) > 1e-12)
                ++chamfer_mismatches;
            const double rho = 0.05 + 0.1 * rng.uniform();
            const PrecisionRecall fast = f1_score(r, t, rho);
            const PrecisionRecall slow = brute_force_f1(r, t, rho);
            if (fast.precision != slow.precision || fast.recall != slow.recall ||
                fast.f1 != slow.f1)
                ++f1_mismatches;
        }
        check.report("chamfer parity (200-point clouds vs O(n^2))", chamfer_mismatches == 0,
                     std::to_string(chamfer_mismatches) + " mismatches");
        check.report("f1 parity (200-point clouds vs O(n^2))", f1_mismatches == 0,
                     std::to_string(f1_mismatches) + " mismatches");
    }

    return check.failures;
}

}  // namespace plantnbv::verify
