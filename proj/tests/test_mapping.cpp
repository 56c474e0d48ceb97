#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "plantnbv/mapping.hpp"
#include "plantnbv/rng.hpp"
#include "verify.hpp"

using namespace plantnbv;

namespace {
OccupancyMap make_map(double resolution = 0.003) {
    MapConfig cfg;
    cfg.resolution = resolution;
    return OccupancyMap(cfg);
}
}  // namespace

TEST_CASE("logit round trip") {
    for (double p : {0.12, 0.3, 0.4, 0.5, 0.7, 0.97}) {
        CHECK(inv_logit(logit(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("single point insertion: hit endpoint, misses along the ray") {
    OccupancyMap map = make_map();
    const Vec3 origin{0.0005, 0.0005, 0.0005};
    const Vec3 point{0.0305, 0.0005, 0.0005};  // 10 voxels along +x
    map.insert_cloud(origin, {point}, 1.0);

    CHECK(map.occupancy(map.voxel_at(point)) == doctest::Approx(0.7).epsilon(1e-12));
    const auto traversed = map.traverse_segment(origin, point);
    REQUIRE(traversed.size() > 2);
    for (std::size_t i = 0; i + 1 < traversed.size(); ++i) {
        CHECK(map.occupancy(traversed[i]) == doctest::Approx(0.4).epsilon(1e-12));
    }
}

TEST_CASE("hit plus miss fuses to 14/23 per the log-odds update") {
    OccupancyMap map = make_map();
    const VoxelIndex v{5, 5, 5};
    map.set_log_odds(v, logit(0.7) + logit(0.4));
    // Direct evaluation of the additive update: ln(7/3) + ln(2/3).
    const double expected_logodds = std::log(0.7 / 0.3) + std::log(0.4 / 0.6);
    CHECK(map.log_odds_at(v) == doctest::Approx(expected_logodds).epsilon(1e-12));
    CHECK(map.occupancy(v) == doctest::Approx(14.0 / 23.0).epsilon(1e-12));
    CHECK(map.occupancy(v) == doctest::Approx(0.6086956521739131).epsilon(1e-12));
}

TEST_CASE("insertions fuse and clamp through the public path") {
    OccupancyMap map = make_map();
    // The sensor sits in the same voxel as the endpoint: pure hit updates.
    const Vec3 p{0.0015, 0.0015, 0.0015};
    for (int n = 0; n < 9; ++n) map.insert_cloud(p, {p}, 1.0);
    CHECK(map.occupancy(map.voxel_at(p)) == doctest::Approx(0.97).epsilon(1e-12));

    // Miss-only updates: endpoint in the next voxel, repeated.
    OccupancyMap map2 = make_map();
    const Vec3 q{0.0105, 0.0015, 0.0015};
    for (int n = 0; n < 9; ++n) map2.insert_cloud(p, {q}, 1.0);
    CHECK(map2.occupancy(map2.voxel_at(p)) == doctest::Approx(0.12).epsilon(1e-12));
    // Everything stays inside the clamp interval.
    map2.for_each_stored([&](const VoxelIndex&, double l) {
        CHECK(l >= logit(0.12) - 1e-12);
        CHECK(l <= logit(0.97) + 1e-12);
    });
}

TEST_CASE("one insertion updates each voxel at most once, hit wins") {
    OccupancyMap map = make_map();
    const Vec3 origin{0.0005, 0.0005, 0.0005};
    // Two points whose rays overlap: the near endpoint voxel is traversed by
    // the far ray, yet keeps its plain hit update.
    const Vec3 near{0.0155, 0.0005, 0.0005};
    const Vec3 far{0.0305, 0.0005, 0.0005};
    map.insert_cloud(origin, {near, far}, 1.0);
    CHECK(map.occupancy(map.voxel_at(near)) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(map.occupancy(map.voxel_at(far)) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(map.occupancy(map.voxel_at(origin)) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("fusion is commutative over insertion order while unsaturated") {
    Rng rng(77);
    PointCloud cloud;
    const Vec3 origin{0.02, 0.02, 0.02};
    for (int i = 0; i < 40; ++i)
        cloud.push_back({rng.uniform(0.0, 0.05), rng.uniform(0.0, 0.05),
                         rng.uniform(0.0, 0.05)});

    OccupancyMap forward = make_map();
    for (const Vec3& p : cloud) forward.insert_cloud(origin, {p}, 1.0);

    PointCloud shuffled = cloud;
    for (std::size_t i = shuffled.size(); i > 1; --i)
        std::swap(shuffled[i - 1], shuffled[rng.uniform_index(i)]);
    OccupancyMap backward = make_map();
    for (const Vec3& p : shuffled) backward.insert_cloud(origin, {p}, 1.0);

    int compared = 0;
    forward.for_each_stored([&](const VoxelIndex& v, double l) {
        ++compared;
        CHECK(backward.log_odds_at(v) == doctest::Approx(l).epsilon(1e-12));
    });
    CHECK(compared == static_cast<int>(backward.stored_voxel_count()));
}

TEST_CASE("points beyond max_range are dropped, non-finite points throw") {
    OccupancyMap map = make_map();
    const Vec3 origin{0, 0, 0};
    map.insert_cloud(origin, {{5.0, 0.0, 0.0}}, 1.0);
    CHECK(map.stored_voxel_count() == 0);
    CHECK_THROWS_AS(
        map.insert_cloud(origin, {{std::numeric_limits<double>::quiet_NaN(), 0, 0}}, 1.0),
        NonFinitePointError);
}

TEST_CASE("occupancy conventions") {
    OccupancyMap map = make_map();
    CHECK(map.occupancy({3, 3, 3}) == 0.5);  // unknown reads back exactly 0.5
    const Vec3 p{0.0015, 0.0015, 0.0015};
    map.insert_cloud(p, {p}, 1.0);
    CHECK(map.occupancy(map.voxel_at(p)) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("traverse_segment walks the axis-aligned example") {
    OccupancyMap map = make_map(0.003);
    const auto voxels =
        map.traverse_segment({0.0005, 0.0005, 0.0005}, {0.0095, 0.0005, 0.0005});
    REQUIRE(voxels.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(voxels[i].i == i);
        CHECK(voxels[i].j == 0);
        CHECK(voxels[i].k == 0);
    }
}

TEST_CASE("traverse_segment within one voxel returns a single element") {
    OccupancyMap map = make_map(0.003);
    const auto voxels =
        map.traverse_segment({0.0005, 0.0005, 0.0005}, {0.0020, 0.0010, 0.0021});
    REQUIRE(voxels.size() == 1);
    CHECK(voxels[0] == VoxelIndex{0, 0, 0});
}

TEST_CASE("traverse_segment matches the marching oracle and stays contiguous") {
    Rng rng(1234);
    OccupancyMap map = make_map(0.003);
    const double extent = 16 * 0.003;
    for (int s = 0; s < 300; ++s) {
        const Vec3 a{rng.uniform() * extent, rng.uniform() * extent, rng.uniform() * extent};
        const Vec3 b{rng.uniform() * extent, rng.uniform() * extent, rng.uniform() * extent};
        const auto walked = map.traverse_segment(a, b);

        REQUIRE(!walked.empty());
        CHECK(walked.front() == map.voxel_at(a));
        CHECK(walked.back() == map.voxel_at(b));
        std::set<std::uint64_t> seen;
        for (const VoxelIndex& v : walked) CHECK(seen.insert(v.key()).second);
        for (std::size_t i = 1; i < walked.size(); ++i) {
            const int di = std::abs(walked[i].i - walked[i - 1].i);
            const int dj = std::abs(walked[i].j - walked[i - 1].j);
            const int dk = std::abs(walked[i].k - walked[i - 1].k);
            CHECK(di + dj + dk == 1);  // one axis, one step
        }

        const auto marched = verify::marching_traversal(a, b, 0.003, {}, 0.003 / 50.0);
        CHECK(walked == marched);  // ordered equality, stronger than set parity
    }
}

TEST_CASE("export_occupied_cloud follows the occupancy threshold") {
    OccupancyMap map = make_map();
    CHECK(map.export_occupied_cloud().empty());

    const Vec3 hit{0.0015, 0.0015, 0.0015};
    map.insert_cloud(hit, {hit}, 1.0);
    const PointCloud one = map.export_occupied_cloud();
    REQUIRE(one.size() == 1);
    CHECK(one[0] == map.voxel_center(map.voxel_at(hit)));

    // Drive a second voxel to P=0.4: excluded.
    const VoxelIndex miss_voxel{7, 7, 7};
    map.set_log_odds(miss_voxel, logit(0.4));
    CHECK(map.export_occupied_cloud().size() == 1);
}

TEST_CASE("map dump and restore round trip") {
    OccupancyMap map = make_map();
    map.set_log_odds({1, 2, 3}, 0.5);
    map.set_log_odds({-4, 0, 9}, -1.25);
    std::stringstream buffer;
    map.dump(buffer);

    const OccupancyMap restored = OccupancyMap::from_dump(buffer);
    CHECK(restored.resolution() == map.resolution());
    CHECK(restored.stored_voxel_count() == map.stored_voxel_count());
    CHECK(restored.log_odds_at({1, 2, 3}) == map.log_odds_at({1, 2, 3}));
    CHECK(restored.log_odds_at({-4, 0, 9}) == map.log_odds_at({-4, 0, 9}));
}

TEST_CASE("voxel index center bijection") {
    OccupancyMap map = make_map(0.003);
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const VoxelIndex v{rng.uniform_int(-100, 100), rng.uniform_int(-100, 100),
                           rng.uniform_int(-100, 100)};
        CHECK(map.voxel_at(map.voxel_center(v)) == v);
    }
}
