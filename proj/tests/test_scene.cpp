#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "plantnbv/rng.hpp"
#include "plantnbv/scene.hpp"
#include "verify.hpp"

using namespace plantnbv;

namespace {
std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}
}  // namespace

TEST_CASE("load_mesh parses a minimal triangle") {
    const auto path = write_temp("tri.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    const TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.vertices.size() == 3);
    CHECK(mesh.triangles.size() == 1);
    CHECK(mesh.triangles[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("load_mesh rejects quads") {
    const auto path = write_temp(
        "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    CHECK_THROWS_AS(load_mesh(path), ParseError);
}

TEST_CASE("load_mesh error paths") {
    CHECK_THROWS_AS(load_mesh("/nonexistent/mesh.obj"), FileNotFoundError);
    const auto degenerate =
        write_temp("deg.obj", "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");  // collinear
    CHECK_THROWS_AS(load_mesh(degenerate), DegenerateGeometryError);
    const auto bad_index = write_temp("badidx.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    CHECK_THROWS_AS(load_mesh(bad_index), ParseError);
    const auto bad_face = write_temp("badface.obj", "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 x\n");
    CHECK_THROWS_AS(load_mesh(bad_face), ParseError);
}

TEST_CASE("load_mesh accepts slash face references and groups") {
    const auto path = write_temp("slash.obj",
                                 "g stem\nv 0 0 0\nv 1 0 0\nv 0 1 0\n"
                                 "f 1/1 2/2 3/3\ng leaf\nf 1//1 3//2 2//3\n");
    const TriangleMesh mesh = load_mesh(path);
    CHECK(mesh.triangles.size() == 2);
    REQUIRE(mesh.part_labels.size() == 2);
    CHECK(mesh.part_labels[0] == PartLabel::stem);
    CHECK(mesh.part_labels[1] == PartLabel::leaf);
}

TEST_CASE("generated plant round-trips through obj") {
    PlantSpec spec;
    spec.rng_seed = 11;
    const auto [mesh, meta] = generate_plant(spec);
    const auto path = (std::filesystem::temp_directory_path() / "plant_rt.obj").string();
    save_obj(path, mesh);
    const TriangleMesh reloaded = load_mesh(path);
    CHECK(reloaded.vertices.size() == mesh.vertices.size());
    CHECK(reloaded.triangles.size() == mesh.triangles.size());
    REQUIRE(reloaded.part_labels.size() == mesh.part_labels.size());
    CHECK(reloaded.part_labels == mesh.part_labels);
}

TEST_CASE("generate_plant is deterministic per seed") {
    PlantSpec spec;
    spec.rng_seed = 7;
    const auto [mesh_a, meta_a] = generate_plant(spec);
    const auto [mesh_b, meta_b] = generate_plant(spec);
    REQUIRE(mesh_a.vertices.size() == mesh_b.vertices.size());
    for (std::size_t i = 0; i < mesh_a.vertices.size(); ++i)
        CHECK(mesh_a.vertices[i] == mesh_b.vertices[i]);  // byte-identical
    CHECK(mesh_a.triangles == mesh_b.triangles);

    spec.rng_seed = 8;
    const auto [mesh_c, meta_c] = generate_plant(spec);
    CHECK(mesh_a.vertices != mesh_c.vertices);
}

TEST_CASE("leaflet removal shrinks the mesh without touching the rng stream") {
    PlantSpec spec;
    spec.rng_seed = 5;
    const auto [full, meta_full] = generate_plant(spec);
    spec.leaflet_removal_fraction = 0.5;
    const auto [thinned, meta_thinned] = generate_plant(spec);
    CHECK(thinned.triangles.size() < full.triangles.size());
    // Node metadata is part of the shared stream, so it must be unchanged.
    REQUIRE(meta_full.leaf_node_centers.size() == meta_thinned.leaf_node_centers.size());
    for (std::size_t i = 0; i < meta_full.leaf_node_centers.size(); ++i)
        CHECK(meta_full.leaf_node_centers[i] == meta_thinned.leaf_node_centers[i]);

    spec.leaflet_removal_fraction = 2.0;
    CHECK_THROWS_AS(generate_plant(spec), InvalidSpecError);
    spec.leaflet_removal_fraction = 0.0;
    spec.leaf_node_count = 2;
    CHECK_THROWS_AS(generate_plant(spec), InvalidSpecError);
}

TEST_CASE("plant metadata nodes sit near the stem axis inside height bounds") {
    for (std::uint64_t seed : {1, 2, 3, 4, 5, 6}) {
        PlantSpec spec;
        spec.rng_seed = seed;
        spec.growth_stage = 4 + static_cast<int>(seed % 7);
        const auto [mesh, meta] = generate_plant(spec);
        REQUIRE(meta.leaf_node_centers.size() == static_cast<std::size_t>(spec.leaf_node_count));
        for (const Vec3& c : meta.leaf_node_centers) {
            const double radial =
                std::hypot(c.x - meta.stem_base.x, c.y - meta.stem_base.y);
            CHECK(radial <= 0.025);
            CHECK(c.z >= meta.stem_base.z);
            CHECK(c.z <= meta.stem_base.z + meta.stem_height);
        }
        for (std::size_t i = 1; i < meta.leaf_node_centers.size(); ++i)
            CHECK(meta.leaf_node_centers[i].z >= meta.leaf_node_centers[i - 1].z);
    }
}

TEST_CASE("generated plants fit the whole-plant bounding box at any yaw") {
    for (double yaw_deg : {0.0, 30.0, 75.0, 150.0, 210.0, 330.0}) {
        PlantSpec spec;
        spec.rng_seed = 3;
        spec.growth_stage = 10;  // tallest
        spec.base_yaw = deg_to_rad(yaw_deg);
        const auto [mesh, meta] = generate_plant(spec);
        const Box bounds{spec.base_position + Vec3{0, 0, 0.35}, {0.3, 0.3, 0.7}};
        for (const Vec3& v : mesh.vertices) CHECK(bounds.contains(v));
    }
}

TEST_CASE("plant metadata json round trip") {
    PlantSpec spec;
    spec.rng_seed = 9;
    const auto [mesh, meta] = generate_plant(spec);
    const PlantMetadata parsed = PlantMetadata::from_json(meta.to_json());
    CHECK(parsed.stem_base == meta.stem_base);
    CHECK(parsed.stem_top == meta.stem_top);
    CHECK(parsed.leaf_node_centers.size() == meta.leaf_node_centers.size());
}

TEST_CASE("cast_ray against an analytic plane") {
    TriangleMesh mesh;
    mesh.vertices = {{-1, -1, 0.5}, {1, -1, 0.5}, {0, 1, 0.5}};
    mesh.triangles = {{0, 1, 2}};
    const BoundingVolumeIndex index(mesh);

    const auto hit = index.cast_ray({0, 0, 0}, {0, 0, 1}, 2.0);
    REQUIRE(hit.has_value());
    CHECK(hit->distance == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hit->triangle == 0);

    CHECK(!index.cast_ray({0, 0, 0}, {0, 0, -1}, 2.0).has_value());   // away
    CHECK(!index.cast_ray({0, 0, 0}, {0, 0, 1}, 0.25).has_value());   // out of range
}

TEST_CASE("cast_ray matches the all-triangles oracle on random scenes") {
    Rng rng(42);
    TriangleMesh mesh;
    while (mesh.triangles.size() < 150) {
        const Vec3 a{rng.uniform(), rng.uniform(), rng.uniform()};
        const Vec3 b = a + Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                rng.uniform(-0.3, 0.3)};
        const Vec3 c = a + Vec3{rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                                rng.uniform(-0.3, 0.3)};
        if (0.5 * (b - a).cross(c - a).norm() < 1e-8) continue;
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.insert(mesh.vertices.end(), {a, b, c});
        mesh.triangles.push_back({base, base + 1, base + 2});
    }
    const BoundingVolumeIndex index(mesh);
    for (int r = 0; r < 2000; ++r) {
        const Vec3 origin{rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5),
                          rng.uniform(-0.5, 1.5)};
        Vec3 dir{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        if (dir.norm() < 1e-6) continue;
        dir = dir.normalized();
        const auto fast = index.cast_ray(origin, dir, 2.0);
        const auto slow = verify::brute_force_cast_ray(mesh, origin, dir, 2.0);
        REQUIRE(fast.has_value() == slow.has_value());
        if (fast) {
            CHECK(fast->triangle == slow->triangle);
            CHECK(fast->distance == doctest::Approx(slow->distance).epsilon(1e-12));
        }
    }
}

TEST_CASE("sample_ground_truth bins a unit square into at most 9 cells") {
    TriangleMesh mesh;
    mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
    const PointCloud cloud = sample_ground_truth(mesh, 5000.0, 0.5);
    CHECK(cloud.size() <= 9);
    std::set<std::tuple<int, int, int>> cells;
    for (const Vec3& p : cloud) {
        cells.insert({static_cast<int>(std::floor(p.x / 0.5)),
                      static_cast<int>(std::floor(p.y / 0.5)),
                      static_cast<int>(std::floor(p.z / 0.5))});
    }
    CHECK(cells.size() == cloud.size());  // one representative per voxel
}

TEST_CASE("sample_ground_truth voxel filter holds on a generated plant") {
    PlantSpec spec;
    spec.rng_seed = 2;
    const auto [mesh, meta] = generate_plant(spec);
    const double voxel = 0.003;
    const PointCloud cloud = sample_ground_truth(mesh, 2e6, voxel);
    CHECK(cloud.size() > 1000);
    std::set<std::uint64_t> cells;
    for (const Vec3& p : cloud) {
        const auto key = pack_voxel_key(static_cast<std::int32_t>(std::floor(p.x / voxel)),
                                        static_cast<std::int32_t>(std::floor(p.y / voxel)),
                                        static_cast<std::int32_t>(std::floor(p.z / voxel)));
        CHECK(cells.insert(key).second);  // no two points share a voxel
    }

    // Saturation: doubling the density barely changes the filtered size.
    const PointCloud denser = sample_ground_truth(mesh, 4e6, voxel);
    const double rel = std::abs(static_cast<double>(denser.size()) -
                                static_cast<double>(cloud.size())) /
                       static_cast<double>(cloud.size());
    CHECK(rel < 0.05);
}

TEST_CASE("sample_ground_truth rejects an empty mesh") {
    TriangleMesh empty;
    CHECK_THROWS_AS(sample_ground_truth(empty, 1e6, 0.003), EmptyMeshError);
}

TEST_CASE("ply round trip") {
    const PointCloud cloud = {{0.1, 0.2, 0.3}, {1.5, -2.25, 0.0078125}};
    const auto path = (std::filesystem::temp_directory_path() / "cloud.ply").string();
    save_ply(path, cloud);
    const PointCloud reloaded = load_ply(path);
    REQUIRE(reloaded.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) CHECK(reloaded[i] == cloud[i]);
}
