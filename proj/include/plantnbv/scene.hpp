#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "plantnbv/common.hpp"

namespace plantnbv {

enum class PartLabel : std::uint8_t { stem, leaf, truss };

const char* part_label_name(PartLabel label);
std::optional<PartLabel> parse_part_label(std::string_view name);

// Triangle soup in world-frame meters. part_labels is either empty or has one
// entry per triangle.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<PartLabel> part_labels;

    double triangle_area(std::size_t t) const;
    double surface_area() const;
    Box bounding_box() const;

    // Throws ParseError / DegenerateGeometryError when the structural
    // invariants do not hold (bad indices, non-finite coords, area <= 1e-12).
    void validate() const;
};

// Minimum triangle area accepted by validate(), in square meters.
constexpr double kDegenerateAreaThreshold = 1e-12;

TriangleMesh load_mesh(const std::string& path);
void save_obj(const std::string& path, const TriangleMesh& mesh);

void save_ply(const std::string& path, const PointCloud& cloud);
PointCloud load_ply(const std::string& path);

// Procedural plant generation -------------------------------------------------

struct PlantSpec {
    int growth_stage = 6;                    // 1..10, scales stem height
    int leaf_node_count = 7;                 // >= 3
    double leaflet_removal_fraction = 0.0;   // 0.0 or 0.5 for replica runs
    Vec3 base_position{1.0, 0.0, 0.8};
    double base_yaw = 0.0;                   // radians about +z
    std::uint64_t rng_seed = 1;
};

struct PlantMetadata {
    Vec3 stem_base;                       // world frame
    Vec3 stem_top;
    double stem_height = 0.0;
    double stem_radius = 0.0;
    std::vector<Vec3> leaf_node_centers;  // world frame, ascending height
    std::string to_json() const;
    static PlantMetadata from_json(const std::string& text);
};

std::pair<TriangleMesh, PlantMetadata> generate_plant(const PlantSpec& spec);

// Ray casting ------------------------------------------------------------------

struct RayHit {
    double distance = 0.0;
    int triangle = -1;
};

// BVH over a triangle mesh. Holds its own copy of the geometry; queries are
// const and safe to run concurrently.
class BoundingVolumeIndex {
   public:
    BoundingVolumeIndex() = default;
    explicit BoundingVolumeIndex(const TriangleMesh& mesh);

    // Nearest intersection with distance in (0, max_range], or nullopt.
    // direction must be unit length.
    std::optional<RayHit> cast_ray(const Vec3& origin, const Vec3& direction,
                                   double max_range) const;

    std::size_t triangle_count() const { return tri_a_.size(); }
    bool empty() const { return tri_a_.empty(); }

   private:
    struct Node {
        Vec3 lower, upper;
        std::int32_t left = -1;    // internal: child index; leaf: first triangle
        std::int32_t count = 0;    // leaf triangle count, 0 for internal nodes
        std::int32_t right = -1;
    };

    void build(const TriangleMesh& mesh);

    std::vector<Node> nodes_;
    std::vector<Vec3> tri_a_, tri_b_, tri_c_;  // reordered by build
    std::vector<std::int32_t> tri_id_;         // original triangle ids
};

// Moller-Trumbore intersection used by both the BVH and the brute-force
// oracle so parity checks compare traversal, not arithmetic.
std::optional<double> ray_triangle_intersect(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                             const Vec3& b, const Vec3& c);

// Ground-truth sampling ---------------------------------------------------------

// Area-weighted uniform surface samples followed by a voxel-grid filter that
// keeps one centroid per voxel. The filter grid is anchored at the world
// origin so it lines up with the occupancy map's default grid. Deterministic:
// samples follow a fixed low-discrepancy sequence per triangle and the output
// is sorted by voxel index.
PointCloud sample_ground_truth(const TriangleMesh& mesh, double samples_per_m2,
                               double voxel_size);

}  // namespace plantnbv
