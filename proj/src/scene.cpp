#include "plantnbv/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "plantnbv/rng.hpp"
#include "plantnbv/voxel_hash.hpp"

namespace plantnbv {

const char* part_label_name(PartLabel label) {
    switch (label) {
        case PartLabel::stem: return "stem";
        case PartLabel::leaf: return "leaf";
        case PartLabel::truss: return "truss";
    }
    return "stem";
}

std::optional<PartLabel> parse_part_label(std::string_view name) {
    if (name == "stem") return PartLabel::stem;
    if (name == "leaf") return PartLabel::leaf;
    if (name == "truss") return PartLabel::truss;
    return std::nullopt;
}

double TriangleMesh::triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    return 0.5 * e1.cross(e2).norm();
}

double TriangleMesh::surface_area() const {
    double total = 0.0;
    for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
    return total;
}

Box TriangleMesh::bounding_box() const {
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (const Vec3& v : vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    Box b;
    b.center = (lo + hi) * 0.5;
    b.size = hi - lo;
    return b;
}

void TriangleMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (const Vec3& v : vertices) {
        if (!v.is_finite()) throw DegenerateGeometryError("non-finite vertex coordinate");
    }
    for (std::size_t t = 0; t < triangles.size(); ++t) {
        for (int idx : triangles[t]) {
            if (idx < 0 || idx >= n)
                throw ParseError("triangle index " + std::to_string(idx) + " out of range");
        }
        if (triangle_area(t) <= kDegenerateAreaThreshold)
            throw DegenerateGeometryError("degenerate triangle " + std::to_string(t));
    }
    if (!part_labels.empty() && part_labels.size() != triangles.size())
        throw ParseError("part_labels size mismatch");
}

// ---------------------------------------------------------------------------
// OBJ / PLY IO

TriangleMesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("cannot open mesh file: " + path);

    TriangleMesh mesh;
    std::optional<PartLabel> current_label;
    bool any_label = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "#") continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw ParseError("malformed vertex at line " + std::to_string(line_no));
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> refs;
            std::string item;
            while (ls >> item) {
                // accept v, v/vt, v//vn, v/vt/vn
                const std::size_t slash = item.find('/');
                const std::string head = item.substr(0, slash);
                try {
                    std::size_t used = 0;
                    const int idx = std::stoi(head, &used);
                    if (used != head.size()) throw std::invalid_argument(head);
                    refs.push_back(idx);
                } catch (const std::exception&) {
                    throw ParseError("malformed face reference '" + item + "' at line " +
                                     std::to_string(line_no));
                }
            }
            if (refs.size() != 3)
                throw ParseError("face with " + std::to_string(refs.size()) +
                                 " vertices at line " + std::to_string(line_no) +
                                 " (triangulated input required)");
            std::array<int, 3> tri;
            for (int c = 0; c < 3; ++c) {
                int idx = refs[c];
                if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx;  // relative
                else idx -= 1;                                                     // 1-based
                tri[c] = idx;
            }
            mesh.triangles.push_back(tri);
            if (current_label) {
                mesh.part_labels.resize(mesh.triangles.size() - 1,
                                        PartLabel::stem);  // pad unlabeled prefix
                mesh.part_labels.push_back(*current_label);
                any_label = true;
            } else if (any_label) {
                mesh.part_labels.push_back(PartLabel::stem);
            }
        } else if (tag == "g" || tag == "o") {
            std::string name;
            ls >> name;
            current_label = parse_part_label(name);
        }
        // vn/vt/s/usemtl/mtllib records are ignored
    }
    if (!any_label) mesh.part_labels.clear();
    mesh.validate();
    return mesh;
}

void save_obj(const std::string& path, const TriangleMesh& mesh) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write mesh file: " + path);
    out << "# triangulated plant mesh, meters\n";
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
        out << buf;
    }
    const bool labeled = !mesh.part_labels.empty();
    int last_label = -1;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        if (labeled && static_cast<int>(mesh.part_labels[t]) != last_label) {
            last_label = static_cast<int>(mesh.part_labels[t]);
            out << "g " << part_label_name(mesh.part_labels[t]) << "\n";
        }
        const auto& tri = mesh.triangles[t];
        out << "f " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << "\n";
    }
    if (!out) throw IoError("failed writing mesh file: " + path);
}

void save_ply(const std::string& path, const PointCloud& cloud) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write ply file: " + path);
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    char buf[128];
    for (const Vec3& p : cloud) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x, p.y, p.z);
        out << buf;
    }
    if (!out) throw IoError("failed writing ply file: " + path);
}

PointCloud load_ply(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFoundError("cannot open ply file: " + path);
    std::string line;
    std::size_t count = 0;
    bool header_done = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "element") {
            std::string what;
            ls >> what >> count;
            if (what != "vertex") throw ParseError("unsupported ply element: " + what);
        } else if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw ParseError("only ascii ply supported");
        } else if (tag == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) throw ParseError("ply header not terminated");
    PointCloud cloud;
    cloud.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        Vec3 p;
        if (!(in >> p.x >> p.y >> p.z)) throw ParseError("truncated ply payload");
        cloud.push_back(p);
    }
    return cloud;
}

// ---------------------------------------------------------------------------
// Procedural plant generator

namespace {

struct MeshBuilder {
    TriangleMesh mesh;
    PartLabel current = PartLabel::stem;

    int add_vertex(const Vec3& v) {
        mesh.vertices.push_back(v);
        return static_cast<int>(mesh.vertices.size()) - 1;
    }
    void add_triangle(int a, int b, int c) {
        mesh.triangles.push_back({a, b, c});
        mesh.part_labels.push_back(current);
    }

    // Open tube along a polyline of center points with per-ring radius.
    void add_tube(const std::vector<Vec3>& centers, const std::vector<double>& radii,
                  int sides) {
        std::vector<int> prev_ring;
        for (std::size_t s = 0; s < centers.size(); ++s) {
            Vec3 dir;
            if (s + 1 < centers.size())
                dir = (centers[s + 1] - centers[s]).normalized();
            else
                dir = (centers[s] - centers[s - 1]).normalized();
            // Stable frame around dir.
            Vec3 ref = std::abs(dir.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
            const Vec3 u = dir.cross(ref).normalized();
            const Vec3 v = dir.cross(u);
            std::vector<int> ring(sides);
            for (int a = 0; a < sides; ++a) {
                const double ang = 2.0 * kPi * a / sides;
                ring[a] = add_vertex(centers[s] + radii[s] * (std::cos(ang) * u +
                                                              std::sin(ang) * v));
            }
            if (s > 0) {
                for (int a = 0; a < sides; ++a) {
                    const int b = (a + 1) % sides;
                    add_triangle(prev_ring[a], prev_ring[b], ring[a]);
                    add_triangle(prev_ring[b], ring[b], ring[a]);
                }
            }
            prev_ring = std::move(ring);
        }
    }

    void add_disc(const Vec3& center, const Vec3& normal, double radius, int sides) {
        Vec3 ref = std::abs(normal.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
        const Vec3 u = normal.cross(ref).normalized();
        const Vec3 v = normal.cross(u);
        const int c = add_vertex(center);
        std::vector<int> ring(sides);
        for (int a = 0; a < sides; ++a) {
            const double ang = 2.0 * kPi * a / sides;
            ring[a] = add_vertex(center + radius * (std::cos(ang) * u + std::sin(ang) * v));
        }
        for (int a = 0; a < sides; ++a) add_triangle(c, ring[a], ring[(a + 1) % sides]);
    }

    void add_sphere(const Vec3& center, double radius, int lon, int lat) {
        const int top = add_vertex(center + Vec3{0, 0, radius});
        const int bottom = add_vertex(center - Vec3{0, 0, radius});
        std::vector<std::vector<int>> rings;
        for (int b = 1; b < lat; ++b) {
            const double phi = kPi * b / lat;
            std::vector<int> ring(lon);
            for (int a = 0; a < lon; ++a) {
                const double th = 2.0 * kPi * a / lon;
                ring[a] = add_vertex(center + radius * Vec3{std::sin(phi) * std::cos(th),
                                                            std::sin(phi) * std::sin(th),
                                                            std::cos(phi)});
            }
            rings.push_back(std::move(ring));
        }
        for (int a = 0; a < lon; ++a) {
            const int b = (a + 1) % lon;
            add_triangle(top, rings.front()[a], rings.front()[b]);
            add_triangle(bottom, rings.back()[b], rings.back()[a]);
        }
        for (std::size_t r = 0; r + 1 < rings.size(); ++r) {
            for (int a = 0; a < lon; ++a) {
                const int b = (a + 1) % lon;
                add_triangle(rings[r][a], rings[r + 1][a], rings[r][b]);
                add_triangle(rings[r][b], rings[r + 1][a], rings[r + 1][b]);
            }
        }
    }

    // Flat leaflet blade: a pointed oval made of 6 triangles. `along` is the
    // spine direction, `side` the in-plane width direction.
    void add_leaflet(const Vec3& base, const Vec3& along, const Vec3& side, double length,
                     double width) {
        const int b = add_vertex(base);
        const int tip = add_vertex(base + along * length);
        const int l1 = add_vertex(base + along * (0.35 * length) - side * (0.5 * width));
        const int r1 = add_vertex(base + along * (0.35 * length) + side * (0.5 * width));
        const int l2 = add_vertex(base + along * (0.75 * length) - side * (0.3 * width));
        const int r2 = add_vertex(base + along * (0.75 * length) + side * (0.3 * width));
        // Single-sided sheet: intersection tests hit either face.
        add_triangle(b, l1, r1);
        add_triangle(l1, l2, r1);
        add_triangle(r1, l2, r2);
        add_triangle(l2, tip, r2);
    }
};

// Radial cap keeping every plant inside the 0.3 x 0.3 whole-plant footprint
// at any yaw.
constexpr double kMaxRadialExtent = 0.1495;

}  // namespace

std::pair<TriangleMesh, PlantMetadata> generate_plant(const PlantSpec& spec) {
    if (spec.growth_stage < 1 || spec.growth_stage > 10)
        throw InvalidSpecError("growth_stage must be in 1..10");
    if (spec.leaf_node_count < 3) throw InvalidSpecError("leaf_node_count must be >= 3");
    if (spec.leaflet_removal_fraction < 0.0 || spec.leaflet_removal_fraction > 1.0)
        throw InvalidSpecError("leaflet_removal_fraction must be in [0,1]");

    Rng rng(spec.rng_seed);
    MeshBuilder b;

    const double stage = (spec.growth_stage - 1) / 9.0;
    // Top margin keeps the tallest plant strictly inside the 0.7 m workspace.
    const double stem_height = 0.5 + 0.196 * stage;
    const double stem_radius = 0.005 + 0.0015 * stage;

    // Main stem: tapered vertical tube with a closed top.
    b.current = PartLabel::stem;
    {
        std::vector<Vec3> centers;
        std::vector<double> radii;
        const int segments = 6;
        for (int s = 0; s <= segments; ++s) {
            const double t = static_cast<double>(s) / segments;
            centers.push_back({0.0, 0.0, stem_height * t});
            radii.push_back(stem_radius * (1.0 - 0.4 * t));
        }
        b.add_tube(centers, radii, 12);
        b.add_disc(centers.back(), {0, 0, 1}, radii.back(), 12);
        b.add_disc(centers.front(), {0, 0, -1}, radii.front(), 12);
    }

    // Leaf nodes: stem/petiole junctions, spaced along the stem with
    // phyllotactic azimuths.
    const int n_nodes = spec.leaf_node_count;
    const double base_azimuth = rng.uniform(0.0, 2.0 * kPi);
    std::vector<Vec3> node_centers_local;
    struct NodeGeom {
        Vec3 center;
        double azimuth;
        double z;
    };
    std::vector<NodeGeom> nodes;
    for (int i = 0; i < n_nodes; ++i) {
        const double frac = n_nodes == 1 ? 0.5 : static_cast<double>(i) / (n_nodes - 1);
        const double jitter = rng.uniform(-0.25, 0.25) / std::max(1, n_nodes - 1);
        const double z = stem_height * (0.10 + 0.85 * std::clamp(frac + jitter, 0.0, 1.0));
        const double azimuth = base_azimuth + i * deg_to_rad(137.5) +
                               rng.uniform(-deg_to_rad(15.0), deg_to_rad(15.0));
        const Vec3 outward{std::cos(azimuth), std::sin(azimuth), 0.0};
        nodes.push_back({Vec3{0, 0, z} + outward * 0.014, azimuth, z});
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const NodeGeom& a, const NodeGeom& b2) { return a.z < b2.z; });
    for (const NodeGeom& n : nodes) node_centers_local.push_back(n.center);

    // Compound leaves: petiole + rachis polyline with alternating leaflets
    // and a terminal leaflet. Leaflet parameters are always drawn so the rng
    // stream does not depend on the removal fraction.
    b.current = PartLabel::leaf;
    const int leaflets_per_leaf = 9;
    for (const NodeGeom& node : nodes) {
        const Vec3 outward{std::cos(node.azimuth), std::sin(node.azimuth), 0.0};
        const double pitch = rng.uniform(deg_to_rad(-4.0), deg_to_rad(16.0));
        const double droop = rng.uniform(deg_to_rad(12.0), deg_to_rad(26.0));

        const Vec3 stem_attach = Vec3{0, 0, node.z} + outward * (stem_radius * 0.6);
        const Vec3 knee = stem_attach + outward * 0.034 + Vec3{0, 0, 0.034 * std::tan(pitch)};
        const Vec3 tip = knee + outward * 0.064 - Vec3{0, 0, 0.064 * std::tan(droop)};
        b.add_tube({stem_attach, knee, tip}, {0.0040, 0.0032, 0.0018}, 8);

        for (int j = 0; j < leaflets_per_leaf; ++j) {
            // Station along the rachis: terminal leaflet at the tip, the rest
            // alternating left/right.
            const bool terminal = (j == leaflets_per_leaf - 1);
            const double station =
                terminal ? 1.0 : 0.30 + 0.64 * (j / static_cast<double>(leaflets_per_leaf - 1));
            const Vec3 base = knee + (tip - knee) * station;
            const double side_sign = terminal ? 0.0 : (j % 2 == 0 ? 1.0 : -1.0);
            const double yaw_off =
                terminal ? 0.0
                         : side_sign * rng.uniform(deg_to_rad(35.0), deg_to_rad(75.0));
            const double len = rng.uniform(0.030, 0.048);
            const double width = len * rng.uniform(0.52, 0.66);
            const double blade_pitch = rng.uniform(deg_to_rad(-20.0), deg_to_rad(8.0));
            const double roll = rng.uniform(deg_to_rad(-25.0), deg_to_rad(25.0));

            const double a = node.azimuth + yaw_off;
            Vec3 along{std::cos(a) * std::cos(blade_pitch), std::sin(a) * std::cos(blade_pitch),
                       std::sin(blade_pitch)};
            Vec3 sdir = Vec3{0, 0, 1}.cross(along).normalized();
            // Roll the blade plane about its spine.
            const Quat roll_q = Quat::from_axis_angle(along, roll);
            sdir = roll_q.rotate(sdir);

            const bool removed = static_cast<long long>(std::floor((j + 1) *
                                     spec.leaflet_removal_fraction)) >
                                 static_cast<long long>(std::floor(j *
                                     spec.leaflet_removal_fraction));
            if (removed) continue;

            // Clamp so the blade tip stays inside the radial footprint.
            Vec3 tip_pos = base + along * len;
            const double tip_r = std::hypot(tip_pos.x, tip_pos.y);
            double use_len = len;
            if (tip_r > kMaxRadialExtent) {
                const double base_r = std::hypot(base.x, base.y);
                use_len = std::max(0.012, len * (kMaxRadialExtent - base_r) / (tip_r - base_r));
            }
            b.add_leaflet(base, along, sdir, use_len, width);
        }
    }

    // Truss clusters on later growth stages: a drooping peduncle carrying a
    // blob of fruit spheres.
    b.current = PartLabel::truss;
    const int truss_count = spec.growth_stage >= 4 ? 1 + (spec.growth_stage - 4) / 3 : 0;
    for (int t = 0; t < truss_count; ++t) {
        const double z = stem_height * rng.uniform(0.30, 0.72);
        const double azimuth = rng.uniform(0.0, 2.0 * kPi);
        const Vec3 outward{std::cos(azimuth), std::sin(azimuth), 0.0};
        const Vec3 start = Vec3{0, 0, z} + outward * (stem_radius * 0.6);
        const Vec3 end = start + outward * 0.030 - Vec3{0, 0, 0.018};
        b.add_tube({start, end}, {0.0025, 0.002}, 6);
        const int fruit = rng.uniform_int(4, 7);
        Vec3 anchor = end - Vec3{0, 0, 0.008};
        for (int f = 0; f < fruit; ++f) {
            const double r = rng.uniform(0.007, 0.012);
            const Vec3 off{rng.uniform(-0.016, 0.016), rng.uniform(-0.016, 0.016),
                           rng.uniform(-0.030, -0.002)};
            Vec3 c = anchor + off;
            const double cr = std::hypot(c.x, c.y);
            if (cr + r > kMaxRadialExtent) c = c * ((kMaxRadialExtent - r) / cr);
            if (c.z - r < 0.01) c.z = 0.01 + r;
            b.add_sphere(c, r, 8, 5);
        }
    }

    // World placement: yaw about the stem axis, then translate to the base.
    const double cy = std::cos(spec.base_yaw), sy = std::sin(spec.base_yaw);
    auto to_world = [&](const Vec3& p) {
        return Vec3{cy * p.x - sy * p.y, sy * p.x + cy * p.y, p.z} + spec.base_position;
    };
    for (Vec3& v : b.mesh.vertices) v = to_world(v);

    PlantMetadata meta;
    meta.stem_base = spec.base_position;
    meta.stem_top = spec.base_position + Vec3{0, 0, stem_height};
    meta.stem_height = stem_height;
    meta.stem_radius = stem_radius;
    for (const Vec3& c : node_centers_local) meta.leaf_node_centers.push_back(to_world(c));
    std::sort(meta.leaf_node_centers.begin(), meta.leaf_node_centers.end(),
              [](const Vec3& a, const Vec3& c) { return a.z < c.z; });

    b.mesh.validate();
    return {std::move(b.mesh), std::move(meta)};
}

std::string PlantMetadata::to_json() const {
    nlohmann::json j;
    j["stem_axis"]["base"] = {stem_base.x, stem_base.y, stem_base.z};
    j["stem_axis"]["top"] = {stem_top.x, stem_top.y, stem_top.z};
    j["stem_height"] = stem_height;
    j["stem_radius"] = stem_radius;
    auto& nodes = j["leaf_node_centers"] = nlohmann::json::array();
    for (const Vec3& c : leaf_node_centers) nodes.push_back({c.x, c.y, c.z});
    return j.dump(2);
}

PlantMetadata PlantMetadata::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    PlantMetadata m;
    auto vec = [](const nlohmann::json& a) { return Vec3{a.at(0), a.at(1), a.at(2)}; };
    m.stem_base = vec(j.at("stem_axis").at("base"));
    m.stem_top = vec(j.at("stem_axis").at("top"));
    m.stem_height = j.at("stem_height");
    m.stem_radius = j.at("stem_radius");
    for (const auto& c : j.at("leaf_node_centers")) m.leaf_node_centers.push_back(vec(c));
    return m;
}

// ---------------------------------------------------------------------------
// Ray casting

std::optional<double> ray_triangle_intersect(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                             const Vec3& b, const Vec3& c) {
    const Vec3 e1 = b - a;
    const Vec3 e2 = c - a;
    const Vec3 p = dir.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-14) return std::nullopt;  // parallel
    const double inv_det = 1.0 / det;
    const Vec3 s = origin - a;
    const double u = s.dot(p) * inv_det;
    if (u < 0.0 || u > 1.0) return std::nullopt;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) * inv_det;
    if (v < 0.0 || u + v > 1.0) return std::nullopt;
    const double t = e2.dot(q) * inv_det;
    if (t <= 1e-12) return std::nullopt;
    return t;
}

BoundingVolumeIndex::BoundingVolumeIndex(const TriangleMesh& mesh) { build(mesh); }

void BoundingVolumeIndex::build(const TriangleMesh& mesh) {
    const std::size_t n = mesh.triangles.size();
    if (n == 0) return;

    std::vector<Vec3> centroids(n), lowers(n), uppers(n);
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t t = 0; t < n; ++t) {
        const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
        const Vec3& bb = mesh.vertices[mesh.triangles[t][1]];
        const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
        centroids[t] = (a + bb + c) / 3.0;
        lowers[t] = {std::min({a.x, bb.x, c.x}), std::min({a.y, bb.y, c.y}),
                     std::min({a.z, bb.z, c.z})};
        uppers[t] = {std::max({a.x, bb.x, c.x}), std::max({a.y, bb.y, c.y}),
                     std::max({a.z, bb.z, c.z})};
    }

    nodes_.reserve(2 * n);
    // Recursive median split over [begin, end) of `order`.
    struct Builder {
        std::vector<Node>& nodes;
        std::vector<std::int32_t>& order;
        const std::vector<Vec3>& centroids;
        const std::vector<Vec3>& lowers;
        const std::vector<Vec3>& uppers;

        std::int32_t run(std::int32_t begin, std::int32_t end) {
            Node node;
            node.lower = {1e300, 1e300, 1e300};
            node.upper = {-1e300, -1e300, -1e300};
            for (std::int32_t i = begin; i < end; ++i) {
                const Vec3& lo = lowers[order[i]];
                const Vec3& hi = uppers[order[i]];
                node.lower = {std::min(node.lower.x, lo.x), std::min(node.lower.y, lo.y),
                              std::min(node.lower.z, lo.z)};
                node.upper = {std::max(node.upper.x, hi.x), std::max(node.upper.y, hi.y),
                              std::max(node.upper.z, hi.z)};
            }
            const std::int32_t id = static_cast<std::int32_t>(nodes.size());
            nodes.push_back(node);
            if (end - begin <= 4) {
                nodes[id].left = begin;
                nodes[id].count = end - begin;
                return id;
            }
            const Vec3 extent = node.upper - node.lower;
            int axis = 0;
            if (extent.y > extent.x) axis = 1;
            if (extent.z > (axis == 0 ? extent.x : extent.y)) axis = 2;
            const std::int32_t mid = (begin + end) / 2;
            std::nth_element(order.begin() + begin, order.begin() + mid, order.begin() + end,
                             [&](std::int32_t lhs, std::int32_t rhs) {
                                 return centroids[lhs][axis] < centroids[rhs][axis];
                             });
            const std::int32_t left = run(begin, mid);
            const std::int32_t right = run(mid, end);
            nodes[id].left = left;
            nodes[id].right = right;
            nodes[id].count = 0;
            return id;
        }
    };
    Builder builder{nodes_, order, centroids, lowers, uppers};
    builder.run(0, static_cast<std::int32_t>(n));

    tri_a_.resize(n);
    tri_b_.resize(n);
    tri_c_.resize(n);
    tri_id_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tri = mesh.triangles[order[i]];
        tri_a_[i] = mesh.vertices[tri[0]];
        tri_b_[i] = mesh.vertices[tri[1]];
        tri_c_[i] = mesh.vertices[tri[2]];
        tri_id_[i] = order[i];
    }
}

std::optional<RayHit> BoundingVolumeIndex::cast_ray(const Vec3& origin, const Vec3& direction,
                                                    double max_range) const {
    if (nodes_.empty()) return std::nullopt;

    const Vec3 inv{1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z};
    double best_t = max_range;
    int best_id = -1;
    bool found = false;

    std::int32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[stack[--top]];
        // Slab test against [0, best_t].
        double t0 = 0.0, t1 = best_t;
        {
            const double tx1 = (node.lower.x - origin.x) * inv.x;
            const double tx2 = (node.upper.x - origin.x) * inv.x;
            t0 = std::max(t0, std::min(tx1, tx2));
            t1 = std::min(t1, std::max(tx1, tx2));
            const double ty1 = (node.lower.y - origin.y) * inv.y;
            const double ty2 = (node.upper.y - origin.y) * inv.y;
            t0 = std::max(t0, std::min(ty1, ty2));
            t1 = std::min(t1, std::max(ty1, ty2));
            const double tz1 = (node.lower.z - origin.z) * inv.z;
            const double tz2 = (node.upper.z - origin.z) * inv.z;
            t0 = std::max(t0, std::min(tz1, tz2));
            t1 = std::min(t1, std::max(tz1, tz2));
            if (t0 > t1) continue;
        }
        if (node.count > 0) {
            for (std::int32_t i = node.left; i < node.left + node.count; ++i) {
                const auto hit = ray_triangle_intersect(origin, direction, tri_a_[i], tri_b_[i],
                                                        tri_c_[i]);
                if (!hit) continue;
                const double t = *hit;
                if (t > max_range) continue;
                if (!found || t < best_t || (t == best_t && tri_id_[i] < best_id)) {
                    best_t = t;
                    best_id = tri_id_[i];
                    found = true;
                }
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    if (!found) return std::nullopt;
    return RayHit{best_t, best_id};
}

// ---------------------------------------------------------------------------
// Ground-truth surface sampling

PointCloud sample_ground_truth(const TriangleMesh& mesh, double samples_per_m2,
                               double voxel_size) {
    if (mesh.triangles.empty()) throw EmptyMeshError("cannot sample an empty mesh");
    if (voxel_size <= 0.0) throw InvalidSpecError("voxel_size must be positive");

    // R2 low-discrepancy sequence per triangle keeps sampling deterministic
    // and independent of triangle order.
    constexpr double kAlpha1 = 0.7548776662466927;
    constexpr double kAlpha2 = 0.5698402909980532;

    struct Accum {
        Vec3 sum;
        std::int64_t count = 0;
    };
    std::unordered_map<std::uint64_t, Accum> cells;
    cells.reserve(1 << 16);

    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Vec3& a = mesh.vertices[mesh.triangles[t][0]];
        const Vec3& b = mesh.vertices[mesh.triangles[t][1]];
        const Vec3& c = mesh.vertices[mesh.triangles[t][2]];
        const double area = mesh.triangle_area(t);
        const std::int64_t n = std::max<std::int64_t>(
            1, static_cast<std::int64_t>(std::llround(area * samples_per_m2)));
        double u_seq = 0.5, v_seq = 0.5;
        for (std::int64_t s = 0; s < n; ++s) {
            u_seq += kAlpha1;
            if (u_seq >= 1.0) u_seq -= 1.0;
            v_seq += kAlpha2;
            if (v_seq >= 1.0) v_seq -= 1.0;
            double u = u_seq, v = v_seq;
            if (u + v > 1.0) {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            const Vec3 p = a + (b - a) * u + (c - a) * v;
            const std::int32_t i = static_cast<std::int32_t>(std::floor(p.x / voxel_size));
            const std::int32_t j = static_cast<std::int32_t>(std::floor(p.y / voxel_size));
            const std::int32_t k = static_cast<std::int32_t>(std::floor(p.z / voxel_size));
            Accum& acc = cells[pack_voxel_key(i, j, k)];
            acc.sum += p;
            acc.count += 1;
        }
    }

    std::vector<std::pair<std::uint64_t, Accum>> sorted(cells.begin(), cells.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& lhs, const auto& rhs) { return lhs.first < rhs.first; });
    PointCloud cloud;
    cloud.reserve(sorted.size());
    for (const auto& [key, acc] : sorted)
        cloud.push_back(acc.sum / static_cast<double>(acc.count));
    return cloud;
}

}  // namespace plantnbv
