#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "plantnbv/harness.hpp"

namespace py = pybind11;
using namespace plantnbv;

namespace {

PointCloud cloud_from_array(const py::array_t<double, py::array::c_style>& array) {
    if (array.ndim() != 2 || array.shape(1) != 3)
        throw py::value_error("expected an (n, 3) float64 array");
    PointCloud cloud;
    cloud.reserve(array.shape(0));
    const auto view = array.unchecked<2>();
    for (py::ssize_t i = 0; i < array.shape(0); ++i)
        cloud.push_back({view(i, 0), view(i, 1), view(i, 2)});
    return cloud;
}

py::array_t<double> cloud_to_array(const PointCloud& cloud) {
    py::array_t<double> out({static_cast<py::ssize_t>(cloud.size()), py::ssize_t{3}});
    auto view = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        view(i, 0) = cloud[i].x;
        view(i, 1) = cloud[i].y;
        view(i, 2) = cloud[i].z;
    }
    return out;
}

Vec3 vec_from_seq(const py::sequence& seq) {
    if (py::len(seq) != 3) throw py::value_error("expected a 3-element sequence");
    return {seq[0].cast<double>(), seq[1].cast<double>(), seq[2].cast<double>()};
}

Viewpoint viewpoint_from_parts(const py::sequence& position, const py::sequence& quaternion) {
    if (py::len(quaternion) != 4) throw py::value_error("quaternion needs 4 elements (xyzw)");
    Viewpoint view;
    view.position = vec_from_seq(position);
    view.orientation = {quaternion[0].cast<double>(), quaternion[1].cast<double>(),
                        quaternion[2].cast<double>(), quaternion[3].cast<double>()};
    return view;
}

RegionOfInterest roi_from_parts(const std::string& name,
                                const std::vector<std::pair<py::sequence, py::sequence>>& boxes) {
    RegionOfInterest roi;
    roi.name = name;
    for (const auto& [center, size] : boxes)
        roi.boxes.push_back(Box{vec_from_seq(center), vec_from_seq(size)});
    return roi;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Attention-driven next-best-view planning workbench";

    // --- scene ---------------------------------------------------------------
    py::class_<TriangleMesh>(m, "TriangleMesh")
        .def(py::init<>())
        .def_property_readonly("vertex_count",
                               [](const TriangleMesh& mesh) { return mesh.vertices.size(); })
        .def_property_readonly("triangle_count",
                               [](const TriangleMesh& mesh) { return mesh.triangles.size(); })
        .def("surface_area", &TriangleMesh::surface_area)
        .def("vertices", [](const TriangleMesh& mesh) { return cloud_to_array(mesh.vertices); });

    py::class_<PlantMetadata>(m, "PlantMetadata")
        .def_property_readonly("stem_base",
                               [](const PlantMetadata& meta) {
                                   return py::make_tuple(meta.stem_base.x, meta.stem_base.y,
                                                         meta.stem_base.z);
                               })
        .def_property_readonly("stem_height",
                               [](const PlantMetadata& meta) { return meta.stem_height; })
        .def("leaf_node_centers",
             [](const PlantMetadata& meta) { return cloud_to_array(meta.leaf_node_centers); })
        .def("to_json", &PlantMetadata::to_json);

    m.def("load_mesh", &load_mesh, py::arg("path"));
    m.def("save_obj", &save_obj, py::arg("path"), py::arg("mesh"));
    m.def(
        "generate_plant",
        [](int growth_stage, int leaf_node_count, double leaflet_removal_fraction,
           const py::sequence& base_position, double base_yaw, std::uint64_t rng_seed) {
            PlantSpec spec;
            spec.growth_stage = growth_stage;
            spec.leaf_node_count = leaf_node_count;
            spec.leaflet_removal_fraction = leaflet_removal_fraction;
            spec.base_position = vec_from_seq(base_position);
            spec.base_yaw = base_yaw;
            spec.rng_seed = rng_seed;
            return generate_plant(spec);
        },
        py::arg("growth_stage") = 6, py::arg("leaf_node_count") = 7,
        py::arg("leaflet_removal_fraction") = 0.0,
        py::arg("base_position") = py::make_tuple(1.0, 0.0, 0.8), py::arg("base_yaw") = 0.0,
        py::arg("rng_seed") = 1);
    m.def("sample_ground_truth", [](const TriangleMesh& mesh, double samples_per_m2,
                                    double voxel_size) {
        return cloud_to_array(sample_ground_truth(mesh, samples_per_m2, voxel_size));
    });
    m.def("save_ply",
          [](const std::string& path, const py::array_t<double, py::array::c_style>& cloud) {
              save_ply(path, cloud_from_array(cloud));
          });
    m.def("load_ply",
          [](const std::string& path) { return cloud_to_array(load_ply(path)); });

    py::class_<BoundingVolumeIndex>(m, "BoundingVolumeIndex")
        .def(py::init<const TriangleMesh&>())
        .def("cast_ray",
             [](const BoundingVolumeIndex& index, const py::sequence& origin,
                const py::sequence& direction, double max_range) -> py::object {
                 const auto hit =
                     index.cast_ray(vec_from_seq(origin), vec_from_seq(direction), max_range);
                 if (!hit) return py::none();
                 return py::make_tuple(hit->distance, hit->triangle);
             });

    // --- mapping ---------------------------------------------------------------
    py::class_<OccupancyMap>(m, "OccupancyMap")
        .def(py::init([](double resolution, double clamp_min, double clamp_max,
                         double occupancy_threshold, double hit_probability,
                         double miss_probability, int tree_depth) {
                 MapConfig cfg;
                 cfg.resolution = resolution;
                 cfg.clamp_min = clamp_min;
                 cfg.clamp_max = clamp_max;
                 cfg.occupancy_threshold = occupancy_threshold;
                 cfg.hit_probability = hit_probability;
                 cfg.miss_probability = miss_probability;
                 cfg.tree_depth = tree_depth;
                 return OccupancyMap(cfg);
             }),
             py::arg("resolution") = 0.003, py::arg("clamp_min") = 0.12,
             py::arg("clamp_max") = 0.97, py::arg("occupancy_threshold") = 0.5,
             py::arg("hit_probability") = 0.7, py::arg("miss_probability") = 0.4,
             py::arg("tree_depth") = 16)
        .def("insert_cloud",
             [](OccupancyMap& map, const py::sequence& origin,
                const py::array_t<double, py::array::c_style>& cloud, double max_range) {
                 map.insert_cloud(vec_from_seq(origin), cloud_from_array(cloud), max_range);
             })
        .def("occupancy",
             [](const OccupancyMap& map, int i, int j, int k) {
                 return map.occupancy({i, j, k});
             })
        .def("traverse_segment",
             [](const OccupancyMap& map, const py::sequence& a, const py::sequence& b) {
                 std::vector<std::tuple<int, int, int>> out;
                 for (const VoxelIndex& v :
                      map.traverse_segment(vec_from_seq(a), vec_from_seq(b)))
                     out.emplace_back(v.i, v.j, v.k);
                 return out;
             })
        .def("export_occupied_cloud",
             [](const OccupancyMap& map) { return cloud_to_array(map.export_occupied_cloud()); })
        .def("stored_voxel_count", &OccupancyMap::stored_voxel_count)
        .def("dump", [](const OccupancyMap& map) {
            std::ostringstream out;
            map.dump(out);
            return out.str();
        });

    // --- sensor / gain ----------------------------------------------------------
    py::class_<CameraModel>(m, "CameraModel")
        .def(py::init([](double horizontal_fov_deg, double vertical_fov_deg, int width,
                         int height, double max_range) {
                 CameraModel cam;
                 cam.horizontal_fov = deg_to_rad(horizontal_fov_deg);
                 cam.vertical_fov = deg_to_rad(vertical_fov_deg);
                 cam.image_width = width;
                 cam.image_height = height;
                 cam.max_range = max_range;
                 return cam;
             }),
             py::arg("horizontal_fov_deg") = 70.0, py::arg("vertical_fov_deg") = 55.0,
             py::arg("width") = 320, py::arg("height") = 240, py::arg("max_range") = 0.75)
        .def_readonly("image_width", &CameraModel::image_width)
        .def_readonly("image_height", &CameraModel::image_height)
        .def_readonly("max_range", &CameraModel::max_range);

    py::class_<Viewpoint>(m, "Viewpoint")
        .def_property_readonly("position",
                               [](const Viewpoint& v) {
                                   return py::make_tuple(v.position.x, v.position.y,
                                                         v.position.z);
                               })
        .def_property_readonly("quaternion", [](const Viewpoint& v) {
            return py::make_tuple(v.orientation.x, v.orientation.y, v.orientation.z,
                                  v.orientation.w);
        });

    m.def(
        "look_at",
        [](const py::sequence& position, const py::sequence& target) {
            return look_at(vec_from_seq(position), vec_from_seq(target));
        },
        py::arg("position"), py::arg("target"));
    m.def("render_depth",
          [](const BoundingVolumeIndex& scene, const CameraModel& cam, const Viewpoint& view) {
              const DepthImage img = render_depth(scene, cam, view);
              py::array_t<double> out(
                  {static_cast<py::ssize_t>(img.height), static_cast<py::ssize_t>(img.width)});
              auto buffer = out.mutable_unchecked<2>();
              for (int v = 0; v < img.height; ++v)
                  for (int u = 0; u < img.width; ++u) buffer(v, u) = img.at(u, v);
              return out;
          });
    m.def("depth_to_cloud",
          [](const py::array_t<double, py::array::c_style>& depth, const CameraModel& cam,
             const Viewpoint& view) {
              if (depth.ndim() != 2) throw py::value_error("expected a 2-d depth image");
              DepthImage img;
              img.height = static_cast<int>(depth.shape(0));
              img.width = static_cast<int>(depth.shape(1));
              img.depth.resize(static_cast<std::size_t>(img.width) * img.height);
              const auto view_in = depth.unchecked<2>();
              for (int v = 0; v < img.height; ++v)
                  for (int u = 0; u < img.width; ++u) img.at(u, v) = view_in(v, u);
              return cloud_to_array(depth_to_cloud(img, cam, view));
          });

    m.def("voxel_entropy", &voxel_entropy, py::arg("p"));

    py::class_<GainReport>(m, "GainReport")
        .def_readonly("gain", &GainReport::gain)
        .def_readonly("visible_voxel_count", &GainReport::visible_voxel_count)
        .def_readonly("roi_voxel_count", &GainReport::roi_voxel_count);

    m.def(
        "expected_gain",
        [](const OccupancyMap& map, const CameraModel& cam, const Viewpoint& view,
           const std::string& roi_name,
           const std::vector<std::pair<py::sequence, py::sequence>>& roi_boxes, int nu, int nv,
           double raycast_range) {
            return expected_gain(map, cam, view, roi_from_parts(roi_name, roi_boxes), {nu, nv},
                                 raycast_range);
        },
        py::arg("map"), py::arg("camera"), py::arg("view"), py::arg("roi_name") = "none",
        py::arg("roi_boxes") = std::vector<std::pair<py::sequence, py::sequence>>{},
        py::arg("nu") = 40, py::arg("nv") = 30, py::arg("raycast_range") = 0.75);

    // --- planning ----------------------------------------------------------------
    py::class_<CylindricalSector>(m, "CylindricalSector")
        .def(py::init([](const py::sequence& axis_point, double radius, double height,
                         double sector_angle_deg, double angular_center_deg) {
                 CylindricalSector sector;
                 sector.axis_point = vec_from_seq(axis_point);
                 sector.radius = radius;
                 sector.height = height;
                 sector.sector_angle = deg_to_rad(sector_angle_deg);
                 sector.angular_center = deg_to_rad(angular_center_deg);
                 return sector;
             }),
             py::arg("axis_point") = py::make_tuple(1.0, 0.0, 0.8), py::arg("radius") = 0.4,
             py::arg("height") = 0.7, py::arg("sector_angle_deg") = 90.0,
             py::arg("angular_center_deg") = 180.0);

    m.def(
        "sample_candidates",
        [](const CylindricalSector& sector, int samples_per_cell, std::uint64_t seed) {
            SamplerConfig cfg;
            cfg.samples_per_cell = samples_per_cell;
            cfg.rng_seed = seed;
            return sample_candidates(sector, cfg);
        },
        py::arg("sector"), py::arg("samples_per_cell") = 3, py::arg("seed") = 0);
    m.def("predefined_sequence", &predefined_sequence, py::arg("sector"), py::arg("pattern_id"),
          py::arg("n_views"));
    m.def("select_next_view",
          [](const std::vector<Viewpoint>& candidates, const std::vector<double>& gains) {
              std::vector<GainReport> reports(gains.size());
              for (std::size_t i = 0; i < gains.size(); ++i) reports[i].gain = gains[i];
              return select_next_view(candidates, reports).second;
          });

    // --- metrics ------------------------------------------------------------------
    m.def(
        "trim_cloud",
        [](const py::array_t<double, py::array::c_style>& cloud, const std::string& roi_name,
           const std::vector<std::pair<py::sequence, py::sequence>>& roi_boxes) {
            return cloud_to_array(
                trim_cloud(cloud_from_array(cloud), roi_from_parts(roi_name, roi_boxes)));
        },
        py::arg("cloud"), py::arg("roi_name") = "none",
        py::arg("roi_boxes") = std::vector<std::pair<py::sequence, py::sequence>>{});
    m.def("chamfer_distance",
          [](const py::array_t<double, py::array::c_style>& r,
             const py::array_t<double, py::array::c_style>& t) {
              return chamfer_distance(cloud_from_array(r), cloud_from_array(t));
          });
    m.def("f1_score",
          [](const py::array_t<double, py::array::c_style>& r,
             const py::array_t<double, py::array::c_style>& t, double rho) {
              const PrecisionRecall pr = f1_score(cloud_from_array(r), cloud_from_array(t), rho);
              return py::make_tuple(pr.precision, pr.recall, pr.f1);
          });

    // --- harness ------------------------------------------------------------------
    m.def(
        "run_experiment_json",
        [](const std::string& config_json) {
            const ExperimentConfig cfg = ExperimentConfig::from_json(config_json);
            const AggregateResult aggregate = run_experiment(cfg);
            py::list cells;
            for (const AggregateCell& cell : aggregate.cells) {
                py::dict entry;
                entry["planner"] = cell.planner;
                entry["attention"] = cell.attention;
                entry["n_trials"] = cell.n_trials;
                entry["mean_f1"] = cell.mean_f1;
                entry["ci95_f1"] = cell.ci_f1;
                entry["mean_chamfer"] = cell.mean_chamfer;
                entry["median_views_to_threshold"] = cell.median_views_to_threshold;
                cells.append(std::move(entry));
            }
            return cells;
        },
        py::arg("config_json"),
        "Run a study from a JSON config string; returns the aggregate cells.");
    m.def("default_config_json",
          []() { return ExperimentConfig::desk_default().to_json(); });
    m.def("paper_replica_config_json",
          []() { return ExperimentConfig::paper_replica().to_json(); });

    m.def("make_viewpoint", &viewpoint_from_parts, py::arg("position"), py::arg("quaternion"));

    // Exceptions surface as ValueError/RuntimeError with their message.
    py::register_exception<InvalidSpecError>(m, "InvalidSpecError", PyExc_ValueError);
    py::register_exception<OutOfRangeError>(m, "OutOfRangeError", PyExc_ValueError);
    py::register_exception<EmptyCloudError>(m, "EmptyCloudError", PyExc_ValueError);
}
