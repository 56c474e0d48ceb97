"""Smoke tests for the python bindings.

Run with the built module on the path:
    PYTHONPATH=build/python pytest tests/python
"""

import json
import math

import numpy as np
import pytest

import plantnbv


def test_voxel_entropy_values():
    assert plantnbv.voxel_entropy(0.5) == 1.0
    assert plantnbv.voxel_entropy(0.0) == 0.0
    assert plantnbv.voxel_entropy(1.0) == 0.0
    assert abs(plantnbv.voxel_entropy(0.7) - 0.8812908992306927) < 1e-12
    with pytest.raises(ValueError):
        plantnbv.voxel_entropy(1.5)


def test_occupancy_map_updates():
    m = plantnbv.OccupancyMap(resolution=0.003)
    point = np.array([[0.0015, 0.0015, 0.0015]])
    m.insert_cloud((0.0015, 0.0015, 0.0015), point, 1.0)
    assert abs(m.occupancy(0, 0, 0) - 0.7) < 1e-12
    assert m.occupancy(5, 5, 5) == 0.5  # unknown
    cloud = m.export_occupied_cloud()
    assert cloud.shape == (1, 3)
    assert m.dump().startswith("resolution")


def test_traverse_segment_axis_aligned():
    m = plantnbv.OccupancyMap(resolution=0.003)
    voxels = m.traverse_segment((0.0005, 0.0005, 0.0005), (0.0095, 0.0005, 0.0005))
    assert voxels == [(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)]


def test_plant_generation_and_sensor_pipeline():
    mesh, meta = plantnbv.generate_plant(growth_stage=7, leaf_node_count=7, rng_seed=3)
    assert mesh.triangle_count > 100
    assert meta.leaf_node_centers().shape == (7, 3)

    index = plantnbv.BoundingVolumeIndex(mesh)
    cam = plantnbv.CameraModel(width=96, height=72)
    v0 = plantnbv.look_at((0.646, 0.353, 1.383), (1.0, 0.0, 1.383))
    depth = plantnbv.render_depth(index, cam, v0)
    assert depth.shape == (72, 96)
    assert np.isfinite(depth).any()

    cloud = plantnbv.depth_to_cloud(depth, cam, v0)
    assert cloud.shape[0] == np.isfinite(depth).sum()

    m = plantnbv.OccupancyMap(resolution=0.006)
    m.insert_cloud(v0.position, cloud, cam.max_range)
    report = plantnbv.expected_gain(
        m,
        cam,
        v0,
        roi_name="whole_plant",
        roi_boxes=[((1.0, 0.0, 1.15), (0.3, 0.3, 0.7))],
        nu=12,
        nv=9,
        raycast_range=0.75,
    )
    assert report.gain > 0.0
    assert report.roi_voxel_count <= report.visible_voxel_count


def test_planner_helpers():
    sector = plantnbv.CylindricalSector()
    candidates = plantnbv.sample_candidates(sector, samples_per_cell=3, seed=5)
    assert len(candidates) == 27
    for view in candidates:
        x, y, z = view.position
        assert math.hypot(x - 1.0, y - 0.0) == pytest.approx(0.4, abs=1e-9)

    pattern = plantnbv.predefined_sequence(sector, 1, 10)
    assert pattern[9].position == pattern[0].position

    assert plantnbv.select_next_view(candidates, [0.0] * 26 + [3.0]) == 26


def test_metrics():
    rng = np.random.default_rng(0)
    r = rng.random((120, 3))
    assert plantnbv.chamfer_distance(r, r) == 0.0
    p, rec, f1 = plantnbv.f1_score(r, r, 0.01)
    assert (p, rec, f1) == (1.0, 1.0, 1.0)
    d = plantnbv.chamfer_distance(np.array([[0.0, 0, 0]]), np.array([[0.0, 0, 1.0]]))
    assert d == pytest.approx(2.0, abs=1e-15)

    trimmed = plantnbv.trim_cloud(
        np.array([[0.0, 0, 0], [5.0, 5, 5]]),
        roi_name="box",
        roi_boxes=[((0.0, 0.0, 0.0), (1.0, 1.0, 1.0))],
    )
    assert trimmed.shape == (1, 3)


def test_mini_experiment(tmp_path):
    config = json.loads(plantnbv.default_config_json())
    config["plant_seeds"] = [1]
    config["orientations_deg"] = [0.0]
    config["planners"] = ["random"]
    config["max_views"] = 2
    config["workers"] = 1
    config["camera"]["image_width"] = 64
    config["camera"]["image_height"] = 48
    config["map"]["resolution"] = 0.008
    config["metrics"]["distance_threshold"] = 0.008
    config["ground_truth"]["voxel_size"] = 0.008
    config["ground_truth"]["samples_per_m2"] = 2e5
    config["gain"]["ray_grid"] = [8, 6]
    config["output_dir"] = str(tmp_path / "out")
    cells = plantnbv.run_experiment_json(json.dumps(config))
    assert len(cells) == 3  # one planner x three attention targets
    for cell in cells:
        assert cell["n_trials"] == 1
        assert len(cell["mean_f1"]) == 2
    assert (tmp_path / "out" / "summary.csv").exists()
    assert (tmp_path / "out" / "trials.csv").exists()


def test_config_round_trip_matches_table_defaults():
    config = json.loads(plantnbv.paper_replica_config_json())
    assert len(config["plant_seeds"]) * len(config["orientations_deg"]) == 120
    assert config["map"]["resolution"] == 0.003
    assert config["map"]["clamp_min"] == 0.12
    assert config["map"]["clamp_max"] == 0.97
    assert config["sector"]["radius"] == 0.4
    assert config["sector"]["height"] == 0.7
    assert config["sector"]["sector_angle_deg"] == 90.0
    assert config["max_views"] == 10
