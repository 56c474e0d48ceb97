"""Attention-driven next-best-view planning workbench."""

from plantnbv._core import (
    BoundingVolumeIndex,
    CameraModel,
    CylindricalSector,
    GainReport,
    OccupancyMap,
    PlantMetadata,
    TriangleMesh,
    Viewpoint,
    chamfer_distance,
    default_config_json,
    depth_to_cloud,
    expected_gain,
    f1_score,
    generate_plant,
    load_mesh,
    load_ply,
    look_at,
    make_viewpoint,
    paper_replica_config_json,
    predefined_sequence,
    render_depth,
    run_experiment_json,
    sample_candidates,
    sample_ground_truth,
    save_obj,
    save_ply,
    select_next_view,
    trim_cloud,
    voxel_entropy,
)

__all__ = [
    "BoundingVolumeIndex",
    "CameraModel",
    "CylindricalSector",
    "GainReport",
    "OccupancyMap",
    "PlantMetadata",
    "TriangleMesh",
    "Viewpoint",
    "chamfer_distance",
    "default_config_json",
    "depth_to_cloud",
    "expected_gain",
    "f1_score",
    "generate_plant",
    "load_mesh",
    "load_ply",
    "look_at",
    "make_viewpoint",
    "paper_replica_config_json",
    "predefined_sequence",
    "render_depth",
    "run_experiment_json",
    "sample_candidates",
    "sample_ground_truth",
    "save_obj",
    "save_ply",
    "select_next_view",
    "trim_cloud",
    "voxel_entropy",
]
