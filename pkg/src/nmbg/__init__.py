"""View-dependent vertex descriptors rendered through point and mesh rasterization.

Learnable spherical-harmonic vertex descriptors are rasterized through a
point splatter and a mesh ray-caster, split into foreground/background
branches, decoded by a small render head and fitted to posed images.
"""

from .descriptors import DescriptorSet, FeatureImage, concat_features, eval_mesh_features, eval_point_features, sh_basis
from .errors import NMBGError
from .geometry import (
    Camera,
    CameraStats,
    SceneSplit,
    TriangleMesh,
    compute_camera_stats,
    compute_scene_split,
    look_at,
    partition_mesh,
    pixel_ray_direction,
    project_point,
    sample_augmented_camera,
)
from .rasterizer import (
    EMPTY,
    MeshFragmentBuffer,
    PointFragmentBuffer,
    oracle_rasterize_mesh,
    oracle_rasterize_points,
    rasterize_mesh,
    rasterize_points,
    ray_triangle_intersect,
)

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "CameraStats",
    "DescriptorSet",
    "EMPTY",
    "FeatureImage",
    "MeshFragmentBuffer",
    "NMBGError",
    "PointFragmentBuffer",
    "SceneSplit",
    "TriangleMesh",
    "compute_camera_stats",
    "compute_scene_split",
    "concat_features",
    "eval_mesh_features",
    "eval_point_features",
    "look_at",
    "oracle_rasterize_mesh",
    "oracle_rasterize_points",
    "partition_mesh",
    "pixel_ray_direction",
    "project_point",
    "rasterize_mesh",
    "rasterize_points",
    "ray_triangle_intersect",
    "sample_augmented_camera",
    "sh_basis",
]
