"""Cameras, projection, scene splitting and augmented-view sampling.

Poses follow the world-to-camera convention used by COLMAP text exports:
``p_cam = R @ p + T``.  A camera therefore sits at ``-R.T @ T`` in world
space, looks down its +z axis, with +x to the right and +y down the image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLookAt, DegenerateSplit

DEPTH_EPS = 1e-9


@dataclass
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float
    R: np.ndarray
    T: np.ndarray
    width: int
    height: int
    id: int | None = None

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=np.float64).reshape(3, 3)
        self.T = np.asarray(self.T, dtype=np.float64).reshape(3)
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")
        if np.abs(self.R.T @ self.R - np.eye(3)).max() >= 1e-9 or np.linalg.det(self.R) <= 0:
            raise ValueError("R must be a proper rotation")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    @property
    def position(self) -> np.ndarray:
        """Camera centre in world coordinates."""
        return -self.R.T @ self.T

    @property
    def size(self) -> tuple[int, int]:
        return self.width, self.height

    def with_pose(self, R, T) -> "Camera":
        return Camera(self.fx, self.fy, self.cx, self.cy, R, T, self.width, self.height)


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        n = len(self.vertices)
        if self.faces.size:
            if self.faces.min() < 0 or self.faces.max() >= n:
                raise ValueError("face index out of range")
            f = self.faces
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise ValueError("face with repeated vertex")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)


@dataclass
class SubMesh:
    """A piece of a partitioned mesh.

    ``vertex_map[i]`` is the index in the original mesh of submesh vertex
    ``i`` and ``face_map[j]`` the original index of submesh face ``j``.
    """

    mesh: TriangleMesh
    vertex_map: np.ndarray
    face_map: np.ndarray


@dataclass(frozen=True)
class SceneSplit:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("split radius must be positive")


@dataclass(frozen=True)
class CameraStats:
    mean_elevation: float
    std_elevation: float
    up: np.ndarray


def project_points(points, cam: Camera):
    """Vectorised projection; returns ``(u, v, z, in_front)`` arrays.

    ``u`` and ``v`` are NaN where the point is behind the camera.
    """
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    pc = p @ cam.R.T + cam.T
    z = pc[:, 2]
    in_front = z > DEPTH_EPS
    safe_z = np.where(in_front, z, 1.0)
    u = np.where(in_front, cam.fx * pc[:, 0] / safe_z + cam.cx, np.nan)
    v = np.where(in_front, cam.fy * pc[:, 1] / safe_z + cam.cy, np.nan)
    return u, v, z, in_front


def project_point(p, cam: Camera):
    """Project a single world point.

    Returns ``(u, v, z)`` in pixels/camera depth, or ``None`` when the point
    is behind the camera.
    """
    u, v, z, ok = project_points(p, cam)
    if not ok[0]:
        return None
    return float(u[0]), float(v[0]), float(z[0])


def pixel_ray_directions(u, v, cam: Camera) -> np.ndarray:
    """Unit world-space ray directions through pixel coordinates ``(u, v)``."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    x = (u - cam.cx) / cam.fx
    y = (v - cam.cy) / cam.fy
    d_cam = np.stack([x, y, np.ones_like(x)], axis=-1)
    d = d_cam @ cam.R  # row-vector form of R.T @ d
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def pixel_ray_direction(u: float, v: float, cam: Camera) -> np.ndarray:
    return pixel_ray_directions(u, v, cam)


def pixel_center_directions(cam: Camera) -> np.ndarray:
    """Ray directions through every pixel centre, shape ``(H, W, 3)``."""
    v, u = np.mgrid[0 : cam.height, 0 : cam.width].astype(np.float64)
    return pixel_ray_directions(u + 0.5, v + 0.5, cam)


def compute_scene_split(cameras) -> SceneSplit:
    if len(cameras) < 2:
        raise DegenerateSplit("need at least two cameras to split the scene")
    pos = np.stack([c.position for c in cameras])
    center = pos.mean(axis=0)
    far = np.linalg.norm(pos - center, axis=1).max()
    if far < 1e-9:
        raise DegenerateSplit("all cameras coincide")
    return SceneSplit(center, 1.1 * float(far))


def _partition_indices(mesh: TriangleMesh, keep_faces: np.ndarray, keep_loose: np.ndarray) -> SubMesh:
    face_map = np.flatnonzero(keep_faces)
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces[face_map].ravel()] = True
    used |= keep_loose
    vertex_map = np.flatnonzero(used)
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[vertex_map] = np.arange(len(vertex_map))
    sub = TriangleMesh(mesh.vertices[vertex_map], remap[mesh.faces[face_map]])
    return SubMesh(sub, vertex_map, face_map)


def partition_mesh(mesh: TriangleMesh, split: SceneSplit) -> tuple[SubMesh, SubMesh]:
    """Split ``mesh`` into foreground and background pieces.

    A face is foreground when its centroid lies within the split sphere.
    Vertices that belong to no face at all (point clouds) are assigned by
    their own position so they are not lost.
    """
    center = np.asarray(split.center, dtype=np.float64)
    if mesh.n_faces:
        centroids = mesh.vertices[mesh.faces].mean(axis=1)
        fg_faces = np.linalg.norm(centroids - center, axis=1) <= split.radius
    else:
        fg_faces = np.zeros(0, dtype=bool)
    loose = np.ones(mesh.n_vertices, dtype=bool)
    loose[mesh.faces.ravel()] = False
    fg_pts = np.linalg.norm(mesh.vertices - center, axis=1) <= split.radius
    fg = _partition_indices(mesh, fg_faces, loose & fg_pts)
    bg = _partition_indices(mesh, ~fg_faces, loose & ~fg_pts)
    return fg, bg


def look_at(position, target, up) -> np.ndarray:
    """World-to-camera rotation for a camera at ``position`` facing ``target``."""
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    dist = np.linalg.norm(forward)
    if dist < 1e-9:
        raise DegenerateLookAt("position and target coincide")
    forward = forward / dist
    up = np.asarray(up, dtype=np.float64)
    up = up / np.linalg.norm(up)
    if abs(forward @ up) > 1 - 1e-9:
        raise DegenerateLookAt("up axis is parallel to the viewing direction")
    down = -(up - (up @ forward) * forward)
    down /= np.linalg.norm(down)
    right = np.cross(down, forward)
    return np.stack([right, down, forward])


def _pole_basis(up: np.ndarray):
    """Right-handed basis (e1, up, e3) used by the spherical sampler."""
    up = up / np.linalg.norm(up)
    ref = np.array([0.0, 0.0, 1.0])
    if abs(ref @ up) > 0.9:
        ref = np.array([1.0, 0.0, 0.0])
    e3 = ref - (ref @ up) * up
    e3 /= np.linalg.norm(e3)
    e1 = np.cross(up, e3)
    return e1, up, e3


def elevation_angles(cameras, center, up) -> np.ndarray:
    """Polar angle of each camera position about ``up``, measured at ``center``."""
    up = np.asarray(up, dtype=np.float64)
    up = up / np.linalg.norm(up)
    rel = np.stack([c.position for c in cameras]) - np.asarray(center)
    cos = rel @ up / np.linalg.norm(rel, axis=1)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def estimate_up(cameras) -> np.ndarray:
    """Average of the cameras' image-up axes (camera -y) in world space."""
    up = -np.stack([c.R[1] for c in cameras]).sum(axis=0)
    n = np.linalg.norm(up)
    if n < 1e-12:
        return np.array([0.0, 1.0, 0.0])
    return up / n


def compute_camera_stats(cameras, split: SceneSplit, up=None) -> CameraStats:
    up = estimate_up(cameras) if up is None else np.asarray(up, dtype=np.float64)
    up = up / np.linalg.norm(up)
    theta = elevation_angles(cameras, split.center, up)
    return CameraStats(float(theta.mean()), float(theta.std()), up)


def spherical_position(split: SceneSplit, up, radius: float, theta: float, phi: float) -> np.ndarray:
    e1, e2, e3 = _pole_basis(np.asarray(up, dtype=np.float64))
    s = np.sin(theta)
    offset = s * np.sin(phi) * e1 + np.cos(theta) * e2 + s * np.cos(phi) * e3
    return np.asarray(split.center, dtype=np.float64) + radius * offset


def sample_augmented_camera(split: SceneSplit, stats: CameraStats, rng: np.random.Generator):
    """Draw one augmented pose ``(R, T)`` around the foreground sphere."""
    r = rng.uniform(0.6 * split.radius, split.radius)
    phi = rng.uniform(0.0, 2 * np.pi)
    half = 1.5 * stats.std_elevation
    theta = rng.uniform(stats.mean_elevation - half, stats.mean_elevation + half)
    theta = float(np.clip(theta, 1e-4, np.pi - 1e-4))
    pos = spherical_position(split, stats.up, r, theta, phi)
    R = look_at(pos, split.center, stats.up)
    return R, -R @ pos
