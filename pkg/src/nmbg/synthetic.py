"""Procedural scenes with known ground truth, used by tests and demos.

The scenes are small on purpose: a subdivided cube (about 500 vertices) in
front of a coarse background box, watched by a ring of inward-looking
cameras.  Target images come from ray-casting the same geometry with a
per-vertex albedo and, optionally, a view-dependent highlight.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diffrender.fit import TrainingView
from .geometry import Camera, TriangleMesh, look_at
from .rasterizer import EMPTY, rasterize_mesh

UP = np.array([0.0, 1.0, 0.0])


def _grid_cube(half: float, n: int):
    """Closed cube surface with each face split into ``n x n`` quads."""
    verts: dict[tuple, int] = {}
    vlist, faces = [], []

    def vid(p):
        key = tuple(np.round(p, 9))
        if key not in verts:
            verts[key] = len(vlist)
            vlist.append(p)
        return verts[key]

    ticks = np.linspace(-half, half, n + 1)
    for axis in range(3):
        for sign in (-1.0, 1.0):
            a, b = [k for k in range(3) if k != axis]
            for i in range(n):
                for j in range(n):
                    quad = []
                    for di, dj in ((0, 0), (1, 0), (1, 1), (0, 1)):
                        p = np.zeros(3)
                        p[axis] = sign * half
                        p[a] = ticks[i + di]
                        p[b] = ticks[j + dj]
                        quad.append(vid(p))
                    faces.append((quad[0], quad[1], quad[2]))
                    faces.append((quad[0], quad[2], quad[3]))
    return np.array(vlist), np.array(faces, dtype=np.int64)


def cube_mesh(half: float = 0.5, subdiv: int = 9) -> TriangleMesh:
    v, f = _grid_cube(half, subdiv)
    return TriangleMesh(v, f)


def merge_meshes(*meshes: TriangleMesh) -> TriangleMesh:
    verts, faces, off = [], [], 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + off)
        off += m.n_vertices
    return TriangleMesh(np.concatenate(verts), np.concatenate(faces))


def albedo(points: np.ndarray) -> np.ndarray:
    """Smooth RGB texture in [0.15, 0.85] defined on world positions."""
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    r = 0.5 + 0.3 * np.sin(2.5 * x + 1.0) * np.cos(1.5 * y)
    g = 0.5 + 0.3 * np.sin(2.0 * y - 0.5 * z)
    b = 0.5 + 0.3 * np.cos(2.2 * z + 0.7 * x)
    return np.stack([r, g, b], axis=1)


def background_albedo(points: np.ndarray) -> np.ndarray:
    """Gentle vertical gradient for the surrounding box."""
    t = np.clip(points[:, 1] / 12.0 + 0.5, 0.0, 1.0)
    return np.stack([0.25 + 0.1 * t, 0.3 + 0.1 * t, 0.4 + 0.1 * t], axis=1)


def ring_cameras(n: int = 12, distance: float = 2.6, size: int = 64, fov_deg: float = 45.0,
                 elevations=(-0.35, 0.35), target=(0.0, 0.0, 0.0)) -> list[Camera]:
    """Cameras on a ring around ``target`` with alternating elevation (radians)."""
    f = 0.5 * size / np.tan(np.radians(fov_deg) / 2)
    cams = []
    for i in range(n):
        az = 2 * np.pi * i / n
        el = elevations[i % len(elevations)]
        pos = np.asarray(target) + distance * np.array(
            [np.cos(el) * np.sin(az), np.sin(el), np.cos(el) * np.cos(az)]
        )
        R = look_at(pos, target, UP)
        cams.append(Camera(f, f, size / 2, size / 2, R, -R @ pos, size, size, id=i + 1))
    return cams


@dataclass
class SyntheticScene:
    mesh: TriangleMesh
    colors: np.ndarray  # (N, 3) per-vertex albedo
    cameras: list
    specular: float = 0.0
    shininess: float = 4.0
    light: np.ndarray = None

    def render(self, cam: Camera) -> np.ndarray:
        return render_ground_truth(self, cam)

    def views(self) -> list[TrainingView]:
        return [TrainingView(c, self.render(c)) for c in self.cameras]


def render_ground_truth(scene: SyntheticScene, cam: Camera) -> np.ndarray:
    """Ray-cast target image: interpolated albedo plus an optional Phong lobe."""
    buf = rasterize_mesh(scene.mesh, cam)
    img = np.zeros((cam.height, cam.width, 3))
    m = buf.index != EMPTY
    faces = scene.mesh.faces[buf.index[m]]
    img[m] = np.einsum("pv,pvc->pc", buf.bary[m], scene.colors[faces])
    if scene.specular > 0:
        tri = scene.mesh.vertices[faces]
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        n /= np.linalg.norm(n, axis=1, keepdims=True)
        v, u = np.nonzero(m)
        x = (u + 0.5 - cam.cx) / cam.fx
        y = (v + 0.5 - cam.cy) / cam.fy
        d = np.stack([x, y, np.ones_like(x)], axis=1) @ cam.R
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        n = np.where(((n * d).sum(axis=1) > 0)[:, None], -n, n)
        refl = d - 2 * (d * n).sum(axis=1, keepdims=True) * n
        lobe = np.maximum((refl * scene.light).sum(axis=1), 0.0) ** scene.shininess
        img[m] += scene.specular * lobe[:, None]
    return np.clip(img, 0.0, 1.0)


def background_box(half: float = 6.0, subdiv: int = 4) -> TriangleMesh:
    v, f = _grid_cube(half, subdiv)
    return TriangleMesh(v, f)


def textured_cube_scene(n_views: int = 12, size: int = 64, subdiv: int = 9) -> SyntheticScene:
    """Lambertian textured cube inside a background box."""
    cube = cube_mesh(0.5, subdiv)
    box = background_box()
    mesh = merge_meshes(cube, box)
    colors = np.concatenate([albedo(cube.vertices), background_albedo(box.vertices)])
    return SyntheticScene(mesh, colors, ring_cameras(n_views, size=size))


def specular_cube_scene(n_views: int = 12, size: int = 64, subdiv: int = 9,
                        specular: float = 0.5, shininess: float = 4.0) -> SyntheticScene:
    """Same layout as :func:`textured_cube_scene` with a view-dependent highlight on every surface."""
    scene = textured_cube_scene(n_views, size, subdiv)
    light = np.array([0.4, 0.8, 0.45])
    scene.specular = specular
    scene.shininess = shininess
    scene.light = light / np.linalg.norm(light)
    return scene


def write_scene(directory, scene: SyntheticScene, split=None, up=None) -> Path:
    """Export a synthetic scene as PLY + COLMAP text + PNGs + manifest.

    Returns the manifest path.
    """
    from .io.colmap import write_colmap_text
    from .io.manifest import write_manifest
    from .io.ply import write_ply
    from .io.png import write_png

    root = Path(directory)
    (root / "sparse").mkdir(parents=True, exist_ok=True)
    (root / "images").mkdir(exist_ok=True)
    write_ply(root / "mesh.ply", scene.mesh)
    names = [f"{c.id:04d}.png" for c in scene.cameras]
    write_colmap_text(root / "sparse" / "cameras.txt", root / "sparse" / "images.txt", scene.cameras, names)
    for cam, name in zip(scene.cameras, names):
        write_png(root / "images" / name, scene.render(cam))
    manifest = root / "scene.json"
    write_manifest(manifest, images={c.id: n for c, n in zip(scene.cameras, names)}, split=split, up=up)
    return manifest
