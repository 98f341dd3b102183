"""Scene manifest: a small JSON file tying mesh, cameras and images together.

Example::

    {
      "mesh": "mesh.ply",
      "cameras": "sparse",            # directory with cameras.txt + images.txt
      "images_dir": "images",
      "images": {"1": "0001.png"},    # optional; image id -> file name
      "split": {"center": [0, 0, 0], "radius": 2.5},   # optional override
      "up": [0, 1, 0]                 # optional scene up axis
    }

Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..diffrender.fit import TrainingView
from ..errors import IoError, ParseError
from ..geometry import SceneSplit, TriangleMesh, compute_scene_split
from .colmap import image_names, load_colmap_cameras
from .ply import load_ply
from .png import read_png


@dataclass
class SceneManifest:
    mesh_path: Path
    cameras_path: Path
    images_dir: Path
    images: dict = field(default_factory=dict)  # image id -> file name
    split: SceneSplit | None = None
    up: np.ndarray | None = None

    @property
    def cameras_txt(self) -> Path:
        return self.cameras_path / "cameras.txt"

    @property
    def images_txt(self) -> Path:
        return self.cameras_path / "images.txt"


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r} in manifest")
        out[k] = v
    return out


def _vec3(value, what):
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ParseError(f"{what} must be three numbers") from None
    if arr.shape != (3,) or not np.isfinite(arr).all():
        raise ParseError(f"{what} must be three finite numbers")
    return arr


def parse_manifest(doc: dict, base: Path) -> SceneManifest:
    if not isinstance(doc, dict):
        raise ParseError("manifest must be a JSON object")
    for key in ("mesh", "cameras", "images_dir"):
        if not isinstance(doc.get(key), str):
            raise ParseError(f"manifest field {key!r} missing or not a string")
    m = SceneManifest(base / doc["mesh"], base / doc["cameras"], base / doc["images_dir"])
    images = doc.get("images", {})
    if not isinstance(images, dict):
        raise ParseError("manifest 'images' must be an object")
    for k, v in images.items():
        try:
            iid = int(k)
        except ValueError:
            raise ParseError(f"image id {k!r} is not an integer") from None
        if not isinstance(v, str):
            raise ParseError(f"image entry for {k!r} must be a file name")
        if iid in m.images:
            raise ParseError(f"duplicate image id {iid}")
        m.images[iid] = v
    if doc.get("split") is not None:
        s = doc["split"]
        if not isinstance(s, dict) or "center" not in s or "radius" not in s:
            raise ParseError("split override needs 'center' and 'radius'")
        r = s["radius"]
        if not isinstance(r, (int, float)) or not np.isfinite(r) or r <= 0:
            raise ParseError("split radius must be a positive number")
        m.split = SceneSplit(_vec3(s["center"], "split center"), float(r))
    if doc.get("up") is not None:
        up = _vec3(doc["up"], "up axis")
        if np.linalg.norm(up) < 1e-12:
            raise ParseError("up axis must be non-zero")
        m.up = up / np.linalg.norm(up)
    return m


def load_manifest(path) -> SceneManifest:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read manifest {path}: {exc}") from exc
    try:
        doc = json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise ParseError(f"manifest is not valid JSON: {exc}") from None
    m = parse_manifest(doc, path.parent)
    if not m.images and m.images_txt.exists():
        m.images = image_names(m.images_txt)
    for p in (m.mesh_path, m.cameras_txt, m.images_txt):
        if not p.exists():
            raise IoError(f"missing file {p}")
    for name in m.images.values():
        if not (m.images_dir / name).exists():
            raise IoError(f"missing image {m.images_dir / name}")
    return m


def write_manifest(path, mesh="mesh.ply", cameras="sparse", images_dir="images", images=None,
                   split: SceneSplit | None = None, up=None) -> None:
    doc = {"mesh": mesh, "cameras": cameras, "images_dir": images_dir}
    if images:
        doc["images"] = {str(k): v for k, v in images.items()}
    if split is not None:
        doc["split"] = {"center": [float(c) for c in split.center], "radius": float(split.radius)}
    if up is not None:
        doc["up"] = [float(c) for c in up]
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


@dataclass
class LoadedScene:
    manifest: SceneManifest
    mesh: TriangleMesh
    cameras: list
    split: SceneSplit

    def camera(self, image_id: int):
        for c in self.cameras:
            if c.id == image_id:
                return c
        raise KeyError(image_id)

    def training_views(self) -> list[TrainingView]:
        views = []
        for cam in self.cameras:
            name = self.manifest.images.get(cam.id)
            if name is not None:
                views.append(TrainingView(cam, read_png(self.manifest.images_dir / name)))
        return views


def load_scene(manifest_path) -> LoadedScene:
    m = load_manifest(manifest_path)
    mesh = load_ply(m.mesh_path)
    cams = load_colmap_cameras(m.cameras_txt, m.images_txt)
    split = m.split if m.split is not None else compute_scene_split(cams)
    return LoadedScene(m, mesh, cams, split)
