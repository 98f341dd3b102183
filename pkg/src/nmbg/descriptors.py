"""View-dependent vertex descriptors and feature-image assembly.

Each vertex carries 9 spherical-harmonic coefficient vectors (bands 0-2) of
dimension 8.  Rasterized features contract those coefficients with the real
SH basis evaluated along each pixel's viewing ray.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange
from .geometry import Camera, TriangleMesh, pixel_center_directions
from .rasterizer import EMPTY, MeshFragmentBuffer, PointFragmentBuffer

N_COEFFS = 9
FEATURE_DIM = 8

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2_XY = 1.0925484305920792
SH_C2_ZZ = 0.31539156525252005
SH_C2_XX_YY = 0.5462742152960396

# (l, m) ordering of the coefficient axis
SH_ORDER = ((0, 0), (1, -1), (1, 0), (1, 1), (2, -2), (2, -1), (2, 0), (2, 1), (2, 2))


@dataclass
class DescriptorSet:
    data: np.ndarray  # (N, 9, 8)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[1:] != (N_COEFFS, FEATURE_DIM):
            raise DimensionMismatch(f"descriptor tensor must be (N, 9, 8), got {self.data.shape}")

    def __len__(self):
        return self.data.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "DescriptorSet":
        return cls(np.zeros((n, N_COEFFS, FEATURE_DIM)))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, std: float = 0.01) -> "DescriptorSet":
        return cls(rng.normal(0.0, std, size=(n, N_COEFFS, FEATURE_DIM)))


@dataclass
class FeatureImage:
    data: np.ndarray  # (H, W, C)
    mask: np.ndarray  # (H, W) bool

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


def sh_basis(dirs) -> np.ndarray:
    """Real SH basis up to band 2 for unit directions; shape ``(..., 9)``."""
    d = np.asarray(dirs, dtype=np.float64)
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    return np.stack(
        [
            np.full_like(x, SH_C0),
            SH_C1 * y,
            SH_C1 * z,
            SH_C1 * x,
            SH_C2_XY * x * y,
            SH_C2_XY * y * z,
            SH_C2_ZZ * (3.0 * z * z - 1.0),
            SH_C2_XY * x * z,
            SH_C2_XX_YY * (x * x - y * y),
        ],
        axis=-1,
    )


def pixel_basis(cam: Camera) -> np.ndarray:
    """SH basis along every pixel-centre ray, shape ``(H, W, 9)``."""
    return sh_basis(pixel_center_directions(cam))


def _rows(ids: np.ndarray, vertex_map, n_desc: int) -> np.ndarray:
    if vertex_map is not None:
        vertex_map = np.asarray(vertex_map)
        if ids.size and ids.max() >= len(vertex_map):
            raise IndexOutOfRange("fragment references a vertex outside the vertex map")
        ids = vertex_map[ids]
    if ids.size and (ids.min() < 0 or ids.max() >= n_desc):
        raise IndexOutOfRange("fragment references a vertex with no descriptor")
    return ids


def _check_basis(basis, buf, cam):
    if basis is None:
        basis = pixel_basis(cam)
    if basis.shape[:2] != buf.index.shape:
        raise DimensionMismatch("basis and fragment buffer sizes differ")
    return basis


def eval_point_features(buf: PointFragmentBuffer, desc: DescriptorSet, cam: Camera,
                        vertex_map=None, basis=None) -> FeatureImage:
    basis = _check_basis(basis, buf, cam)
    mask = buf.index != EMPTY
    out = np.zeros(buf.index.shape + (FEATURE_DIM,))
    ids = _rows(buf.index[mask], vertex_map, len(desc))
    contracted = np.einsum("pk,pkc->pc", basis[mask], desc.data[ids])
    out[mask] = buf.weight[mask][:, None] * contracted
    return FeatureImage(out, mask)


def eval_mesh_features(buf: MeshFragmentBuffer, mesh: TriangleMesh, desc: DescriptorSet, cam: Camera,
                       vertex_map=None, basis=None) -> FeatureImage:
    basis = _check_basis(basis, buf, cam)
    mask = buf.index != EMPTY
    out = np.zeros(buf.index.shape + (FEATURE_DIM,))
    faces = buf.index[mask]
    if faces.size and faces.max() >= mesh.n_faces:
        raise IndexOutOfRange("fragment references a missing face")
    ids = _rows(mesh.faces[faces], vertex_map, len(desc))  # (P, 3)
    coeff = np.einsum("pv,pvkc->pkc", buf.bary[mask], desc.data[ids])
    out[mask] = np.einsum("pk,pkc->pc", basis[mask], coeff)
    return FeatureImage(out, mask)


def concat_features(pt: FeatureImage, mesh: FeatureImage) -> FeatureImage:
    """Stack point and mesh features, then both occupancy masks (18 channels)."""
    if pt.data.shape[:2] != mesh.data.shape[:2]:
        raise DimensionMismatch("feature images differ in size")
    data = np.concatenate(
        [pt.data, mesh.data, pt.mask[..., None].astype(np.float64), mesh.mask[..., None].astype(np.float64)],
        axis=-1,
    )
    return FeatureImage(data, pt.mask | mesh.mask)
