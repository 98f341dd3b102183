"""Point and mesh rasterization into single-fragment buffers.

Both rasterizers keep exactly one fragment per pixel: the candidate with the
smallest camera-space depth, ties going to the smaller primitive index.  The
production paths work tile by tile with bounding-box culling; the
``oracle_*`` functions are plain z-buffer loops kept as ground truth.

Pixel ``(u, v)`` is column ``u``, row ``v``; its centre sits at continuous
pixel coordinates ``(u + 0.5, v + 0.5)``.  Buffers are stored as ``(H, W)``
arrays and ``EMPTY`` (-1) marks pixels without a fragment.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import DEPTH_EPS, Camera, TriangleMesh, project_points

EMPTY = -1
DEFAULT_TILE = 16
POINT_RADIUS = 0.006
BARY_EPS = 1e-9
T_EPS = 1e-9
_BBOX_MARGIN = 1e-3  # pixels; culling only, never decides coverage


@dataclass
class PointFragmentBuffer:
    index: np.ndarray  # (H, W) int64
    weight: np.ndarray  # (H, W) float64
    depth: np.ndarray  # (H, W) float64

    @property
    def height(self) -> int:
        return self.index.shape[0]

    @property
    def width(self) -> int:
        return self.index.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return self.index != EMPTY

    @classmethod
    def empty(cls, width: int, height: int) -> "PointFragmentBuffer":
        return cls(
            np.full((height, width), EMPTY, dtype=np.int64),
            np.zeros((height, width)),
            np.zeros((height, width)),
        )


@dataclass
class MeshFragmentBuffer:
    index: np.ndarray  # (H, W) int64
    bary: np.ndarray  # (H, W, 3) float64
    depth: np.ndarray  # (H, W) float64

    @property
    def height(self) -> int:
        return self.index.shape[0]

    @property
    def width(self) -> int:
        return self.index.shape[1]

    @property
    def mask(self) -> np.ndarray:
        return self.index != EMPTY

    @classmethod
    def empty(cls, width: int, height: int) -> "MeshFragmentBuffer":
        return cls(
            np.full((height, width), EMPTY, dtype=np.int64),
            np.zeros((height, width, 3)),
            np.zeros((height, width)),
        )


def ndc_scale(width: int, height: int) -> float:
    """NDC units per pixel; the shorter image side spans [-1, 1]."""
    return 2.0 / min(width, height)


def _to_ndc(x, y, width: int, height: int):
    s = ndc_scale(width, height)
    return (x - 0.5 * width) * s, (y - 0.5 * height) * s


def _tiles(width: int, height: int, tile: int):
    for y0 in range(0, height, tile):
        for x0 in range(0, width, tile):
            yield x0, y0, min(x0 + tile, width), min(y0 + tile, height)


def _run_tiles(fn, width, height, tile, workers):
    tiles = list(_tiles(width, height, tile))
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fn, tiles))
    else:
        for t in tiles:
            fn(t)


def _point_d2(pu, pv, cu, cv, width, height):
    """Squared NDC distance between projections and pixel centres (broadcasting)."""
    px, py = _to_ndc(pu, pv, width, height)
    qx, qy = _to_ndc(cu, cv, width, height)
    dx = px - qx
    dy = py - qy
    return dx * dx + dy * dy


def rasterize_points(points, cam: Camera, radius: float = POINT_RADIUS, out_size=None,
                     tile_size: int = DEFAULT_TILE, workers: int = 1) -> PointFragmentBuffer:
    """Splat points with an NDC-space ``radius`` and keep the nearest per pixel."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    width, height = out_size if out_size is not None else cam.size
    buf = PointFragmentBuffer.empty(width, height)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if not len(pts):
        return buf
    u, v, z, ok = project_points(pts, cam)
    ids = np.flatnonzero(ok)
    u, v, z = u[ids], v[ids], z[ids]
    r2 = radius * radius
    r_px = radius / ndc_scale(width, height) + _BBOX_MARGIN

    def work(t):
        x0, y0, x1, y1 = t
        near = ((u >= x0 + 0.5 - r_px) & (u <= x1 - 0.5 + r_px)
                & (v >= y0 + 0.5 - r_px) & (v <= y1 - 0.5 + r_px))
        sel = np.flatnonzero(near)
        if not len(sel):
            return
        yy, xx = np.mgrid[y0:y1, x0:x1]
        cu = (xx.ravel() + 0.5)[:, None]
        cv = (yy.ravel() + 0.5)[:, None]
        d2 = _point_d2(u[sel][None, :], v[sel][None, :], cu, cv, width, height)
        cand = d2 <= r2
        zz = np.where(cand, z[sel][None, :], np.inf)
        best = np.argmin(zz, axis=1)  # first minimum -> smallest index
        rows = np.arange(len(best))
        hit = cand[rows, best]
        if not hit.any():
            return
        pix_y, pix_x = yy.ravel()[hit], xx.ravel()[hit]
        b = best[hit]
        buf.index[pix_y, pix_x] = ids[sel[b]]
        buf.weight[pix_y, pix_x] = np.maximum(0.0, 1.0 - d2[rows[hit], b] / r2)
        buf.depth[pix_y, pix_x] = z[sel[b]]

    _run_tiles(work, width, height, tile_size, workers)
    return buf


def oracle_rasterize_points(points, cam: Camera, radius: float = POINT_RADIUS, out_size=None) -> PointFragmentBuffer:
    """Reference z-buffer splatting: every point tested against every pixel."""
    width, height = out_size if out_size is not None else cam.size
    buf = PointFragmentBuffer.empty(width, height)
    zbuf = np.full((height, width), np.inf)
    yy, xx = np.mgrid[0:height, 0:width]
    cu, cv = xx + 0.5, yy + 0.5
    r2 = radius * radius
    u, v, z, ok = project_points(points, cam)
    for i in range(len(z)):
        if not ok[i]:
            continue
        d2 = _point_d2(u[i], v[i], cu, cv, width, height)
        win = (d2 <= r2) & (z[i] < zbuf)
        zbuf[win] = z[i]
        buf.index[win] = i
        buf.weight[win] = np.maximum(0.0, 1.0 - d2[win] / r2)
        buf.depth[win] = z[i]
    return buf


def _cross(a, b):
    ax, ay, az = a[..., 0], a[..., 1], a[..., 2]
    bx, by, bz = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx], axis=-1)


def _dot(a, b):
    # explicit sum keeps results independent of array shape (no BLAS reordering)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] + a[..., 2] * b[..., 2]


def _moller_trumbore(origin, dirs, v0, v1, v2):
    """Broadcasting ray/triangle test.

    Returns ``(hit, t, alpha, beta, gamma)`` with barycentrics ordered as the
    triangle vertices.  Degenerate triangles and rays parallel to the plane
    never hit.
    """
    e1 = v1 - v0
    e2 = v2 - v0
    n = _cross(e1, e2)
    n_len = np.sqrt(_dot(n, n))
    pvec = _cross(dirs, e2)
    det = _dot(e1, pvec)
    ok = (0.5 * n_len >= 1e-18) & (np.abs(det) > 1e-12 * n_len)
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    b1 = _dot(tvec, pvec) * inv
    qvec = _cross(tvec, e1)
    b2 = _dot(dirs, qvec) * inv
    t = _dot(e2, qvec) * inv
    a = 1.0 - b1 - b2
    hit = ok & (b1 >= -BARY_EPS) & (b2 >= -BARY_EPS) & (a >= -BARY_EPS) & (t > T_EPS)
    return hit, t, a, b1, b2


def ray_triangle_intersect(origin, direction, v0, v1, v2):
    """Single ray/triangle intersection; ``(t, alpha, beta, gamma)`` or ``None``."""
    args = [np.asarray(x, dtype=np.float64) for x in (origin, direction, v0, v1, v2)]
    hit, t, a, b, c = _moller_trumbore(*args)
    if not hit:
        return None
    return float(t), float(a), float(b), float(c)


def _camera_rays(xx, yy, cam: Camera) -> np.ndarray:
    x = (xx + 0.5 - cam.cx) / cam.fx
    y = (yy + 0.5 - cam.cy) / cam.fy
    d = np.stack([x, y, np.ones_like(x)], axis=-1)
    return d / np.sqrt(_dot(d, d))[..., None]


def rasterize_mesh(mesh: TriangleMesh, cam: Camera, out_size=None,
                   tile_size: int = DEFAULT_TILE, workers: int = 1) -> MeshFragmentBuffer:
    """Ray-cast every pixel centre against the mesh and keep the nearest face."""
    width, height = out_size if out_size is not None else cam.size
    buf = MeshFragmentBuffer.empty(width, height)
    if not mesh.n_faces:
        return buf
    vc = mesh.vertices @ cam.R.T + cam.T
    tri = vc[mesh.faces]  # (F, 3, 3) camera space
    zs = tri[..., 2]
    front = zs > DEPTH_EPS
    keep = np.flatnonzero(front.any(axis=1))
    if not len(keep):
        return buf
    tri = tri[keep]
    all_front = front[keep].all(axis=1)
    # projected bounding boxes; faces crossing the camera plane go everywhere
    safe = np.where(all_front[:, None], tri[..., 2], 1.0)
    pu = cam.fx * tri[..., 0] / safe + cam.cx
    pv = cam.fy * tri[..., 1] / safe + cam.cy
    umin = np.where(all_front, pu.min(axis=1), -np.inf) - _BBOX_MARGIN
    umax = np.where(all_front, pu.max(axis=1), np.inf) + _BBOX_MARGIN
    vmin = np.where(all_front, pv.min(axis=1), -np.inf) - _BBOX_MARGIN
    vmax = np.where(all_front, pv.max(axis=1), np.inf) + _BBOX_MARGIN
    origin = np.zeros(3)

    def work(t):
        x0, y0, x1, y1 = t
        near = (umax >= x0 + 0.5) & (umin <= x1 - 0.5) & (vmax >= y0 + 0.5) & (vmin <= y1 - 0.5)
        sel = np.flatnonzero(near)
        if not len(sel):
            return
        yy, xx = np.mgrid[y0:y1, x0:x1]
        dirs = _camera_rays(xx.ravel().astype(np.float64), yy.ravel().astype(np.float64), cam)
        tr = tri[sel]
        hit, tt, a, b, c = _moller_trumbore(origin, dirs[:, None, :], tr[None, :, 0], tr[None, :, 1], tr[None, :, 2])
        depth = tt * dirs[:, 2:3]
        zz = np.where(hit, depth, np.inf)
        best = np.argmin(zz, axis=1)
        rows = np.arange(len(best))
        got = hit[rows, best]
        if not got.any():
            return
        r, k = rows[got], best[got]
        py, px = yy.ravel()[got], xx.ravel()[got]
        buf.index[py, px] = keep[sel[k]]
        buf.bary[py, px] = np.stack([a[r, k], b[r, k], c[r, k]], axis=-1)
        buf.depth[py, px] = depth[r, k]

    _run_tiles(work, width, height, tile_size, workers)
    return buf


def oracle_rasterize_mesh(mesh: TriangleMesh, cam: Camera, out_size=None) -> MeshFragmentBuffer:
    """Reference mesh rasterizer: plane intersection plus signed-area tests."""
    width, height = out_size if out_size is not None else cam.size
    buf = MeshFragmentBuffer.empty(width, height)
    zbuf = np.full((height, width), np.inf)
    yy, xx = np.mgrid[0:height, 0:width]
    d = np.stack([(xx + 0.5 - cam.cx) / cam.fx, (yy + 0.5 - cam.cy) / cam.fy, np.ones(xx.shape)], axis=-1)
    for f, face in enumerate(mesh.faces):
        p0, p1, p2 = (cam.R @ mesh.vertices[i] + cam.T for i in face)
        n = np.cross(p1 - p0, p2 - p0)
        nn = n @ n
        if 0.5 * np.sqrt(nn) < 1e-18:
            continue
        denom = d @ n
        parallel = np.abs(denom) <= 1e-12 * np.sqrt(nn) * np.linalg.norm(d, axis=-1)
        z = np.where(parallel, -1.0, (n @ p0) / np.where(parallel, 1.0, denom))
        hit = d * z[..., None]
        alpha = np.cross(p1 - hit, p2 - hit) @ n / nn
        beta = np.cross(p2 - hit, p0 - hit) @ n / nn
        gamma = np.cross(p0 - hit, p1 - hit) @ n / nn
        inside = (alpha >= -BARY_EPS) & (beta >= -BARY_EPS) & (gamma >= -BARY_EPS)
        win = ~parallel & inside & (z > T_EPS) & (z < zbuf)
        zbuf[win] = z[win]
        buf.index[win] = f
        buf.bary[win] = np.stack([alpha, beta, gamma], axis=-1)[win]
        buf.depth[win] = z[win]
    return buf
