"""
Points versus triangles
=======================

The same cube is rasterized twice: once as a cloud of its vertices splatted
with a small radius, once as a triangle mesh.  The mesh covers every pixel the
surface projects to, while the splats leave holes between vertices.
"""

# %%
# Build the cube and a camera looking at it.
import numpy as np

from nmbg.io import write_png
from nmbg.rasterizer import EMPTY, rasterize_mesh, rasterize_points
from nmbg.synthetic import cube_mesh, ring_cameras

cube = cube_mesh(0.5, 9)
cam = ring_cameras(12, size=128)[1]
print(f"{cube.n_vertices} vertices, {cube.n_faces} faces")

# %%
# Rasterize both ways.  Each buffer stores, per pixel, the winning primitive
# and its depth; EMPTY marks uncovered pixels.
points = rasterize_points(cube.vertices, cam)
mesh = rasterize_mesh(cube, cam)
n_pt = (points.index != EMPTY).sum()
n_mesh = (mesh.index != EMPTY).sum()
print(f"occupied pixels: points {n_pt}, mesh {n_mesh}")

# %%
# Save occupancy and a depth visualization side by side.
def depth_image(depth, mask):
    img = np.zeros(depth.shape + (3,))
    if mask.any():
        d = depth[mask]
        img[mask] = (1 - (depth[mask] - d.min()) / max(np.ptp(d), 1e-9))[:, None] * 0.8 + 0.2
    return img


side = np.concatenate([depth_image(points.depth, points.index != EMPTY),
                       depth_image(mesh.depth, mesh.index != EMPTY)], axis=1)
write_png("rasterization_points_vs_mesh.png", side)

# %%
# The barycentric coordinates stored by the mesh buffer sum to one and can be
# shown directly as colors.
bary = np.where((mesh.index != EMPTY)[..., None], mesh.bary, 0.0)
write_png("rasterization_barycentrics.png", bary)
