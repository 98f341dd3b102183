"""
View-dependent descriptors
==========================

Each vertex stores nine coefficient vectors, one per real spherical harmonic
up to band two.  A pixel's feature is the contraction of the interpolated
coefficients with the basis evaluated along that pixel's viewing ray, so one
descriptor can look different from different directions.
"""

# %%
import numpy as np

from nmbg.descriptors import DescriptorSet, eval_mesh_features, sh_basis
from nmbg.rasterizer import rasterize_mesh
from nmbg.synthetic import cube_mesh, ring_cameras

# %%
# The basis itself: band 0 is constant, bands 1 and 2 vary with direction.
for d in ([0, 0, 1], [1, 0, 0], [0, 1, 0]):
    print(d, np.round(sh_basis(np.array(d, float)), 4))

# %%
# Give every vertex the same descriptor.  With band 0 only, the rendered
# feature is identical from every camera.  Adding a band-1 term makes it
# depend on where the camera is.
cube = cube_mesh(0.5, 4)
cams = ring_cameras(4, size=32)
desc = DescriptorSet.zeros(cube.n_vertices)
desc.data[:, 0, 0] = 1.0


def mean_feature(cam):
    f = eval_mesh_features(rasterize_mesh(cube, cam), cube, desc, cam)
    return float(f.data[f.mask, 0].mean())


print("band 0 only:", [round(mean_feature(c), 4) for c in cams])
desc.data[:, 3, 0] = 1.0  # (l, m) = (1, 1) responds to the ray's x component
print("with band 1:", [round(mean_feature(c), 4) for c in cams])
