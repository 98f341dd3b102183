"""Per-scene fitting of vertex descriptors and the render head."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..descriptors import (
    FEATURE_DIM,
    DescriptorSet,
    concat_features,
    eval_mesh_features,
    eval_point_features,
    pixel_basis,
)
from ..errors import DimensionMismatch, IndexOutOfRange, NonFiniteLoss
from ..geometry import Camera, SceneSplit, SubMesh, TriangleMesh, partition_mesh
from ..rasterizer import (
    EMPTY,
    POINT_RADIUS,
    MeshFragmentBuffer,
    PointFragmentBuffer,
    rasterize_mesh,
    rasterize_points,
)
from .adam import AdamState, adam_step
from .head import RenderHeadParams, backward_to_inputs, render_head_forward
from .losses import loss_l1

log = logging.getLogger(__name__)


@dataclass
class FitConfig:
    epochs: int = 100
    lr_descriptors: float = 0.1
    lr_head: float = 1e-4
    seed: int = 0
    loss: str = "l1"
    hidden: int = 16
    point_radius: float = POINT_RADIUS
    descriptor_std: float = 0.01
    max_band: int = 2

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not (self.lr_descriptors > 0 and self.lr_head > 0):
            raise ValueError("learning rates must be positive")
        if self.loss != "l1":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if self.max_band not in (0, 1, 2):
            raise ValueError("max_band must be 0, 1 or 2")


@dataclass
class TrainingView:
    camera: Camera
    image: np.ndarray  # (H, W, 3) in [0, 1]

    def __post_init__(self):
        self.image = np.asarray(self.image, dtype=np.float64)
        if self.image.shape != (self.camera.height, self.camera.width, 3):
            raise DimensionMismatch(
                f"image {self.image.shape} does not match camera {self.camera.width}x{self.camera.height}"
            )


@dataclass
class ViewFragments:
    """Static rasterization of one view; geometry never changes during fitting."""

    camera: Camera
    fg_points: PointFragmentBuffer
    fg_mesh: MeshFragmentBuffer
    bg_points: PointFragmentBuffer
    bg_mesh: MeshFragmentBuffer
    basis: np.ndarray


@dataclass
class SplitScene:
    fg: SubMesh
    bg: SubMesh
    split: SceneSplit

    @classmethod
    def build(cls, mesh: TriangleMesh, split: SceneSplit) -> "SplitScene":
        fg, bg = partition_mesh(mesh, split)
        return cls(fg, bg, split)


@dataclass
class FitResult:
    fg_descriptors: DescriptorSet
    bg_descriptors: DescriptorSet
    head: RenderHeadParams
    loss_trace: list = field(default_factory=list)
    scene: SplitScene | None = None


def rasterize_view(scene: SplitScene, cam: Camera, radius: float = POINT_RADIUS) -> ViewFragments:
    return ViewFragments(
        cam,
        rasterize_points(scene.fg.mesh.vertices, cam, radius),
        rasterize_mesh(scene.fg.mesh, cam),
        rasterize_points(scene.bg.mesh.vertices, cam, radius),
        rasterize_mesh(scene.bg.mesh, cam),
        pixel_basis(cam),
    )


def branch_features(pt_buf, mesh_buf, mesh: TriangleMesh, desc: DescriptorSet, cam, basis):
    pt = eval_point_features(pt_buf, desc, cam, basis=basis)
    ms = eval_mesh_features(mesh_buf, mesh, desc, cam, basis=basis)
    return concat_features(pt, ms)


def render_features(frags: ViewFragments, scene: SplitScene, fg_desc: DescriptorSet, bg_desc: DescriptorSet):
    fg = branch_features(frags.fg_points, frags.fg_mesh, scene.fg.mesh, fg_desc, frags.camera, frags.basis)
    bg = branch_features(frags.bg_points, frags.bg_mesh, scene.bg.mesh, bg_desc, frags.camera, frags.basis)
    return fg, bg


def render_view(frags: ViewFragments, scene: SplitScene, fg_desc, bg_desc, head: RenderHeadParams) -> np.ndarray:
    fg, bg = render_features(frags, scene, fg_desc, bg_desc)
    return render_head_forward(fg, bg, head)


def backward_to_descriptors(grad_feat, point_buf: PointFragmentBuffer, mesh_buf: MeshFragmentBuffer,
                            mesh: TriangleMesh, n_desc: int, cam: Camera | None = None,
                            vertex_map=None, basis=None) -> np.ndarray:
    """Adjoint of point/mesh feature evaluation.

    ``grad_feat`` is the gradient w.r.t. a concatenated feature image: channels
    ``0:8`` belong to the point features and ``8:16`` to the mesh features.
    Contributions are accumulated in row-major pixel order, so the result is
    bitwise reproducible.
    """
    grad_feat = np.asarray(grad_feat, dtype=np.float64)
    if basis is None:
        basis = pixel_basis(cam)
    if grad_feat.shape[:2] != point_buf.index.shape or mesh_buf.index.shape != point_buf.index.shape:
        raise DimensionMismatch("gradient image and fragment buffers differ in size")
    vmap = None if vertex_map is None else np.asarray(vertex_map)

    def rows(ids):
        if vmap is not None:
            if ids.size and ids.max() >= len(vmap):
                raise IndexOutOfRange("fragment references a vertex outside the vertex map")
            ids = vmap[ids]
        if ids.size and (ids.min() < 0 or ids.max() >= n_desc):
            raise IndexOutOfRange("fragment references a vertex with no descriptor")
        return ids

    out = np.zeros((n_desc, basis.shape[-1], FEATURE_DIM))

    m = point_buf.index != EMPTY
    if m.any():
        g = grad_feat[m][:, :FEATURE_DIM] * point_buf.weight[m][:, None]
        contrib = basis[m][:, :, None] * g[:, None, :]
        np.add.at(out, rows(point_buf.index[m]), contrib)

    m = mesh_buf.index != EMPTY
    if m.any():
        faces = mesh_buf.index[m]
        if faces.max() >= mesh.n_faces:
            raise IndexOutOfRange("fragment references a missing face")
        g = grad_feat[m][:, FEATURE_DIM : 2 * FEATURE_DIM]
        per_pixel = basis[m][:, :, None] * g[:, None, :]  # (P, 9, 8)
        contrib = mesh_buf.bary[m][:, :, None, None] * per_pixel[:, None]  # (P, 3, 9, 8)
        ids = rows(mesh.faces[faces])
        np.add.at(out, ids.reshape(-1), contrib.reshape(-1, *out.shape[1:]))
    return out


def loss_and_grads(frags: ViewFragments, scene: SplitScene, target, fg_desc: DescriptorSet,
                   bg_desc: DescriptorSet, head: RenderHeadParams):
    """L1 loss of one view with gradients for both descriptor sets and the head."""
    fg, bg = render_features(frags, scene, fg_desc, bg_desc)
    rgb = render_head_forward(fg, bg, head)
    loss, grad_rgb = loss_l1(rgb, target)
    g_fg, g_bg, g_head = backward_to_inputs(grad_rgb, fg, bg, head)
    g_fg_desc = backward_to_descriptors(g_fg, frags.fg_points, frags.fg_mesh, scene.fg.mesh, len(fg_desc),
                                        basis=frags.basis)
    g_bg_desc = backward_to_descriptors(g_bg, frags.bg_points, frags.bg_mesh, scene.bg.mesh, len(bg_desc),
                                        basis=frags.basis)
    return loss, {"fg": g_fg_desc, "bg": g_bg_desc}, g_head


def init_state(scene: SplitScene, config: FitConfig, rng: np.random.Generator):
    fg = DescriptorSet.random(scene.fg.mesh.n_vertices, rng, config.descriptor_std) if config.descriptor_std > 0 \
        else DescriptorSet.zeros(scene.fg.mesh.n_vertices)
    bg = DescriptorSet.random(scene.bg.mesh.n_vertices, rng, config.descriptor_std) if config.descriptor_std > 0 \
        else DescriptorSet.zeros(scene.bg.mesh.n_vertices)
    head = RenderHeadParams.init(rng, config.hidden)
    n_keep = (config.max_band + 1) ** 2
    fg.data[:, n_keep:] = 0.0
    bg.data[:, n_keep:] = 0.0
    return fg, bg, head


def fit_scene(mesh: TriangleMesh, split: SceneSplit, views, config: FitConfig | None = None,
              callback=None) -> FitResult:
    """Jointly fit fg/bg descriptors and the render head to posed images.

    Each step processes one full view: forward, L1 loss, backward, then one
    Adam update per parameter group.  ``callback(epoch, loss)`` is invoked
    after every epoch.
    """
    config = config or FitConfig()
    views = list(views)
    if not views:
        raise ValueError("need at least one training view")
    rng = np.random.default_rng(config.seed)
    scene = SplitScene.build(mesh, split)
    fg_desc, bg_desc, head = init_state(scene, config, rng)
    frags = [rasterize_view(scene, v.camera, config.point_radius) for v in views]
    n_keep = (config.max_band + 1) ** 2

    desc_params = {"fg": fg_desc.data, "bg": bg_desc.data}
    head_params = head.as_dict()
    desc_state, head_state = AdamState(), AdamState()
    trace = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(views))
        total = 0.0
        for i in order:
            loss, g_desc, g_head = loss_and_grads(frags[i], scene, views[i].image, fg_desc, bg_desc, head)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"loss became {loss} at epoch {epoch}, view {i}")
            g_desc["fg"][:, n_keep:] = 0.0
            g_desc["bg"][:, n_keep:] = 0.0
            adam_step(desc_params, g_desc, desc_state, config.lr_descriptors)
            adam_step(head_params, g_head, head_state, config.lr_head)
            total += loss
        trace.append(total / len(views))
        log.debug("epoch %d loss %.6f", epoch, trace[-1])
        if callback is not None:
            callback(epoch, trace[-1])
    return FitResult(fg_desc, bg_desc, head, trace, scene)
