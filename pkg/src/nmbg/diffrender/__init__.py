from .adam import AdamState, adam_step
from .fit import (
    FitConfig,
    FitResult,
    SplitScene,
    TrainingView,
    ViewFragments,
    backward_to_descriptors,
    fit_scene,
    loss_and_grads,
    rasterize_view,
    render_features,
    render_view,
)
from .head import RenderHeadParams, backward_to_inputs, render_head_forward
from .losses import loss_l1, psnr, ssim

__all__ = [
    "AdamState",
    "FitConfig",
    "FitResult",
    "RenderHeadParams",
    "SplitScene",
    "TrainingView",
    "ViewFragments",
    "adam_step",
    "backward_to_descriptors",
    "backward_to_inputs",
    "fit_scene",
    "loss_and_grads",
    "loss_l1",
    "psnr",
    "rasterize_view",
    "render_features",
    "render_head_forward",
    "render_view",
    "ssim",
]
