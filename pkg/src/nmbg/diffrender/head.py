"""Two-branch render head: foreground and background encoders, shared output layer.

Per pixel::

    h_fg = relu(fg @ W_fg)
    h_bg = relu(bg @ W_bg)
    rgb  = [h_fg, h_bg] @ W_out + b_out
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch

IN_CHANNELS = 18
HIDDEN = 16
PARAM_NAMES = ("W_fg", "W_bg", "W_out", "b_out")


@dataclass
class RenderHeadParams:
    W_fg: np.ndarray
    W_bg: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    @property
    def hidden(self) -> int:
        return self.W_fg.shape[1]

    @classmethod
    def init(cls, rng: np.random.Generator, hidden: int = HIDDEN) -> "RenderHeadParams":
        """Weights ~ N(0, std=1/fan_in), output bias at mid-gray."""
        return cls(
            rng.normal(0.0, 1.0 / IN_CHANNELS, (IN_CHANNELS, hidden)),
            rng.normal(0.0, 1.0 / IN_CHANNELS, (IN_CHANNELS, hidden)),
            rng.normal(0.0, 1.0 / (2 * hidden), (2 * hidden, 3)),
            np.full(3, 0.5),
        )

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self) -> "RenderHeadParams":
        return RenderHeadParams(*(getattr(self, k).copy() for k in PARAM_NAMES))


def _data(img):
    # ndarray also has a ``.data`` attribute (a memoryview), so test the type
    return np.asarray(img if isinstance(img, np.ndarray) else img.data, dtype=np.float64)


def _check(fg, bg, params: RenderHeadParams):
    if fg.shape != bg.shape:
        raise DimensionMismatch(f"fg {fg.shape} and bg {bg.shape} feature images differ")
    if fg.shape[-1] != params.W_fg.shape[0] or bg.shape[-1] != params.W_bg.shape[0]:
        raise DimensionMismatch("feature channels do not match the head input width")


def render_head_forward(fg, bg, params: RenderHeadParams) -> np.ndarray:
    """RGB image ``(H, W, 3)`` from two feature images; values are not clamped."""
    fg, bg = _data(fg), _data(bg)
    _check(fg, bg, params)
    h = np.concatenate([np.maximum(fg @ params.W_fg, 0.0), np.maximum(bg @ params.W_bg, 0.0)], axis=-1)
    return h @ params.W_out + params.b_out


def backward_to_inputs(grad_rgb, fg, bg, params: RenderHeadParams):
    """Chain rule through :func:`render_head_forward`.

    Returns ``(grad_fg, grad_bg, grads)`` where ``grads`` maps parameter
    names to arrays shaped like the parameters.
    """
    fg, bg = _data(fg), _data(bg)
    _check(fg, bg, params)
    grad_rgb = np.asarray(grad_rgb, dtype=np.float64)
    if grad_rgb.shape != fg.shape[:-1] + (3,):
        raise DimensionMismatch("output gradient does not match the image size")
    hd = params.hidden
    a_fg = fg @ params.W_fg
    a_bg = bg @ params.W_bg
    h = np.concatenate([np.maximum(a_fg, 0.0), np.maximum(a_bg, 0.0)], axis=-1)

    G = grad_rgb.reshape(-1, 3)
    grads = {
        "W_out": h.reshape(-1, 2 * hd).T @ G,
        "b_out": G.sum(axis=0),
    }
    grad_h = grad_rgb @ params.W_out.T
    ga_fg = grad_h[..., :hd] * (a_fg > 0)
    ga_bg = grad_h[..., hd:] * (a_bg > 0)
    grads["W_fg"] = fg.reshape(-1, fg.shape[-1]).T @ ga_fg.reshape(-1, hd)
    grads["W_bg"] = bg.reshape(-1, bg.shape[-1]).T @ ga_bg.reshape(-1, hd)
    return ga_fg @ params.W_fg.T, ga_bg @ params.W_bg.T, grads
