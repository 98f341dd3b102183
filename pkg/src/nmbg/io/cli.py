"""Command-line interface.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from ..diffrender import FitConfig, fit_scene, psnr, rasterize_view, render_view, ssim
from ..diffrender.fit import SplitScene
from ..errors import NMBGError
from ..geometry import compute_camera_stats, partition_mesh, sample_augmented_camera
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .manifest import load_scene
from .png import read_png, write_png

log = logging.getLogger("nmbg")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


def cmd_fit(args) -> int:
    scene = load_scene(args.scene)
    views = scene.training_views()
    if not views:
        raise UsageError("manifest lists no training images")
    config = FitConfig(epochs=args.epochs, seed=args.seed)
    result = fit_scene(scene.mesh, scene.split, views, config,
                       callback=lambda ep, loss: log.info("epoch %d loss %.6f", ep + 1, loss))
    save_checkpoint(args.out, Checkpoint(result.fg_descriptors, result.bg_descriptors, result.head, scene.split))
    if args.loss_trace:
        with open(args.loss_trace, "w") as fh:
            fh.write("epoch,loss\n")
            for i, loss in enumerate(result.loss_trace):
                fh.write(f"{i + 1},{loss!r}\n")
    return EXIT_OK


def cmd_render(args) -> int:
    scene = load_scene(args.scene)
    ckpt = load_checkpoint(args.checkpoint)
    try:
        cam = scene.camera(args.camera_id)
    except KeyError:
        raise UsageError(f"no camera with id {args.camera_id}") from None
    split_scene = SplitScene.build(scene.mesh, ckpt.split)
    if (len(ckpt.fg), len(ckpt.bg)) != (split_scene.fg.mesh.n_vertices, split_scene.bg.mesh.n_vertices):
        raise NMBGError("checkpoint descriptors do not match this scene's mesh")
    frags = rasterize_view(split_scene, cam)
    write_png(args.out, render_view(frags, split_scene, ckpt.fg, ckpt.bg, ckpt.head))
    return EXIT_OK


def cmd_split(args) -> int:
    scene = load_scene(args.scene)
    fg, bg = partition_mesh(scene.mesh, scene.split)
    c = scene.split.center
    print(f"center {c[0]:.6f} {c[1]:.6f} {c[2]:.6f}")
    print(f"radius {scene.split.radius:.6f}")
    print(f"fg_faces {fg.mesh.n_faces}")
    print(f"bg_faces {bg.mesh.n_faces}")
    return EXIT_OK


def cmd_sample_cameras(args) -> int:
    scene = load_scene(args.scene)
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    stats = compute_camera_stats(scene.cameras, scene.split, scene.manifest.up)
    rng = np.random.default_rng(args.seed)
    template = scene.cameras[0]
    out = []
    for _ in range(args.count):
        R, T = sample_augmented_camera(scene.split, stats, rng)
        out.append({
            "R": R.tolist(), "T": T.tolist(), "position": (-R.T @ T).tolist(),
            "fx": template.fx, "fy": template.fy, "cx": template.cx, "cy": template.cy,
            "width": template.width, "height": template.height,
        })
    with open(args.out, "w") as fh:
        json.dump({"cameras": out}, fh, indent=2)
    return EXIT_OK


def cmd_metrics(args) -> int:
    pred, gt = read_png(args.pred), read_png(args.gt)
    print(f"PSNR {_fmt(psnr(pred, gt))}")
    print(f"SSIM {_fmt(ssim(pred, gt))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nmbg", description="Fit and render view-dependent vertex descriptors.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("fit", help="fit descriptors and render head to a scene")
    s.add_argument("--scene", required=True)
    s.add_argument("--epochs", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--loss-trace")
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("render", help="render a training camera from a checkpoint")
    s.add_argument("--scene", required=True)
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--camera-id", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("split", help="print the foreground/background split")
    s.add_argument("--scene", required=True)
    s.set_defaults(func=cmd_split)

    s = sub.add_parser("sample-cameras", help="sample augmented camera poses")
    s.add_argument("--scene", required=True)
    s.add_argument("--count", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample_cameras)

    s = sub.add_parser("metrics", help="PSNR and SSIM between two PNG images")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.set_defaults(func=cmd_metrics)
    return p


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        if getattr(args, "epochs", 1) < 1:
            raise UsageError("--epochs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (NMBGError, OSError, ValueError) as exc:
        print(f"nmbg: error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(cli_main())
