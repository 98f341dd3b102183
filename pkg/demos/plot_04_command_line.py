"""
The command-line workflow
=========================

A scene on disk is a PLY mesh, COLMAP text cameras, PNG images and a small
JSON manifest.  This demo writes one, then drives ``nmbg`` through its
subcommands.
"""

# %%
import tempfile
from pathlib import Path

from nmbg.io.cli import cli_main
from nmbg.synthetic import textured_cube_scene, write_scene

work = Path(tempfile.mkdtemp())
manifest = write_scene(work / "cube", textured_cube_scene(n_views=6, size=32))
print(manifest.read_text())

# %%
# Inspect the foreground/background split.
cli_main(["split", "--scene", str(manifest)])

# %%
# Fit a few epochs, render camera 1, and score it against its target.
cli_main(["fit", "--scene", str(manifest), "--epochs", "10", "--seed", "0",
          "--out", str(work / "cube.ckpt"), "--loss-trace", str(work / "loss.csv")])
print((work / "loss.csv").read_text().splitlines()[-1])
cli_main(["render", "--scene", str(manifest), "--checkpoint", str(work / "cube.ckpt"), "--camera-id", "1",
          "--out", str(work / "render.png")])
cli_main(["metrics", "--pred", str(work / "render.png"), "--gt", str(work / "cube" / "images" / "0001.png")])

# %%
# Sample novel camera poses around the scene.
cli_main(["sample-cameras", "--scene", str(manifest), "--count", "3", "--seed", "0", "--out", str(work / "cams.json")])
print((work / "cams.json").read_text()[:200])
