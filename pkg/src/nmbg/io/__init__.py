from .checkpoint import Checkpoint, checkpoint_from_bytes, checkpoint_to_bytes, load_checkpoint, save_checkpoint
from .colmap import load_colmap_cameras, qvec_to_rotmat, rotmat_to_qvec, write_colmap_text
from .manifest import LoadedScene, SceneManifest, load_manifest, load_scene, write_manifest
from .ply import load_ply, parse_ply, write_ply
from .png import decode_png, encode_png, read_png, write_png

__all__ = [
    "Checkpoint",
    "LoadedScene",
    "SceneManifest",
    "checkpoint_from_bytes",
    "checkpoint_to_bytes",
    "decode_png",
    "encode_png",
    "load_checkpoint",
    "load_colmap_cameras",
    "load_manifest",
    "load_ply",
    "load_scene",
    "parse_ply",
    "qvec_to_rotmat",
    "read_png",
    "rotmat_to_qvec",
    "save_checkpoint",
    "write_colmap_text",
    "write_manifest",
    "write_ply",
    "write_png",
]
