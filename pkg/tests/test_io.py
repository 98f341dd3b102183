import io
import json
import struct

import numpy as np
import png
import pytest

from nmbg.descriptors import DescriptorSet
from nmbg.diffrender import RenderHeadParams
from nmbg.errors import (
    IoError,
    NonTriangleFace,
    ParseError,
    UnsupportedCameraModel,
    UnsupportedFormat,
    VersionMismatch,
)
from nmbg.geometry import Camera, SceneSplit, TriangleMesh
from nmbg.io import (
    Checkpoint,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    decode_png,
    encode_png,
    load_checkpoint,
    load_colmap_cameras,
    load_manifest,
    load_ply,
    load_scene,
    parse_ply,
    qvec_to_rotmat,
    read_png,
    rotmat_to_qvec,
    save_checkpoint,
    write_colmap_text,
    write_manifest,
    write_ply,
    write_png,
)
from conftest import random_rotation

ASCII_TRI = b"""ply
format ascii 1.0
comment one triangle
element vertex 3
property float x
property float y
property float z
property uchar red
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255
1 0 0 0
0 1 0 7
3 0 1 2
"""


class TestPLY:
    def test_ascii_triangle(self):
        m = parse_ply(ASCII_TRI)
        assert (m.n_vertices, m.n_faces) == (3, 1)
        np.testing.assert_array_equal(m.vertices[1], [1, 0, 0])

    @pytest.mark.parametrize("binary", [True, False])
    def test_round_trip(self, tmp_path, rng, binary):
        mesh = TriangleMesh(rng.normal(size=(30, 3)), [rng.choice(30, 3, replace=False) for _ in range(40)])
        write_ply(tmp_path / "m.ply", mesh, binary=binary)
        back = load_ply(tmp_path / "m.ply")
        np.testing.assert_array_equal(back.vertices, mesh.vertices)
        np.testing.assert_array_equal(back.faces, mesh.faces)

    def test_float32_binary_and_vertex_index_name(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], "<f4")
        header = (b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\n"
                  b"property float y\nproperty float z\nelement face 1\n"
                  b"property list uchar uint vertex_index\nend_header\n")
        body = verts.tobytes() + bytes([3]) + np.array([0, 1, 2], "<u4").tobytes()
        m = parse_ply(header + body)
        assert m.n_faces == 1 and m.vertices.dtype == np.float64

    def test_point_cloud(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 2\nproperty double x\nproperty double y\n" \
               b"property double z\nend_header\n1 2 3\n4 5 6\n"
        m = parse_ply(data)
        assert (m.n_vertices, m.n_faces) == (2, 0)

    def test_truncated_binary(self, tmp_path, rng):
        mesh = TriangleMesh(rng.normal(size=(5, 3)), [[0, 1, 2], [2, 3, 4]])
        write_ply(tmp_path / "m.ply", mesh)
        data = (tmp_path / "m.ply").read_bytes()
        for cut in (1, 5, 13, 40):
            with pytest.raises(ParseError):
                parse_ply(data[:-cut])

    def test_face_element_without_list(self):
        data = (b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                b"property float z\nelement face 2\nproperty int vertex_indices\nend_header\n") + bytes(20)
        with pytest.raises(ParseError):
            parse_ply(data)

    def test_errors(self):
        with pytest.raises(UnsupportedFormat):
            parse_ply(ASCII_TRI.replace(b"ascii", b"binary_big_endian"))
        with pytest.raises(NonTriangleFace):
            parse_ply(ASCII_TRI.replace(b"3 0 1 2", b"4 0 1 2 0"))
        with pytest.raises(ParseError):
            parse_ply(b"not a ply")
        with pytest.raises(ParseError):
            parse_ply(ASCII_TRI.replace(b"3 0 1 2", b"3 0 1 9"))
        with pytest.raises(IoError):
            load_ply("/nonexistent/mesh.ply")


def independent_quat(q):
    """Rotate via q v q* using explicit Hamilton products."""
    def mul(a, b):
        w1, x1, y1, z1 = a
        w2, x2, y2, z2 = b
        return np.array([w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2, w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                         w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2, w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2])
    q = np.asarray(q, float) / np.linalg.norm(q)
    conj = q * [1, -1, -1, -1]
    cols = [mul(mul(q, np.r_[0.0, e]), conj)[1:] for e in np.eye(3)]
    return np.stack(cols, axis=1)


class TestColmap:
    def test_quaternions(self, rng):
        np.testing.assert_array_equal(qvec_to_rotmat([1, 0, 0, 0]), np.eye(3))
        R = qvec_to_rotmat([np.sqrt(0.5), 0, 0, np.sqrt(0.5)])
        np.testing.assert_allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)
        for _ in range(20):
            q = rng.normal(size=4)
            np.testing.assert_allclose(qvec_to_rotmat(q), independent_quat(q), atol=1e-14)
            R = random_rotation(rng)
            np.testing.assert_allclose(qvec_to_rotmat(rotmat_to_qvec(R)), R, atol=1e-14)

    def _write(self, tmp_path, cams_txt, imgs_txt):
        (tmp_path / "cameras.txt").write_text(cams_txt)
        (tmp_path / "images.txt").write_text(imgs_txt)
        return tmp_path / "cameras.txt", tmp_path / "images.txt"

    def test_parse_models_and_skip_points(self, tmp_path):
        c, i = self._write(
            tmp_path,
            "# comment\n1 PINHOLE 64 48 100 110 32 24\n2 SIMPLE_PINHOLE 32 32 50 16 16\n",
            "# header\n7 1 0 0 0 0 0 1 2 b.png\n1.0 2.0 -1\n3 1 0 0 0 1 2 3 1 a.png\n\n",
        )
        cams = load_colmap_cameras(c, i)
        assert [cam.id for cam in cams] == [3, 7]
        a, b = cams
        assert (a.fx, a.fy, a.cx, a.cy, a.width, a.height) == (100, 110, 32, 24, 64, 48)
        assert (b.fx, b.fy) == (50, 50)
        np.testing.assert_array_equal(a.T, [1, 2, 3])

    def test_errors(self, tmp_path):
        c, i = self._write(tmp_path, "1 RADIAL 64 48 100 32 24 0.1 0.2\n", "1 1 0 0 0 0 0 0 1 a.png\n\n")
        with pytest.raises(UnsupportedCameraModel):
            load_colmap_cameras(c, i)
        c, i = self._write(tmp_path, "1 PINHOLE 64 48 100 32 24\n", "1 1 0 0 0 0 0 0 1 a.png\n\n")
        with pytest.raises(ParseError):
            load_colmap_cameras(c, i)
        c, i = self._write(tmp_path, "1 PINHOLE 64 48 100 100 32 24\n", "1 1 0 0 0 0 0 0 5 a.png\n\n")
        with pytest.raises(ParseError):
            load_colmap_cameras(c, i)
        with pytest.raises(IoError):
            load_colmap_cameras(tmp_path / "nope.txt", i)

    def test_write_read_round_trip(self, tmp_path, rng):
        cams = [Camera(90.0, 95.0, 31.5, 30.0, random_rotation(rng), rng.normal(size=3), 64, 60, id=k + 1)
                for k in range(5)]
        write_colmap_text(tmp_path / "cameras.txt", tmp_path / "images.txt", cams)
        back = load_colmap_cameras(tmp_path / "cameras.txt", tmp_path / "images.txt")
        for a, b in zip(cams, back):
            np.testing.assert_allclose(b.R, a.R, atol=1e-14)
            np.testing.assert_array_equal(b.T, a.T)
            assert (b.fx, b.fy, b.cx, b.cy, b.id) == (a.fx, a.fy, a.cx, a.cy, a.id)


class TestPNG:
    def test_round_trip_quantisation(self, tmp_path, rng):
        img = rng.uniform(size=(7, 9, 3))
        write_png(tmp_path / "a.png", img)
        back = read_png(tmp_path / "a.png")
        assert np.abs(back - img).max() <= 1 / 255 / 2 + 1e-9

    def test_black_exact_and_clamp(self):
        np.testing.assert_array_equal(decode_png(encode_png(np.zeros((3, 4, 3)))), 0)
        np.testing.assert_array_equal(decode_png(encode_png(np.full((2, 2, 3), 7.0))), 1.0)
        np.testing.assert_array_equal(decode_png(encode_png(np.full((2, 2, 3), -3.0))), 0.0)

    def test_half_rounds_up(self):
        img = np.full((1, 1, 3), 0.5 / 255)
        assert decode_png(encode_png(img))[0, 0, 0] == 1 / 255

    def test_sixteen_bit(self):
        raw = np.array([[0, 1, 65535, 32768, 2, 3]], np.uint16)
        buf = io.BytesIO()
        png.Writer(2, 1, greyscale=False, bitdepth=16).write(buf, raw)
        np.testing.assert_array_equal(decode_png(buf.getvalue()).ravel(), raw.ravel() / 65535)

    def test_alpha_and_grey(self):
        buf = io.BytesIO()
        png.Writer(1, 1, greyscale=False, alpha=True).write(buf, [[10, 20, 30, 40]])
        np.testing.assert_array_equal(decode_png(buf.getvalue())[0, 0], np.array([10, 20, 30]) / 255)
        buf = io.BytesIO()
        png.Writer(1, 1, greyscale=True).write(buf, [[51]])
        np.testing.assert_array_equal(decode_png(buf.getvalue())[0, 0], [0.2, 0.2, 0.2])

    def test_errors(self, tmp_path):
        with pytest.raises(ParseError):
            decode_png(b"\x89PNG garbage")
        with pytest.raises(IoError):
            read_png(tmp_path / "missing.png")


def random_checkpoint(rng, n=7, m=4):
    head = RenderHeadParams.init(rng)
    return Checkpoint(DescriptorSet.random(n, rng, 1.0), DescriptorSet.random(m, rng, 1.0), head,
                      SceneSplit(rng.normal(size=3), 2.5))


class TestCheckpoint:
    def test_bitwise_round_trip(self, tmp_path, rng):
        ck = random_checkpoint(rng)
        save_checkpoint(tmp_path / "c.bin", ck)
        back = load_checkpoint(tmp_path / "c.bin")
        np.testing.assert_array_equal(back.fg.data, ck.fg.data.astype(np.float32))
        np.testing.assert_array_equal(back.bg.data, ck.bg.data.astype(np.float32))
        for k in ("W_fg", "W_bg", "W_out", "b_out"):
            np.testing.assert_array_equal(getattr(back.head, k), getattr(ck.head, k).astype(np.float32))
        np.testing.assert_array_equal(back.split.center, ck.split.center)
        assert back.split.radius == ck.split.radius
        # once stored, further round trips are exact byte for byte
        assert checkpoint_to_bytes(back) == (tmp_path / "c.bin").read_bytes()

    def test_layout_prefix(self, rng):
        data = checkpoint_to_bytes(random_checkpoint(rng, n=2, m=3))
        assert data[:4] == b"NMBG"
        assert struct.unpack("<4I", data[4:20]) == (1, 2, 9, 8)

    def test_bad_magic_version_and_trailing(self, rng):
        data = checkpoint_to_bytes(random_checkpoint(rng))
        with pytest.raises(ParseError):
            checkpoint_from_bytes(b"XMBG" + data[4:])
        with pytest.raises(VersionMismatch):
            checkpoint_from_bytes(data[:4] + struct.pack("<I", 2) + data[8:])
        with pytest.raises(ParseError):
            checkpoint_from_bytes(data + b"\0")
        with pytest.raises(ParseError):
            checkpoint_from_bytes(data[:-1])
        assert issubclass(VersionMismatch, ParseError)


class TestManifest:
    def test_load_scene(self, scene_dir):
        scene = load_scene(scene_dir / "scene.json")
        assert len(scene.cameras) == 4 and scene.mesh.n_faces > 0
        views = scene.training_views()
        assert len(views) == 4 and views[0].image.shape == (16, 16, 3)
        assert scene.camera(2).id == 2
        with pytest.raises(KeyError):
            scene.camera(99)

    def test_split_override_and_up(self, tmp_path, scene_dir):
        doc = json.loads((scene_dir / "scene.json").read_text())
        doc["split"] = {"center": [1, 2, 3], "radius": 4}
        doc["up"] = [0, 2, 0]
        (scene_dir / "o.json").write_text(json.dumps(doc))
        m = load_manifest(scene_dir / "o.json")
        assert m.split.radius == 4 and list(m.split.center) == [1, 2, 3]
        np.testing.assert_array_equal(m.up, [0, 1, 0])

    @pytest.mark.parametrize("text", [
        "not json", "[]", '{"mesh": "mesh.ply"}',
        '{"mesh": "mesh.ply", "mesh": "x", "cameras": "sparse", "images_dir": "images"}',
        '{"mesh": "mesh.ply", "cameras": "sparse", "images_dir": "images", "split": {"center": [0,0], "radius": 1}}',
        '{"mesh": "mesh.ply", "cameras": "sparse", "images_dir": "images", "split": {"center": [0,0,0], "radius": -1}}',
        '{"mesh": "mesh.ply", "cameras": "sparse", "images_dir": "images", "images": {"x": "a.png"}}',
    ])
    def test_malformed(self, scene_dir, text):
        (scene_dir / "bad.json").write_text(text)
        with pytest.raises(ParseError):
            load_manifest(scene_dir / "bad.json")

    def test_missing_files(self, scene_dir):
        write_manifest(scene_dir / "m.json", mesh="nope.ply")
        with pytest.raises(IoError):
            load_manifest(scene_dir / "m.json")
        write_manifest(scene_dir / "m.json", images={1: "nope.png"})
        with pytest.raises(IoError):
            load_manifest(scene_dir / "m.json")
