"""COLMAP text-model reader (``cameras.txt`` + ``images.txt``) and writer."""

from __future__ import annotations

import numpy as np

from ..errors import IoError, ParseError, UnsupportedCameraModel
from ..geometry import Camera


def qvec_to_rotmat(qvec) -> np.ndarray:
    """Hamilton quaternion ``(w, x, y, z)`` to a rotation matrix."""
    q = np.asarray(qvec, dtype=np.float64)
    n = np.linalg.norm(q)
    if not np.isfinite(n) or n < 1e-12:
        raise ParseError("quaternion has zero or non-finite norm")
    w, x, y, z = q / n
    return np.array([
        [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * w * z, 2 * x * z + 2 * w * y],
        [2 * x * y + 2 * w * z, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * w * x],
        [2 * x * z - 2 * w * y, 2 * y * z + 2 * w * x, 1 - 2 * x * x - 2 * y * y],
    ])


def rotmat_to_qvec(R) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    tr = np.trace(R)
    if tr > 0:
        s = 2.0 * np.sqrt(tr + 1.0)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = 2.0 * np.sqrt(1.0 + R[i, i] - R[j, j] - R[k, k])
        q = np.zeros(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    q = np.asarray(q)
    return q if q[0] >= 0 else -q


def _lines(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        return raw.decode("utf-8").splitlines()
    except UnicodeDecodeError:
        raise ParseError(f"{path} is not valid UTF-8 text") from None


def _num(tok, cast, what):
    try:
        val = cast(tok)
    except ValueError:
        raise ParseError(f"bad {what}: {tok!r}") from None
    if cast is float and not np.isfinite(val):
        raise ParseError(f"non-finite {what}")
    return val


def parse_cameras_txt(lines) -> dict:
    """Map camera id -> ``(width, height, fx, fy, cx, cy)``."""
    cams = {}
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        el = line.split()
        if len(el) < 4:
            raise ParseError(f"short camera line: {line!r}")
        cid = _num(el[0], int, "camera id")
        model = el[1]
        w, h = _num(el[2], int, "width"), _num(el[3], int, "height")
        params = [_num(p, float, "camera parameter") for p in el[4:]]
        if model == "PINHOLE":
            if len(params) != 4:
                raise ParseError("PINHOLE needs fx fy cx cy")
            fx, fy, cx, cy = params
        elif model == "SIMPLE_PINHOLE":
            if len(params) != 3:
                raise ParseError("SIMPLE_PINHOLE needs f cx cy")
            fx, cx, cy = params
            fy = fx
        else:
            raise UnsupportedCameraModel(f"camera model {model!r} is not supported")
        if w < 1 or h < 1 or fx <= 0 or fy <= 0:
            raise ParseError(f"invalid intrinsics on camera {cid}")
        if cid in cams:
            raise ParseError(f"duplicate camera id {cid}")
        cams[cid] = (w, h, fx, fy, cx, cy)
    return cams


def parse_images_txt(lines) -> list:
    """List of ``(image_id, qvec, tvec, camera_id, name)`` in file order.

    Each image occupies two lines; the second (2D observations) is skipped.
    """
    out = []
    body = [ln for ln in lines if not ln.lstrip().startswith("#")]
    i = 0
    while i < len(body):
        line = body[i].strip()
        if not line:
            i += 1
            continue
        el = line.split()
        if len(el) < 10:
            raise ParseError(f"short image line: {line!r}")
        iid = _num(el[0], int, "image id")
        q = [_num(v, float, "quaternion") for v in el[1:5]]
        t = [_num(v, float, "translation") for v in el[5:8]]
        cid = _num(el[8], int, "camera id")
        out.append((iid, np.array(q), np.array(t), cid, " ".join(el[9:])))
        i += 2  # skip POINTS2D line
    return out


def load_colmap_cameras(cameras_txt_path, images_txt_path) -> list[Camera]:
    """Posed cameras, one per image, sorted by image id (``Camera.id``)."""
    intr = parse_cameras_txt(_lines(cameras_txt_path))
    images = parse_images_txt(_lines(images_txt_path))
    seen = set()
    cams = []
    for iid, q, t, cid, _name in sorted(images, key=lambda r: r[0]):
        if iid in seen:
            raise ParseError(f"duplicate image id {iid}")
        seen.add(iid)
        if cid not in intr:
            raise ParseError(f"image {iid} references unknown camera {cid}")
        w, h, fx, fy, cx, cy = intr[cid]
        cams.append(Camera(fx, fy, cx, cy, qvec_to_rotmat(q), t, w, h, id=iid))
    return cams


def image_names(images_txt_path) -> dict:
    return {iid: name for iid, _, _, _, name in parse_images_txt(_lines(images_txt_path))}


def write_colmap_text(cameras_txt_path, images_txt_path, cameras, names=None) -> None:
    """Write one PINHOLE intrinsics entry and one image entry per camera."""
    cam_lines = ["# Camera list with one line of data per camera:", "#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]"]
    img_lines = ["# Image list with two lines of data per image:",
                 "#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME", "#   POINTS2D[] as (X, Y, POINT3D_ID)"]
    for k, cam in enumerate(cameras):
        iid = cam.id if cam.id is not None else k + 1
        intr = " ".join(repr(float(x)) for x in (cam.fx, cam.fy, cam.cx, cam.cy))
        cam_lines.append(f"{k + 1} PINHOLE {cam.width} {cam.height} {intr}")
        q = rotmat_to_qvec(cam.R)
        name = names[k] if names else f"{iid:04d}.png"
        img_lines.append(" ".join([str(iid), *(repr(float(x)) for x in q), *(repr(float(x)) for x in cam.T),
                                   str(k + 1), name]))
        img_lines.append("")
    try:
        with open(cameras_txt_path, "w") as fh:
            fh.write("\n".join(cam_lines) + "\n")
        with open(images_txt_path, "w") as fh:
            fh.write("\n".join(img_lines) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc
