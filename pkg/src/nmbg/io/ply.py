"""PLY reader/writer for triangle meshes and point clouds.

Handles ``ascii`` and ``binary_little_endian`` files.  Only the vertex
``x, y, z`` properties and the face ``vertex_indices`` (or
``vertex_index``) list are interpreted; other elements and properties are
skipped.
"""

from __future__ import annotations

import numpy as np

from ..errors import IoError, NonTriangleFace, ParseError, UnsupportedFormat
from ..geometry import TriangleMesh

_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
_FACE_LISTS = ("vertex_indices", "vertex_index")


def _dtype(name: str) -> np.dtype:
    try:
        return np.dtype("<" + _TYPES[name])
    except KeyError:
        raise ParseError(f"unknown PLY property type {name!r}") from None


def _parse_header(data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise ParseError("missing PLY magic or end_header")
    nl = data.find(b"\n", end)
    body_start = len(data) if nl < 0 else nl + 1
    try:
        lines = data[:end].decode("ascii").splitlines()
    except UnicodeDecodeError:
        raise ParseError("PLY header is not ASCII") from None

    fmt = None
    elements = []  # [name, count, [(prop_name, dtype | (count_dtype, item_dtype))]]
    for raw in lines[1:]:
        tok = raw.split()
        if not tok or tok[0] in ("comment", "obj_info"):
            continue
        if tok[0] == "format":
            if len(tok) < 2:
                raise ParseError("malformed format line")
            fmt = tok[1]
        elif tok[0] == "element":
            if len(tok) != 3:
                raise ParseError(f"malformed element line: {raw!r}")
            try:
                count = int(tok[2])
            except ValueError:
                raise ParseError(f"bad element count: {raw!r}") from None
            if count < 0:
                raise ParseError("negative element count")
            elements.append([tok[1], count, []])
        elif tok[0] == "property":
            if not elements:
                raise ParseError("property before any element")
            if len(tok) == 5 and tok[1] == "list":
                elements[-1][2].append((tok[4], (_dtype(tok[2]), _dtype(tok[3]))))
            elif len(tok) == 3:
                elements[-1][2].append((tok[2], _dtype(tok[1])))
            else:
                raise ParseError(f"malformed property line: {raw!r}")
        else:
            raise ParseError(f"unexpected header line: {raw!r}")
    if fmt is None:
        raise ParseError("PLY header has no format line")
    if fmt == "binary_big_endian":
        raise UnsupportedFormat("big-endian PLY is not supported")
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"unknown PLY format {fmt!r}")
    return fmt, elements, body_start


def _read_binary(body: bytes, elements):
    pos = 0
    out = {}
    for name, count, props in elements:
        if all(not isinstance(dt, tuple) for _, dt in props):
            rec = np.dtype([(p, dt) for p, dt in props]) if props else None
            size = rec.itemsize * count if rec is not None else 0
            if pos + size > len(body):
                raise ParseError(f"truncated PLY body in element {name!r}")
            out[name] = np.frombuffer(body, dtype=rec, count=count, offset=pos) if rec is not None else None
            pos += size
            continue
        rows = []
        for _ in range(count):
            row = {}
            for p, dt in props:
                if isinstance(dt, tuple):
                    cdt, idt = dt
                    if pos + cdt.itemsize > len(body):
                        raise ParseError(f"truncated PLY body in element {name!r}")
                    n = int(np.frombuffer(body, cdt, 1, pos)[0])
                    pos += cdt.itemsize
                    if n < 0 or pos + n * idt.itemsize > len(body):
                        raise ParseError(f"truncated PLY body in element {name!r}")
                    row[p] = np.frombuffer(body, idt, n, pos)
                    pos += n * idt.itemsize
                else:
                    if pos + dt.itemsize > len(body):
                        raise ParseError(f"truncated PLY body in element {name!r}")
                    row[p] = np.frombuffer(body, dt, 1, pos)[0]
                    pos += dt.itemsize
            rows.append(row)
        out[name] = rows
    return out


def _read_ascii(body: bytes, elements):
    try:
        tokens = body.decode("ascii").split()
    except UnicodeDecodeError:
        raise ParseError("non-ASCII bytes in ascii PLY body") from None
    pos = 0
    out = {}

    def take(dt):
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("truncated ascii PLY body")
        tok = tokens[pos]
        pos += 1
        try:
            return float(tok) if dt.kind == "f" else int(tok)
        except ValueError:
            raise ParseError(f"bad number {tok!r} in PLY body") from None

    for name, count, props in elements:
        rows = []
        for _ in range(count):
            row = {}
            for p, dt in props:
                if isinstance(dt, tuple):
                    n = take(dt[0])
                    if n < 0:
                        raise ParseError("negative list length")
                    row[p] = np.array([take(dt[1]) for _ in range(n)])
                else:
                    row[p] = take(dt)
            rows.append(row)
        out[name] = rows
    return out


def parse_ply(data: bytes) -> TriangleMesh:
    fmt, elements, start = _parse_header(data)
    names = [e[0] for e in elements]
    if "vertex" not in names:
        raise ParseError("PLY has no vertex element")
    vprops = [p for p, _ in elements[names.index("vertex")][2]]
    if not all(k in vprops for k in "xyz"):
        raise ParseError("vertex element lacks x, y, z")
    body = data[start:]
    tables = _read_binary(body, elements) if fmt == "binary_little_endian" else _read_ascii(body, elements)

    vt = tables["vertex"]
    if isinstance(vt, np.ndarray):
        verts = np.stack([vt[k].astype(np.float64) for k in "xyz"], axis=1) if len(vt) else np.zeros((0, 3))
    else:
        verts = np.array([[float(r[k]) for k in "xyz"] for r in vt], dtype=np.float64).reshape(-1, 3)

    faces = np.zeros((0, 3), dtype=np.int64)
    if "face" in names:
        fprops = dict(elements[names.index("face")][2])
        key = next((k for k in _FACE_LISTS if k in fprops), None)
        rows = tables["face"]
        if rows is not None and len(rows):
            if key is None or not isinstance(fprops[key], tuple):
                raise ParseError("face element lacks a vertex index list")
            lists = [np.asarray(r[key]) for r in rows]
            if any(len(li) != 3 for li in lists):
                raise NonTriangleFace("only triangular faces are supported")
            faces = np.array(lists, dtype=np.int64)
    try:
        return TriangleMesh(verts, faces)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def load_ply(path) -> TriangleMesh:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_ply(data)


def write_ply(path, mesh: TriangleMesh, binary: bool = True) -> None:
    """Write float64 vertices and uint8-counted int32 face lists."""
    header = [
        "ply",
        f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
        f"element vertex {mesh.n_vertices}",
        "property double x",
        "property double y",
        "property double z",
        f"element face {mesh.n_faces}",
        "property list uchar int vertex_indices",
        "end_header",
    ]
    head = ("\n".join(header) + "\n").encode("ascii")
    if binary:
        faces = np.zeros(mesh.n_faces, dtype=[("n", "u1"), ("idx", "<i4", (3,))])
        faces["n"] = 3
        faces["idx"] = mesh.faces
        body = mesh.vertices.astype("<f8").tobytes() + faces.tobytes()
    else:
        lines = [" ".join(repr(float(c)) for c in v) for v in mesh.vertices]
        lines += ["3 " + " ".join(str(int(i)) for i in f) for f in mesh.faces]
        body = ("\n".join(lines) + "\n").encode("ascii")
    try:
        with open(path, "wb") as fh:
            fh.write(head + body)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
