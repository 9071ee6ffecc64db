"""OBJ mesh I/O and deterministic JSON reports.

The OBJ dialect is minimal on purpose: ``v x y z`` vertex lines and
``f i j k`` one-based face lines, ASCII.  The writer canonicalizes floats to
17 significant digits, so write -> read -> write round-trips byte for byte.

JSON reports are emitted by a small custom serializer for the same reason:
floats are rendered with ``%.17g`` and key order is preserved, making
repeated runs byte-identical.
"""

from __future__ import annotations

import io
import math

import numpy as np

from .errors import IncompatibleDataError
from .geometry import Realization
from .mesh import SurfaceMesh

JSON_SCHEMA_VERSION = 1


def _fmt(x):
    return format(float(x), ".17g")


# ----------------------------------------------------------------------
# OBJ
# ----------------------------------------------------------------------

def read_obj(source):
    """Read vertices and triangles from an OBJ stream or path.

    Only ``v`` and ``f`` records are interpreted; everything else is
    ignored.  Faces must be triangles; indices may use the ``i/t/n`` OBJ
    syntax, in which case only the vertex index is kept.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    verts = []
    faces = []
    for ln, line in enumerate(lines, start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise IncompatibleDataError(f"OBJ line {ln}: bad vertex record")
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f":
            idx = [int(tok.split("/")[0]) for tok in parts[1:]]
            if len(idx) != 3:
                raise IncompatibleDataError(
                    f"OBJ line {ln}: only triangular faces are supported"
                )
            if min(idx) < 1:
                raise IncompatibleDataError(
                    f"OBJ line {ln}: negative/zero indices not supported"
                )
            faces.append([i - 1 for i in idx])
    if not verts or not faces:
        raise IncompatibleDataError("OBJ contains no usable vertices/faces")
    return np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64)


def read_obj_realization(source):
    positions, triangles = read_obj(source)
    mesh = SurfaceMesh(triangles, vertex_count=positions.shape[0])
    return Realization(mesh, positions)


def write_obj(target, positions, faces, comment=None):
    """Write an OBJ file.  ``faces`` may contain polygons (index lists)."""
    own = not hasattr(target, "write")
    fh = open(target, "w", encoding="ascii") if own else target
    try:
        if comment:
            for line in str(comment).splitlines():
                fh.write(f"# {line}\n")
        for p in np.asarray(positions, dtype=np.float64):
            fh.write(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
        for face in faces:
            fh.write("f " + " ".join(str(int(i) + 1) for i in face) + "\n")
    finally:
        if own:
            fh.close()


def obj_string(positions, faces, comment=None):
    buf = io.StringIO()
    write_obj(buf, positions, faces, comment)
    return buf.getvalue()


# ----------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------

def json_dumps(obj, indent=2):
    """Serialize to JSON with 17-significant-digit floats.

    Supports dict/list/tuple/str/bool/None, ints, floats and numpy scalars
    and arrays.  Dict key order is preserved.
    """
    out = []
    _write_json(obj, out, indent, 0)
    return "".join(out) + "\n"


def _write_json(obj, out, indent, level):
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for k, (key, val) in enumerate(obj.items()):
            out.append(f'{pad_in}"{key}": ')
            _write_json(val, out, indent, level + 1)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for k, val in enumerate(obj):
            out.append(pad_in)
            _write_json(val, out, indent, level + 1)
            out.append(",\n" if k < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or isinstance(obj, np.bool_):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            out.append('"nan"')
        elif math.isinf(x):
            out.append('"inf"' if x > 0 else '"-inf"')
        else:
            out.append(_fmt(x))
    elif isinstance(obj, str):
        escaped = (
            obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        )
        out.append(f'"{escaped}"')
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def write_report(path, payload):
    """Write a versioned JSON report; returns the serialized text."""
    doc = {"schema": JSON_SCHEMA_VERSION}
    doc.update(payload)
    text = json_dumps(doc)
    if path is not None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    return text


def mesh_report(mesh, realization=None):
    """The JSON mesh-report payload: counts, topology, degeneracy grade."""
    report = mesh.report()
    report["degeneracy_grade"] = (
        realization.degeneracy_grade() if realization is not None else None
    )
    return report
