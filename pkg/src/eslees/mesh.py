"""Triangle mesh I/O and topology checks.

Only the plain ASCII ``OFF`` dialect is supported::

    OFF
    V F E
    x y z          (V lines)
    3 i j k        (F lines)

Comments start with ``#`` and run to the end of the line.
"""

from __future__ import annotations

import io
import os
from collections import Counter
from dataclasses import dataclass
from typing import BinaryIO, Union

import numpy as np

from .errors import DegenerateElement, FormatError, NonManifold, NotClosed

Source = Union[bytes, str, os.PathLike, BinaryIO]


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 3) int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def edges(self) -> np.ndarray:
        """Undirected edges, one row per (face, local edge) pair, sorted per row."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        return np.sort(e, axis=1)

    def euler_characteristic(self) -> int:
        n_edges = len({tuple(e) for e in self.edges().tolist()})
        return self.n_vertices - n_edges + self.n_faces

    def areas(self) -> np.ndarray:
        v = self.vertices
        f = self.faces
        cr = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return 0.5 * np.linalg.norm(cr, axis=1)


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read()
    return source.read()


def parse_off(source: Source) -> TriangleMesh:
    """Parse an OFF document into a :class:`TriangleMesh`.

    Raises
    ------
    FormatError
        On a missing header, truncated data, non-triangular faces or
        out-of-range vertex indices.
    """
    try:
        text = _read_bytes(source).decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError(f"OFF data is not ASCII: {exc}") from None

    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line.split())
    if not lines or lines[0][0] != "OFF":
        raise FormatError("missing 'OFF' header")

    head = lines[0][1:]
    body = lines[1:]
    if not head:
        if not body:
            raise FormatError("missing counts line")
        head, body = body[0], body[1:]
    try:
        n_v, n_f = int(head[0]), int(head[1])
    except (IndexError, ValueError):
        raise FormatError(f"bad counts line: {' '.join(head)!r}") from None
    if n_v < 0 or n_f < 0:
        raise FormatError("negative element counts")
    if len(body) < n_v + n_f:
        raise FormatError(f"expected {n_v} vertex and {n_f} face lines, found {len(body)} lines")

    try:
        vertices = np.array([[float(t) for t in row[:3]] for row in body[:n_v]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"bad vertex line: {exc}") from None
    if vertices.shape != (n_v, 3):
        raise FormatError("every vertex line needs 3 coordinates")

    faces = np.empty((n_f, 3), dtype=np.int64)
    for i, row in enumerate(body[n_v : n_v + n_f]):
        try:
            k = int(row[0])
            idx = [int(t) for t in row[1 : 1 + k]]
        except ValueError:
            raise FormatError(f"bad face line {i}: {' '.join(row)!r}") from None
        if k != 3 or len(idx) != 3:
            raise FormatError(f"face {i} is not a triangle")
        faces[i] = idx
    if n_f and (faces.min() < 0 or faces.max() >= n_v):
        raise FormatError("face references a vertex index out of range")
    return TriangleMesh(vertices, faces)


def write_off(mesh: TriangleMesh) -> bytes:
    buf = io.StringIO()
    buf.write("OFF\n")
    buf.write(f"{mesh.n_vertices} {mesh.n_faces} 0\n")
    for x, y, z in mesh.vertices.tolist():
        buf.write(f"{x!r} {y!r} {z!r}\n")
    for i, j, k in mesh.faces.tolist():
        buf.write(f"3 {i} {j} {k}\n")
    return buf.getvalue().encode("ascii")


def check_closed_manifold(mesh: TriangleMesh, degenerate_rel: float = 1e-14) -> None:
    """Raise unless every edge has exactly two incident triangles and no
    triangle is degenerate."""
    if mesh.n_faces == 0:
        raise NotClosed("mesh has no faces")
    if len(np.unique(np.sort(mesh.faces, axis=1), axis=0)) != mesh.n_faces or np.any(
        (mesh.faces[:, 0] == mesh.faces[:, 1])
        | (mesh.faces[:, 1] == mesh.faces[:, 2])
        | (mesh.faces[:, 0] == mesh.faces[:, 2])
    ):
        raise NonManifold("repeated face or repeated vertex within a face")
    counts = Counter(map(tuple, mesh.edges().tolist()))
    over = [e for e, c in counts.items() if c > 2]
    if over:
        raise NonManifold(f"edge {over[0]} is shared by {counts[over[0]]} triangles")
    boundary = [e for e, c in counts.items() if c == 1]
    if boundary:
        raise NotClosed(f"{len(boundary)} boundary edges, e.g. {boundary[0]}")

    areas = mesh.areas()
    bad = np.flatnonzero(areas < degenerate_rel * areas.mean())
    if bad.size:
        raise DegenerateElement(f"triangle {bad[0]} has area {areas[bad[0]]:.3e}")
    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[mesh.faces.ravel()] = True
    if not used.all():
        raise FormatError(f"vertex {np.flatnonzero(~used)[0]} is not referenced by any face")


def octahedron() -> TriangleMesh:
    v = np.array(
        [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
    )
    f = np.array(
        [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
    )
    return TriangleMesh(v, f)


def icosahedron() -> TriangleMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return TriangleMesh(v, f)


def icosphere(level: int, radius: float = 1.0) -> TriangleMesh:
    """Loop-subdivided icosahedron projected to the sphere.

    Vertex counts are ``10 * 4**level + 2``: 12, 42, 162, 642, 2562, ...
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    mesh = icosahedron()
    verts = list(mesh.vertices)
    faces = mesh.faces
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                p = verts[a] + verts[b]
                verts.append(p / np.linalg.norm(p))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = np.array(new)
    return TriangleMesh(radius * np.array(verts), np.asarray(faces, dtype=np.int64))
