"""Mesh container, OBJ I/O, mesh adjacency, rigid transforms, 6D rotations
and pinhole projection.

Point sets are ``(N, 3)`` float64 arrays in meters. Whenever a mesh has to be
treated as one long vector it is flattened row-major, i.e. interleaved
``(x1, y1, z1, x2, ...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import (
    BehindCameraError,
    DataError,
    DegenerateRotationError,
    MeshFormatError,
    NumericError,
)


def _frozen(a):
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh. ``faces`` may be empty, which makes it a point cloud."""

    vertices: np.ndarray
    faces: np.ndarray = field(default_factory=lambda: np.zeros((0, 3), dtype=np.int64))

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise DataError(f"vertices must be (N, 3), got {v.shape}")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.ndim != 2 or f.shape[1] != 3:
            raise DataError(f"faces must be (F, 3), got {f.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("vertex coordinates must be finite")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise DataError(f"face index out of range for {len(v)} vertices")
            if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
                raise DataError("degenerate face with repeated vertex index")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def with_vertices(self, vertices):
        return Mesh(vertices, self.faces)


# --------------------------------------------------------------------------
# Wavefront OBJ

def load_mesh(path) -> Mesh:
    """Read the ``v``/``f`` subset of a Wavefront OBJ file.

    Normals, texture coordinates, groups and materials are skipped. Face
    tokens of the form ``i/j/k`` use only the vertex index; negative (relative)
    indices are resolved against the vertices read so far.
    """
    verts, faces = [], []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tag, *rest = line.split()
            if tag == "v":
                if len(rest) not in (3, 4, 6, 7):
                    raise MeshFormatError(f"{path}:{lineno}: malformed vertex line")
                try:
                    verts.append([float(x) for x in rest[:3]])
                except ValueError:
                    raise MeshFormatError(f"{path}:{lineno}: non-numeric vertex") from None
            elif tag == "f":
                if len(rest) != 3:
                    raise MeshFormatError(
                        f"{path}:{lineno}: only triangular faces are supported, got {len(rest)} corners")
                tri = []
                for tok in rest:
                    try:
                        idx = int(tok.split("/", 1)[0])
                    except ValueError:
                        raise MeshFormatError(f"{path}:{lineno}: bad face index {tok!r}") from None
                    if idx > 0:
                        idx -= 1
                    elif idx < 0:
                        idx += len(verts)
                    else:
                        raise MeshFormatError(f"{path}:{lineno}: OBJ indices are 1-based")
                    if not 0 <= idx < len(verts):
                        raise MeshFormatError(f"{path}:{lineno}: face index {tok} out of range")
                    tri.append(idx)
                faces.append(tri)
    v = np.array(verts, dtype=np.float64).reshape(-1, 3)
    f = np.array(faces, dtype=np.int64).reshape(-1, 3)
    try:
        return Mesh(v, f)
    except DataError as e:
        raise MeshFormatError(f"{path}: {e}") from None


def save_mesh(mesh: Mesh, path) -> None:
    """Write ``mesh`` as ASCII OBJ; coordinates use 17 significant digits so
    a load after save reproduces them bitwise."""
    path = Path(path)
    lines = ["v %.17g %.17g %.17g" % tuple(p) for p in mesh.vertices.tolist()]
    lines += ["f %d %d %d" % tuple(t) for t in (mesh.faces + 1).tolist()]
    path.write_text("\n".join(lines) + ("\n" if lines else ""))


# --------------------------------------------------------------------------
# Adjacency

class AdjacencyGraph:
    """Symmetric, loop-free vertex adjacency of a triangle mesh.

    ``matrix`` is the 0/1 adjacency matrix in CSR form; the column indices of
    each row are sorted, so ``neighbors(i)`` is sorted as well.
    """

    def __init__(self, matrix):
        m = sp.csr_matrix(matrix, dtype=np.int8)
        m.sum_duplicates()
        m.sort_indices()
        self.matrix = m

    @property
    def n_vertices(self):
        return self.matrix.shape[0]

    def neighbors(self, i):
        m = self.matrix
        return m.indices[m.indptr[i]:m.indptr[i + 1]]

    def degree(self):
        return np.diff(self.matrix.indptr)

    def edges(self):
        """Undirected edges as an ``(E, 2)`` array with ``i < j``."""
        coo = self.matrix.tocoo()
        keep = coo.row < coo.col
        return np.stack([coo.row[keep], coo.col[keep]], axis=1).astype(np.int64)


def faces_adjacency(faces, n_vertices) -> AdjacencyGraph:
    faces = np.asarray(faces, dtype=np.int64).reshape(-1, 3)
    i = np.concatenate([faces[:, 0], faces[:, 1], faces[:, 2]])
    j = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    data = np.ones(len(rows), dtype=np.int8)
    m = sp.coo_matrix((data, (rows, cols)), shape=(n_vertices, n_vertices)).tocsr()
    m.data[:] = 1
    return AdjacencyGraph(m)


def build_adjacency(mesh: Mesh) -> AdjacencyGraph:
    return faces_adjacency(mesh.faces, mesh.n_vertices)


# --------------------------------------------------------------------------
# Rotations

def rot6d_to_matrix(r6) -> np.ndarray:
    """Gram-Schmidt the two 3-vectors of a 6D rotation into a rotation matrix.

    The six values are the first and second matrix columns. Raises
    :class:`DegenerateRotationError` when the first vector is zero or the
    second is parallel to it.
    """
    r6 = np.asarray(r6, dtype=np.float64).reshape(6)
    a1, a2 = r6[:3], r6[3:]
    n1 = np.linalg.norm(a1)
    if not np.isfinite(n1) or n1 < 1e-12:
        raise DegenerateRotationError(f"zero first vector in 6D rotation {r6.tolist()}")
    b1 = a1 / n1
    u2 = a2 - np.dot(b1, a2) * b1
    n2 = np.linalg.norm(u2)
    if n2 < 1e-12 * max(1.0, np.linalg.norm(a2)) or n2 == 0.0:
        raise DegenerateRotationError(f"parallel or zero vectors in 6D rotation {r6.tolist()}")
    b2 = u2 / n2
    b3 = np.cross(b1, b2)
    return np.stack([b1, b2, b3], axis=1)


def matrix_to_rot6d(R) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise DataError(f"rotation must be 3x3, got {R.shape}")
    if not np.all(np.isfinite(R)) or np.abs(R.T @ R - np.eye(3)).max() > 1e-6:
        raise NumericError("matrix is not orthonormal")
    return np.concatenate([R[:, 0], R[:, 1]])


# --------------------------------------------------------------------------
# Transforms

@dataclass(frozen=True)
class PartTransform:
    """``x -> rotation @ x + translation``.

    With ``rigid=True`` the 3x3 block must be a proper rotation. Affine
    transforms (``rigid=False``) only require finite entries.
    """

    rotation: np.ndarray
    translation: np.ndarray
    rigid: bool = True

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise NumericError("transform entries must be finite")
        if self.rigid:
            if np.abs(R.T @ R - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
                raise NumericError("rigid transform needs a proper rotation")
        object.__setattr__(self, "rotation", _frozen(R))
        object.__setattr__(self, "translation", _frozen(t))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, M, rigid=True):
        M = np.asarray(M, dtype=np.float64)
        if M.shape != (4, 4) or not np.allclose(M[3], [0, 0, 0, 1]):
            raise DataError("homogeneous matrix must be 4x4 with last row (0, 0, 0, 1)")
        return cls(M[:3, :3], M[:3, 3], rigid=rigid)

    @classmethod
    def from_rot6d(cls, r6, translation):
        return cls(rot6d_to_matrix(r6), translation)

    @property
    def matrix(self):
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    @property
    def rot6d(self):
        return matrix_to_rot6d(self.rotation)

    def inverse(self):
        if self.rigid:
            Rt = self.rotation.T
            return PartTransform(Rt, -Rt @ self.translation)
        Ai = np.linalg.inv(self.rotation)
        return PartTransform(Ai, -Ai @ self.translation, rigid=False)

    def transpose_canonical(self):
        """The literal ``M^T`` applied to homogeneous points, keeping xyz.

        This equals :meth:`inverse` only when the translation is zero; it is
        kept for comparison with the shorthand canonicalization.
        """
        return PartTransform(self.rotation.T, np.zeros(3), rigid=self.rigid)

    def __matmul__(self, other):
        if not isinstance(other, PartTransform):
            return NotImplemented
        return PartTransform(self.rotation @ other.rotation,
                             self.rotation @ other.translation + self.translation,
                             rigid=self.rigid and other.rigid)

    def apply(self, points):
        return apply_transform(self, points)


def apply_transform(M: PartTransform, vertices) -> np.ndarray:
    """Map each row ``x`` of ``vertices`` to ``R x + T``."""
    p = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    return p @ M.rotation.T + M.translation


# --------------------------------------------------------------------------
# Camera

@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            val = float(getattr(self, name))
            if not np.isfinite(val):
                raise DataError(f"camera {name} must be finite")
            object.__setattr__(self, name, val)
        if self.fx <= 0 or self.fy <= 0:
            raise DataError("focal lengths must be positive")

    def to_dict(self):
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_dict(cls, d):
        return cls(d["fx"], d["fy"], d["cx"], d["cy"])


def project(cam: CameraIntrinsics, points) -> np.ndarray:
    """Pinhole projection without distortion, returning ``(N, 2)`` pixels."""
    p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    bad = np.flatnonzero(~(p[:, 2] > 0))
    if bad.size:
        raise BehindCameraError(bad)
    z = p[:, 2]
    return np.stack([cam.fx * p[:, 0] / z + cam.cx, cam.fy * p[:, 1] / z + cam.cy], axis=1)
