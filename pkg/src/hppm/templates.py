"""Per-part mesh templates cut from a whole-body template.

Vertices are first labelled with the bone carrying the largest blend weight,
raw labels are merged into parts, and every part is grown by ``n`` rings of
the mesh graph so neighbouring parts share an overlap band.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .geom import AdjacencyGraph, Mesh, build_adjacency

DEFAULT_DILATION = 5


def validate_blend_weights(W, n_vertices=None):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] < 1:
        raise DataError(f"blend weights must be (N, B) with B >= 1, got {W.shape}")
    if n_vertices is not None and W.shape[0] != n_vertices:
        raise DataError(f"blend weights have {W.shape[0]} rows for {n_vertices} vertices")
    if not np.all(np.isfinite(W)) or np.any(W < 0):
        raise DataError("blend weights must be finite and non-negative")
    if np.abs(W.sum(1) - 1.0).max() > 1e-6:
        raise DataError("blend weight rows must sum to 1")
    return W


def raw_segment(W) -> np.ndarray:
    """Index of the most influential bone per vertex; ties go to the lowest index."""
    return np.argmax(validate_blend_weights(W), axis=1)


@dataclass(frozen=True)
class MergeMap:
    """Raw segment index -> part index, plus the part display names."""

    mapping: tuple
    part_names: tuple
    segment_names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "mapping", tuple(int(m) for m in self.mapping))
        object.__setattr__(self, "part_names", tuple(self.part_names))
        object.__setattr__(self, "segment_names", tuple(self.segment_names))
        P = len(self.part_names)
        if any(not 0 <= m < P for m in self.mapping):
            raise ConfigError("merge map targets a part index outside the part list")
        if set(self.mapping) != set(range(P)):
            missing = sorted(set(range(P)) - set(self.mapping))
            raise ConfigError(f"merge map leaves parts without segments: {missing}")

    @property
    def n_segments(self):
        return len(self.mapping)

    @property
    def n_parts(self):
        return len(self.part_names)

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)), tuple(f"part_{i}" for i in range(n)))

    def to_dict(self):
        names = self.segment_names or tuple(str(i) for i in range(self.n_segments))
        return {
            "format": "hppm-merge-map/1",
            "part_names": list(self.part_names),
            "segments": [{"index": i, "bone": names[i], "part": self.part_names[m]}
                         for i, m in enumerate(self.mapping)],
        }

    @classmethod
    def from_dict(cls, doc):
        try:
            names = list(doc["part_names"])
            segs = sorted(doc["segments"], key=lambda s: s["index"])
            if [s["index"] for s in segs] != list(range(len(segs))):
                raise ConfigError("merge map segment indices must be 0..B-1")
            mapping = [names.index(s["part"]) if isinstance(s["part"], str) else int(s["part"])
                       for s in segs]
            seg_names = [s.get("bone", str(s["index"])) for s in segs]
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"malformed merge map: {e}") from None
        return cls(tuple(mapping), tuple(names), tuple(seg_names))

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_merge_map(path=None) -> MergeMap:
    """Read a merge map JSON file; the packaged default when ``path`` is None."""
    if path is None:
        text = resources.files("hppm").joinpath("data/merge_map.json").read_text()
    else:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read merge map {path}: {e}") from None
    try:
        return MergeMap.from_dict(json.loads(text))
    except json.JSONDecodeError as e:
        raise ConfigError(f"merge map is not valid JSON: {e}") from None


def merge_segments(labels, merge: MergeMap) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= merge.n_segments):
        bad = sorted(set(labels[(labels < 0) | (labels >= merge.n_segments)].tolist()))
        raise DataError(f"raw segments {bad} are not in the merge map")
    return np.asarray(merge.mapping, dtype=np.int64)[labels]


def dilate_mask(adj: AdjacencyGraph, mask, n: int) -> np.ndarray:
    """Grow a boolean vertex mask by ``n`` rings: the boolean reading of ``A^n m``."""
    if n < 0:
        raise ValueError("dilation steps must be >= 0")
    m = np.asarray(mask, dtype=bool).copy()
    A = adj.matrix
    for _ in range(n):
        grown = m | (A @ m.astype(np.int32) > 0)
        if np.array_equal(grown, m):
            break
        m = grown
    return m


@dataclass(frozen=True)
class PartTemplate:
    part_id: int
    name: str
    global_ids: np.ndarray
    core_ids: np.ndarray
    faces: np.ndarray
    template_vertices: np.ndarray
    overlap: dict

    @property
    def n_vertices(self):
        return len(self.global_ids)

    @property
    def mesh(self):
        return Mesh(self.template_vertices, self.faces)

    def local_index(self, global_ids):
        """Local positions of ``global_ids`` (which must belong to this part)."""
        g = np.asarray(global_ids, dtype=np.int64)
        idx = np.searchsorted(self.global_ids, g)
        ok = (idx < len(self.global_ids)) & (self.global_ids[np.minimum(idx, len(self.global_ids) - 1)] == g)
        if not np.all(ok):
            raise DataError(f"vertices {g[~ok][:5].tolist()} are not in part {self.part_id}")
        return idx

    def overlap_mask(self):
        """Local mask of vertices shared with any other part."""
        m = np.zeros(self.n_vertices, bool)
        for ids in self.overlap.values():
            m[self.local_index(ids)] = True
        return m


@dataclass(frozen=True)
class HppmTemplateSet:
    parts: tuple
    neighbors: tuple
    dilation: int
    merge_digest: str
    body_faces: np.ndarray
    n_body_vertices: int

    @property
    def n_parts(self):
        return len(self.parts)

    @property
    def part_names(self):
        return tuple(p.name for p in self.parts)

    def overlap_region(self, p, q):
        return overlap_region(self, p, q)

    def part_neighbors(self, p):
        return sorted(q for a, b in self.neighbors for q in ((b,) if a == p else (a,) if b == p else ()))


def _check_part(tset, p):
    if not (isinstance(p, (int, np.integer)) and 0 <= p < tset.n_parts):
        raise DataError(f"invalid part id {p!r}")


def overlap_region(tset: HppmTemplateSet, p, q) -> np.ndarray:
    """Sorted global ids shared by parts ``p`` and ``q``."""
    _check_part(tset, p)
    _check_part(tset, q)
    if p == q:
        raise DataError("overlap needs two distinct parts")
    return tset.parts[p].overlap.get(int(q), np.zeros(0, dtype=np.int64))


def build_templates(body: Mesh, W, merge: MergeMap, n: int = DEFAULT_DILATION,
                    adj: AdjacencyGraph | None = None) -> HppmTemplateSet:
    W = validate_blend_weights(W, body.n_vertices)
    if W.shape[1] != merge.n_segments:
        raise DataError(f"merge map covers {merge.n_segments} segments but weights have {W.shape[1]} bones")
    labels = merge_segments(raw_segment(W), merge)
    counts = np.bincount(labels, minlength=merge.n_parts)
    if np.any(counts == 0):
        empty = [merge.part_names[i] for i in np.flatnonzero(counts == 0)]
        raise DataError(f"parts without vertices after merging: {empty}")
    adj = build_adjacency(body) if adj is None else adj

    P = merge.n_parts
    masks = [dilate_mask(adj, labels == p, n) for p in range(P)]
    gids = [np.flatnonzero(m) for m in masks]
    overlaps = [dict() for _ in range(P)]
    neighbors = []
    for p in range(P):
        for q in range(p + 1, P):
            shared = np.flatnonzero(masks[p] & masks[q])
            if shared.size:
                overlaps[p][q] = shared
                overlaps[q][p] = shared
                neighbors.append((p, q))

    parts = []
    F = body.faces
    for p in range(P):
        inside = masks[p][F].all(axis=1)
        remap = -np.ones(body.n_vertices, np.int64)
        remap[gids[p]] = np.arange(len(gids[p]))
        parts.append(PartTemplate(
            part_id=p,
            name=merge.part_names[p],
            global_ids=gids[p],
            core_ids=np.flatnonzero(labels == p),
            faces=remap[F[inside]],
            template_vertices=body.vertices[gids[p]].copy(),
            overlap=overlaps[p],
        ))
    return HppmTemplateSet(tuple(parts), tuple(neighbors), int(n), merge.digest(),
                           np.array(F), body.n_vertices)


def slice_parts(tset: HppmTemplateSet, vertices):
    """Cut a whole-body vertex array into per-part arrays."""
    v = np.asarray(vertices, dtype=np.float64)
    if len(v) != tset.n_body_vertices:
        raise DataError(f"body has {len(v)} vertices, templates expect {tset.n_body_vertices}")
    return [v[p.global_ids] for p in tset.parts]
