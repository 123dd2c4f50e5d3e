"""Connect decoded part meshes into one mesh.

A template vertex that only one visible part covers is copied from that
part. A vertex shared by two visible parts becomes the weighted sum

    (a * d2 + b * d1) / (d1 + d2)

of the two copies ``a`` and ``b``, where ``d1`` and ``d2`` are the numbers of
mesh edges from the vertex to the nearest non-shared vertex inside each part.
Vertices shared by more parts use weights proportional to ``1 / d``, which is
the same rule written for any number of copies.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, FusionError
from .geom import Mesh, faces_adjacency, save_mesh
from .templates import HppmTemplateSet, PartTemplate

log = logging.getLogger(__name__)

UNREACHABLE = -1


@dataclass(frozen=True)
class TopologyDistances:
    """Edge distance from each shared vertex of a part to its nearest
    unshared vertex. ``local`` covers every local vertex: 0 for unshared
    vertices, :data:`UNREACHABLE` where no unshared vertex is reachable."""

    part_id: int
    global_ids: np.ndarray
    local: np.ndarray

    def overlap_items(self):
        m = self.local != 0
        return dict(zip(self.global_ids[m].tolist(), self.local[m].tolist()))

    def lookup(self, global_ids):
        idx = np.searchsorted(self.global_ids, global_ids)
        return self.local[idx]


def multi_source_bfs(adj_matrix, sources) -> np.ndarray:
    """Hop count from the nearest source for every vertex, -1 if unreachable."""
    n = adj_matrix.shape[0]
    dist = np.full(n, UNREACHABLE, dtype=np.int64)
    frontier = np.zeros(n, bool)
    frontier[np.asarray(sources, dtype=np.int64)] = True
    dist[frontier] = 0
    level = 0
    while frontier.any():
        level += 1
        reached = (adj_matrix @ frontier.astype(np.int32)) > 0
        frontier = reached & (dist == UNREACHABLE)
        dist[frontier] = level
    return dist


def topology_distances(template: PartTemplate) -> TopologyDistances:
    overlap = template.overlap_mask()
    adj = faces_adjacency(template.faces, template.n_vertices)
    d = multi_source_bfs(adj.matrix, np.flatnonzero(~overlap))
    d[~overlap] = 0
    return TopologyDistances(template.part_id, template.global_ids, d)


def all_topology_distances(templates: HppmTemplateSet):
    return [topology_distances(p) for p in templates.parts]


@dataclass(frozen=True)
class FusedMesh:
    """Fused vertices keyed by whole-body template id.

    ``faces`` index into ``vertices``; ``sources``/``weights`` hold, per fused
    vertex, the contributing part ids (padded with -1) and their weights.
    """

    vertex_ids: np.ndarray
    vertices: np.ndarray
    faces: np.ndarray
    sources: np.ndarray
    weights: np.ndarray

    @property
    def mesh(self):
        return Mesh(self.vertices, self.faces)

    @property
    def body_faces(self):
        return self.vertex_ids[self.faces]

    def sidecar(self):
        prov = []
        for gid, src, w in zip(self.vertex_ids.tolist(), self.sources.tolist(), self.weights.tolist()):
            parts = [p for p in src if p >= 0]
            if len(parts) == 1:
                prov.append({"id": gid, "part": parts[0]})
            else:
                prov.append({"id": gid, "parts": parts, "weights": w[:len(parts)]})
        return {"format": "hppm-fused/1", "vertex_ids": self.vertex_ids.tolist(), "provenance": prov}

    def save(self, obj_path, sidecar_path=None):
        save_mesh(self.mesh, obj_path)
        sidecar_path = Path(obj_path).with_suffix(".json") if sidecar_path is None else sidecar_path
        Path(sidecar_path).write_text(json.dumps(self.sidecar()) + "\n")


def _blend(copies, dists, on_multi):
    """Fuse the copies ``(K, 3)`` of one vertex given their distances ``(K,)``."""
    K = len(copies)
    if np.all(copies == copies[0]):
        w = np.full(K, 1.0 / K)
        return copies[0].copy(), w
    if K > 2 and on_multi == "error":
        raise FusionError(f"vertex covered by {K} visible parts")
    reach = dists != UNREACHABLE
    if not reach.any():
        log.warning("shared vertex with no reachable unshared vertex in any part; averaging")
        w = np.full(K, 1.0 / K)
        return copies.mean(0), w
    inv = np.where(reach, 1.0 / np.where(reach, dists, 1), 0.0)
    w = inv / inv.sum()
    return w @ copies, w


def gradual_connect(parts, visibility, body_faces, distances=None, on_multi="blend") -> FusedMesh:
    """Fuse visible parts.

    ``parts`` is a sequence of ``(PartTemplate, (N_p, 3) vertices)``.
    ``distances`` may carry precomputed :class:`TopologyDistances` per part.
    With ``on_multi="error"`` a vertex covered by more than two visible parts
    raises :class:`FusionError`.
    """
    if on_multi not in ("blend", "error"):
        raise ValueError(f"unknown on_multi {on_multi!r}")
    visibility = np.asarray(visibility, bool)
    if len(visibility) != len(parts):
        raise DataError("need one visibility flag per part")
    if not visibility.any():
        raise DataError("no visible part to fuse")
    vis_parts = []
    for (tpl, verts), vis in zip(parts, visibility):
        verts = np.asarray(verts, np.float64)
        if verts.shape != (tpl.n_vertices, 3):
            raise DataError(f"part {tpl.part_id} expects ({tpl.n_vertices}, 3) vertices, got {verts.shape}")
        if vis:
            vis_parts.append((tpl, verts))
    if distances is None:
        distances = {tpl.part_id: topology_distances(tpl) for tpl, _ in vis_parts}
    elif not isinstance(distances, dict):
        distances = {d.part_id: d for d in distances}

    all_ids = np.concatenate([tpl.global_ids for tpl, _ in vis_parts])
    owners = np.concatenate([np.full(tpl.n_vertices, tpl.part_id) for tpl, _ in vis_parts])
    copies = np.concatenate([v for _, v in vis_parts])
    dloc = np.concatenate([distances[tpl.part_id].local for tpl, _ in vis_parts])
    # coverage counts visible parts only: a vertex whose other owner is hidden is copied
    order = np.lexsort((owners, all_ids))
    all_ids, owners, copies, dloc = all_ids[order], owners[order], copies[order], dloc[order]
    ids, start, count = np.unique(all_ids, return_index=True, return_counts=True)

    K = int(count.max())
    out = np.empty((len(ids), 3))
    sources = np.full((len(ids), K), -1, np.int64)
    weights = np.zeros((len(ids), K))
    single = count == 1
    out[single] = copies[start[single]]
    sources[single, 0] = owners[start[single]]
    weights[single, 0] = 1.0
    pair = np.flatnonzero(count == 2)
    if pair.size:
        a, b = copies[start[pair]], copies[start[pair] + 1]
        d1 = dloc[start[pair]].astype(np.float64)
        d2 = dloc[start[pair] + 1].astype(np.float64)
        r1, r2 = d1 != UNREACHABLE, d2 != UNREACHABLE
        both = r1 & r2
        with np.errstate(invalid="ignore", divide="ignore"):
            fused = (a * d2[:, None] + b * d1[:, None]) / (d1 + d2)[:, None]
            w1 = np.where(both, d2 / (d1 + d2), np.where(r1, 1.0, np.where(r2, 0.0, 0.5)))
        if np.any(~r1 & ~r2):
            log.warning("%d shared vertices with no reachable unshared vertex; averaging",
                        int(np.sum(~r1 & ~r2)))
        fused = np.where(both[:, None], fused,
                         np.where(r1[:, None], a, np.where(r2[:, None], b, 0.5 * (a + b))))
        same = np.all(a == b, axis=1)
        fused[same] = a[same]
        w1[same] = 0.5
        out[pair] = fused
        sources[pair, 0] = owners[start[pair]]
        sources[pair, 1] = owners[start[pair] + 1]
        weights[pair, 0] = w1
        weights[pair, 1] = 1.0 - w1
    for i in np.flatnonzero(count > 2):
        sl = slice(start[i], start[i] + count[i])
        out[i], w = _blend(copies[sl], dloc[sl], on_multi)
        sources[i, :count[i]] = owners[sl]
        weights[i, :count[i]] = w

    F = np.asarray(body_faces, np.int64).reshape(-1, 3)
    present = np.zeros(max(int(F.max(initial=-1)) + 1, int(ids.max()) + 1), bool)
    present[ids] = True
    keep = present[F].all(axis=1)
    faces = np.searchsorted(ids, F[keep])
    return FusedMesh(ids, out, faces, sources, weights)


def fuse_templates(templates: HppmTemplateSet, part_vertices, visibility, distances=None,
                   on_multi="blend") -> FusedMesh:
    return gradual_connect(list(zip(templates.parts, part_vertices)), visibility,
                           templates.body_faces, distances, on_multi)


def overlap_residual(parts, visibility):
    """Gaps between the two copies of each shared vertex of visible adjacent parts.

    Returns a list of ``(p, q, global_ids, gaps)`` with gaps in meters.
    """
    visibility = np.asarray(visibility, bool)
    out = []
    for i, (tp, vp) in enumerate(parts):
        for j in range(i + 1, len(parts)):
            tq, vq = parts[j]
            if not (visibility[i] and visibility[j]):
                continue
            shared = tp.overlap.get(tq.part_id)
            if shared is None or len(shared) == 0:
                continue
            a = np.asarray(vp)[tp.local_index(shared)]
            b = np.asarray(vq)[tq.local_index(shared)]
            out.append((tp.part_id, tq.part_id, shared, np.linalg.norm(a - b, axis=1)))
    return out
