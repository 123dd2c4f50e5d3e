"""Per-sample training losses for part reconstruction and fusion.

Every loss takes per-part sequences (index = part id) and a per-part
visibility vector; hidden parts contribute nothing. Norms are plain
Euclidean norms, summed, with no batch averaging.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError
from .geom import CameraIntrinsics, project
from .templates import HppmTemplateSet


@dataclass(frozen=True)
class LossWeights:
    v: float = 2.5
    j3d: float = 1250.0
    j2d: float = 2500.0
    s: float = 100.0
    r: float = 200.0
    t: float = 500.0
    ol: float = 100.0
    dc: float = 1.0

    def __post_init__(self):
        for k, val in asdict(self).items():
            if not val >= 0:
                raise ValueError(f"loss weight {k} must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    v: float
    j3d: float
    j2d: float
    s: float
    r: float
    t: float
    ol: float
    dc: float
    div: float
    fu: float
    total: float

    def to_dict(self):
        return {f"L_{k}": val for k, val in asdict(self).items()}


def _vis(visibility, n):
    vis = np.asarray(visibility, bool).reshape(-1)
    if len(vis) != n:
        raise DataError(f"need {n} visibility flags, got {len(vis)}")
    return vis


def _sum_point_norms(pred, gt, visibility):
    vis = _vis(visibility, len(pred))
    if len(gt) != len(pred):
        raise DataError("prediction and ground truth have different part counts")
    total = 0.0
    for p, (a, b) in enumerate(zip(pred, gt)):
        a = np.asarray(a, np.float64)
        b = np.asarray(b, np.float64)
        if a.shape != b.shape:
            raise DataError(f"part {p}: shape {a.shape} vs {b.shape}")
        if vis[p]:
            total += float(np.linalg.norm(a - b, axis=-1).sum())
    return total


def loss_vertex(pred, gt, visibility) -> float:
    return _sum_point_norms(pred, gt, visibility)


def loss_joint3d(pred_joints, gt_joints, visibility) -> float:
    return _sum_point_norms(pred_joints, gt_joints, visibility)


def loss_joint2d(pred_joints, gt_joints, cam: CameraIntrinsics, visibility) -> float:
    """Pixel distance between projected predicted and ground-truth joints."""
    vis = _vis(visibility, len(pred_joints))
    pred2d = [project(cam, a) if vis[p] else np.zeros((len(a), 2)) for p, a in enumerate(pred_joints)]
    gt2d = [project(cam, b) if vis[p] else np.zeros((len(b), 2)) for p, b in enumerate(gt_joints)]
    return _sum_point_norms(pred2d, gt2d, vis)


def loss_params(pred_states, gt_states, visibility):
    """``(L_s, L_r, L_t)``; rotations are compared as 6D vectors."""
    vis = _vis(visibility, len(pred_states))
    if len(gt_states) != len(pred_states):
        raise DataError("prediction and ground truth have different part counts")
    ls = lr = lt = 0.0
    for p, (a, b) in enumerate(zip(pred_states, gt_states)):
        if a.shape.shape != b.shape.shape:
            raise DataError(f"part {p}: {a.shape.size} vs {b.shape.size} shape parameters")
        if vis[p]:
            ls += float(np.linalg.norm(a.shape - b.shape))
            lr += float(np.linalg.norm(a.rot6d - b.rot6d))
            lt += float(np.linalg.norm(a.translation - b.translation))
    return ls, lr, lt


def loss_overlap(parts, templates: HppmTemplateSet, visibility, mode="pairwise") -> float:
    """Distance of each shared-vertex copy to the average location.

    ``"pairwise"`` averages the two copies of each shared vertex, so a pair of
    copies contributes exactly its gap. ``"centroid"`` uses one average over
    the whole shared band of a part pair instead.
    """
    vis = _vis(visibility, templates.n_parts)
    if len(parts) != templates.n_parts:
        raise DataError("need one decoded mesh per part")
    if mode not in ("pairwise", "centroid"):
        raise ValueError(f"unknown overlap mode {mode!r}")
    total = 0.0
    for p, q in templates.neighbors:
        if not (vis[p] and vis[q]):
            continue
        shared = templates.overlap_region(p, q)
        a = np.asarray(parts[p])[templates.parts[p].local_index(shared)]
        b = np.asarray(parts[q])[templates.parts[q].local_index(shared)]
        if mode == "pairwise":
            mid = 0.5 * (a + b)
            total += float(np.linalg.norm(a - mid, axis=1).sum() + np.linalg.norm(b - mid, axis=1).sum())
        else:
            c = np.concatenate([a, b]).mean(0)
            total += float(np.linalg.norm(a - c, axis=1).sum() + np.linalg.norm(b - c, axis=1).sum())
    return total


def loss_depth_consistency(parts, visibility) -> float:
    """Sum of ``|z - mean z|`` over every vertex of every visible part."""
    vis = _vis(visibility, len(parts))
    if not vis.any():
        raise DataError("depth consistency needs at least one visible part")
    z = np.concatenate([np.asarray(v, np.float64)[:, 2] for v, f in zip(parts, vis) if f])
    return float(np.abs(z - z.mean()).sum())


@dataclass
class LossInputs:
    pred_vertices: list
    gt_vertices: list
    pred_joints: list
    gt_joints: list
    pred_states: list
    gt_states: list
    camera: CameraIntrinsics
    templates: HppmTemplateSet
    visibility: np.ndarray


def total_loss(inputs: LossInputs, weights: LossWeights = LossWeights(), overlap_mode="pairwise") -> LossBreakdown:
    vis = inputs.visibility
    lv = loss_vertex(inputs.pred_vertices, inputs.gt_vertices, vis)
    lj3 = loss_joint3d(inputs.pred_joints, inputs.gt_joints, vis)
    lj2 = loss_joint2d(inputs.pred_joints, inputs.gt_joints, inputs.camera, vis)
    ls, lr, lt = loss_params(inputs.pred_states, inputs.gt_states, vis)
    lol = loss_overlap(inputs.pred_vertices, inputs.templates, vis, overlap_mode)
    ldc = loss_depth_consistency(inputs.pred_vertices, vis)
    w = weights
    div = w.v * lv + w.j3d * lj3 + w.j2d * lj2 + w.s * ls + w.r * lr + w.t * lt
    fu = w.ol * lol + w.dc * ldc
    return LossBreakdown(lv, lj3, lj2, ls, lr, lt, lol, ldc, div, fu, div + fu)
