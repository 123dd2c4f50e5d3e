"""MPVE and MPJPE over visible parts, in millimeters."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .parts import joint_owners


def _gather(pred, gt, visibility):
    if visibility is None:
        a = np.asarray(pred, np.float64).reshape(-1, 3)
        b = np.asarray(gt, np.float64).reshape(-1, 3)
    else:
        vis = np.asarray(visibility, bool)
        if len(vis) != len(pred) or len(gt) != len(pred):
            raise DataError("pred, gt and visibility must have one entry per part")
        a = [np.asarray(x, np.float64).reshape(-1, 3) for x, f in zip(pred, vis) if f]
        b = [np.asarray(x, np.float64).reshape(-1, 3) for x, f in zip(gt, vis) if f]
        a = np.concatenate(a) if a else np.zeros((0, 3))
        b = np.concatenate(b) if b else np.zeros((0, 3))
    if a.shape != b.shape:
        raise DataError(f"prediction {a.shape} and ground truth {b.shape} are not aligned")
    if len(a) == 0:
        raise DataError("nothing to compare")
    return a, b


def mpve(pred, gt, visibility=None) -> float:
    """Mean per-vertex Euclidean error in mm.

    ``pred``/``gt`` are either aligned ``(N, 3)`` arrays, or per-part
    sequences together with per-part ``visibility``.
    """
    a, b = _gather(pred, gt, visibility)
    # scale before the norm so that an exact uniform offset gives an exact mean
    return float(np.linalg.norm(1000.0 * (a - b), axis=1).mean())


def mpjpe(pred_joints, gt_joints, mask=None) -> float:
    """Mean per-joint position error in mm over joints selected by ``mask``."""
    a = np.asarray(pred_joints, np.float64).reshape(-1, 3)
    b = np.asarray(gt_joints, np.float64).reshape(-1, 3)
    if a.shape != b.shape:
        raise DataError(f"prediction {a.shape} and ground truth {b.shape} are not aligned")
    if mask is not None:
        m = np.asarray(mask, bool)
        a, b = a[m], b[m]
    if len(a) == 0:
        raise DataError("no joint to compare")
    return float(np.linalg.norm(1000.0 * (a - b), axis=1).mean())


def joint_mask(visibility, owners=None):
    """A joint counts when at least one part that regresses it is visible."""
    owners = joint_owners() if owners is None else owners
    vis = np.asarray(visibility, bool)
    return np.array([any(vis[p] for p in o) for o in owners], bool)


@dataclass
class MetricsReport:
    mpve_mm: float
    mpjpe_mm: float
    n_samples: int
    n_vertices: int
    n_joints: int
    per_part: dict = field(default_factory=dict)

    def to_dict(self):
        return {"mpve_mm": self.mpve_mm, "mpjpe_mm": self.mpjpe_mm, "n_samples": self.n_samples,
                "n_vertices": self.n_vertices, "n_joints": self.n_joints, "per_part": self.per_part}


class MetricsAccumulator:
    """Averages per-sample MPVE/MPJPE over a benchmark and keeps per-part totals."""

    def __init__(self, part_names):
        self.part_names = tuple(part_names)
        self._mpve, self._mpjpe = [], []
        self._nv = self._nj = 0
        self._part_sum = np.zeros(len(part_names))
        self._part_cnt = np.zeros(len(part_names), np.int64)

    def add(self, pred_parts, gt_parts, visibility, pred_joints, gt_joints, jmask):
        vis = np.asarray(visibility, bool)
        self._mpve.append(mpve(pred_parts, gt_parts, vis))
        self._nv += sum(len(g) for g, f in zip(gt_parts, vis) if f)
        if np.any(jmask):
            self._mpjpe.append(mpjpe(pred_joints, gt_joints, jmask))
            self._nj += int(np.sum(jmask))
        for p in np.flatnonzero(vis):
            d = np.linalg.norm(1000.0 * (np.asarray(pred_parts[p]) - np.asarray(gt_parts[p])), axis=1)
            self._part_sum[p] += d.sum()
            self._part_cnt[p] += len(d)

    def report(self) -> MetricsReport:
        if not self._mpve:
            raise DataError("no samples evaluated")
        per_part = {
            name: {"mpve_mm": float(self._part_sum[i] / self._part_cnt[i]), "n_vertices": int(self._part_cnt[i])}
            for i, name in enumerate(self.part_names) if self._part_cnt[i]
        }
        mj = float(np.mean(self._mpjpe)) if self._mpjpe else float("nan")
        return MetricsReport(float(np.mean(self._mpve)), mj, len(self._mpve), self._nv, self._nj, per_part)
