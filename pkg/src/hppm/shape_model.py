"""Per-part linear shape models and joint regressors.

A part mesh is decoded as ``M (U S + mean)``: a mean shape plus a linear
combination of orthonormal directions, moved by a rigid transform. The number
of directions is chosen per part as the smallest one that keeps both the mean
vertex error and the mean joint error on the training set under a budget.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DataError
from .geom import PartTransform, apply_transform, rot6d_to_matrix

RIDGE = 1e-8
ROW_SUM_WEIGHT = 1e-3


@dataclass(frozen=True)
class TrainingConfig:
    max_error_mm: float = 2.0
    k_min: int = 16
    k_max: int = 64

    def __post_init__(self):
        if not self.max_error_mm > 0:
            raise ValueError("max_error_mm must be positive")
        if not 1 <= self.k_min <= self.k_max:
            raise ValueError("need 1 <= k_min <= k_max")

    def to_dict(self):
        return {"max_error_mm": self.max_error_mm, "k_min": self.k_min, "k_max": self.k_max}


@dataclass(frozen=True)
class JointRegressor:
    part_id: int
    matrix: np.ndarray
    joint_names: tuple = ()

    @property
    def n_joints(self):
        return self.matrix.shape[0]

    @property
    def n_vertices(self):
        return self.matrix.shape[1]


@dataclass
class TrainingReport:
    k: int
    rank: int
    vertex_error_mm: float
    joint_error_mm: float
    budget_met: bool
    # errors for k = 0 .. min(k_max, rank)
    vertex_curve_mm: np.ndarray = field(default=None, repr=False)
    joint_curve_mm: np.ndarray = field(default=None, repr=False)

    def to_dict(self):
        return {"k": self.k, "rank": self.rank, "vertex_error_mm": self.vertex_error_mm,
                "joint_error_mm": self.joint_error_mm, "budget_met": self.budget_met}


@dataclass(frozen=True)
class PartShapeModel:
    part_id: int
    basis: np.ndarray
    mean: np.ndarray
    regressor: JointRegressor
    report: TrainingReport | None = None

    @property
    def k(self):
        return self.basis.shape[1]

    @property
    def n_vertices(self):
        return len(self.mean) // 3

    def canonical(self, shape):
        return canonical_shape(self, shape)


@dataclass(frozen=True)
class PartState:
    part_id: int
    shape: np.ndarray
    rot6d: np.ndarray
    translation: np.ndarray
    visible: bool = True

    def __post_init__(self):
        object.__setattr__(self, "shape", np.asarray(self.shape, np.float64).reshape(-1))
        object.__setattr__(self, "rot6d", np.asarray(self.rot6d, np.float64).reshape(6))
        object.__setattr__(self, "translation", np.asarray(self.translation, np.float64).reshape(3))
        object.__setattr__(self, "visible", bool(self.visible))

    @property
    def transform(self):
        return PartTransform(rot6d_to_matrix(self.rot6d), self.translation)

    @classmethod
    def from_transform(cls, part_id, shape, transform: PartTransform, visible=True):
        return cls(part_id, shape, transform.rot6d, transform.translation, visible)

    def to_dict(self):
        return {"part_id": self.part_id, "visible": self.visible, "S": self.shape.tolist(),
                "rot6d": self.rot6d.tolist(), "T": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["part_id"]), d["S"], d["rot6d"], d["T"], bool(d["visible"]))


# --------------------------------------------------------------------------
# joint regressor

def _stack(vertices, joints):
    V = np.asarray(vertices, np.float64)
    J = np.asarray(joints, np.float64)
    if V.ndim == 2:
        V = V[None]
    if J.ndim == 2:
        J = J[None]
    if V.ndim != 3 or V.shape[2] != 3 or J.ndim != 3 or J.shape[2] != 3:
        raise DataError("expected vertices (m, N, 3) and joints (m, J, 3)")
    if len(V) != len(J) or len(V) == 0:
        raise DataError(f"need matching, non-empty sample counts, got {len(V)} and {len(J)}")
    return V, J


def train_joint_regressor(vertices, joints, part_id=0, joint_names=(),
                          ridge=RIDGE, row_sum_weight=ROW_SUM_WEIGHT) -> JointRegressor:
    """Least-squares matrix mapping part vertices to joints.

    ``vertices`` is ``(m, N, 3)`` (or a single ``(N, 3)`` template) and
    ``joints`` is ``(m, J, 3)``. Each row solves the normal equations of
    ``sum ||J - R V||^2 + row_sum_weight (sum(row) - 1)^2 + ridge ||row||^2``;
    the row-sum term keeps regression close to commuting with rigid motion.
    """
    V, J = _stack(vertices, joints)
    if J.shape[1] == 0:
        raise DataError(f"part {part_id} has no joints to regress")
    m, N, _ = V.shape
    A = V.transpose(0, 2, 1).reshape(3 * m, N)
    B = J.transpose(0, 2, 1).reshape(3 * m, J.shape[1])
    G = A.T @ A
    G += row_sum_weight
    G[np.diag_indices_from(G)] += ridge
    rhs = A.T @ B + row_sum_weight
    X = scipy.linalg.solve(G, rhs, assume_a="pos")
    return JointRegressor(part_id, np.ascontiguousarray(X.T), tuple(joint_names))


def regress_joints(reg: JointRegressor, part_vertices) -> np.ndarray:
    V = np.asarray(part_vertices, np.float64)
    if V.shape != (reg.n_vertices, 3):
        raise DataError(f"regressor expects ({reg.n_vertices}, 3) vertices, got {V.shape}")
    return reg.matrix @ V


# --------------------------------------------------------------------------
# shape basis

def _rank(s, shape):
    if s.size == 0:
        return 0
    tol = max(1e-10, s[0] * max(shape) * np.finfo(float).eps)
    return int(np.sum(s > tol))


def _mean_norm_mm(residual, m):
    return 1000.0 * float(np.linalg.norm(residual.reshape(m, -1, 3), axis=2).mean())


def train_part_pca(samples, regressor: JointRegressor, gt_joints, cfg: TrainingConfig = TrainingConfig(),
                   part_id=None) -> PartShapeModel:
    """Fit a mean and orthonormal basis to canonical-space part meshes.

    ``samples`` is ``(m, N, 3)``; ``gt_joints`` is ``(m, J, 3)`` in the same
    frame. ``k`` is the smallest value in ``[k_min, k_max]`` (both clamped to
    the data rank) at which the mean vertex error and the mean error of joints
    regressed from the reconstruction are both within ``cfg.max_error_mm``.
    If no such ``k`` exists the model uses ``k_max`` and the report says so.
    """
    X = np.asarray(samples, np.float64)
    if X.ndim != 3 or X.shape[2] != 3:
        raise DataError(f"samples must be (m, N, 3), got {X.shape}")
    m, N, _ = X.shape
    if m < 2:
        raise DataError("need at least two training samples")
    Jgt = np.asarray(gt_joints, np.float64)
    if Jgt.shape != (m, regressor.n_joints, 3):
        raise DataError(f"joints must be ({m}, {regressor.n_joints}, 3), got {Jgt.shape}")
    if regressor.n_vertices != N:
        raise DataError("regressor and samples disagree on vertex count")
    pid = regressor.part_id if part_id is None else part_id

    flat = X.reshape(m, 3 * N)
    # averaging offsets from the first sample keeps identical samples exact
    mean = flat[0] + (flat - flat[0]).mean(axis=0)
    Xc = flat - mean
    _, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    r = _rank(s, Xc.shape)
    k_lo = min(cfg.k_min, r)
    k_hi = min(cfg.k_max, r)
    dirs = Vt[:k_hi]
    coef = Xc @ dirs.T

    R = Xc.copy()
    Jmat = regressor.matrix
    jres = np.einsum("jn,mnc->mjc", Jmat, X) - Jgt
    jdirs = np.einsum("jn,knc->kjc", Jmat, dirs.reshape(k_hi, N, 3)) if k_hi else None
    jrec = np.einsum("jn,mnc->mjc", Jmat, R.reshape(m, N, 3))
    vcurve = np.empty(k_hi + 1)
    jcurve = np.empty(k_hi + 1)
    for k in range(k_hi + 1):
        if k:
            R -= np.outer(coef[:, k - 1], dirs[k - 1])
            jrec -= coef[:, k - 1, None, None] * jdirs[k - 1][None]
        vcurve[k] = _mean_norm_mm(R, m)
        # reconstruction = X - R, so its regressed joints miss by jres - J R
        jcurve[k] = 1000.0 * float(np.linalg.norm(jres - jrec, axis=2).mean())

    budget = cfg.max_error_mm
    ok = (vcurve <= budget) & (jcurve <= budget)
    candidates = [k for k in range(k_lo, k_hi + 1) if ok[k]]
    k = candidates[0] if candidates else k_hi
    report = TrainingReport(k, r, float(vcurve[k]), float(jcurve[k]), bool(ok[k]), vcurve, jcurve)
    basis = np.ascontiguousarray(dirs[:k].T)
    return PartShapeModel(pid, basis, mean, regressor, report)


def canonical_shape(model: PartShapeModel, shape) -> np.ndarray:
    S = np.asarray(shape, np.float64).reshape(-1)
    if S.shape != (model.k,):
        raise DataError(f"part {model.part_id} expects {model.k} shape parameters, got {S.shape[0]}")
    return (model.mean + model.basis @ S).reshape(-1, 3)


def encode_shape(model: PartShapeModel, v_canonical) -> np.ndarray:
    """Shape parameters ``U^T (v - mean)`` of a canonical-space part mesh."""
    v = np.asarray(v_canonical, np.float64).reshape(-1)
    if v.shape != model.mean.shape:
        raise DataError(f"part {model.part_id} expects {model.n_vertices} vertices, got {v.size / 3:g}")
    return model.basis.T @ (v - model.mean)


def decode_part(model: PartShapeModel, state: PartState) -> np.ndarray:
    """World-space part vertices ``R (U S + mean) + T``."""
    return apply_transform(state.transform, canonical_shape(model, state.shape))


def decode_joints(model: PartShapeModel, state: PartState) -> np.ndarray:
    return regress_joints(model.regressor, decode_part(model, state))
