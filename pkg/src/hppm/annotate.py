"""Part annotations (shape parameters plus a global transform) fitted to
whole-body ground-truth meshes."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DegenerateGeometryError
from .geom import CameraIntrinsics, Mesh, PartTransform, apply_transform
from .parts import JOINT_NAMES
from .shape_model import PartShapeModel, PartState, decode_part, encode_shape, regress_joints
from .templates import HppmTemplateSet


class FitMode(enum.Enum):
    RIGID = "rigid"
    AFFINE = "affine"


def _as_points(a, name):
    a = np.asarray(a, np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise DataError(f"{name} must be (N, 3), got {a.shape}")
    return a


def fit_rigid(v, v0) -> PartTransform:
    """Rotation and translation minimising ``sum ||v - (R v0 + t)||^2``."""
    c0 = v0.mean(0)
    c = v.mean(0)
    A = v0 - c0
    sv = np.linalg.svd(A, compute_uv=False)
    if len(v0) < 3 or sv[0] == 0 or sv[1] <= 1e-10 * sv[0]:
        raise DegenerateGeometryError("rigid fit needs at least 3 non-collinear points")
    H = A.T @ (v - c)
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T))
    if d == 0:
        d = 1.0
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    # re-orthonormalise to clear rounding before the strict rigid check
    u, _, vt = np.linalg.svd(R)
    R = u @ vt
    return PartTransform(R, c - R @ c0)


def fit_affine(v, v0) -> PartTransform:
    """Unconstrained 3x4 least-squares fit ``v ~ A v0 + t``."""
    H = np.hstack([v0, np.ones((len(v0), 1))])
    sv = np.linalg.svd(v0 - v0.mean(0), compute_uv=False)
    if len(v0) < 4 or sv[2] <= 1e-10 * sv[0]:
        raise DegenerateGeometryError("affine fit needs at least 4 non-coplanar points")
    X = np.linalg.solve(H.T @ H, H.T @ v)
    return PartTransform(X[:3].T, X[3], rigid=False)


def fit_global_transform(v_gt, v0, mode: FitMode = FitMode.RIGID) -> PartTransform:
    """Transform taking the part template ``v0`` onto ``v_gt``."""
    v = _as_points(v_gt, "v_gt")
    v0 = _as_points(v0, "v0")
    if v.shape != v0.shape:
        raise DataError(f"point counts differ: {len(v)} vs {len(v0)}")
    mode = FitMode(mode)
    return fit_rigid(v, v0) if mode is FitMode.RIGID else fit_affine(v, v0)


def fit_residual(M: PartTransform, v_gt, v0) -> float:
    """Root-sum-square residual of a fit, meters."""
    return float(np.linalg.norm(apply_transform(M, v0) - np.asarray(v_gt)))


def canonicalize(M: PartTransform, v, method="inverse") -> np.ndarray:
    """Map world-space part vertices back into the template frame.

    ``"inverse"`` applies the true inverse of ``M``. ``"transpose"`` applies the
    transposed homogeneous matrix and keeps xyz, which agrees with the
    inverse only for a pure rotation.
    """
    if method == "inverse":
        return apply_transform(M.inverse(), v)
    if method == "transpose":
        return apply_transform(M.transpose_canonical(), v)
    raise ValueError(f"unknown canonicalization {method!r}")


def _nearest_rotation(A):
    u, _, vt = np.linalg.svd(A)
    R = u @ vt
    if np.linalg.det(R) < 0:
        u[:, -1] *= -1
        R = u @ vt
    return R


@dataclass
class SampleAnnotation:
    states: list
    camera: CameraIntrinsics
    fit_report: list = field(default_factory=list)
    sample_id: str = ""

    @property
    def visibility(self):
        return np.array([s.visible for s in self.states], bool)

    def with_visibility(self, visible):
        vis = np.asarray(visible, bool)
        if vis.shape != (len(self.states),):
            raise DataError(f"visibility needs {len(self.states)} flags")
        states = [PartState(s.part_id, s.shape, s.rot6d, s.translation, bool(f))
                  for s, f in zip(self.states, vis)]
        return SampleAnnotation(states, self.camera, self.fit_report, self.sample_id)

    def to_dict(self):
        return {
            "sample_id": self.sample_id,
            "camera": self.camera.to_dict(),
            "parts": [s.to_dict() for s in self.states],
            "fit_report": self.fit_report,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            states = [PartState.from_dict(p) for p in d["parts"]]
            cam = CameraIntrinsics.from_dict(d["camera"])
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"malformed annotation: {e}") from None
        if [s.part_id for s in states] != list(range(len(states))):
            raise DataError("annotation part ids must be 0..P-1 in order")
        return cls(states, cam, list(d.get("fit_report", [])), str(d.get("sample_id", "")))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path):
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"cannot read annotation {path}: {e}") from None
        return cls.from_dict(doc)


def _part_joint_rows(model: PartShapeModel):
    return [JOINT_NAMES.index(n) for n in model.regressor.joint_names]


def _errors_mm(recovered, v, model, gt_joints):
    verr = 1000.0 * float(np.linalg.norm(recovered - v, axis=1).mean())
    ref = (regress_joints(model.regressor, v) if gt_joints is None
           else np.asarray(gt_joints)[_part_joint_rows(model)])
    jerr = 1000.0 * float(np.linalg.norm(regress_joints(model.regressor, recovered) - ref, axis=1).mean())
    return verr, jerr


def annotate_sample(templates: HppmTemplateSet, models, body_gt, cam: CameraIntrinsics,
                    mode: FitMode = FitMode.RIGID, gt_joints=None, canonical="inverse",
                    sample_id="") -> SampleAnnotation:
    """Fit every part of ``body_gt`` and encode its shape.

    ``gt_joints`` (full evaluation joint set, ``(17, 3)``) is optional; without
    it joint errors compare against joints regressed from the ground-truth
    slice.
    """
    V = body_gt.vertices if isinstance(body_gt, Mesh) else _as_points(body_gt, "body_gt")
    if len(V) != templates.n_body_vertices:
        raise DataError(f"body has {len(V)} vertices, templates expect {templates.n_body_vertices}")
    if len(models) != templates.n_parts:
        raise DataError("need one shape model per part")
    mode = FitMode(mode)
    states, report = [], []
    for tpl, model in zip(templates.parts, models):
        v = V[tpl.global_ids]
        M = fit_global_transform(v, tpl.template_vertices, mode)
        S = encode_shape(model, canonicalize(M, v, canonical))
        canon = model.mean.reshape(-1, 3) + (model.basis @ S).reshape(-1, 3)
        recovered = apply_transform(M, canon)
        verr, jerr = _errors_mm(recovered, v, model, gt_joints)
        R = M.rotation if mode is FitMode.RIGID else _nearest_rotation(M.rotation)
        states.append(PartState.from_transform(tpl.part_id, S, PartTransform(R, M.translation)))
        report.append({"part_id": tpl.part_id, "vertex_error_mm": verr, "joint_error_mm": jerr,
                       "fit_residual_mm": 1000.0 * fit_residual(M, v, tpl.template_vertices)})
    return SampleAnnotation(states, cam, report, sample_id)


def recovery_report(annotation: SampleAnnotation, body_gt, models, templates: HppmTemplateSet,
                    gt_joints=None):
    """Per-part ``(vertex_error_mm, joint_error_mm)`` of decoded annotation vs ground truth."""
    V = body_gt.vertices if isinstance(body_gt, Mesh) else _as_points(body_gt, "body_gt")
    out = []
    for tpl, model, state in zip(templates.parts, models, annotation.states):
        out.append(_errors_mm(decode_part(model, state), V[tpl.global_ids], model, gt_joints))
    return out
