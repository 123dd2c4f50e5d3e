"""Whole-body helpers: training every part, decoding every part."""
from __future__ import annotations

import logging

import numpy as np

from .annotate import canonicalize, fit_rigid
from .errors import DataError
from .parts import JOINT_NAMES, PART_JOINTS
from .shape_model import (
    PartShapeModel,
    TrainingConfig,
    decode_part,
    regress_joints,
    train_joint_regressor,
    train_part_pca,
)
from .templates import HppmTemplateSet

log = logging.getLogger(__name__)


def part_joint_names(name):
    try:
        return PART_JOINTS[name]
    except KeyError:
        raise DataError(f"no joint correspondence for part {name!r}") from None


def canonical_training_set(templates: HppmTemplateSet, part_id, bodies, joints):
    """Rigidly align each sample's part slice (and its joints) onto the template."""
    tpl = templates.parts[part_id]
    rows = [JOINT_NAMES.index(j) for j in part_joint_names(tpl.name)]
    V, J = [], []
    for body, jts in zip(bodies, joints):
        v = np.asarray(body)[tpl.global_ids]
        M = fit_rigid(v, tpl.template_vertices)
        V.append(canonicalize(M, v))
        J.append(canonicalize(M, np.asarray(jts)[rows]))
    return np.array(V), np.array(J)


def train_models(templates: HppmTemplateSet, bodies, joints, cfg: TrainingConfig = TrainingConfig(),
                 regressor_source="samples", template_joints=None):
    """Train a shape model and joint regressor for every part.

    ``bodies`` are whole-body vertex arrays and ``joints`` the matching
    ``(17, 3)`` evaluation joints. With ``regressor_source="template"`` the
    regressor is fitted to the template vertices and ``template_joints`` only.
    """
    bodies = [np.asarray(b, np.float64) for b in bodies]
    if len(bodies) < 2:
        raise DataError("need at least two training bodies")
    if len(joints) != len(bodies):
        raise DataError("need one joint set per training body")
    models = []
    for tpl in templates.parts:
        names = part_joint_names(tpl.name)
        V, J = canonical_training_set(templates, tpl.part_id, bodies, joints)
        if regressor_source == "samples":
            reg = train_joint_regressor(V, J, tpl.part_id, names)
        elif regressor_source == "template":
            if template_joints is None:
                raise DataError("template regressor needs template joints")
            rows = [JOINT_NAMES.index(j) for j in names]
            reg = train_joint_regressor(tpl.template_vertices, np.asarray(template_joints)[rows],
                                        tpl.part_id, names)
        else:
            raise ValueError(f"unknown regressor source {regressor_source!r}")
        model = train_part_pca(V, reg, J, cfg, part_id=tpl.part_id)
        log.info("part %d %s: k=%d vertex %.3f mm joint %.3f mm", tpl.part_id, tpl.name,
                 model.k, model.report.vertex_error_mm, model.report.joint_error_mm)
        models.append(model)
    return models


def decode_all(models, states):
    """World-space vertices and joints for every part state."""
    verts = [decode_part(m, s) for m, s in zip(models, states)]
    joints = [regress_joints(m.regressor, v) for m, v in zip(models, verts)]
    return verts, joints


def merge_part_joints(part_joints, visibility, n_joints=len(JOINT_NAMES), models=None):
    """Average the predictions of each evaluation joint over its visible owners.

    Returns the ``(n_joints, 3)`` array and a boolean mask of joints that have
    at least one visible owner.
    """
    acc = np.zeros((n_joints, 3))
    cnt = np.zeros(n_joints)
    for pid, (pj, vis) in enumerate(zip(part_joints, visibility)):
        if not vis:
            continue
        names = models[pid].regressor.joint_names if models is not None else None
        rows = [JOINT_NAMES.index(n) for n in names] if names else range(len(pj))
        for r, p in zip(rows, np.asarray(pj)):
            acc[r] += p
            cnt[r] += 1
    mask = cnt > 0
    acc[mask] /= cnt[mask, None]
    return acc, mask
