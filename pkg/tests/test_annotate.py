import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hppm.annotate import (
    FitMode,
    SampleAnnotation,
    annotate_sample,
    canonicalize,
    fit_global_transform,
    fit_residual,
    recovery_report,
)
from hppm.errors import DataError, DegenerateGeometryError
from hppm.geom import PartTransform, apply_transform
from hppm.shape_model import PartState, decode_part
from hppm.synth import DEFAULT_CAMERA

from conftest import random_rotation


def _cloud(rng, n=40):
    return rng.normal(size=(n, 3)) * [0.3, 0.2, 0.1]


@pytest.mark.parametrize("mode", list(FitMode))
def test_fit_examples(rng, mode):
    v0 = _cloud(rng)
    M = fit_global_transform(v0, v0, mode)
    assert np.abs(M.rotation - np.eye(3)).max() < 1e-9 and np.abs(M.translation).max() < 1e-9
    assert fit_residual(M, v0, v0) < 1e-9
    M = fit_global_transform(v0 + [0, 0, 1], v0, mode)
    assert np.abs(M.translation - [0, 0, 1]).max() < 1e-9
    assert np.abs(M.rotation - np.eye(3)).max() < 1e-9


def test_known_rigid_motion_recovered_by_both_modes(rng):
    for _ in range(50):
        v0 = _cloud(rng)
        R, T = random_rotation(rng), rng.normal(size=3)
        v = v0 @ R.T + T
        for mode in FitMode:
            M = fit_global_transform(v, v0, mode)
            assert np.abs(M.rotation - R).max() < 1e-9 and np.abs(M.translation - T).max() < 1e-9


def test_rigid_fit_handles_reflection_case(rng):
    v0 = _cloud(rng)
    v = v0 * [1, 1, -1]
    M = fit_global_transform(v, v0)
    assert abs(np.linalg.det(M.rotation) - 1) < 1e-12


@given(st.integers(0, 2**31))
def test_rigid_fit_invariant_to_common_prerotation(seed):
    rng = np.random.default_rng(seed)
    v0 = _cloud(rng)
    v = v0 @ random_rotation(rng).T + rng.normal(size=3) + 1e-3 * rng.normal(size=v0.shape)
    Q = random_rotation(rng)
    M = fit_global_transform(v, v0)
    Mq = fit_global_transform(v @ Q.T, v0 @ Q.T)
    # relative transform in the rotated frame is Q M Q^T
    assert np.abs(Mq.rotation - Q @ M.rotation @ Q.T).max() < 1e-9
    assert np.abs(Mq.translation - Q @ M.translation).max() < 1e-9


@given(st.integers(0, 2**31))
def test_affine_residual_not_worse_than_rigid(seed):
    rng = np.random.default_rng(seed)
    v0 = _cloud(rng)
    v = v0 @ rng.normal(size=(3, 3)).T + rng.normal(size=3) + 0.01 * rng.normal(size=v0.shape)
    r_aff = fit_residual(fit_global_transform(v, v0, "affine"), v, v0)
    r_rig = fit_residual(fit_global_transform(v, v0, "rigid"), v, v0)
    assert r_aff <= r_rig + 1e-12


def test_degenerate_configurations(rng):
    line = np.outer(np.arange(5.0), [1, 2, 3])
    with pytest.raises(DegenerateGeometryError):
        fit_global_transform(line, line, FitMode.RIGID)
    plane = np.c_[rng.normal(size=(10, 2)), np.zeros(10)]
    with pytest.raises(DegenerateGeometryError):
        fit_global_transform(plane, plane, FitMode.AFFINE)
    fit_global_transform(plane, plane, FitMode.RIGID)
    with pytest.raises(DataError):
        fit_global_transform(plane, plane[:5])


def test_canonicalize_inverse_and_transpose(rng):
    v0 = _cloud(rng)
    M = PartTransform(random_rotation(rng), rng.normal(size=3))
    v = apply_transform(M, v0)
    assert np.abs(canonicalize(M, v) - v0).max() < 1e-12
    # the transpose shorthand leaves a rotated copy of the translation behind
    off = canonicalize(M, v, "transpose") - v0
    assert np.abs(off - M.rotation.T @ M.translation).max() < 1e-12
    with pytest.raises(ValueError):
        canonicalize(M, v, "bogus")


# --- whole-body annotation --------------------------------------------------

def test_template_body_annotation(coarse_templates, coarse_models, coarse_rest):
    ann = annotate_sample(coarse_templates, coarse_models, coarse_rest.mesh, DEFAULT_CAMERA)
    assert [s.part_id for s in ann.states] == list(range(15))
    for r in ann.fit_report:
        assert r["vertex_error_mm"] >= 0 and r["fit_residual_mm"] >= 0


def test_training_bodies_recover_at_the_reported_error(coarse_templates, coarse_models, coarse_data):
    # annotation repeats the training alignment, so its mean error is the training error
    errs = []
    for s in coarse_data[:30]:
        ann = annotate_sample(coarse_templates, coarse_models, s.mesh, DEFAULT_CAMERA, gt_joints=s.joints)
        errs.append([r["vertex_error_mm"] for r in ann.fit_report])
        rec = recovery_report(ann, s.mesh, coarse_models, coarse_templates, s.joints)
        assert np.allclose([r[0] for r in rec], errs[-1], atol=1e-9)
    for m, e in zip(coarse_models, np.mean(errs, axis=0)):
        assert abs(e - m.report.vertex_error_mm) < 1e-6
        assert e <= 2.0


def test_recovery_report_offset_and_oracle(coarse_templates, coarse_models, coarse_data, rng):
    s = coarse_data[0]
    ann = annotate_sample(coarse_templates, coarse_models, s.mesh, DEFAULT_CAMERA)
    shifted = [PartState(st.part_id, st.shape, st.rot6d, st.translation + [0.003, 0, 0]) for st in ann.states]
    recovered = [decode_part(m, st) for m, st in zip(coarse_models, ann.states)]
    # ground truth = the decoded annotation, so the error is exactly the injected offset
    body = np.zeros((coarse_templates.n_body_vertices, 3))
    for tpl, v in zip(coarse_templates.parts, recovered):
        body[tpl.global_ids] = v
    tpl = coarse_templates.parts[6]
    rep = recovery_report(SampleAnnotation(shifted, DEFAULT_CAMERA), body, coarse_models, coarse_templates)
    brute = np.mean([np.linalg.norm(a - b) for a, b in zip(decode_part(coarse_models[6], shifted[6]),
                                                            body[tpl.global_ids])]) * 1000
    assert abs(rep[6][0] - brute) < 1e-9
    # no part written after Left Foot overlaps it, so its slice is exactly its own decoded copy
    assert abs(rep[6][0] - 3.0) < 1e-9


def test_annotation_file_round_trip(tmp_path, coarse_templates, coarse_models, coarse_data):
    ann = annotate_sample(coarse_templates, coarse_models, coarse_data[1].mesh, DEFAULT_CAMERA, sample_id="x")
    p = tmp_path / "a.json"
    ann.save(p)
    back = SampleAnnotation.load(p)
    assert back.to_dict() == ann.to_dict()
    doc = json.loads(p.read_text())
    assert set(doc) == {"sample_id", "camera", "parts", "fit_report"}
    assert set(doc["parts"][0]) == {"part_id", "visible", "S", "rot6d", "T"}


def test_annotation_errors(tmp_path, coarse_templates, coarse_models):
    with pytest.raises(DataError):
        annotate_sample(coarse_templates, coarse_models, np.zeros((5, 3)), DEFAULT_CAMERA)
    p = tmp_path / "bad.json"
    p.write_text('{"parts": [{"part_id": 1}]}')
    with pytest.raises(DataError):
        SampleAnnotation.load(p)
    with pytest.raises(DataError):
        SampleAnnotation.load(tmp_path / "missing.json")


def test_with_visibility(coarse_templates, coarse_models, coarse_rest):
    ann = annotate_sample(coarse_templates, coarse_models, coarse_rest.mesh, DEFAULT_CAMERA)
    vis = np.zeros(15, bool)
    vis[[0, 5]] = True
    assert np.array_equal(ann.with_visibility(vis).visibility, vis)
    with pytest.raises(DataError):
        ann.with_visibility([True])
