import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hppm.errors import DataError, DegenerateRotationError
from hppm.geom import PartTransform, apply_transform
from hppm.parts import PART_JOINTS
from hppm.shape_model import (
    RIDGE,
    JointRegressor,
    PartState,
    TrainingConfig,
    decode_joints,
    decode_part,
    encode_shape,
    regress_joints,
    train_joint_regressor,
    train_part_pca,
)

from conftest import random_rotation


def _uniform_reg(N, J=1):
    return JointRegressor(0, np.full((J, N), 1.0 / N))


def _pca_oracle(X):
    """Eigenvectors of the sample covariance, sorted by decreasing eigenvalue."""
    flat = X.reshape(len(X), -1)
    C = np.cov(flat.T, bias=True)
    w, V = np.linalg.eigh(C)
    order = np.argsort(w)[::-1]
    return flat.mean(0), w[order], V[:, order]


def _random_model(rng, N=12, k=4):
    X = rng.normal(size=(30, N, 3))
    reg = _uniform_reg(N)
    return train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X), TrainingConfig(1e-9, k, k))


# --- training ---------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        TrainingConfig(0.0)
    with pytest.raises(ValueError):
        TrainingConfig(2.0, 5, 4)
    d = TrainingConfig()
    assert (d.max_error_mm, d.k_min) == (2.0, 16)


def test_identical_samples_give_zero_error():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(10, 3))
    X = np.repeat(x[None], 5, axis=0)
    reg = _uniform_reg(10)
    m = train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X))
    assert m.k == 0 and m.report.rank == 0
    assert np.array_equal(m.mean, x.reshape(-1))
    assert m.report.vertex_error_mm == 0.0 and m.report.joint_error_mm == 0.0 and m.report.budget_met


def test_line_in_shape_space():
    rng = np.random.default_rng(1)
    base, d = rng.normal(size=30), rng.normal(size=30)
    X = (base + rng.normal(size=(20, 1)) * d).reshape(20, 10, 3)
    reg = _uniform_reg(10)
    m = train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X), TrainingConfig(2.0, 1, 5))
    assert m.k == 1
    assert m.report.vertex_error_mm < 1e-9
    _, w, V = _pca_oracle(X)
    assert abs(abs(m.basis[:, 0] @ V[:, 0]) - 1) < 1e-10


def test_basis_matches_covariance_eigenvectors(rng):
    X = rng.normal(size=(40, 8, 3)) * np.linspace(0.1, 3, 24).reshape(8, 3)
    reg = _uniform_reg(8)
    m = train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X), TrainingConfig(1e-12, 6, 6))
    mean, w, V = _pca_oracle(X)
    assert np.abs(m.mean - mean).max() < 1e-12
    assert np.abs(m.basis.T @ m.basis - np.eye(6)).max() < 1e-8
    # same subspace and same ordering by captured variance
    assert np.abs(np.abs(np.sum(m.basis * V[:, :6], axis=0)) - 1).max() < 1e-8
    captured = np.var((X.reshape(40, -1) - mean) @ m.basis, axis=0)
    assert np.all(np.diff(captured) <= 1e-12)


def test_adaptive_k_rule(rng):
    # variance decays so that the budget is met somewhere between k_min and k_max
    scales = 0.02 * 0.7 ** np.arange(60)
    Z = rng.normal(size=(80, 60)) * scales
    Q, _ = np.linalg.qr(rng.normal(size=(90, 60)))
    X = (Z @ Q.T).reshape(80, 30, 3)
    reg = _uniform_reg(30)
    J = np.einsum("jn,mnc->mjc", reg.matrix, X)
    cfg = TrainingConfig(2.0, 3, 40)
    m = train_part_pca(X, reg, J, cfg)
    r = m.report
    assert cfg.k_min <= m.k <= cfg.k_max and r.budget_met
    assert r.vertex_curve_mm[m.k] <= 2.0 and r.joint_curve_mm[m.k] <= 2.0
    if m.k > cfg.k_min:
        assert max(r.vertex_curve_mm[m.k - 1], r.joint_curve_mm[m.k - 1]) > 2.0
    # curve is monotone and matches a direct recomputation at k - 1
    assert np.all(np.diff(r.vertex_curve_mm) <= 1e-9)
    mean = m.mean
    U = np.linalg.svd(X.reshape(80, -1) - mean, full_matrices=False)[2][:m.k - 1].T
    rec = mean + (X.reshape(80, -1) - mean) @ U @ U.T
    direct = 1000 * np.linalg.norm((rec - X.reshape(80, -1)).reshape(80, -1, 3), axis=2).mean()
    assert abs(direct - r.vertex_curve_mm[m.k - 1]) < 1e-9


def test_budget_violation_is_flagged(rng):
    X = rng.normal(size=(30, 10, 3))
    reg = _uniform_reg(10)
    m = train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X), TrainingConfig(2.0, 2, 5))
    assert m.k == 5 and not m.report.budget_met


def test_k_is_clamped_to_rank(rng):
    X = rng.normal(size=(4, 10, 3))
    reg = _uniform_reg(10)
    m = train_part_pca(X, reg, np.einsum("jn,mnc->mjc", reg.matrix, X), TrainingConfig(2.0, 16, 64))
    assert m.k == 3 == m.report.rank
    assert np.all(np.linalg.norm(m.basis, axis=0) > 0.99)


def test_training_errors(rng):
    reg = _uniform_reg(5)
    with pytest.raises(DataError):
        train_part_pca(rng.normal(size=(1, 5, 3)), reg, np.zeros((1, 1, 3)))
    with pytest.raises(DataError):
        train_part_pca(rng.normal(size=(3, 6, 3)), reg, np.zeros((3, 1, 3)))
    with pytest.raises(DataError):
        train_part_pca(rng.normal(size=(3, 5, 3)), reg, np.zeros((3, 2, 3)))


# --- encode / decode --------------------------------------------------------

def test_encode_decode(rng):
    m = _random_model(rng)
    mean = m.mean.reshape(-1, 3)
    assert np.abs(encode_shape(m, mean)).max() < 1e-12
    S = np.array([0.005, 0, 0, 0])
    assert np.abs(encode_shape(m, m.mean + m.basis @ S) - S).max() < 1e-12
    v = (m.mean + m.basis @ rng.normal(size=4)).reshape(-1, 3)
    back = decode_part(m, PartState(0, encode_shape(m, v), [1, 0, 0, 0, 1, 0], np.zeros(3)))
    assert np.abs(back - v).max() < 1e-9
    with pytest.raises(DataError):
        encode_shape(m, np.zeros((3, 3)))


@given(st.integers(0, 2**31))
def test_encode_is_left_inverse_of_decode(seed):
    rng = np.random.default_rng(seed)
    m = _random_model(rng)
    S = rng.normal(size=m.k)
    assert np.abs(encode_shape(m, m.mean + m.basis @ S) - S).max() < 1e-10


def test_decode_examples(rng):
    m = _random_model(rng)
    ident = [1, 0, 0, 0, 1, 0]
    assert np.array_equal(decode_part(m, PartState(0, np.zeros(4), ident, np.zeros(3))), m.mean.reshape(-1, 3))
    up = decode_part(m, PartState(0, np.zeros(4), ident, [0, 0, 1]))
    assert np.allclose(up - m.mean.reshape(-1, 3), [0, 0, 1], atol=1e-15, rtol=0)
    with pytest.raises(DataError):
        decode_part(m, PartState(0, np.zeros(3), ident, np.zeros(3)))
    with pytest.raises(DegenerateRotationError):
        decode_part(m, PartState(0, np.zeros(4), [1, 0, 0, 1, 0, 0], np.zeros(3)))


def test_decode_matches_matrix_vector_oracle(rng):
    m = _random_model(rng)
    for _ in range(20):
        R, T, S = random_rotation(rng), rng.normal(size=3), rng.normal(size=4)
        state = PartState.from_transform(0, S, PartTransform(R, T))
        canon = np.array([sum(m.basis[i, j] * S[j] for j in range(4)) for i in range(len(m.mean))]) + m.mean
        H = PartTransform(R, T).matrix
        oracle = np.array([H @ np.r_[p, 1] for p in canon.reshape(-1, 3)])[:, :3]
        assert np.abs(decode_part(m, state) - oracle).max() < 1e-12


def test_part_state_serialization():
    s = PartState(3, [1.5, -2], [1, 0, 0, 0, 1, 0], [0, 0, 4], False)
    assert PartState.from_dict(s.to_dict()).to_dict() == s.to_dict()


# --- joint regressor --------------------------------------------------------

def test_regressor_midpoint(rng):
    V = rng.normal(size=(50, 6, 3))
    J = 0.5 * (V[:, 0] + V[:, 1])[:, None]
    reg = train_joint_regressor(V, J, ridge=RIDGE, row_sum_weight=0.0)
    assert np.abs(reg.matrix[0] - [0.5, 0.5, 0, 0, 0, 0]).max() < 1e-6
    res = np.einsum("jn,mnc->mjc", reg.matrix, V) - J
    assert np.abs(res).max() < 1e-9


def test_regressor_single_sample_interpolates(rng):
    V = rng.normal(size=(8, 3))
    reg = train_joint_regressor(V, V[3:4])
    assert np.abs(regress_joints(reg, V) - V[3]).max() < 1e-7


def test_regressor_examples(rng):
    V = rng.normal(size=(7, 3))
    one_hot = JointRegressor(0, np.eye(7)[[2]])
    assert np.array_equal(regress_joints(one_hot, V), V[[2]])
    assert np.allclose(regress_joints(_uniform_reg(7), V), V.mean(0, keepdims=True), atol=1e-15)
    with pytest.raises(DataError):
        regress_joints(one_hot, V[:3])
    with pytest.raises(DataError):
        train_joint_regressor(V, np.zeros((0, 3)))


def test_row_stochastic_regression_commutes_with_rigid_motion(rng):
    W = rng.random((3, 9))
    W /= W.sum(1, keepdims=True)
    reg = JointRegressor(0, W)
    V = rng.normal(size=(9, 3))
    M = PartTransform(random_rotation(rng), rng.normal(size=3))
    assert np.abs(regress_joints(reg, apply_transform(M, V)) - apply_transform(M, regress_joints(reg, V))).max() < 1e-10


def test_regressor_is_least_squares_optimal(rng):
    V = rng.normal(size=(30, 10, 3))
    J = np.einsum("jn,mnc->mjc", rng.normal(size=(2, 10)), V) + 0.01 * rng.normal(size=(30, 2, 3))
    reg = train_joint_regressor(V, J)

    def objective(X):
        r = np.einsum("jn,mnc->mjc", X, V) - J
        return (r ** 2).sum() + 1e-3 * ((X.sum(1) - 1) ** 2).sum() + RIDGE * (X ** 2).sum()

    base = objective(reg.matrix)
    for i in range(2):
        for j in range(10):
            for d in (1e-3, -1e-3):
                X = reg.matrix.copy()
                X[i, j] += d
                assert objective(X) >= base - 1e-12


def test_abdomen_regresses_four_joints():
    assert PART_JOINTS["Abdomen"] == ("Pelvis", "Right Hip", "Left Hip", "Torso")


def test_decode_joints(rng):
    m = _random_model(rng)
    s = PartState(0, np.zeros(4), [1, 0, 0, 0, 1, 0], np.zeros(3))
    assert np.allclose(decode_joints(m, s), m.mean.reshape(-1, 3).mean(0, keepdims=True), atol=1e-14)
