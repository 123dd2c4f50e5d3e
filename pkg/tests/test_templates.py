import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path

from hppm.errors import ConfigError, DataError
from hppm.geom import AdjacencyGraph, Mesh, build_adjacency, faces_adjacency
from hppm.parts import PART_NAMES
from hppm.templates import (
    DEFAULT_DILATION,
    MergeMap,
    build_templates,
    dilate_mask,
    load_merge_map,
    merge_segments,
    overlap_region,
    raw_segment,
    slice_parts,
)


def _path_graph(n):
    rows = np.r_[np.arange(n - 1), np.arange(1, n)]
    cols = np.r_[np.arange(1, n), np.arange(n - 1)]
    return AdjacencyGraph(sp.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)))


def _strip(n_cols=10):
    """Triangulated 2 x n_cols strip of quads."""
    xs = np.arange(n_cols + 1, dtype=float)
    v = np.array([[x, y, 0.0] for y in (0, 1, 2) for x in xs])
    w = n_cols + 1
    faces = []
    for r in range(2):
        for c in range(n_cols):
            a, b = r * w + c, r * w + c + 1
            faces += [[a, b, a + w], [b, b + w, a + w]]
    return Mesh(v, np.array(faces))


# --- segmentation -----------------------------------------------------------

def test_raw_segment_examples():
    W = np.array([[0.1, 0.7, 0.2], [0.5, 0.5, 0.0]])
    assert raw_segment(W).tolist() == [1, 0]


def test_raw_segment_matches_linear_scan(rng):
    W = rng.random((500, 7)) ** 4
    W /= W.sum(1, keepdims=True)
    oracle = []
    for row in W:
        best = 0
        for j in range(1, len(row)):
            if row[j] > row[best]:
                best = j
        oracle.append(best)
    assert raw_segment(W).tolist() == oracle


@given(st.integers(0, 2**31), st.floats(0.01, 100))
def test_raw_segment_invariant_to_row_rescaling(seed, s):
    rng = np.random.default_rng(seed)
    W = rng.random((20, 5))
    W /= W.sum(1, keepdims=True)
    i = rng.integers(20)
    W2 = W.copy()
    W2[i] *= s
    W2[i] /= W2[i].sum()
    assert np.array_equal(raw_segment(W), raw_segment(W2))


@pytest.mark.parametrize("W", [np.array([[0.5, 0.6]]), np.array([[-0.1, 1.1]]), np.zeros((2, 0))])
def test_blend_weight_validation(W):
    with pytest.raises(DataError):
        raw_segment(W)


def test_merge_examples():
    m = MergeMap((0, 0, 1), ("a", "b"))
    assert merge_segments([0, 1, 2], m).tolist() == [0, 0, 1]
    assert merge_segments([2, 0, 1], MergeMap.identity(3)).tolist() == [2, 0, 1]
    with pytest.raises(DataError):
        merge_segments([3], m)


def test_merge_map_must_cover_parts():
    with pytest.raises(ConfigError):
        MergeMap((0, 0), ("a", "b"))
    with pytest.raises(ConfigError):
        MergeMap((0, 2), ("a", "b"))


def test_default_merge_map(coarse_rest):
    m = load_merge_map()
    assert m.n_segments == 23 and m.part_names == PART_NAMES
    counts = np.bincount(merge_segments(raw_segment(coarse_rest.weights), m), minlength=15)
    assert np.all(counts > 0)


def test_merge_map_file_round_trip(tmp_path):
    m = load_merge_map()
    p = tmp_path / "mm.json"
    p.write_text(json.dumps(m.to_dict()))
    assert load_merge_map(p) == m
    assert load_merge_map(p).digest() == m.digest()
    p.write_text("{")
    with pytest.raises(ConfigError):
        load_merge_map(p)
    with pytest.raises(ConfigError):
        load_merge_map(tmp_path / "missing.json")


# --- dilation ---------------------------------------------------------------

def test_dilation_path_graph():
    adj = _path_graph(5)
    m = np.array([1, 0, 0, 0, 0], bool)
    assert np.array_equal(dilate_mask(adj, m, 0), m)
    assert np.flatnonzero(dilate_mask(adj, m, 2)).tolist() == [0, 1, 2]
    assert dilate_mask(adj, m, 4).all()
    with pytest.raises(ValueError):
        dilate_mask(adj, m, -1)


def test_dilation_equals_bfs_distance(coarse_rest, rng):
    adj = build_adjacency(coarse_rest.mesh)
    n_v = adj.n_vertices
    seeds = rng.choice(n_v, 5, replace=False)
    mask = np.zeros(n_v, bool)
    mask[seeds] = True
    D = shortest_path(adj.matrix, unweighted=True, indices=seeds).min(0)
    for n in (0, 1, 3, 6):
        assert np.array_equal(dilate_mask(adj, mask, n), D <= n)


@given(st.integers(0, 2**31), st.integers(0, 6), st.integers(0, 6))
def test_dilation_monotone(seed, n1, n2):
    rng = np.random.default_rng(seed)
    m = _strip(8)
    adj = build_adjacency(m)
    mask = rng.random(m.n_vertices) < 0.1
    a, b = sorted((n1, n2))
    da, db = dilate_mask(adj, mask, a), dilate_mask(adj, mask, b)
    assert np.all(da <= db) and np.all(mask <= da)


# --- template construction --------------------------------------------------

def _two_part_strip():
    m = _strip(10)
    W = np.zeros((m.n_vertices, 2))
    left = m.vertices[:, 0] < 4.5
    W[left, 0] = 1
    W[~left, 1] = 1
    return m, W


def test_two_part_strip_overlap_matches_bfs():
    m, W = _two_part_strip()
    t = build_templates(m, W, MergeMap.identity(2), 1)
    adj = build_adjacency(m)
    D = shortest_path(adj.matrix, unweighted=True)
    left = W[:, 0] == 1
    d_left = D[:, left].min(1)
    d_right = D[:, ~left].min(1)
    oracle = np.flatnonzero((d_left <= 1) & (d_right <= 1))
    assert overlap_region(t, 0, 1).tolist() == oracle.tolist()
    assert t.neighbors == ((0, 1),)


def test_no_dilation_means_no_overlap(coarse_rest):
    t = build_templates(coarse_rest.mesh, coarse_rest.weights, load_merge_map(), 0)
    assert t.neighbors == ()
    assert all(not p.overlap for p in t.parts)
    assert overlap_region(t, 0, 1).size == 0


def test_default_dilation_is_five():
    assert DEFAULT_DILATION == 5


def test_template_invariants(coarse_templates, coarse_rest):
    t = coarse_templates
    N = coarse_rest.mesh.n_vertices
    cores = np.concatenate([p.core_ids for p in t.parts])
    assert len(cores) == N and np.array_equal(np.sort(cores), np.arange(N))
    body_faces = {tuple(f) for f in coarse_rest.mesh.faces.tolist()}
    for p in t.parts:
        assert np.all(np.isin(p.core_ids, p.global_ids))
        assert np.all(np.diff(p.global_ids) > 0)
        assert p.faces.max() < p.n_vertices
        assert {tuple(f) for f in p.global_ids[p.faces].tolist()} <= body_faces
        assert np.array_equal(p.template_vertices, coarse_rest.mesh.vertices[p.global_ids])
        for q, ids in p.overlap.items():
            assert np.array_equal(ids, np.intersect1d(p.global_ids, t.parts[q].global_ids))
            assert np.array_equal(ids, t.parts[q].overlap[p.part_id])
    for a, b in t.neighbors:
        assert b in t.part_neighbors(a) and a in t.part_neighbors(b)


def test_overlap_region_errors(coarse_templates):
    with pytest.raises(DataError):
        overlap_region(coarse_templates, 0, 0)
    with pytest.raises(DataError):
        overlap_region(coarse_templates, 0, 99)


def test_overlap_region_set_intersection_oracle(coarse_templates):
    t = coarse_templates
    for p in range(t.n_parts):
        for q in range(t.n_parts):
            if p != q:
                oracle = sorted(set(t.parts[p].global_ids.tolist()) & set(t.parts[q].global_ids.tolist()))
                assert overlap_region(t, p, q).tolist() == oracle


def test_build_is_deterministic(coarse_rest):
    a = build_templates(coarse_rest.mesh, coarse_rest.weights, load_merge_map(), 2)
    b = build_templates(coarse_rest.mesh, coarse_rest.weights, load_merge_map(), 2)
    for pa, pb in zip(a.parts, b.parts):
        assert np.array_equal(pa.global_ids, pb.global_ids) and np.array_equal(pa.faces, pb.faces)


def test_build_errors(coarse_rest):
    with pytest.raises(DataError):
        build_templates(coarse_rest.mesh, coarse_rest.weights[:, :5], load_merge_map())
    W = np.zeros_like(coarse_rest.weights)
    W[:, 0] = 1
    with pytest.raises(DataError, match="without vertices"):
        build_templates(coarse_rest.mesh, W, load_merge_map())


def test_slice_parts(coarse_templates, coarse_rest):
    parts = slice_parts(coarse_templates, coarse_rest.mesh.vertices)
    assert all(np.array_equal(v, p.template_vertices) for v, p in zip(parts, coarse_templates.parts))
    with pytest.raises(DataError):
        slice_parts(coarse_templates, np.zeros((3, 3)))


def test_faces_adjacency_consistent(coarse_templates):
    p = coarse_templates.parts[0]
    adj = faces_adjacency(p.faces, p.n_vertices)
    assert adj.n_vertices == p.n_vertices
