"""Synthetic articulated body used as a stand-in for licensed body-model data.

The rest surface is the zero level set of a smooth union of capsules, one per
bone, meshed with marching cubes. Blend weights fall off with the distance
to each capsule surface. Posed instances come from linear blend skinning with
forward kinematics, so the joints of every sample are known analytically.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial.transform import Rotation
from skimage import measure

from .geom import CameraIntrinsics, Mesh, faces_adjacency
from .parts import JOINT_NAMES



@dataclass(frozen=True)
class Bone:
    name: str
    parent: int
    pivot: tuple
    start: tuple
    end: tuple
    radius: float
    # (lo, hi) local rotation-vector bounds per axis, radians
    limits: tuple = ((-0.2, 0.2), (-0.2, 0.2), (-0.2, 0.2))
    group: str = "torso"


def _mirror(b: Bone, name, parent):
    flip = lambda p: (-p[0], p[1], p[2])
    # mirroring in x flips the sign of rotations about y and z
    (xl, xh), (yl, yh), (zl, zh) = b.limits
    return Bone(name, parent, flip(b.pivot), flip(b.start), flip(b.end), b.radius,
                ((xl, xh), (-yh, -yl), (-zh, -zl)), b.group)


def _default_bones():
    L = {}
    L["l_hip"] = Bone("l_hip", 0, (0.11, 0.90, 0.0), (0.11, 0.86, 0.0), (0.11, 0.52, 0.0), 0.065,
                      ((-0.6, 0.5), (-0.3, 0.3), (-0.1, 0.4)), "legs")
    L["l_knee"] = Bone("l_knee", 1, (0.11, 0.50, 0.0), (0.11, 0.49, 0.0), (0.11, 0.12, -0.01), 0.05,
                       ((0.0, 1.2), (-0.1, 0.1), (-0.05, 0.05)), "legs")
    L["l_ankle"] = Bone("l_ankle", 4, (0.11, 0.09, -0.01), (0.11, 0.07, -0.03), (0.11, 0.05, 0.08), 0.045,
                        ((-0.4, 0.4), (-0.2, 0.2), (-0.2, 0.2)), "legs")
    L["l_foot"] = Bone("l_foot", 7, (0.11, 0.04, 0.10), (0.11, 0.035, 0.12), (0.11, 0.03, 0.17), 0.032,
                       ((-0.3, 0.3), (-0.05, 0.05), (-0.05, 0.05)), "legs")
    L["l_collar"] = Bone("l_collar", 6, (0.03, 1.40, 0.0), (0.05, 1.40, 0.0), (0.15, 1.41, 0.0), 0.06,
                         ((-0.1, 0.1), (-0.15, 0.15), (-0.15, 0.15)), "torso")
    L["l_shoulder"] = Bone("l_shoulder", 12, (0.19, 1.41, 0.0), (0.21, 1.41, 0.0), (0.44, 1.41, 0.0), 0.047,
                           ((-0.4, 0.4), (-0.4, 0.4), (-1.0, 0.3)), "arms")
    L["l_elbow"] = Bone("l_elbow", 15, (0.46, 1.41, 0.0), (0.47, 1.41, 0.0), (0.68, 1.41, 0.0), 0.037,
                        ((-0.4, 0.4), (-1.3, 0.0), (-0.05, 0.05)), "arms")
    L["l_wrist"] = Bone("l_wrist", 17, (0.70, 1.41, 0.0), (0.72, 1.41, 0.0), (0.78, 1.41, 0.0), 0.028,
                        ((-0.5, 0.5), (-0.3, 0.3), (-0.5, 0.5)), "arms")
    L["l_hand"] = Bone("l_hand", 19, (0.80, 1.41, 0.0), (0.81, 1.41, 0.0), (0.87, 1.41, 0.0), 0.02,
                       ((-0.1, 0.1), (-0.1, 0.1), (-0.6, 0.2)), "arms")
    bones = [None] * 23
    bones[0] = Bone("pelvis", -1, (0.0, 0.95, 0.0), (-0.07, 0.93, 0.0), (0.07, 0.93, 0.0), 0.115,
                    ((-0.15, 0.15), (-0.15, 0.15), (-0.15, 0.15)), "torso")
    bones[1] = L["l_hip"]
    bones[2] = _mirror(L["l_hip"], "r_hip", 0)
    bones[3] = Bone("spine1", 0, (0.0, 1.03, 0.0), (0.0, 1.03, 0.0), (0.0, 1.17, 0.0), 0.12,
                    ((-0.25, 0.25), (-0.25, 0.25), (-0.2, 0.2)), "torso")
    bones[4] = L["l_knee"]
    bones[5] = _mirror(L["l_knee"], "r_knee", 2)
    bones[6] = Bone("spine2", 3, (0.0, 1.18, 0.0), (0.0, 1.20, 0.0), (0.0, 1.36, 0.0), 0.14,
                    ((-0.2, 0.2), (-0.2, 0.2), (-0.15, 0.15)), "torso")
    bones[7] = L["l_ankle"]
    bones[8] = _mirror(L["l_ankle"], "r_ankle", 5)
    bones[9] = L["l_foot"]
    bones[10] = _mirror(L["l_foot"], "r_foot", 8)
    bones[11] = Bone("neck", 6, (0.0, 1.44, 0.0), (0.0, 1.45, 0.0), (0.0, 1.53, 0.0), 0.055,
                     ((-0.3, 0.3), (-0.4, 0.4), (-0.25, 0.25)), "head")
    bones[12] = L["l_collar"]
    bones[13] = _mirror(L["l_collar"], "r_collar", 6)
    bones[14] = Bone("head", 11, (0.0, 1.55, 0.0), (0.0, 1.64, 0.01), (0.0, 1.70, 0.01), 0.095,
                     ((-0.3, 0.3), (-0.4, 0.4), (-0.2, 0.2)), "head")
    bones[15] = L["l_shoulder"]
    bones[16] = _mirror(L["l_shoulder"], "r_shoulder", 13)
    bones[17] = L["l_elbow"]
    bones[18] = _mirror(L["l_elbow"], "r_elbow", 16)
    bones[19] = L["l_wrist"]
    bones[20] = _mirror(L["l_wrist"], "r_wrist", 18)
    bones[21] = L["l_hand"]
    bones[22] = _mirror(L["l_hand"], "r_hand", 20)
    return tuple(bones)


DEFAULT_BONES = _default_bones()

# Evaluation joints: either the pivot of a bone or a fixed point carried by one.
_JOINT_SOURCES = {
    "Pelvis": "pelvis",
    "Right Hip": "r_hip",
    "Right Knee": "r_knee",
    "Right Ankle": "r_ankle",
    "Left Hip": "l_hip",
    "Left Knee": "l_knee",
    "Left Ankle": "l_ankle",
    "Torso": "spine2",
    "Neck": "neck",
    "Nose": ("head", (0.0, 1.63, 0.10)),
    "Head": ("head", (0.0, 1.79, 0.01)),
    "Left Shoulder": "l_shoulder",
    "Left Elbow": "l_elbow",
    "Left Wrist": "l_wrist",
    "Right Shoulder": "r_shoulder",
    "Right Elbow": "r_elbow",
    "Right Wrist": "r_wrist",
}

SHAPE_GROUPS = ("torso", "legs", "arms", "head")


@dataclass(frozen=True)
class SynthBodySpec:
    """Body layout and sampling ranges.

    ``seed`` is mixed with the per-sample pose seed, so two specs that differ
    only in seed share a template but draw different samples.
    """

    seed: int = 0
    bones: tuple = DEFAULT_BONES
    grid_spacing: float = 0.02
    smooth_union: float = 0.01
    blend_falloff: float = 0.012
    weight_cutoff: float = 1e-3
    scale_range: tuple = (0.92, 1.08)
    girth_range: tuple = (0.85, 1.2)
    yaw_range: tuple = (-3.0, 3.0)
    depth_range: tuple = (3.5, 5.0)
    lateral_range: float = 0.3

    def __post_init__(self):
        if len(self.bones) < 2:
            raise ValueError("need at least two bones")
        for b in self.bones:
            for lo, hi in b.limits:
                if not (-np.pi < lo <= hi < np.pi):
                    raise ValueError(f"angle limits of {b.name} must lie in (-pi, pi)")
        if not (-np.pi < self.yaw_range[0] <= self.yaw_range[1] < np.pi):
            raise ValueError("yaw range must lie in (-pi, pi)")

    @property
    def n_bones(self):
        return len(self.bones)

    @property
    def bone_names(self):
        return tuple(b.name for b in self.bones)


@dataclass(frozen=True)
class SynthParams:
    """Everything that determines one sample."""

    scale: float = 1.0
    girth: tuple = (1.0,) * len(SHAPE_GROUPS)
    # (B, 3) local rotation vectors
    pose: np.ndarray = None
    root_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    root_translation: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class SynthSample:
    mesh: Mesh
    weights: np.ndarray
    joints: np.ndarray
    pivots: np.ndarray
    params: SynthParams


DEFAULT_CAMERA = CameraIntrinsics(1000.0, 1000.0, 500.0, 500.0)


def _segment_distance(points, a, b):
    """Distance from each point to segment ab and the closest point on it."""
    a = np.asarray(a, float)
    ab = np.asarray(b, float) - a
    t = np.clip((points - a) @ ab / max(ab @ ab, 1e-12), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return np.linalg.norm(points - closest, axis=1), closest


def _capsule_sdf(points, bones):
    return np.stack([_segment_distance(points, b.start, b.end)[0] - b.radius for b in bones], axis=1)


@functools.lru_cache(maxsize=8)
def _rest_template(spec: SynthBodySpec):
    bones = spec.bones
    k = spec.smooth_union
    h = spec.grid_spacing
    ends = np.array([b.start for b in bones] + [b.end for b in bones], float)
    rmax = max(b.radius for b in bones)
    lo = ends.min(0) - rmax - 3 * h
    hi = ends.max(0) + rmax + 3 * h
    axes = [np.arange(lo[i], hi[i] + h, h) for i in range(3)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    d = _capsule_sdf(grid, bones)
    dmin = d.min(1)
    # log-sum-exp smooth minimum
    field_ = dmin - k * np.log(np.exp(-(d - dmin[:, None]) / k).sum(1))
    vol = field_.reshape([len(a) for a in axes])
    verts, faces, _, _ = measure.marching_cubes(vol, level=0.0, spacing=(h, h, h))
    verts = verts + lo
    faces = faces[(faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])]

    # keep the largest connected component and drop unreferenced vertices
    adj = faces_adjacency(faces, len(verts)).matrix
    _, label = connected_components(adj, directed=False)
    used = np.zeros(len(verts), bool)
    used[faces.ravel()] = True
    counts = np.bincount(label[used])
    main = np.argmax(counts)
    keep_v = used & (label == main)
    faces = faces[keep_v[faces[:, 0]]]
    remap = -np.ones(len(verts), np.int64)
    remap[keep_v] = np.arange(keep_v.sum())
    verts = verts[keep_v]
    faces = remap[faces]

    # canonical vertex order: sort by (y, x, z) rounded to the grid
    order = np.lexsort(np.round(verts[:, [2, 0, 1]] / h * 1e3).T)
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    verts = verts[order]
    faces = inv[faces]

    d = _capsule_sdf(verts, bones)
    w = np.exp(-(d - d.min(1, keepdims=True)) / spec.blend_falloff)
    w[w < spec.weight_cutoff] = 0.0
    w /= w.sum(1, keepdims=True)
    return verts, faces.astype(np.int64), w


def sample_params(spec: SynthBodySpec, pose_seed) -> SynthParams:
    rng = np.random.default_rng([spec.seed, pose_seed])
    scale = rng.uniform(*spec.scale_range)
    girth = tuple(rng.uniform(*spec.girth_range, size=len(SHAPE_GROUPS)))
    lims = np.array([b.limits for b in spec.bones])  # (B, 3, 2)
    pose = rng.uniform(lims[..., 0], lims[..., 1])
    yaw = rng.uniform(*spec.yaw_range)
    # flip to a y-down camera frame with the body facing the camera, then yaw
    flip = np.diag([1.0, -1.0, -1.0])
    root_R = flip @ Rotation.from_rotvec([0.0, yaw, 0.0]).as_matrix()
    depth = rng.uniform(*spec.depth_range)
    lat = rng.uniform(-spec.lateral_range, spec.lateral_range, size=2)
    root_t = np.array([lat[0], 0.9 + lat[1], depth])
    return SynthParams(scale, girth, pose, root_R, root_t)


def _shaped_rest(spec, params, verts, w):
    bones = spec.bones
    girth = dict(zip(SHAPE_GROUPS, params.girth))
    g = np.array([girth[b.group] for b in bones]) - 1.0
    offset = np.zeros_like(verts)
    for bi, b in enumerate(bones):
        sel = w[:, bi] > 0
        if not sel.any() or g[bi] == 0.0:
            continue
        _, closest = _segment_distance(verts[sel], b.start, b.end)
        offset[sel] += (w[sel, bi] * g[bi])[:, None] * (verts[sel] - closest)
    return params.scale * (verts + offset)


def forward_kinematics(spec: SynthBodySpec, params: SynthParams):
    """Global 4x4 bone transforms ``(B, 4, 4)`` and scaled rest pivots."""
    bones = spec.bones
    pivots = params.scale * np.array([b.pivot for b in bones], float)
    pose = np.zeros((len(bones), 3)) if params.pose is None else np.asarray(params.pose, float)
    local_R = Rotation.from_rotvec(pose).as_matrix()
    G = np.zeros((len(bones), 4, 4))
    root = np.eye(4)
    root[:3, :3] = params.root_rotation
    root[:3, 3] = params.root_translation
    for i, b in enumerate(bones):
        L = np.eye(4)
        L[:3, :3] = local_R[i]
        if b.parent < 0:
            L[:3, 3] = pivots[i]
            G[i] = root @ L
        else:
            L[:3, 3] = pivots[i] - pivots[b.parent]
            G[i] = G[b.parent] @ L
    return G, pivots


def pose_body(spec: SynthBodySpec, params: SynthParams) -> SynthSample:
    verts, faces, w = _rest_template(spec)
    rest = _shaped_rest(spec, params, verts, w)
    G, pivots = forward_kinematics(spec, params)
    A = G.copy()
    A[:, :3, 3] -= np.einsum("bij,bj->bi", G[:, :3, :3], pivots)
    T = (w @ A[:, :3, :].reshape(len(A), 12)).reshape(-1, 3, 4)
    posed = np.einsum("nij,nj->ni", T[:, :, :3], rest) + T[:, :, 3]

    names = spec.bone_names
    joints = np.zeros((len(JOINT_NAMES), 3))
    for ji, jn in enumerate(JOINT_NAMES):
        src = _JOINT_SOURCES[jn]
        if isinstance(src, str):
            joints[ji] = G[names.index(src), :3, 3]
        else:
            bi = names.index(src[0])
            x = params.scale * np.asarray(src[1], float)
            joints[ji] = A[bi, :3, :3] @ x + A[bi, :3, 3]
    return SynthSample(Mesh(posed, faces), w.copy(), joints, G[:, :3, 3].copy(), params)


def synth_sample(spec: SynthBodySpec = SynthBodySpec(), pose_seed=None) -> SynthSample:
    """Canonical template when ``pose_seed`` is None, else a random posed body."""
    if pose_seed is not None:
        return pose_body(spec, sample_params(spec, pose_seed))
    s = pose_body(spec, SynthParams())
    # skinning with identity transforms is exact only up to rounding of the weight sums
    verts, faces, _ = _rest_template(spec)
    return SynthSample(Mesh(verts, faces), s.weights, s.joints, s.pivots, s.params)


def synth_body(spec: SynthBodySpec = SynthBodySpec(), pose_seed=None):
    """``(mesh, blend_weights, joints)`` for one synthetic body."""
    s = synth_sample(spec, pose_seed)
    return s.mesh, s.weights, s.joints


def synth_dataset(spec: SynthBodySpec, seeds):
    return [synth_sample(spec, s) for s in seeds]
