"""Partially-visible benchmark crops.

A crop is a square placed at a random center inside the person's bounding
box with a random side length. A part counts as visible when at least half
of the area of its projected bounding box falls inside the crop. Only crops
whose number of visible parts lies in ``keep_range`` are kept.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class CropConfig:
    attempts: int = 20
    keep_range: tuple = (1, 4)
    # side length as a fraction of the larger bounding-box dimension
    side_range: tuple = (0.2, 1.2)

    def __post_init__(self):
        if self.attempts < 0:
            raise ValueError("attempts must be >= 0")
        lo, hi = self.keep_range
        if not 0 <= lo <= hi:
            raise ValueError("keep_range must satisfy 0 <= lo <= hi")
        if not 0 < self.side_range[0] <= self.side_range[1]:
            raise ValueError("side_range must be positive and ordered")

    def to_dict(self):
        return {"attempts": self.attempts, "keep_range": list(self.keep_range),
                "side_range": list(self.side_range)}


@dataclass(frozen=True)
class CropSpec:
    center: tuple
    side: float
    visibility: tuple
    sample_id: str = ""

    @property
    def rect(self):
        h = self.side / 2.0
        return (self.center[0] - h, self.center[1] - h, self.center[0] + h, self.center[1] + h)

    @property
    def n_visible(self):
        return int(sum(self.visibility))

    def to_dict(self):
        return {"sample_id": self.sample_id, "center": list(self.center), "side": self.side,
                "visible": [int(v) for v in self.visibility]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(float(c) for c in d["center"]), float(d["side"]),
                   tuple(bool(v) for v in d["visible"]), str(d.get("sample_id", "")))


def bbox(points):
    """``(xmin, ymin, xmax, ymax)`` of 2D points."""
    p = np.asarray(points, np.float64).reshape(-1, 2)
    if len(p) == 0:
        raise DataError("bounding box of an empty point set")
    return (*p.min(0), *p.max(0))


def part_bboxes(parts_2d):
    return np.array([bbox(p) for p in parts_2d], np.float64).reshape(-1, 4)


def part_visibility(parts_2d, crop_rect, boxes=None) -> np.ndarray:
    """Visibility flag per part under the half-area rule (inclusive).

    Parts whose projected bounding box has zero area are never visible.
    """
    b = part_bboxes(parts_2d) if boxes is None else np.asarray(boxes, np.float64).reshape(-1, 4)
    x0, y0, x1, y1 = crop_rect
    if not (x1 > x0 and y1 > y0):
        raise DataError("crop rectangle must have positive size")
    area = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    iw = np.clip(np.minimum(b[:, 2], x1) - np.maximum(b[:, 0], x0), 0.0, None)
    ih = np.clip(np.minimum(b[:, 3], y1) - np.maximum(b[:, 1], y0), 0.0, None)
    return (area > 0) & (2.0 * iw * ih >= area)


def gen_crops(boxes, human_bbox, seed, cfg: CropConfig = CropConfig(), sample_id=""):
    """Random square crops of one sample; every attempt draws a center and a side."""
    boxes = np.asarray(boxes, np.float64).reshape(-1, 4)
    hx0, hy0, hx1, hy1 = human_bbox
    if not (hx1 >= hx0 and hy1 >= hy0) or max(hx1 - hx0, hy1 - hy0) <= 0:
        raise DataError("empty human bounding box")
    rng = np.random.default_rng(seed)
    size = max(hx1 - hx0, hy1 - hy0)
    lo, hi = cfg.keep_range
    out = []
    for _ in range(cfg.attempts):
        cx = rng.uniform(hx0, hx1)
        cy = rng.uniform(hy0, hy1)
        side = rng.uniform(*cfg.side_range) * size
        crop = CropSpec((float(cx), float(cy)), float(side), (), sample_id)
        vis = part_visibility(None, crop.rect, boxes)
        if lo <= vis.sum() <= hi:
            out.append(CropSpec(crop.center, crop.side, tuple(bool(v) for v in vis), sample_id))
    return out


def sample_seed(seed, index) -> int:
    """Per-sample seed derived from the run seed with ``numpy.random.SeedSequence``."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def write_manifest(records, path):
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_manifest(path):
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise DataError(f"cannot read manifest {path}: {e}") from None
    try:
        return [json.loads(line) for line in lines if line.strip()]
    except json.JSONDecodeError as e:
        raise DataError(f"malformed manifest line: {e}") from None
