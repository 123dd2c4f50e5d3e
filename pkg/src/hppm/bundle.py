"""Model bundle on disk.

A bundle directory holds ``model.json`` (metadata), ``templates.json`` (part
templates) and one ``part_<id>.bin`` per part. Each binary is little-endian
float64: mean (3N) then basis (3N x k, column-major) then regressor
(J x N, row-major). JSON is written with sorted keys and shortest
round-trip float text, so save -> load -> save reproduces the same bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .shape_model import JointRegressor, PartShapeModel, TrainingConfig, TrainingReport
from .templates import HppmTemplateSet, MergeMap, PartTemplate

BUNDLE_FORMAT = "hppm-bundle/1"
TEMPLATES_FORMAT = "hppm-templates/1"
SEED_MIXING = "numpy.random.SeedSequence([seed, index]).generate_state(1)[0]"


def _dump(doc, path):
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def _load(path):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"missing bundle file {path}") from None
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read {path}: {e}") from None


def templates_to_dict(tset: HppmTemplateSet):
    return {
        "format": TEMPLATES_FORMAT,
        "dilation": tset.dilation,
        "merge_digest": tset.merge_digest,
        "n_body_vertices": tset.n_body_vertices,
        "neighbors": [list(nb) for nb in tset.neighbors],
        "body_faces": tset.body_faces.tolist(),
        "parts": [{
            "part_id": p.part_id,
            "name": p.name,
            "global_ids": p.global_ids.tolist(),
            "core_ids": p.core_ids.tolist(),
            "faces": p.faces.tolist(),
            "template_vertices": p.template_vertices.tolist(),
            "overlap": {str(q): ids.tolist() for q, ids in sorted(p.overlap.items())},
        } for p in tset.parts],
    }


def templates_from_dict(doc) -> HppmTemplateSet:
    if doc.get("format") != TEMPLATES_FORMAT:
        raise DataError(f"unsupported templates format {doc.get('format')!r}")
    try:
        parts = tuple(PartTemplate(
            part_id=int(p["part_id"]),
            name=p["name"],
            global_ids=np.asarray(p["global_ids"], np.int64),
            core_ids=np.asarray(p["core_ids"], np.int64),
            faces=np.asarray(p["faces"], np.int64).reshape(-1, 3),
            template_vertices=np.asarray(p["template_vertices"], np.float64).reshape(-1, 3),
            overlap={int(q): np.asarray(ids, np.int64) for q, ids in p["overlap"].items()},
        ) for p in doc["parts"])
        return HppmTemplateSet(
            parts, tuple(tuple(int(x) for x in nb) for nb in doc["neighbors"]), int(doc["dilation"]),
            doc["merge_digest"], np.asarray(doc["body_faces"], np.int64).reshape(-1, 3),
            int(doc["n_body_vertices"]))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"malformed templates: {e}") from None


def save_templates(tset, path):
    _dump(templates_to_dict(tset), path)


def load_templates(path) -> HppmTemplateSet:
    return templates_from_dict(_load(path))


def part_blob(model: PartShapeModel) -> bytes:
    return b"".join([
        np.asarray(model.mean, "<f8").tobytes(),
        np.asarray(model.basis, "<f8").tobytes(order="F"),
        np.asarray(model.regressor.matrix, "<f8").tobytes(order="C"),
    ])


def blob_size(n_vertices, k, n_joints):
    return 8 * (3 * n_vertices + 3 * n_vertices * k + n_joints * n_vertices)


def part_from_blob(blob, part_id, n_vertices, k, joint_names, report=None) -> PartShapeModel:
    J = len(joint_names)
    if len(blob) != blob_size(n_vertices, k, J):
        raise DataError(f"part {part_id}: binary has {len(blob)} bytes, expected {blob_size(n_vertices, k, J)}")
    a = np.frombuffer(blob, "<f8").astype(np.float64)
    n3 = 3 * n_vertices
    mean = a[:n3].copy()
    basis = np.ascontiguousarray(a[n3:n3 + n3 * k].reshape((n3, k), order="F"))
    reg = a[n3 + n3 * k:].reshape(J, n_vertices).copy()
    return PartShapeModel(part_id, basis, mean, JointRegressor(part_id, reg, tuple(joint_names)), report)


class ModelBundle:
    """Templates plus trained part models, with the metadata echoed in ``model.json``."""

    def __init__(self, templates: HppmTemplateSet, models, merge: MergeMap, config: TrainingConfig,
                 extra=None):
        if len(models) != templates.n_parts:
            raise DataError("need one model per template part")
        self.templates = templates
        self.models = list(models)
        self.merge = merge
        self.config = config
        self.extra = dict(extra or {})

    def meta(self):
        parts = []
        for tpl, m in zip(self.templates.parts, self.models):
            entry = {"part_id": tpl.part_id, "name": tpl.name, "n_vertices": m.n_vertices, "k": m.k,
                     "joint_names": list(m.regressor.joint_names)}
            if m.report is not None:
                entry["training_report"] = m.report.to_dict()
            parts.append(entry)
        return {
            "format": BUNDLE_FORMAT,
            "parts": parts,
            "neighbors": [list(nb) for nb in self.templates.neighbors],
            "merge_map": self.merge.to_dict(),
            "dilation": self.templates.dilation,
            "training_config": self.config.to_dict(),
            "seed_mixing": SEED_MIXING,
            "extra": self.extra,
        }

    def save(self, directory):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        _dump(self.meta(), d / "model.json")
        save_templates(self.templates, d / "templates.json")
        for m in self.models:
            (d / f"part_{m.part_id}.bin").write_bytes(part_blob(m))

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        if not d.is_dir():
            raise ConfigError(f"bundle directory {d} does not exist")
        meta = _load(d / "model.json")
        if meta.get("format") != BUNDLE_FORMAT:
            raise DataError(f"unsupported bundle format {meta.get('format')!r}")
        templates = load_templates(d / "templates.json")
        models = []
        for p in meta["parts"]:
            path = d / f"part_{p['part_id']}.bin"
            try:
                blob = path.read_bytes()
            except OSError as e:
                raise DataError(f"cannot read {path}: {e}") from None
            rep = p.get("training_report")
            report = TrainingReport(**rep) if rep else None
            models.append(part_from_blob(blob, int(p["part_id"]), int(p["n_vertices"]), int(p["k"]),
                                         p["joint_names"], report))
        for tpl, m in zip(templates.parts, models):
            if tpl.n_vertices != m.n_vertices:
                raise DataError(f"part {tpl.part_id}: templates and model disagree on vertex count")
        merge = MergeMap.from_dict(meta["merge_map"])
        cfg = TrainingConfig(**meta["training_config"])
        return cls(templates, models, merge, cfg, meta.get("extra"))
