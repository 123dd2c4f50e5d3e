"""``hppm`` command line.

Subcommands: synth, build-template, train, annotate, gen-pv, decode-fuse, eval.
A JSON config (``--config`` or ``HPPM_CONFIG``) supplies defaults; explicit
flags win. Exit status: 0 ok, 2 config error, 3 data error, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .annotate import FitMode, SampleAnnotation, annotate_sample
from .benchmark import CropConfig, bbox, gen_crops, part_bboxes, read_manifest, sample_seed, write_manifest
from .bundle import ModelBundle, load_templates, save_templates
from .errors import ConfigError, DataError, HppmError
from .fuse import fuse_templates
from .geom import CameraIntrinsics, load_mesh, project, save_mesh
from .losses import LossInputs, LossWeights, total_loss
from .metrics import MetricsAccumulator, joint_mask
from .parts import JOINT_NAMES
from .pipeline import decode_all, merge_part_joints, train_models
from .shape_model import TrainingConfig, regress_joints
from .synth import DEFAULT_CAMERA, SynthBodySpec, synth_sample
from .templates import DEFAULT_DILATION, build_templates, load_merge_map

log = logging.getLogger("hppm")

_CONFIG_KEYS = {"seed", "paths", "training", "loss_weights", "crops", "fit_mode", "dilation", "synth"}
_PATH_KEYS = {"body_template", "blend_weights", "merge_map", "data_dir", "output_dir"}


@dataclass
class RunConfig:
    paths: dict = field(default_factory=dict)
    training: TrainingConfig = TrainingConfig()
    loss_weights: LossWeights = LossWeights()
    crops: CropConfig = CropConfig()
    fit_mode: FitMode = FitMode.RIGID
    seed: int = 0
    dilation: int = DEFAULT_DILATION
    synth: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc, base=Path(".")):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        paths = dict(doc.get("paths", {}))
        if set(paths) - _PATH_KEYS:
            raise ConfigError(f"unknown path keys: {sorted(set(paths) - _PATH_KEYS)}")
        resolved = {}
        for k, p in paths.items():
            p = Path(p) if Path(p).is_absolute() else base / p
            # output_dir is created by the commands; the rest must already exist
            if k != "output_dir" and not p.exists():
                raise ConfigError(f"config path {k}={p} does not exist")
            resolved[k] = p
        try:
            crops = dict(doc.get("crops", {}))
            for key in ("keep_range", "side_range"):
                if key in crops:
                    crops[key] = tuple(crops[key])
            cfg = cls(
                paths=resolved,
                training=TrainingConfig(**doc.get("training", {})),
                loss_weights=LossWeights(**doc.get("loss_weights", {})),
                crops=CropConfig(**crops),
                fit_mode=FitMode(doc.get("fit_mode", "rigid")),
                seed=int(doc.get("seed", 0)),
                dilation=int(doc.get("dilation", DEFAULT_DILATION)),
                synth=dict(doc.get("synth", {})),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config: {e}") from None
        if cfg.dilation < 0:
            raise ConfigError("dilation must be >= 0")
        return cfg


def load_config(path=None) -> RunConfig:
    """Config from ``path``, else from ``$HPPM_CONFIG``, else defaults."""
    path = path or os.environ.get("HPPM_CONFIG")
    if not path:
        return RunConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    return RunConfig.from_dict(doc, Path(path).parent)


def _pick(value, cfg_value, default=None):
    if value is not None:
        return value
    return default if cfg_value is None else cfg_value


def _need(value, what):
    if value is None:
        raise ConfigError(f"missing {what}")
    return Path(value)


# --------------------------------------------------------------------------
# dataset directory layout written by ``synth``

def _read_index(data_dir):
    p = Path(data_dir) / "index.json"
    try:
        return json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{data_dir} is not a dataset directory (no index.json)") from None
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read {p}: {e}") from None


def _load_npy(path):
    try:
        return np.load(path, allow_pickle=False)
    except FileNotFoundError:
        raise ConfigError(f"missing file {path}") from None
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read {path}: {e}") from None


def _dataset(data_dir):
    index = _read_index(data_dir)
    joints = _load_npy(Path(data_dir) / "joints.npy")
    if len(joints) != len(index["ids"]):
        raise DataError("joints.npy and index.json disagree on the sample count")
    cam = CameraIntrinsics.from_dict(index["camera"])
    return index["ids"], joints, cam


def cmd_synth(args, cfg: RunConfig):
    out = _need(_pick(args.out, cfg.paths.get("data_dir")), "--out")
    sc = cfg.synth
    spec = SynthBodySpec(seed=int(_pick(args.seed, sc.get("seed"), cfg.seed)),
                         grid_spacing=float(_pick(args.grid_spacing, sc.get("grid_spacing"), 0.02)))
    n = int(_pick(args.n, sc.get("n"), 200))
    first = int(_pick(args.first, sc.get("first"), 0))
    (out / "meshes").mkdir(parents=True, exist_ok=True)
    rest = synth_sample(spec)
    save_mesh(rest.mesh, out / "template.obj")
    np.save(out / "weights.npy", rest.weights)
    np.save(out / "template_joints.npy", rest.joints)
    ids, joints = [], []
    for i in range(first, first + n):
        s = synth_sample(spec, i)
        sid = f"s{i:05d}"
        save_mesh(s.mesh, out / "meshes" / f"{sid}.obj")
        ids.append(sid)
        joints.append(s.joints)
    np.save(out / "joints.npy", np.array(joints).reshape(-1, len(JOINT_NAMES), 3))
    index = {"format": "hppm-dataset/1", "ids": ids, "camera": DEFAULT_CAMERA.to_dict(),
             "joint_names": list(JOINT_NAMES),
             "spec": {"seed": spec.seed, "grid_spacing": spec.grid_spacing, "first": first, "n": n}}
    (out / "index.json").write_text(json.dumps(index, indent=1) + "\n")
    return {"out": str(out), "n_samples": n, "n_vertices": rest.mesh.n_vertices,
            "n_bones": spec.n_bones}, f"wrote {n} samples ({rest.mesh.n_vertices} vertices) to {out}"


def cmd_build_template(args, cfg: RunConfig):
    body_path = _need(_pick(args.template, cfg.paths.get("body_template")), "--template")
    w_path = _need(_pick(args.weights, cfg.paths.get("blend_weights")), "--weights")
    bundle = _need(_pick(args.bundle, cfg.paths.get("output_dir")), "--bundle")
    merge = load_merge_map(_pick(args.merge_map, cfg.paths.get("merge_map")))
    n = int(_pick(args.dilation, None, cfg.dilation))
    if n < 0:
        raise ConfigError("dilation must be >= 0")
    try:
        body = load_mesh(body_path)
    except FileNotFoundError:
        raise ConfigError(f"missing template mesh {body_path}") from None
    W = _load_npy(w_path)
    tset = build_templates(body, W, merge, n)
    bundle.mkdir(parents=True, exist_ok=True)
    save_templates(tset, bundle / "templates.json")
    (bundle / "merge_map.json").write_text(json.dumps(merge.to_dict(), sort_keys=True, indent=1) + "\n")
    rows = [{"part_id": p.part_id, "name": p.name, "n_vertices": p.n_vertices, "n_core": len(p.core_ids),
             "overlap": {tset.parts[q].name: len(ids) for q, ids in sorted(p.overlap.items())}}
            for p in tset.parts]
    lines = [f"{'Part':<16}{'N_p':>7}{'core':>7}  overlaps"]
    for r in rows:
        ov = ", ".join(f"{k}:{v}" for k, v in r["overlap"].items())
        lines.append(f"{r['name']:<16}{r['n_vertices']:>7}{r['n_core']:>7}  {ov}")
    lines.append(f"{len(tset.neighbors)} neighbouring pairs, dilation {n}")
    return {"bundle": str(bundle), "dilation": n, "n_neighbors": len(tset.neighbors), "parts": rows}, "\n".join(lines)


def training_table(bundle: ModelBundle):
    """Per-part training summary laid out like the reference hyperparameter table."""
    head = f"{'Part':<16}{'k_p':>5}{'N_p':>7}{'|J_p|':>7}{'Vertex Errors':>15}{'Joint Errors':>14}"
    lines = [head]
    rows = []
    for tpl, m in zip(bundle.templates.parts, bundle.models):
        r = m.report
        flag = "" if r is None or r.budget_met else "  (budget violated)"
        lines.append(f"{tpl.name:<16}{m.k:>5}{m.n_vertices:>7}{m.regressor.n_joints:>7}"
                     f"{r.vertex_error_mm:>13.3f}mm{r.joint_error_mm:>12.3f}mm{flag}")
        rows.append({"part_id": tpl.part_id, "name": tpl.name, "k": m.k, "n_vertices": m.n_vertices,
                     "n_joints": m.regressor.n_joints, **(r.to_dict() if r else {})})
    return rows, "\n".join(lines)


def cmd_train(args, cfg: RunConfig):
    bdir = _need(_pick(args.bundle, cfg.paths.get("output_dir")), "--bundle")
    data = _need(_pick(args.data, cfg.paths.get("data_dir")), "--data")
    tpath = bdir / "templates.json"
    if not tpath.exists():
        raise ConfigError(f"no templates in {bdir}; run build-template first")
    tset = load_templates(tpath)
    mpath = bdir / "merge_map.json"
    merge = load_merge_map(mpath if mpath.exists() else None)
    tc = cfg.training
    tc = TrainingConfig(_pick(args.max_error, None, tc.max_error_mm), _pick(args.k_min, None, tc.k_min),
                        _pick(args.k_max, None, tc.k_max))
    ids, joints, _ = _dataset(data)
    if len(ids) < 2:
        raise DataError("need at least two training meshes")
    bodies = [load_mesh(data / "meshes" / f"{sid}.obj").vertices for sid in ids]
    tj = _load_npy(data / "template_joints.npy") if args.regressor == "template" else None
    models = train_models(tset, bodies, joints, tc, args.regressor, tj)
    bundle = ModelBundle(tset, models, merge, tc, {"regressor_source": args.regressor,
                                                   "n_training_samples": len(ids)})
    bundle.save(bdir)
    rows, table = training_table(bundle)
    return {"bundle": str(bdir), "training_config": tc.to_dict(), "parts": rows}, table


def _load_bundle(path, cfg):
    return ModelBundle.load(_need(_pick(path, cfg.paths.get("output_dir")), "--bundle"))


def cmd_annotate(args, cfg: RunConfig):
    bundle = _load_bundle(args.bundle, cfg)
    out = _need(args.out, "--out")
    mode = FitMode(args.mode) if args.mode else cfg.fit_mode
    jobs = []
    if args.data or (not args.meshes and cfg.paths.get("data_dir")):
        data = Path(_pick(args.data, cfg.paths.get("data_dir")))
        ids, joints, cam = _dataset(data)
        jobs = [(sid, data / "meshes" / f"{sid}.obj", j) for sid, j in zip(ids, joints)]
    else:
        cam = DEFAULT_CAMERA
        joints = _load_npy(args.joints) if args.joints else None
        if joints is not None and len(joints) != len(args.meshes):
            raise DataError("--joints must hold one joint set per mesh")
        for i, m in enumerate(args.meshes):
            jobs.append((Path(m).stem, Path(m), None if joints is None else joints[i]))
    if args.camera:
        cam = CameraIntrinsics.from_dict(json.loads(Path(args.camera).read_text()))
    if not jobs:
        raise ConfigError("no meshes to annotate")
    out.mkdir(parents=True, exist_ok=True)
    per_part = np.zeros((len(jobs), bundle.templates.n_parts, 2))
    for i, (sid, path, j) in enumerate(jobs):
        try:
            mesh = load_mesh(path)
        except FileNotFoundError:
            raise DataError(f"missing mesh {path}") from None
        ann = annotate_sample(bundle.templates, bundle.models, mesh, cam, mode, j, sample_id=sid)
        ann.save(out / f"{sid}.json")
        per_part[i] = [[r["vertex_error_mm"], r["joint_error_mm"]] for r in ann.fit_report]
    mean = per_part.mean(0)
    rows = [{"part_id": t.part_id, "name": t.name, "vertex_error_mm": float(mean[t.part_id, 0]),
             "joint_error_mm": float(mean[t.part_id, 1])} for t in bundle.templates.parts]
    lines = [f"{'Part':<16}{'Vertex Errors':>15}{'Joint Errors':>14}"]
    lines += [f"{r['name']:<16}{r['vertex_error_mm']:>13.3f}mm{r['joint_error_mm']:>12.3f}mm" for r in rows]
    lines.append(f"annotated {len(jobs)} meshes into {out}")
    return {"out": str(out), "n_annotations": len(jobs), "mode": mode.value, "parts": rows}, "\n".join(lines)


def _annotation_files(directory):
    files = sorted(Path(directory).glob("*.json"))
    if not files:
        raise DataError(f"no annotation files in {directory}")
    return files


def cmd_gen_pv(args, cfg: RunConfig):
    bundle = _load_bundle(args.bundle, cfg)
    out = _need(args.out, "--out")
    c = cfg.crops
    crops = CropConfig(_pick(args.attempts, None, c.attempts),
                       tuple(args.keep_range) if args.keep_range else c.keep_range,
                       tuple(args.side_range) if args.side_range else c.side_range)
    seed = int(_pick(args.seed, None, cfg.seed))
    records = []
    for idx, path in enumerate(_annotation_files(args.annotations)):
        ann = SampleAnnotation.load(path)
        verts, _ = decode_all(bundle.models, ann.states)
        parts_2d = [project(ann.camera, v) for v in verts]
        boxes = part_bboxes(parts_2d)
        human = bbox(np.concatenate(parts_2d))
        sid = ann.sample_id or path.stem
        for ci, crop in enumerate(gen_crops(boxes, human, sample_seed(seed, idx), crops, sid)):
            rec = crop.to_dict()
            rec.update({"crop_id": f"{sid}_{ci:02d}", "rect": list(crop.rect),
                        "annotation": str(path.resolve())})
            records.append(rec)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(records, out)
    hist = Counter(sum(r["visible"]) for r in records)
    hist = {str(k): hist[k] for k in sorted(hist)}
    lines = [f"{len(records)} crops written to {out}", "visible parts: count"]
    lines += [f"  {k}: {v}" for k, v in hist.items()]
    return {"manifest": str(out), "n_crops": len(records), "seed": seed, "crop_config": crops.to_dict(),
            "histogram": hist}, "\n".join(lines)


def _parse_visible(text, n_parts):
    try:
        ids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"--visible expects comma-separated part ids, got {text!r}") from None
    if any(not 0 <= i < n_parts for i in ids):
        raise ConfigError(f"--visible part ids must lie in 0..{n_parts - 1}")
    vis = np.zeros(n_parts, bool)
    vis[ids] = True
    return vis


def cmd_decode_fuse(args, cfg: RunConfig):
    bundle = _load_bundle(args.bundle, cfg)
    ann = SampleAnnotation.load(args.annotation)
    P = bundle.templates.n_parts
    if len(ann.states) != P:
        raise DataError(f"annotation has {len(ann.states)} parts, bundle has {P}")
    for s, m in zip(ann.states, bundle.models):
        if s.shape.size != m.k:
            raise DataError(f"part {s.part_id}: annotation has {s.shape.size} shape parameters, model {m.k}")
    vis = _parse_visible(args.visible, P) if args.visible is not None else ann.visibility
    if not vis.any():
        raise DataError("no visible part to decode")
    verts, _ = decode_all(bundle.models, ann.states)
    fused = fuse_templates(bundle.templates, verts, vis, on_multi=args.on_multi)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fused.save(out)
    return ({"obj": str(out), "sidecar": str(out.with_suffix(".json")), "n_vertices": len(fused.vertices),
             "n_faces": len(fused.faces), "visible": np.flatnonzero(vis).tolist()},
            f"fused {int(vis.sum())} parts into {out} ({len(fused.vertices)} vertices)")


def _load_prediction(pred_dir, sid, bundle):
    """Per-part vertices (and states, if any) of one prediction."""
    js = Path(pred_dir) / f"{sid}.json"
    if js.exists():
        ann = SampleAnnotation.load(js)
        if len(ann.states) != bundle.templates.n_parts:
            raise DataError(f"prediction {sid} has {len(ann.states)} parts")
        verts, _ = decode_all(bundle.models, ann.states)
        return verts, ann.states
    pdir = Path(pred_dir) / sid
    if pdir.is_dir():
        verts = []
        for tpl in bundle.templates.parts:
            m = load_mesh(pdir / f"part_{tpl.part_id}.obj")
            if m.n_vertices != tpl.n_vertices:
                raise DataError(f"prediction {sid} part {tpl.part_id}: {m.n_vertices} vertices, "
                                f"expected {tpl.n_vertices}")
            verts.append(m.vertices)
        return verts, None
    raise DataError(f"no prediction for sample {sid} in {pred_dir}")


def cmd_eval(args, cfg: RunConfig):
    bundle = _load_bundle(args.bundle, cfg)
    records = read_manifest(args.manifest)
    if not records:
        raise DataError("empty manifest")
    acc = MetricsAccumulator(bundle.templates.part_names)
    weights = cfg.loss_weights
    loss_sum = None
    gt_cache, pred_cache = {}, {}
    for rec in records:
        sid = rec["sample_id"]
        vis = np.asarray(rec["visible"], bool)
        if len(vis) != bundle.templates.n_parts:
            raise DataError(f"manifest record {rec.get('crop_id', sid)} has {len(vis)} flags")
        if sid not in gt_cache:
            gt_path = Path(args.gt) / f"{sid}.json" if args.gt else Path(rec["annotation"])
            gt = SampleAnnotation.load(gt_path)
            gv, gj = decode_all(bundle.models, gt.states)
            gt_cache[sid] = (gt, gv, gj)
        gt, gv, gj = gt_cache[sid]
        if sid not in pred_cache:
            pv, ps = _load_prediction(args.predictions, sid, bundle)
            pj = [regress_joints(m.regressor, v) for m, v in zip(bundle.models, pv)]
            pred_cache[sid] = (pv, ps, pj)
        pv, ps, pj = pred_cache[sid]
        jp, _ = merge_part_joints(pj, vis, models=bundle.models)
        jg, jm = merge_part_joints(gj, vis, models=bundle.models)
        acc.add(pv, gv, vis, jp, jg, jm & joint_mask(vis))
        if args.losses and ps is not None:
            b = total_loss(LossInputs(pv, gv, pj, gj, ps, gt.states, gt.camera, bundle.templates, vis), weights)
            d = b.to_dict()
            loss_sum = d if loss_sum is None else {k: loss_sum[k] + d[k] for k in d}
    report = acc.report().to_dict()
    if loss_sum is not None:
        report["losses"] = {k: v / len(records) for k, v in loss_sum.items()}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=1, sort_keys=True) + "\n")
    text = (f"MPVE {report['mpve_mm']:.3f} mm  MPJPE {report['mpjpe_mm']:.3f} mm  "
            f"over {report['n_samples']} crops")
    return report, text


# --------------------------------------------------------------------------

def build_parser():
    # global flags are accepted before or after the subcommand; the copies on
    # the subcommands default to SUPPRESS so they never overwrite the top level
    def common(top):
        p = argparse.ArgumentParser(add_help=False)
        d = (lambda v: v) if top else (lambda v: argparse.SUPPRESS)
        p.add_argument("--config", default=d(None), help="JSON run config (default: $HPPM_CONFIG)")
        p.add_argument("--json", action="store_true", default=d(False), help="print a JSON summary on stdout")
        p.add_argument("-v", "--verbose", action="store_true", default=d(False))
        return p

    ap = argparse.ArgumentParser(prog="hppm", parents=[common(True)],
                                 description="Part-based human body models: build, train, annotate, fuse, evaluate.")
    sub = ap.add_subparsers(dest="command", required=True)
    _add = sub.add_parser
    sub.add_parser = lambda *a, **k: _add(*a, parents=[common(False)], **k)

    p = sub.add_parser("synth", help="write a synthetic articulated-body dataset")
    p.add_argument("--out")
    p.add_argument("-n", type=int, help="number of posed samples (default 200)")
    p.add_argument("--first", type=int, help="pose seed of the first sample (default 0)")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-spacing", type=float, help="marching-cubes grid spacing in meters (default 0.02)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build-template", help="segment a body template into part templates")
    p.add_argument("--template", help="whole-body template OBJ")
    p.add_argument("--weights", help="blend weights .npy (N x B)")
    p.add_argument("--merge-map", help="merge map JSON (default: packaged 23 -> 15 map)")
    p.add_argument("--dilation", type=int)
    p.add_argument("--bundle", help="output bundle directory")
    p.set_defaults(func=cmd_build_template)

    p = sub.add_parser("train", help="train per-part shape models and joint regressors")
    p.add_argument("--bundle")
    p.add_argument("--data", help="dataset directory written by synth")
    p.add_argument("--max-error", type=float)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--regressor", choices=["samples", "template"], default="samples")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("annotate", help="fit part annotations to whole-body meshes")
    p.add_argument("meshes", nargs="*")
    p.add_argument("--bundle")
    p.add_argument("--data", help="dataset directory (instead of mesh files)")
    p.add_argument("--joints", help=".npy of (M, 17, 3) joints matching the mesh files")
    p.add_argument("--camera", help="camera intrinsics JSON")
    p.add_argument("--mode", choices=[m.value for m in FitMode])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("gen-pv", help="generate the partially-visible crop manifest")
    p.add_argument("--bundle")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="manifest path (JSON lines)")
    p.add_argument("--seed", type=int)
    p.add_argument("--attempts", type=int)
    p.add_argument("--keep-range", type=int, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--side-range", type=float, nargs=2, metavar=("LO", "HI"))
    p.set_defaults(func=cmd_gen_pv)

    p = sub.add_parser("decode-fuse", help="decode an annotation and fuse its visible parts")
    p.add_argument("--bundle")
    p.add_argument("--annotation", required=True)
    p.add_argument("--visible", help="comma-separated part ids overriding the annotation flags")
    p.add_argument("--on-multi", choices=["blend", "error"], default="blend",
                   help="vertices covered by more than two visible parts")
    p.add_argument("--out", required=True, help="output OBJ; the sidecar goes next to it")
    p.set_defaults(func=cmd_decode_fuse)

    p = sub.add_parser("eval", help="MPVE/MPJPE of predictions over a crop manifest")
    p.add_argument("--bundle")
    p.add_argument("--manifest", required=True)
    p.add_argument("--predictions", required=True,
                   help="directory of <sample_id>.json annotations or <sample_id>/part_<p>.obj meshes")
    p.add_argument("--gt", help="ground-truth annotation directory (default: manifest paths)")
    p.add_argument("--losses", action="store_true", help="also report the mean loss breakdown")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_eval)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        summary, text = args.func(args, cfg)
    except HppmError as e:
        print(f"hppm {args.command}: {e}", file=sys.stderr)
        return e.exit_code
    except np.linalg.LinAlgError as e:
        print(f"hppm {args.command}: numerical failure: {e}", file=sys.stderr)
        return 4
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
