"""
The command line, end to end
============================

Run every ``hppm`` subcommand on a small coarse dataset in a temporary
directory. Evaluating the annotations against themselves gives zero error.
"""
import json
import tempfile
from pathlib import Path

from hppm.cli import main

root = Path(tempfile.mkdtemp())
data, bundle = root / "data", root / "bundle"


def run(*argv):
    code = main([str(a) for a in argv])
    assert code == 0, argv


run("synth", "--out", data, "-n", "20", "--grid-spacing", "0.03")
run("build-template", "--template", data / "template.obj", "--weights", data / "weights.npy",
    "--bundle", bundle, "--dilation", "3")
run("train", "--bundle", bundle, "--data", data, "--k-min", "4", "--k-max", "16")
run("annotate", "--bundle", bundle, "--data", data, "--out", root / "ann")
run("gen-pv", "--bundle", bundle, "--annotations", root / "ann", "--out", root / "pv.jsonl", "--seed", "1")
run("decode-fuse", "--bundle", bundle, "--annotation", root / "ann" / "s00000.json",
    "--visible", "1,3,6", "--out", root / "fused.obj")
run("eval", "--bundle", bundle, "--manifest", root / "pv.jsonl", "--predictions", root / "ann",
    "--out", root / "report.json")
print(json.dumps({k: v for k, v in json.loads((root / "report.json").read_text()).items() if k != "per_part"}))
print("outputs in", root)
