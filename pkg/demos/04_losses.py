"""
Training losses
===============

Evaluate the divide and fusion losses on a perturbed prediction. Hidden
parts never contribute, whatever their values.
"""
import numpy as np

from hppm import LossWeights, SynthBodySpec, build_templates, load_merge_map, synth_sample, total_loss
from hppm.losses import LossInputs
from hppm.synth import DEFAULT_CAMERA
from hppm.geom import PartTransform
from hppm.shape_model import PartState
from hppm.templates import slice_parts

rng = np.random.default_rng(0)
spec = SynthBodySpec(grid_spacing=0.03)
rest = synth_sample(spec)
tset = build_templates(rest.mesh, rest.weights, load_merge_map(), 3)
body = synth_sample(spec, 7)

gt_v = slice_parts(tset, body.mesh.vertices)
gt_j = [v.mean(0, keepdims=True) for v in gt_v]      # one stand-in joint per part
gt_s = [PartState.from_transform(p, np.zeros(4), PartTransform.identity()) for p in range(tset.n_parts)]

# 3 mm of noise on every predicted vertex and joint
pr_v = [v + 0.003 * rng.normal(size=v.shape) for v in gt_v]
pr_j = [j + 0.003 * rng.normal(size=j.shape) for j in gt_j]
pr_s = [PartState(s.part_id, s.shape + 0.1, s.rot6d, s.translation + 0.002) for s in gt_s]

vis = np.zeros(tset.n_parts, bool)
vis[:4] = True
b = total_loss(LossInputs(pr_v, gt_v, pr_j, gt_j, pr_s, gt_s, DEFAULT_CAMERA, tset, vis))
for k, v in b.to_dict().items():
    print(f"{k:<8}{v:14.6f}")

print("weights:", LossWeights().to_dict())

# scramble a hidden part: nothing changes
pr_v[10] = pr_v[10] + 5.0
again = total_loss(LossInputs(pr_v, gt_v, pr_j, gt_j, pr_s, gt_s, DEFAULT_CAMERA, tset, vis))
print("unchanged after scrambling a hidden part:", again == b)
