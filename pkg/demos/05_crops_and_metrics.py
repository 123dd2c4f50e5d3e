"""
Partially visible crops and metrics
===================================

Project a body, place random square crops, keep those showing one to four
parts, and score a prediction with MPVE and MPJPE on the visible parts.
"""
from collections import Counter

import numpy as np

from hppm import SynthBodySpec, build_templates, gen_crops, load_merge_map, synth_sample
from hppm.benchmark import bbox, part_bboxes, sample_seed
from hppm.geom import project
from hppm.metrics import joint_mask, mpjpe, mpve
from hppm.synth import DEFAULT_CAMERA
from hppm.templates import slice_parts

spec = SynthBodySpec(grid_spacing=0.03)
rest = synth_sample(spec)
tset = build_templates(rest.mesh, rest.weights, load_merge_map(), 3)

hist = Counter()
for i in range(30):
    s = synth_sample(spec, i)
    parts_2d = [project(DEFAULT_CAMERA, v) for v in slice_parts(tset, s.mesh.vertices)]
    crops = gen_crops(part_bboxes(parts_2d), bbox(np.concatenate(parts_2d)), sample_seed(0, i))
    hist.update(c.n_visible for c in crops)
print("visible parts per kept crop:", dict(sorted(hist.items())))

# score a prediction that is 4 mm off everywhere
s = synth_sample(spec, 3)
gt = slice_parts(tset, s.mesh.vertices)
pred = [v + [0, 0.004, 0] for v in gt]
vis = np.zeros(tset.n_parts, bool)
vis[[1, 3]] = True
print("MPVE  %.6f mm" % mpve(pred, gt, vis))
jm = joint_mask(vis)
print("MPJPE %.6f mm over %d joints" % (mpjpe(s.joints + [0, 0.004, 0], s.joints, jm), jm.sum()))
