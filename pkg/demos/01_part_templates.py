"""
Part templates from a skinned body
==================================

Segment a synthetic body by its blend weights, merge the 23 skinning
segments into 15 parts and grow every part a few mesh rings so that
neighbouring parts share a band of vertices.
"""
import numpy as np

from hppm import SynthBodySpec, build_templates, load_merge_map, synth_sample
from hppm.templates import merge_segments, raw_segment

spec = SynthBodySpec(grid_spacing=0.03)   # coarse grid, fast to build
rest = synth_sample(spec)                 # the rest pose is the template
print("template:", rest.mesh.n_vertices, "vertices,", rest.mesh.n_faces, "faces")

# every vertex goes to the bone with the largest weight, then to its part
merge = load_merge_map()
labels = merge_segments(raw_segment(rest.weights), merge)
for name, n in zip(merge.part_names, np.bincount(labels, minlength=merge.n_parts)):
    print(f"  {name:<16}{n:>6}")

# dilation controls the width of the shared bands
for n in (0, 1, 3, 5):
    t = build_templates(rest.mesh, rest.weights, merge, n)
    shared = sum(len(ids) for p in t.parts for ids in p.overlap.values()) // 2
    print(f"dilation {n}: {len(t.neighbors)} neighbouring pairs, {shared} shared vertex slots")

t = build_templates(rest.mesh, rest.weights, merge, 3)
chest = t.parts[merge.part_names.index("Chest")]
print("Chest shares vertices with", [t.parts[q].name for q in sorted(chest.overlap)])
