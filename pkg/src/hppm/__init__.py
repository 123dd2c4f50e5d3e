"""Part-based parametric human body models.

Per-part linear shape models with rigid part transforms, annotation of
whole-body meshes, fusion of decoded parts, training losses and the
partially-visible benchmark harness.
"""
from .annotate import FitMode, SampleAnnotation, annotate_sample, canonicalize, fit_rigid
from .benchmark import CropConfig, CropSpec, gen_crops, part_visibility
from .bundle import ModelBundle
from .errors import ConfigError, DataError, FusionError, HppmError, NumericError
from .fuse import FusedMesh, fuse_templates, gradual_connect, topology_distances
from .geom import (CameraIntrinsics, Mesh, PartTransform, apply_transform, build_adjacency, load_mesh,
                   matrix_to_rot6d, project, rot6d_to_matrix, save_mesh)
from .losses import LossBreakdown, LossWeights, total_loss
from .metrics import MetricsReport, mpjpe, mpve
from .parts import JOINT_NAMES, PART_JOINTS, PART_NAMES
from .shape_model import (JointRegressor, PartShapeModel, PartState, TrainingConfig, decode_part,
                          encode_shape, regress_joints, train_joint_regressor, train_part_pca)
from .synth import SynthBodySpec, synth_body, synth_sample
from .templates import HppmTemplateSet, MergeMap, build_templates, load_merge_map

__version__ = "0.1.0"
