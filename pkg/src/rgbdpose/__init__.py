"""Sim-to-real RGBD toolkit.

Domain-randomization augmentation, geometric preprocessing, deterministic
keypoint-voting pose regression, ADD(S) evaluation, reality-gap statistics,
and mesh-based grasp generation/selection.
"""

from .augment import (AnnotatedFrame, BackgroundConfig, DepthAugmentConfig,
                      PerlinRange, RgbAugmentConfig, augment_depth,
                      augment_depth_noise, augment_rgb, generate_rotations,
                      punch_holes, rotate_frame, synthesize_background,
                      warp_depth_edges)
from .core import (BoundingBox2D, CameraIntrinsics, DepthImage, PointCloud,
                   PoseSE3, RgbImage, TriangleMesh, compose, mesh_diameter)
from .errors import (DegenerateConfiguration, DegenerateMesh, EmptyInput,
                     EmptyResult, InputError, InsufficientPoints,
                     NoForeground, RgbdPoseError, ShapeError)
from .geometry import (CropSpec, apply_crop, depth_to_cloud, filter_by_mask,
                       normals_from_depth, resize_nearest, square_crop_spec,
                       subsample)
from .grasp import (GraspGenConfig, GraspPose, GripperModel, SelectConfig,
                    downsample_anchors, generate_grasps, grasp_poses_for_line,
                    select_grasp)
from .metrics import (AddResult, SpectrumProfile, add_metric, adds_metric,
                      depth_psd, evaluate_pose, rgb_statistics, success_rate)
from .noise import (GridNoiseParams, PerlinParams, derive_seed,
                    grid_gaussian_field, perlin_field, perlin_mask)
from .pose import (KeypointPrediction, KeypointSet, VoteConfig, estimate_pose,
                   fit_rigid, vote_keypoints)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
