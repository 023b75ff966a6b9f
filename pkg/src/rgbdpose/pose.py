"""Deterministic keypoint voting and SVD rigid fit.

Replaces iterative Mean-Shift clustering with a fixed-cost pipeline: keep the
top-n smallest predicted offsets per keypoint, reject candidates farther from
the mean than one standard deviation of the candidate distances, average the
survivors, then solve the model-to-voted alignment in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PoseSE3
from .errors import DegenerateConfiguration, InsufficientPoints, ShapeError


@dataclass(frozen=True)
class KeypointPrediction:
    """Per-point network outputs: N input points, N x K x 3 offsets toward
    each keypoint, and N foreground scores in [0, 1]."""

    points: np.ndarray
    offsets: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        offsets = np.asarray(self.offsets, dtype=np.float64)
        scores = np.asarray(self.scores, dtype=np.float64).reshape(-1)
        n = len(points)
        if offsets.ndim != 3 or offsets.shape[0] != n or offsets.shape[2] != 3:
            raise ShapeError(f"offsets shape {offsets.shape} != ({n}, K, 3)")
        if offsets.shape[1] < 3:
            raise ShapeError("need K >= 3 keypoints")
        if len(scores) != n:
            raise ShapeError(f"{len(scores)} scores for {n} points")
        if len(scores) and (scores.min() < 0.0 or scores.max() > 1.0):
            raise ValueError("scores must lie in [0, 1]")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "scores", scores)

    @property
    def num_keypoints(self) -> int:
        return self.offsets.shape[1]


@dataclass(frozen=True)
class KeypointSet:
    """K >= 3 keypoint positions in a stated frame."""

    keypoints: np.ndarray

    def __post_init__(self):
        kps = np.asarray(self.keypoints, dtype=np.float64).reshape(-1, 3)
        if len(kps) < 3:
            raise ShapeError("need at least 3 keypoints")
        object.__setattr__(self, "keypoints", kps)

    def __len__(self) -> int:
        return len(self.keypoints)


@dataclass(frozen=True)
class VoteConfig:
    top_n: int = 128
    score_threshold: float = 0.5

    def __post_init__(self):
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


def vote_keypoints(pred: KeypointPrediction, cfg: VoteConfig) -> KeypointSet:
    """Aggregate offset candidates into one keypoint estimate each.

    Per keypoint: drop background points (score <= threshold), keep the top_n
    candidates with the smallest offset norm (ties by ascending point index),
    form candidates point + offset, mask candidates whose distance to the
    per-axis mean exceeds the standard deviation of those distances, and
    average the survivors (falling back to the unfiltered mean if none
    survive). Returns camera-frame keypoints.
    """
    fg = np.nonzero(pred.scores > cfg.score_threshold)[0]
    if len(fg) < cfg.top_n:
        raise InsufficientPoints(
            f"{len(fg)} foreground points < top_n {cfg.top_n}")

    voted = np.empty((pred.num_keypoints, 3))
    for k in range(pred.num_keypoints):
        offsets = pred.offsets[fg, k, :]
        norms = np.linalg.norm(offsets, axis=1)
        order = np.argsort(norms, kind="stable")[:cfg.top_n]
        candidates = pred.points[fg[order]] + offsets[order]

        mu = candidates.mean(axis=0)
        dist = np.linalg.norm(candidates - mu, axis=1)
        sigma = dist.std()
        keep = dist <= sigma
        voted[k] = candidates[keep].mean(axis=0) if keep.any() else mu
    return KeypointSet(voted)


def fit_rigid(model_kps: KeypointSet, voted_kps: KeypointSet,
              weights: np.ndarray | None = None) -> PoseSE3:
    """Weighted least-squares rigid alignment (Kabsch / Umeyama without scale):
    arg min sum w_k ||R m_k + t - v_k||^2, with the SVD determinant corrected
    so the result is never a reflection."""
    m = model_kps.keypoints
    v = voted_kps.keypoints
    if len(m) != len(v):
        raise ShapeError(f"{len(m)} model keypoints vs {len(v)} voted")
    if weights is None:
        w = np.ones(len(m))
    else:
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        if len(w) != len(m):
            raise ShapeError("one weight per keypoint required")
        if w.min() < 0 or w.sum() <= 0:
            raise ValueError("weights must be non-negative with positive sum")

    w_norm = w / w.sum()
    centroid_m = w_norm @ m
    centroid_v = w_norm @ v
    mc = m - centroid_m
    vc = v - centroid_v

    sv = np.linalg.svd(mc, compute_uv=False)
    if sv[1] <= 1e-9 * max(sv[0], 1e-300):
        raise DegenerateConfiguration("model keypoints are (near-)collinear")

    h = mc.T @ (vc * w_norm[:, None])
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    return PoseSE3(r, centroid_v - r @ centroid_m)


def estimate_pose(pred: KeypointPrediction, model_kps: KeypointSet,
                  cfg: VoteConfig) -> PoseSE3:
    """Vote keypoints in the camera frame, then fit the model keypoints to
    them; deterministic end-to-end."""
    if len(model_kps) != pred.num_keypoints:
        raise ShapeError(
            f"{len(model_kps)} model keypoints vs {pred.num_keypoints} predicted")
    return fit_rigid(model_kps, vote_keypoints(pred, cfg))
