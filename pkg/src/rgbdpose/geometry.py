"""Geometric preprocessing between images and the pose voter.

ROI cropping, nearest-neighbor resize, depth back-projection,
structured-depth surface normals, subsampling, and mask filtering.
All functions are pure and deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CameraIntrinsics, DepthImage, BoundingBox2D, PointCloud
from .errors import ShapeError


@dataclass(frozen=True)
class CropSpec:
    """Square crop: top-left origin and side, side a multiple of `base`."""

    origin: tuple[int, int]
    side: int
    base: int

    def __post_init__(self):
        if self.side < self.base or self.side % self.base != 0:
            raise ValueError("side must be a positive multiple of base")


def square_crop_spec(bbox: BoundingBox2D, base: int,
                     image_dims: tuple[int, int]) -> CropSpec:
    """Smallest base-multiple square centered on the box and containing it.

    The square is shifted minimally to stay inside the image when it fits; a
    square larger than the image keeps its centered (possibly negative)
    origin and callers zero-pad via apply_crop.
    """
    width, height = image_dims
    w, h = bbox.size
    side = base * math.ceil(max(w, h) / base)
    cx, cy = bbox.center
    x = int(round(cx - side / 2.0))
    y = int(round(cy - side / 2.0))
    if side <= width:
        x = min(max(x, 0), width - side)
    if side <= height:
        y = min(max(y, 0), height - side)
    return CropSpec(origin=(x, y), side=side, base=base)


def apply_crop(img: np.ndarray, spec: CropSpec, fill=0) -> np.ndarray:
    """Extract the crop as a side x side array, zero-padding outside the image."""
    h, w = img.shape[:2]
    out_shape = (spec.side, spec.side) + img.shape[2:]
    out = np.full(out_shape, fill, dtype=img.dtype)
    x0, y0 = spec.origin
    src_x0, src_y0 = max(x0, 0), max(y0, 0)
    src_x1, src_y1 = min(x0 + spec.side, w), min(y0 + spec.side, h)
    if src_x0 < src_x1 and src_y0 < src_y1:
        out[src_y0 - y0:src_y1 - y0, src_x0 - x0:src_x1 - x0] = \
            img[src_y0:src_y1, src_x0:src_x1]
    return out


def resize_nearest(img: np.ndarray, target: int) -> np.ndarray:
    """Nearest-neighbor resize of a square image to target x target.

    Source index = floor((i + 0.5) * in/out), so every output value occurs in
    the input.
    """
    h, w = img.shape[:2]
    if h != w:
        raise ShapeError("resize_nearest expects a square input")
    scale = w / target
    idx = np.minimum(np.floor((np.arange(target) + 0.5) * scale).astype(np.int64),
                     w - 1)
    return img[np.ix_(idx, idx)]


def depth_to_cloud(depth: DepthImage, intrinsics: CameraIntrinsics,
                   rgb: np.ndarray | None = None) -> PointCloud:
    """Back-project valid depth pixels through the pinhole model.

    Output is in row-major pixel order; colors are attached (scaled to [0,1])
    when an rgb array of matching dims is given.
    """
    valid = depth.valid_mask
    h, w = depth.data.shape
    if valid.all():
        z = depth.data.astype(np.float64)
        u = np.arange(w, dtype=np.float64)[None, :]
        v = np.arange(h, dtype=np.float64)[:, None]
        points = np.empty((h * w, 3))
        points[:, 0] = ((u - intrinsics.cx) * z / intrinsics.fx).ravel()
        points[:, 1] = ((v - intrinsics.cy) * z / intrinsics.fy).ravel()
        points[:, 2] = z.ravel()
    else:
        v, u = np.nonzero(valid)
        z = depth.data[valid].astype(np.float64)
        points = np.empty((len(z), 3))
        points[:, 0] = (u - intrinsics.cx) * z / intrinsics.fx
        points[:, 1] = (v - intrinsics.cy) * z / intrinsics.fy
        points[:, 2] = z
    colors = None
    if rgb is not None:
        rgb = np.asarray(rgb)
        if rgb.shape[:2] != depth.data.shape:
            raise ShapeError("rgb and depth dimensions differ")
        colors = rgb[valid].astype(np.float64) / 255.0
    return PointCloud(points=points, colors=colors)


def normals_from_depth(depth: DepthImage,
                       intrinsics: CameraIntrinsics) -> np.ndarray:
    """Per-pixel surface normals from the depth gradients, geometrically.

    Tangents along u and v come from central differences of the back-projected
    surface, falling back to one-sided differences where a neighbor is
    invalid; the normal is their cross product, unit length, flipped to face
    the camera (n.p < 0). Pixels with no valid neighbor along either axis get
    (0, 0, -1). Returns (N, 3) aligned with depth_to_cloud's row-major order.
    """
    # float32 throughout: the op is memory-bound and the 1e-6 unit-length /
    # sub-degree accuracy contracts leave ample headroom
    z = depth.data
    valid = depth.valid_mask
    h, w = z.shape

    u = np.arange(w, dtype=np.float32)[None, :]
    v = np.arange(h, dtype=np.float32)[:, None]
    p = np.empty((h, w, 3), dtype=np.float32)
    p[..., 0] = (u - np.float32(intrinsics.cx)) * z / np.float32(intrinsics.fx)
    p[..., 1] = (v - np.float32(intrinsics.cy)) * z / np.float32(intrinsics.fy)
    p[..., 2] = z

    if valid.all() and w > 1 and h > 1:
        # np.gradient is exactly central differences with one-sided borders
        du = np.gradient(p, axis=1)
        dv = np.gradient(p, axis=0)
        usable = None
    else:
        du, ok_u = _axis_tangent(p, valid, axis=1)
        dv, ok_v = _axis_tangent(p, valid, axis=0)
        usable = valid & ok_u & ok_v

    n = np.empty((h, w, 3), dtype=np.float32)
    n[..., 0] = du[..., 1] * dv[..., 2] - du[..., 2] * dv[..., 1]
    n[..., 1] = du[..., 2] * dv[..., 0] - du[..., 0] * dv[..., 2]
    n[..., 2] = du[..., 0] * dv[..., 1] - du[..., 1] * dv[..., 0]

    if usable is None:
        out = n.reshape(-1, 3)
        pts = p.reshape(-1, 3)
        length = np.sqrt((out * out).sum(axis=1))
        degenerate = length == 0
    else:
        out = n[valid]
        pts = p[valid]
        length = np.sqrt((out * out).sum(axis=1))
        degenerate = ~(usable[valid] & (length > 0))
    length[degenerate] = 1.0
    out /= length[:, None]
    out[degenerate] = (0.0, 0.0, -1.0)
    flip = (out * pts).sum(axis=1) > 0
    out[flip] *= -1.0
    return out.astype(np.float64)


def _axis_tangent(p: np.ndarray, valid: np.ndarray, axis: int):
    """Finite-difference tangent along one pixel axis, with validity fallback."""
    fwd_p = _shift(p, -1, axis)
    bwd_p = _shift(p, 1, axis)
    fwd_ok = _shift(valid, -1, axis)
    bwd_ok = _shift(valid, 1, axis)

    central = (fwd_p - bwd_p) * 0.5
    forward = fwd_p - p
    backward = p - bwd_p

    both = fwd_ok & bwd_ok
    tangent = np.where(both[..., None], central,
                       np.where(fwd_ok[..., None], forward, backward))
    return tangent, fwd_ok | bwd_ok


def _shift(arr: np.ndarray, offset: int, axis: int) -> np.ndarray:
    """Shift with zero/False fill (out-of-image neighbors are invalid)."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if offset > 0:
        src[axis] = slice(None, -offset)
        dst[axis] = slice(offset, None)
    else:
        src[axis] = slice(-offset, None)
        dst[axis] = slice(None, offset)
    out[tuple(dst)] = arr[tuple(src)]
    return out


def subsample(cloud: PointCloud, n: int, seed: int = 0) -> PointCloud:
    """Uniform sample of n points without replacement, deterministic per seed.

    Clouds already at or below n are returned unchanged; selected indices keep
    their original relative order so attribute pairing is trivially preserved.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if len(cloud) <= n:
        return cloud
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    idx = np.sort(rng.choice(len(cloud), size=n, replace=False))
    return cloud.take(idx)


def filter_by_mask(cloud: PointCloud, scores: np.ndarray,
                   threshold: float) -> PointCloud:
    """Keep points with score > threshold, order preserved."""
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    if len(scores) != len(cloud):
        raise ShapeError(f"{len(scores)} scores for {len(cloud)} points")
    return cloud.take(np.nonzero(scores > threshold)[0])
