"""Domain-randomization augmentation for synthetic RGBD frames.

RGB photometric randomization, depth corruption (Gaussian + Perlin shift,
Sobel-edge warping, plausible background synthesis, hole punching), and
in-plane rotation augmentation with exact label adjustment.

Every operation is a deterministic function of (input, config, seed); the
depth pipeline order is fixed: noise -> edge warp -> holes -> background, so
synthesized background pixels are never re-punched and punched object regions
receive plausible far depth instead of staying empty.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .color import hsv_to_rgb, rgb_to_hsv
from .core import (BoundingBox2D, CameraIntrinsics, DepthImage, PoseSE3,
                   RgbImage, rotation_about_z)
from .errors import NoForeground, ShapeError
from .noise import (GridNoiseParams, PerlinParams, derive_seed,
                    grid_gaussian_field, perlin_field, perlin_vector_field)

Range = tuple[float, float]


@dataclass(frozen=True)
class PerlinRange:
    """Ranges a Perlin field's parameters are drawn from per application."""

    frequency: Range = (4.0, 4.0)
    amplitude: Range = (0.0, 0.0)
    octaves: int = 1

    def sample(self, rng: np.random.Generator, seed: int) -> PerlinParams:
        return PerlinParams(
            frequency=_draw(rng, self.frequency),
            amplitude=_draw(rng, self.amplitude),
            octaves=self.octaves,
            seed=seed,
        )


def _draw(rng: np.random.Generator, rang: Range) -> float:
    low, high = rang
    if low > high:
        raise ValueError(f"range low {low} > high {high}")
    if low == high:
        return float(low)
    return float(rng.uniform(low, high))


@dataclass(frozen=True)
class RgbAugmentConfig:
    """Photometric randomization ranges; defaults are identity, tuned ranges
    arrive through the config file."""

    brightness_delta: Range = (0.0, 0.0)          # additive, 8-bit levels
    saturation_scale_range: Range = (1.0, 1.0)
    hue_delta_degrees: Range = (0.0, 0.0)
    contrast_scale_range: Range = (1.0, 1.0)      # about mid-gray 128
    sharpen_prob: float = 0.0
    blur_prob: float = 0.0
    gaussian_sigma_range: Range = (0.0, 0.0)      # 8-bit levels
    perlin_params_range: PerlinRange = PerlinRange()
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.sharpen_prob <= 1.0 or not 0.0 <= self.blur_prob <= 1.0:
            raise ValueError("probabilities must be in [0, 1]")
        if self.sharpen_prob + self.blur_prob > 1.0:
            raise ValueError("sharpen_prob + blur_prob must be <= 1")


@dataclass(frozen=True)
class BackgroundConfig:
    """Tilted-plane depth background with two interpolated noise grids."""

    max_tilt_radians: float = 0.26
    grid_a: GridNoiseParams = GridNoiseParams(4, 3, 0.05)
    grid_b: GridNoiseParams = GridNoiseParams(9, 7, 0.02)
    offset_behind: float = 0.05

    def __post_init__(self):
        if self.offset_behind <= 0:
            raise ValueError("offset_behind must be > 0")
        if not 0.0 <= self.max_tilt_radians < np.pi / 2:
            raise ValueError("max_tilt_radians must be in [0, pi/2)")


@dataclass(frozen=True)
class DepthAugmentConfig:
    gaussian_sigma: float = 0.0                   # meters
    shift_perlin: PerlinRange = PerlinRange()
    warp_perlin: PerlinRange = PerlinRange()
    warp_max_shift: float = 0.0                   # pixels
    sobel_threshold: float = 0.05                 # depth-gradient magnitude
    edge_dilation: int = 0                        # extra pixels around edges
    background: BackgroundConfig | None = None
    hole_perlin: PerlinRange = PerlinRange()
    hole_threshold: float = np.inf
    seed: int = 0

    def __post_init__(self):
        if self.warp_max_shift < 0:
            raise ValueError("warp_max_shift must be >= 0")
        if self.sobel_threshold <= 0:
            raise ValueError("sobel_threshold must be > 0")


# ---------------------------------------------------------------------------
# RGB pipeline

_SHARPEN_KERNEL = np.array([[0, -1, 0], [-1, 5, -1], [0, -1, 0]], dtype=np.float64)
_BLUR_KERNEL = np.array([[1, 2, 1], [2, 4, 2], [1, 2, 1]], dtype=np.float64) / 16.0


def _conv3(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.pad(img, ((1, 1), (1, 1), (0, 0)), mode="edge")
    out = np.zeros_like(img)
    for dy in range(3):
        for dx in range(3):
            k = kernel[dy, dx]
            if k != 0.0:
                out += k * padded[dy:dy + img.shape[0], dx:dx + img.shape[1]]
    return out


def augment_rgb(img: RgbImage, cfg: RgbAugmentConfig) -> RgbImage:
    """Randomize photometrics in fixed order:
    hue -> saturation -> brightness -> contrast -> (sharpen|blur by draw)
    -> per-channel Gaussian -> per-channel Perlin, clamped to [0, 255].

    Parameter draws come from a dedicated generator in a fixed sequence, so
    the output depends only on (img, cfg).
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, "rgb-params"))
    hue_delta = _draw(rng, cfg.hue_delta_degrees)
    sat_scale = _draw(rng, cfg.saturation_scale_range)
    brightness = _draw(rng, cfg.brightness_delta)
    contrast = _draw(rng, cfg.contrast_scale_range)
    filter_draw = float(rng.uniform())
    sigma = _draw(rng, cfg.gaussian_sigma_range)
    perlin = cfg.perlin_params_range.sample(rng, seed=0)  # per-channel seeds below

    x = img.data.astype(np.float64)
    if hue_delta != 0.0 or sat_scale != 1.0:
        hsv = rgb_to_hsv(x / 255.0)
        hsv[..., 0] = (hsv[..., 0] + hue_delta / 360.0) % 1.0
        hsv[..., 1] = np.clip(hsv[..., 1] * sat_scale, 0.0, 1.0)
        x = hsv_to_rgb(hsv) * 255.0
    if brightness != 0.0:
        x = x + brightness
    if contrast != 1.0:
        x = (x - 128.0) * contrast + 128.0
    if filter_draw < cfg.sharpen_prob:
        x = _conv3(x, _SHARPEN_KERNEL)
    elif filter_draw < cfg.sharpen_prob + cfg.blur_prob:
        x = _conv3(x, _BLUR_KERNEL)
    if sigma > 0.0:
        noise_rng = np.random.default_rng(derive_seed(cfg.seed, "rgb-gauss"))
        x = x + noise_rng.normal(0.0, sigma, size=x.shape)
    if perlin.amplitude > 0.0:
        for c in range(3):
            chan = replace(perlin, seed=derive_seed(cfg.seed, "rgb-perlin", c))
            x[..., c] += perlin_field(img.width, img.height, chan)

    out = np.rint(np.clip(x, 0.0, 255.0)).astype(np.uint8)
    return RgbImage(img.width, img.height, out)


# ---------------------------------------------------------------------------
# Depth pipeline

def augment_depth_noise(depth: DepthImage, cfg: DepthAugmentConfig) -> DepthImage:
    """Add pixel-level Gaussian noise plus a smooth Perlin Z-shift to valid
    pixels; invalid pixels stay 0.0 and results are clamped to >= 0."""
    rng = np.random.default_rng(derive_seed(cfg.seed, "depth-noise-params"))
    shift_params = cfg.shift_perlin.sample(rng, seed=derive_seed(cfg.seed, "depth-shift"))

    data = depth.data.astype(np.float64)
    valid = depth.valid_mask
    out = data.copy()
    if cfg.gaussian_sigma > 0.0:
        noise_rng = np.random.default_rng(derive_seed(cfg.seed, "depth-gauss"))
        out[valid] += noise_rng.normal(0.0, cfg.gaussian_sigma, size=data.shape)[valid]
    if shift_params.amplitude > 0.0:
        out[valid] += perlin_field(depth.width, depth.height, shift_params)[valid]
    out[~valid] = 0.0
    np.maximum(out, 0.0, out=out)
    return DepthImage.from_array(out)


def sobel_magnitude(data: np.ndarray) -> np.ndarray:
    """Sobel gradient magnitude with replicated edges."""
    gx_k = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    data3 = np.asarray(data, dtype=np.float64)[..., None]
    gx = _conv3(data3, gx_k)[..., 0]
    gy = _conv3(data3, gx_k.T)[..., 0]
    return np.hypot(gx, gy)


def sobel_edge_mask(depth: DepthImage, threshold: float,
                    dilation: int = 0) -> np.ndarray:
    mask = sobel_magnitude(depth.data) > threshold
    if dilation > 0:
        from scipy.ndimage import binary_dilation

        mask = binary_dilation(mask, iterations=dilation)
    return mask


def warp_by_field(depth: DepthImage, edge_mask: np.ndarray,
                  field: np.ndarray) -> DepthImage:
    """Displace edge pixels: out[p] = in[p + round(field[p])], invalid (0.0)
    when the source falls outside the image; off-edge pixels unchanged."""
    if edge_mask.shape != depth.data.shape or field.shape[:2] != depth.data.shape:
        raise ShapeError("edge mask / field dims must match the depth image")
    out = depth.data.astype(np.float64).copy()
    vs, us = np.nonzero(edge_mask)
    if len(vs):
        su = us + np.rint(field[vs, us, 0]).astype(np.int64)
        sv = vs + np.rint(field[vs, us, 1]).astype(np.int64)
        inside = (su >= 0) & (su < depth.width) & (sv >= 0) & (sv < depth.height)
        out[vs, us] = np.where(inside, depth.data[sv % depth.height, su % depth.width],
                               0.0)
    return DepthImage.from_array(out)


def warp_depth_edges(depth: DepthImage, cfg: DepthAugmentConfig) -> DepthImage:
    """Warp depth pixels on Sobel edges with a smooth Perlin vector field,
    emulating RGB/depth misalignment around object boundaries."""
    if cfg.warp_max_shift == 0.0:
        return depth
    rng = np.random.default_rng(derive_seed(cfg.seed, "warp-params"))
    params = cfg.warp_perlin.sample(rng, seed=derive_seed(cfg.seed, "warp-field"))
    params = replace(params, amplitude=min(params.amplitude, cfg.warp_max_shift))
    edge_mask = sobel_edge_mask(depth, cfg.sobel_threshold, cfg.edge_dilation)
    if not edge_mask.any() or params.amplitude == 0.0:
        return depth
    field = perlin_vector_field(depth.width, depth.height, params)
    return warp_by_field(depth, edge_mask, field)


def punch_holes(depth: DepthImage, cfg: DepthAugmentConfig) -> DepthImage:
    """Invalidate pixels under a thresholded Perlin mask (missing-depth holes)."""
    rng = np.random.default_rng(derive_seed(cfg.seed, "hole-params"))
    params = cfg.hole_perlin.sample(rng, seed=derive_seed(cfg.seed, "hole-field"))
    field = perlin_field(depth.width, depth.height, params)
    out = depth.data.copy()
    out[field > cfg.hole_threshold] = 0.0
    return DepthImage.from_array(out)


def synthesize_background(depth: DepthImage,
                          foreground_mask: np.ndarray | None,
                          intrinsics: CameraIntrinsics,
                          cfg: BackgroundConfig,
                          seed: int = 0) -> DepthImage:
    """Fill invalid pixels with a randomly tilted plane plus two interpolated
    noise grids, offset so the nearest filled pixel sits exactly
    offset_behind meters behind the deepest foreground pixel."""
    valid = depth.valid_mask
    fg = valid if foreground_mask is None else (np.asarray(foreground_mask, bool) & valid)
    if not fg.any():
        raise NoForeground("no valid foreground pixel to anchor the background")
    invalid = ~valid
    if not invalid.any():
        return depth

    rng = np.random.default_rng(derive_seed(seed, "background"))
    tilt = float(rng.uniform(0.0, cfg.max_tilt_radians))
    azimuth = float(rng.uniform(0.0, 2.0 * np.pi))
    n = np.array([np.sin(tilt) * np.cos(azimuth),
                  np.sin(tilt) * np.sin(azimuth),
                  np.cos(tilt)])

    u = np.arange(depth.width, dtype=np.float64)[None, :]
    v = np.arange(depth.height, dtype=np.float64)[:, None]
    # plane through (0,0,1) with normal n, sampled along each pixel ray; the
    # floor keeps extreme tilt/field-of-view combinations finite
    denom = (n[0] * (u - intrinsics.cx) / intrinsics.fx
             + n[1] * (v - intrinsics.cy) / intrinsics.fy + n[2])
    plane = n[2] / np.maximum(denom, 0.05)

    grid_a = replace(cfg.grid_a, seed=derive_seed(seed, "grid-a", cfg.grid_a.seed))
    grid_b = replace(cfg.grid_b, seed=derive_seed(seed, "grid-b", cfg.grid_b.seed))
    field = (plane
             + grid_gaussian_field(depth.width, depth.height, grid_a)
             + grid_gaussian_field(depth.width, depth.height, grid_b))

    offset = (float(depth.data[fg].max()) + cfg.offset_behind) - field[invalid].min()
    out = depth.data.astype(np.float64).copy()
    out[invalid] = field[invalid] + offset
    return DepthImage.from_array(out)


def augment_depth(depth: DepthImage, cfg: DepthAugmentConfig,
                  intrinsics: CameraIntrinsics,
                  foreground_mask: np.ndarray | None = None) -> DepthImage:
    """Full corruption pipeline in fixed order:
    noise -> edge warp -> holes -> background synthesis."""
    out = augment_depth_noise(depth, cfg)
    out = warp_depth_edges(out, cfg)
    out = punch_holes(out, cfg)
    if cfg.background is not None:
        out = synthesize_background(out, foreground_mask, intrinsics,
                                    cfg.background, seed=derive_seed(cfg.seed, "bg"))
    return out


# ---------------------------------------------------------------------------
# Rotation augmentation with label adjustment

@dataclass(frozen=True)
class AnnotatedFrame:
    """One dataset frame: aligned RGBD, intrinsics, pose label, box, mask."""

    rgb: RgbImage
    depth: DepthImage
    intrinsics: CameraIntrinsics
    pose: PoseSE3
    bbox: BoundingBox2D
    mask: np.ndarray | None = None
    object_id: str = ""

    def __post_init__(self):
        if (self.rgb.width, self.rgb.height) != (self.depth.width, self.depth.height):
            raise ShapeError("rgb and depth dimensions differ")
        if self.mask is not None:
            mask = np.array(self.mask, dtype=bool)
            if mask.shape != self.depth.data.shape:
                raise ShapeError("mask dimensions differ from the images")
            mask.flags.writeable = False
            object.__setattr__(self, "mask", mask)
        b = self.bbox
        if b.x_min < 0 or b.y_min < 0 or b.x_max > self.rgb.width or \
                b.y_max > self.rgb.height:
            raise ValueError("bbox exceeds image bounds")


def _source_coords(width: int, height: int, angle: float):
    """Per-destination-pixel source coordinates for a content rotation by
    +angle (counter-clockwise on screen) about the image center."""
    cu, cv = (width - 1) / 2.0, (height - 1) / 2.0
    uu, vv = np.meshgrid(np.arange(width, dtype=np.float64),
                         np.arange(height, dtype=np.float64))
    du, dv = uu - cu, vv - cv
    c, s = np.cos(angle), np.sin(angle)
    return c * du - s * dv + cu, s * du + c * dv + cv


def _rotate_nearest(img: np.ndarray, angle: float, fill=0) -> np.ndarray:
    h, w = img.shape[:2]
    su, sv = _source_coords(w, h, angle)
    iu = np.rint(su).astype(np.int64)
    iv = np.rint(sv).astype(np.int64)
    inside = (iu >= 0) & (iu < w) & (iv >= 0) & (iv < h)
    out = np.full_like(img, fill)
    out[inside] = img[iv[inside], iu[inside]]
    return out


def _rotate_bilinear_rgb(img: np.ndarray, angle: float) -> np.ndarray:
    h, w = img.shape[:2]
    su, sv = _source_coords(w, h, angle)
    u0 = np.floor(su).astype(np.int64)
    v0 = np.floor(sv).astype(np.int64)
    fu = su - u0
    fv = sv - v0
    out = np.zeros((h, w, 3), dtype=np.float64)
    src = img.astype(np.float64)
    for du, dv, weight in ((0, 0, (1 - fu) * (1 - fv)), (1, 0, fu * (1 - fv)),
                           (0, 1, (1 - fu) * fv), (1, 1, fu * fv)):
        uu, vv = u0 + du, v0 + dv
        inside = (uu >= 0) & (uu < w) & (vv >= 0) & (vv < h)
        out += weight[..., None] * np.where(
            inside[..., None], src[vv % h, uu % w], 0.0)
    return np.rint(np.clip(out, 0.0, 255.0)).astype(np.uint8)


def rotate_frame(frame: AnnotatedFrame, angle: float,
                 min_visible: float = 0.0) -> AnnotatedFrame | None:
    """Rotate the frame content by +angle about the image center and adjust
    the labels: pose becomes (Rz(-angle) R, Rz(-angle) t), the box becomes the
    clipped axis-aligned hull of its rotated corners. Returns None when the
    rotated box center leaves the image (object out of view); min_visible > 0
    additionally requires that fraction of the rotated box area to survive
    the image clip (the stricter, overlap-based discard rule)."""
    if angle == 0.0:
        return frame
    w, h = frame.rgb.width, frame.rgb.height
    cu, cv = (w - 1) / 2.0, (h - 1) / 2.0
    c, s = np.cos(angle), np.sin(angle)
    fwd = np.array([[c, s], [-s, c]])  # source offset -> destination offset

    center = np.array(frame.bbox.center)
    new_center = fwd @ (center - (cu, cv)) + (cu, cv)
    if not (0.0 <= new_center[0] < w and 0.0 <= new_center[1] < h):
        return None

    b = frame.bbox
    corners = np.array([[b.x_min, b.y_min], [b.x_max, b.y_min],
                        [b.x_max, b.y_max], [b.x_min, b.y_max]])
    rotated = (corners - (cu, cv)) @ fwd.T + (cu, cv)
    bbox = BoundingBox2D(
        x_min=float(max(rotated[:, 0].min(), 0.0)),
        y_min=float(max(rotated[:, 1].min(), 0.0)),
        x_max=float(min(rotated[:, 0].max(), w)),
        y_max=float(min(rotated[:, 1].max(), h)),
        class_id=b.class_id,
        confidence=b.confidence,
    )
    if min_visible > 0.0:
        full = ((rotated[:, 0].max() - rotated[:, 0].min())
                * (rotated[:, 1].max() - rotated[:, 1].min()))
        visible = (bbox.x_max - bbox.x_min) * (bbox.y_max - bbox.y_min)
        if visible < min_visible * full:
            return None

    rz = rotation_about_z(-angle)
    pose = PoseSE3(rz @ frame.pose.rotation, rz @ frame.pose.translation)

    return AnnotatedFrame(
        rgb=RgbImage.from_array(_rotate_bilinear_rgb(frame.rgb.data, angle)),
        depth=DepthImage.from_array(_rotate_nearest(frame.depth.data, angle)),
        intrinsics=frame.intrinsics,
        pose=pose,
        bbox=bbox,
        mask=None if frame.mask is None
        else _rotate_nearest(frame.mask, angle, fill=False),
        object_id=frame.object_id,
    )


def generate_rotations(frame: AnnotatedFrame, count: int,
                       min_visible: float = 0.0) -> list[AnnotatedFrame]:
    """rotate_frame at angles 2*pi*k/count for k = 0..count-1, dropping
    frames whose object leaves the view."""
    if count < 1:
        raise ValueError("count must be >= 1")
    frames = []
    for k in range(count):
        rotated = rotate_frame(frame, 2.0 * np.pi * k / count, min_visible)
        if rotated is not None:
            frames.append(rotated)
    return frames
