"""Evaluation and inspection mathematics.

ADD / ADDS pose errors with the 10%-of-diameter success rule, radially
averaged power spectral density of depth images, and pooled RGB
brightness/saturation statistics for reality-gap inspection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import rgb_to_hsv
from .core import DepthImage, PoseSE3, RgbImage
from .errors import EmptyInput, InputError

# Above this size the nearest-point search goes through a KD-tree; the O(N^2)
# scan below is the definition and both paths agree within 1e-9.
_ADDS_BRUTE_FORCE_LIMIT = 2000


@dataclass(frozen=True)
class AddResult:
    """Pose errors for one frame, with success flags at a diameter fraction."""

    add: float
    adds: float
    diameter: float
    add_success: bool
    adds_success: bool


def add_metric(model_points: np.ndarray, pred: PoseSE3, gt: PoseSE3) -> float:
    """Mean distance between corresponding model points under the two poses."""
    pts = _checked_points(model_points)
    return float(np.linalg.norm(pred.apply(pts) - gt.apply(pts), axis=1).mean())


def adds_metric(model_points: np.ndarray, pred: PoseSE3, gt: PoseSE3) -> float:
    """Mean distance from each predicted-pose point to its nearest
    ground-truth-pose point (symmetric-object variant)."""
    pts = _checked_points(model_points)
    a = pred.apply(pts)
    b = gt.apply(pts)
    if len(pts) <= _ADDS_BRUTE_FORCE_LIMIT:
        d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
        return float(np.sqrt(d2.min(axis=1)).mean())
    from scipy.spatial import cKDTree

    dists, _ = cKDTree(b).query(a, k=1)
    return float(dists.mean())


def evaluate_pose(model_points: np.ndarray, pred: PoseSE3, gt: PoseSE3,
                  diameter: float, threshold_fraction: float = 0.1) -> AddResult:
    """Compute both metrics and their success flags at threshold*diameter."""
    if diameter <= 0:
        raise InputError("diameter must be > 0")
    add = add_metric(model_points, pred, gt)
    adds = adds_metric(model_points, pred, gt)
    limit = threshold_fraction * diameter
    return AddResult(add=add, adds=adds, diameter=diameter,
                     add_success=add < limit, adds_success=adds < limit)


def success_rate(results: list[AddResult], symmetric: bool,
                 threshold_fraction: float = 0.1) -> float:
    """Fraction of results whose (adds if symmetric else add) error is
    strictly below threshold_fraction * diameter."""
    if not results:
        raise EmptyInput("no results")
    hits = sum(
        1 for r in results
        if (r.adds if symmetric else r.add) < threshold_fraction * r.diameter
    )
    return hits / len(results)


def _checked_points(model_points) -> np.ndarray:
    pts = np.asarray(model_points, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise EmptyInput("empty model point set")
    return pts


@dataclass(frozen=True)
class SpectrumProfile:
    """Radially averaged power spectrum: bin-center frequencies in
    cycles/pixel and the mean power per bin."""

    frequencies: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           np.asarray(self.frequencies, dtype=np.float64))
        object.__setattr__(self, "power", np.asarray(self.power, dtype=np.float64))


def depth_psd(depths: list[DepthImage], bins: int = 64) -> SpectrumProfile:
    """Average radially-binned power spectral density over depth images.

    Per image: invalid pixels are replaced by the mean of the valid ones, the
    image mean is subtracted, and the 2D DFT power |F|^2/(W*H) is averaged
    into `bins` annuli linear in |f|. Bins span the full radial range of the
    frequency grid (up to sqrt(2) * Nyquist in the corners) so the
    count-weighted mean power equals the per-image variance (Parseval).
    """
    if not depths:
        raise InputError("no depth images")
    shape = depths[0].data.shape
    if any(d.data.shape != shape for d in depths):
        raise InputError("depth images must share dimensions")
    if bins < 1:
        raise InputError("bins must be >= 1")

    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    freq = np.hypot(fy, fx)
    edges = np.linspace(0.0, freq.max() + 1e-12, bins + 1)
    which = np.clip(np.digitize(freq.ravel(), edges) - 1, 0, bins - 1)
    counts = np.bincount(which, minlength=bins).astype(np.float64)

    total = np.zeros(bins)
    for depth in depths:
        img = depth.data.astype(np.float64)
        valid = depth.valid_mask
        fill = img[valid].mean() if valid.any() else 0.0
        img = np.where(valid, img, fill)
        img -= img.mean()
        power = np.abs(np.fft.fft2(img)) ** 2 / (w * h)
        total += np.bincount(which, weights=power.ravel(), minlength=bins)

    mean_power = np.divide(total / len(depths), counts,
                           out=np.zeros(bins), where=counts > 0)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return SpectrumProfile(frequencies=centers, power=mean_power)


def psd_bin_counts(shape: tuple[int, int], bins: int = 64) -> np.ndarray:
    """Pixels per radial bin for the given image shape (Parseval weighting)."""
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    freq = np.hypot(fy, fx)
    edges = np.linspace(0.0, freq.max() + 1e-12, bins + 1)
    which = np.clip(np.digitize(freq.ravel(), edges) - 1, 0, bins - 1)
    return np.bincount(which, minlength=bins).astype(np.float64)


def rgb_statistics(images: list[RgbImage]) -> dict[str, float]:
    """Pooled HSV brightness (V) and saturation (S) statistics in [0, 1]."""
    if not images:
        raise EmptyInput("no images")
    brightness = []
    saturation = []
    for img in images:
        hsv = rgb_to_hsv(img.data.astype(np.float64) / 255.0)
        saturation.append(hsv[..., 1].ravel())
        brightness.append(hsv[..., 2].ravel())
    s = np.concatenate(saturation)
    v = np.concatenate(brightness)
    return {
        "brightness_mean": float(v.mean()),
        "brightness_std": float(v.std()),
        "saturation_mean": float(s.mean()),
        "saturation_std": float(s.std()),
    }
