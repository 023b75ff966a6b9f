"""Seedable procedural noise fields.

Perlin gradients come from a counter-style integer hash of
(seed, octave, lattice coordinates), so any pixel of any field can be
evaluated in isolation: results are bit-identical regardless of evaluation
order, chunking, or thread count.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_U64 = np.uint64
_MASK64 = 0xFFFFFFFFFFFFFFFF

# Peak of one octave of 2D gradient noise with unit gradients; used to
# renormalize the octave sum onto [-amplitude, +amplitude].
_PERLIN_UNIT_BOUND = np.sqrt(2.0) / 2.0


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labels (ints, strings).

    Unlike Python's builtin hash this is identical across processes, which is
    what makes per-frame worker seeds reproducible for any job count.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class PerlinParams:
    """Smooth gradient-noise parameters.

    frequency is in cycles per image-width, amplitude is the output
    half-range, octaves are summed with persistence 0.5.
    """

    frequency: float
    amplitude: float
    octaves: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.frequency <= 0:
            raise ValueError("frequency must be > 0")
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.octaves < 1:
            raise ValueError("octaves must be >= 1")


@dataclass(frozen=True)
class GridNoiseParams:
    """Gaussian node grid, bilinearly interpolated over the image."""

    grid_cols: int
    grid_rows: int
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if self.grid_cols < 2 or self.grid_rows < 2:
            raise ValueError("grid dimensions must be >= 2")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer
    x = x.astype(_U64, copy=True)
    x ^= x >> _U64(30)
    x *= _U64(0xBF58476D1CE4E5B9)
    x ^= x >> _U64(27)
    x *= _U64(0x94D049BB133111EB)
    x ^= x >> _U64(31)
    return x


def _lattice_gradients(ix: np.ndarray, iy: np.ndarray, seed: int, octave: int):
    """Unit gradient per lattice corner, hashed from coordinates alone."""
    h = (
        ix.astype(_U64) * _U64(0x9E3779B97F4A7C15)
        ^ iy.astype(_U64) * _U64(0xC2B2AE3D27D4EB4F)
        ^ _U64((seed ^ (octave * 0x165667B19E3779F9)) & _MASK64)
    )
    h = _mix64(h)
    angle = h.astype(np.float64) * (2.0 * np.pi / 2.0**64)
    return np.cos(angle), np.sin(angle)


def _fade(t: np.ndarray) -> np.ndarray:
    return t * t * t * (t * (t * 6.0 - 15.0) + 10.0)


def _perlin_octave(width, height, frequency, seed, octave):
    u = np.arange(width, dtype=np.float64)
    v = np.arange(height, dtype=np.float64)
    # square lattice cells: both axes scaled by cycles-per-image-width
    x = u * (frequency / width)
    y = v * (frequency / width)
    x, y = np.meshgrid(x, y)

    ix = np.floor(x).astype(np.int64)
    iy = np.floor(y).astype(np.int64)
    fx = x - ix
    fy = y - iy

    n = np.empty((2, 2) + x.shape)
    for dx in (0, 1):
        for dy in (0, 1):
            gx, gy = _lattice_gradients(ix + dx, iy + dy, seed, octave)
            n[dx, dy] = gx * (fx - dx) + gy * (fy - dy)

    wx = _fade(fx)
    wy = _fade(fy)
    nx0 = n[0, 0] + wx * (n[1, 0] - n[0, 0])
    nx1 = n[0, 1] + wx * (n[1, 1] - n[0, 1])
    return nx0 + wy * (nx1 - nx0)


def perlin_field(width: int, height: int, params: PerlinParams) -> np.ndarray:
    """(height, width) field of multi-octave Perlin noise in [-amplitude, +amplitude].

    Quintic-fade gradient noise; octave o doubles the frequency and halves the
    weight. The octave sum is centered (partial border cells otherwise bias
    the mean at low cycle counts) and renormalized so the amplitude bound is
    exact.
    """
    total = np.zeros((height, width))
    weight = 1.0
    weight_sum = 0.0
    for octave in range(params.octaves):
        total += weight * _perlin_octave(
            width, height, params.frequency * 2.0**octave, params.seed, octave
        )
        weight_sum += weight
        weight *= 0.5
    if params.amplitude == 0.0:
        return np.zeros((height, width))
    total -= total.mean()
    bound = max(_PERLIN_UNIT_BOUND * weight_sum, float(np.abs(total).max()))
    return total * (params.amplitude / bound)


def perlin_vector_field(width: int, height: int, params: PerlinParams) -> np.ndarray:
    """(height, width, 2) smooth displacement field with |vector| <= amplitude.

    Components are independent Perlin fields; vectors whose norm exceeds the
    amplitude are scaled back onto the bound.
    """
    dx = perlin_field(width, height, params)
    dy = perlin_field(
        width, height,
        PerlinParams(params.frequency, params.amplitude, params.octaves,
                     seed=derive_seed(params.seed, "vector-y")),
    )
    field = np.stack([dx, dy], axis=-1)
    if params.amplitude > 0.0:
        norm = np.linalg.norm(field, axis=-1)
        over = norm > params.amplitude
        if over.any():
            field[over] *= (params.amplitude / norm[over])[:, None]
    return field


def perlin_mask(width: int, height: int, params: PerlinParams,
                threshold: float) -> np.ndarray:
    """Boolean (height, width) mask: True where the Perlin field exceeds threshold."""
    return perlin_field(width, height, params) > threshold


def grid_gaussian_field(width: int, height: int,
                        params: GridNoiseParams) -> np.ndarray:
    """(height, width) field from i.i.d. N(0, sigma^2) grid nodes, bilinearly
    interpolated; the grid corners coincide with the image corners."""
    rng = np.random.default_rng(params.seed & _MASK64)
    nodes = rng.normal(0.0, params.sigma, size=(params.grid_rows, params.grid_cols))

    gx = _axis_coords(width, params.grid_cols)
    gy = _axis_coords(height, params.grid_rows)
    ix0 = np.minimum(np.floor(gx).astype(np.int64), params.grid_cols - 2)
    iy0 = np.minimum(np.floor(gy).astype(np.int64), params.grid_rows - 2)
    fx = (gx - ix0)[None, :]
    fy = (gy - iy0)[:, None]

    n00 = nodes[np.ix_(iy0, ix0)]
    n01 = nodes[np.ix_(iy0, ix0 + 1)]
    n10 = nodes[np.ix_(iy0 + 1, ix0)]
    n11 = nodes[np.ix_(iy0 + 1, ix0 + 1)]
    top = n00 * (1.0 - fx) + n01 * fx
    bottom = n10 * (1.0 - fx) + n11 * fx
    return top * (1.0 - fy) + bottom * fy


def _axis_coords(size: int, nodes: int) -> np.ndarray:
    if size == 1:
        return np.zeros(1)
    return np.arange(size, dtype=np.float64) * ((nodes - 1) / (size - 1))
