"""Shared domain types: images, camera model, poses, point clouds, meshes.

All types are immutable after construction (arrays are copied and marked
read-only), so instances can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMesh, ShapeError

# Depth pixels holding exactly 0.0 mean "no measurement".
INVALID_DEPTH = 0.0

_ORTHO_ACCEPT_TOL = 1e-9   # accepted as-is
_ORTHO_REPAIR_TOL = 1e-6   # re-orthonormalized via SVD; worse is rejected


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class DepthImage:
    """Dense depth raster in meters; 0.0 encodes an invalid pixel.

    `data` is a (height, width) float32 array, row-major.
    """

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.float32)
        if data.shape != (self.height, self.width):
            raise ShapeError(
                f"depth data shape {data.shape} != ({self.height}, {self.width})"
            )
        if not np.all(np.isfinite(data)):
            raise ValueError("depth values must be finite")
        if data.size and data.min() < 0.0:
            raise ValueError("depth values must be >= 0")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, data) -> "DepthImage":
        data = np.asarray(data, dtype=np.float32)
        return cls(width=data.shape[1], height=data.shape[0], data=data)

    @property
    def valid_mask(self) -> np.ndarray:
        return self.data > INVALID_DEPTH


@dataclass(frozen=True)
class RgbImage:
    """8-bit interleaved RGB raster, stored as a (height, width, 3) uint8 array."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        data = _frozen(self.data, np.uint8)
        if data.shape != (self.height, self.width, 3):
            raise ShapeError(
                f"rgb data shape {data.shape} != ({self.height}, {self.width}, 3)"
            )
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, data) -> "RgbImage":
        data = np.asarray(data, dtype=np.uint8)
        return cls(width=data.shape[1], height=data.shape[0], data=data)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole model: focal lengths and principal point in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    @property
    def cam_k(self) -> list[float]:
        """Row-major 3x3 intrinsics matrix flattened to 9 values."""
        return [self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0]

    @classmethod
    def from_cam_k(cls, k) -> "CameraIntrinsics":
        k = np.asarray(k, dtype=np.float64).reshape(9)
        return cls(fx=float(k[0]), fy=float(k[4]), cx=float(k[2]), cy=float(k[5]))

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project (N, 3) camera-frame points to (N, 2) pixel coordinates."""
        points = np.asarray(points, dtype=np.float64)
        z = points[..., 2]
        u = self.fx * points[..., 0] / z + self.cx
        v = self.fy * points[..., 1] / z + self.cy
        return np.stack([u, v], axis=-1)


@dataclass(frozen=True)
class PoseSE3:
    """Rigid transform: 3x3 rotation and 3-vector translation in meters.

    Construction validates orthonormality and det=+1 to 1e-9 (Frobenius);
    matrices off by up to 1e-6 are snapped back via SVD projection, anything
    worse is rejected.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ShapeError(f"rotation shape {r.shape} != (3, 3)")
        err = _orthonormality_error(r)
        if err > _ORTHO_ACCEPT_TOL:
            if err > _ORTHO_REPAIR_TOL:
                raise ValueError(
                    f"rotation fails orthonormality/determinant check (error {err:.3e})"
                )
            u, _, vt = np.linalg.svd(r)
            r = u @ vt
            if np.linalg.det(r) < 0:
                u[:, -1] *= -1.0
                r = u @ vt
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "PoseSE3":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform (N, 3) or (3,) points."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "PoseSE3":
        rt = self.rotation.T
        return PoseSE3(rt, -rt @ self.translation)


def _orthonormality_error(r: np.ndarray) -> float:
    ortho = np.linalg.norm(r.T @ r - np.eye(3))
    det = abs(np.linalg.det(r) - 1.0)
    return max(ortho, det)


def compose(a: PoseSE3, b: PoseSE3) -> PoseSE3:
    """Composition a∘b: applying the result equals applying b then a."""
    return PoseSE3(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def rotation_about_z(angle: float) -> np.ndarray:
    """Rotation matrix about the camera optical axis (right-handed, radians)."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class PointCloud:
    """N points with optional unit normals, [0,1] colors, and integer labels."""

    points: np.ndarray
    normals: np.ndarray | None = None
    colors: np.ndarray | None = None
    labels: np.ndarray | None = None

    def __post_init__(self):
        points = _frozen(self.points, np.float64).reshape(-1, 3)
        n = len(points)
        object.__setattr__(self, "points", points)
        for name, dtype in (("normals", np.float64), ("colors", np.float64),
                            ("labels", np.int64)):
            value = getattr(self, name)
            if value is None:
                continue
            value = _frozen(value, dtype)
            expected = (n,) if name == "labels" else (n, 3)
            if value.shape != expected:
                raise ShapeError(f"{name} shape {value.shape} != {expected}")
            object.__setattr__(self, name, value)
        if self.normals is not None and n:
            norms = np.linalg.norm(self.normals, axis=1)
            if np.abs(norms - 1.0).max() > 1e-6:
                raise ValueError("normals must have unit length within 1e-6")

    def __len__(self) -> int:
        return len(self.points)

    def take(self, indices) -> "PointCloud":
        """Subset by index array, carrying every attribute."""
        indices = np.asarray(indices)
        return PointCloud(
            points=self.points[indices],
            normals=None if self.normals is None else self.normals[indices],
            colors=None if self.colors is None else self.colors[indices],
            labels=None if self.labels is None else self.labels[indices],
        )


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle mesh with optional per-vertex unit normals."""

    vertices: np.ndarray
    triangles: np.ndarray
    normals: np.ndarray | None = None

    def __post_init__(self):
        vertices = _frozen(self.vertices, np.float64).reshape(-1, 3)
        triangles = _frozen(self.triangles, np.int64).reshape(-1, 3)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ShapeError("triangle indices out of vertex range")
        if self.normals is not None:
            normals = _frozen(self.normals, np.float64)
            if normals.shape != vertices.shape:
                raise ShapeError("per-vertex normals must match vertex count")
            object.__setattr__(self, "normals", normals)

    def with_vertex_normals(self) -> "TriangleMesh":
        """Return self, or a copy with area-weighted vertex normals computed."""
        if self.normals is not None:
            return self
        v, t = self.vertices, self.triangles
        face_n = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
        normals = np.zeros_like(v)
        for corner in range(3):
            np.add.at(normals, t[:, corner], face_n)
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        lengths[lengths == 0] = 1.0
        return TriangleMesh(v, t, normals / lengths)


def mesh_diameter(mesh: TriangleMesh) -> float:
    """Maximum pairwise vertex distance.

    Large meshes go through the convex hull (the diameter is attained on hull
    vertices); the O(V^2) scan below is the defining computation and both
    paths agree exactly.
    """
    vertices = mesh.vertices
    if len(vertices) < 2:
        raise DegenerateMesh("mesh diameter needs at least 2 vertices")
    if len(vertices) > 400:
        from scipy.spatial import ConvexHull, QhullError

        try:
            vertices = mesh.vertices[ConvexHull(mesh.vertices).vertices]
        except QhullError:
            pass  # flat/degenerate input: fall through to the full scan
    diff = vertices[:, None, :] - vertices[None, :, :]
    diameter = float(np.sqrt((diff * diff).sum(axis=2)).max())
    if diameter <= 0.0:
        raise DegenerateMesh("mesh has zero extent")
    return diameter


@dataclass(frozen=True)
class BoundingBox2D:
    """Axis-aligned detector box in pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: int = 0
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("bounding box must have positive extent")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must be in [0, 1]")

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    @property
    def size(self) -> tuple[float, float]:
        return (self.x_max - self.x_min, self.y_max - self.y_min)
