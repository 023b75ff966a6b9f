"""Offline grasp-candidate generation and online grasp selection.

Gripper frame convention: origin at the contact midpoint, +x along the
closing (connecting) line, +z the approach direction; the gripper body is an
oriented box sitting finger_depth behind the contact plane. Grasp poses map
this frame into the object frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import PointCloud, PoseSE3, TriangleMesh, compose
from .errors import EmptyResult, InputError, ShapeError


@dataclass(frozen=True)
class GripperModel:
    """Parallel-jaw gripper: stroke, finger length, and body bounding box
    (w, d, h meters) used for collision checks."""

    max_width: float
    finger_depth: float
    bounding_box: tuple[float, float, float]
    approach_axis: tuple[float, float, float] = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.max_width <= 0 or self.finger_depth <= 0 or \
                min(self.bounding_box) <= 0:
            raise ValueError("gripper dimensions must be positive")
        axis = np.asarray(self.approach_axis, dtype=np.float64)
        norm = np.linalg.norm(axis)
        if abs(norm - 1.0) > 1e-6:
            raise ValueError("approach_axis must be a unit vector")
        object.__setattr__(self, "approach_axis", tuple(axis / norm))

    def body_box(self):
        """(center, half_extents) of the body box in the gripper frame; the
        box sits behind the fingers so open fingers never self-report
        collisions with the grasped object."""
        w, d, h = self.bounding_box
        center = np.array([0.0, 0.0, -self.finger_depth - h / 2.0])
        return center, np.array([w / 2.0, d / 2.0, h / 2.0])


@dataclass(frozen=True)
class GraspPose:
    """Gripper pose in the object frame with its contact-pair metadata."""

    pose: PoseSE3
    width: float
    contact_a: np.ndarray
    contact_b: np.ndarray
    quality: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.contact_a, dtype=np.float64).reshape(3)
        b = np.asarray(self.contact_b, dtype=np.float64).reshape(3)
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "contact_a", a)
        object.__setattr__(self, "contact_b", b)
        if self.width <= 0:
            raise ValueError("width must be > 0")
        if abs(np.linalg.norm(a - b) - self.width) > 1e-6:
            raise ValueError("contact separation must equal width")


@dataclass(frozen=True)
class GraspGenConfig:
    surface_samples: int = 128
    rotations_per_axis: int = 24
    perpendicularity_max_angle: float = 15.0   # degrees from (anti)parallel
    curvature_max_angle: float = 30.0          # degrees over the neighborhood
    anchor_cell: float = 0.03                  # meters
    seed: int = 0

    def __post_init__(self):
        if self.rotations_per_axis < 1:
            raise ValueError("rotations_per_axis must be >= 1")
        for angle in (self.perpendicularity_max_angle, self.curvature_max_angle):
            if not 0.0 < angle < 90.0:
                raise ValueError("angles must be in (0, 90) degrees")


@dataclass(frozen=True)
class SelectConfig:
    max_approach_angle: float = 60.0   # degrees
    collision_radius: float = 0.01     # meters


# ---------------------------------------------------------------------------
# Geometry primitives

def _stable_perpendicular(u: np.ndarray) -> np.ndarray:
    """Deterministic unit vector perpendicular to u."""
    e = np.zeros(3)
    e[int(np.argmin(np.abs(u)))] = 1.0
    r = e - np.dot(e, u) * u
    return r / np.linalg.norm(r)


def point_box_distance(points: np.ndarray, center: np.ndarray,
                       rotation: np.ndarray, half_extents: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to an oriented box (0 inside)."""
    local = np.abs((np.atleast_2d(points) - center) @ rotation) - half_extents
    return np.linalg.norm(np.maximum(local, 0.0), axis=1)


def obb_intersects_mesh(center: np.ndarray, rotation: np.ndarray,
                        half_extents: np.ndarray, mesh: TriangleMesh) -> bool:
    """Separating-axis test of an oriented box against every mesh triangle.

    This brute-force scan over all triangles is the collision oracle; it is
    vectorized but not approximated.
    """
    verts = (mesh.vertices - center) @ rotation  # into the box frame
    tri = verts[mesh.triangles]                  # (T, 3, 3)
    if len(tri) == 0:
        return False
    e = np.asarray(half_extents, dtype=np.float64)
    alive = np.ones(len(tri), dtype=bool)

    # box face axes
    for k in range(3):
        p = tri[..., k]
        alive &= ~((p.max(axis=1) < -e[k]) | (p.min(axis=1) > e[k]))
    if not alive.any():
        return False

    edges = np.stack([tri[:, 1] - tri[:, 0],
                      tri[:, 2] - tri[:, 1],
                      tri[:, 0] - tri[:, 2]], axis=1)  # (T, 3, 3)

    # triangle normal axis
    normal = np.cross(edges[:, 0], edges[:, 1])
    dist = np.einsum("td,td->t", normal, tri[:, 0])
    radius = np.abs(normal) @ e
    alive &= ~((dist > radius) | (dist < -radius))
    if not alive.any():
        return False

    # 9 cross-product axes: box axis a_k x triangle edge
    for k in range(3):
        for j in range(3):
            axis = np.zeros_like(edges[:, j])
            k1, k2 = (k + 1) % 3, (k + 2) % 3
            axis[:, k1] = -edges[:, j, k2]
            axis[:, k2] = edges[:, j, k1]
            p = np.einsum("tvd,td->tv", tri, axis)
            radius = np.abs(axis) @ e
            alive &= ~((p.max(axis=1) < -radius) | (p.min(axis=1) > radius))
            if not alive.any():
                return False
    return True


def sample_surface(mesh: TriangleMesh, count: int, seed: int = 0):
    """Area-weighted surface samples; returns (points (n,3), unit normals).

    Normals are barycentrically interpolated when the mesh carries authored
    per-vertex normals; otherwise each sample takes its triangle's face
    normal (averaging vertex normals would round off hard edges and break
    the antipodal test on faceted meshes).
    """
    v, t = mesh.vertices, mesh.triangles
    if len(t) == 0:
        raise InputError("mesh has no triangles")
    cross = np.cross(v[t[:, 1]] - v[t[:, 0]], v[t[:, 2]] - v[t[:, 0]])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    total = areas.sum()
    if total <= 0:
        raise InputError("mesh has zero surface area")

    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    tri_idx = rng.choice(len(t), size=count, p=areas / total)
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    bary = np.stack([1.0 - r1, r1 * (1.0 - r2), r1 * r2], axis=1)

    corners = v[t[tri_idx]]                     # (n, 3, 3)
    points = np.einsum("nc,ncd->nd", bary, corners)
    if mesh.normals is not None:
        corner_normals = mesh.normals[t[tri_idx]]
        normals = np.einsum("nc,ncd->nd", bary, corner_normals)
    else:
        normals = cross[tri_idx]
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    lengths[lengths == 0] = 1.0
    return points, normals / lengths


# ---------------------------------------------------------------------------
# Generation

def grasp_poses_for_line(contact_a: np.ndarray, contact_b: np.ndarray,
                         rotations: int = 24) -> list[GraspPose]:
    """All candidate poses for one connecting line: `rotations` approach
    directions evenly spaced about the line, followed by the antipodal twin
    of each (fingers swapped, i.e. a 180-degree flip about the approach axis)."""
    a = np.asarray(contact_a, dtype=np.float64)
    b = np.asarray(contact_b, dtype=np.float64)
    width = float(np.linalg.norm(b - a))
    if width <= 0:
        raise InputError("contact points coincide")
    u = (b - a) / width
    r0 = _stable_perpendicular(u)
    r1 = np.cross(u, r0)
    mid = 0.5 * (a + b)

    base, twins = [], []
    for j in range(rotations):
        theta = 2.0 * np.pi * j / rotations
        z = np.cos(theta) * r0 + np.sin(theta) * r1
        y = np.cross(z, u)
        rot = np.column_stack([u, y, z])
        base.append(GraspPose(pose=PoseSE3(rot, mid), width=width,
                              contact_a=a, contact_b=b))
        rot_twin = np.column_stack([-u, -y, z])
        twins.append(GraspPose(pose=PoseSE3(rot_twin, mid), width=width,
                               contact_a=b, contact_b=a))
    return base + twins


def generate_grasps(mesh: TriangleMesh, gripper: GripperModel,
                    cfg: GraspGenConfig) -> list[GraspPose]:
    """Sample antipodal grasp candidates on the mesh surface.

    Pairs of surface samples closer than max_width form connecting lines;
    lines survive the perpendicularity (contact normals within
    perpendicularity_max_angle of the line) and curvature (normal cone within
    curvature_max_angle over a 0.5*finger_depth neighborhood) filters. Each
    surviving line yields rotations_per_axis poses plus antipodal twins, each
    kept only if the gripper body box clears the mesh, then the set is
    thinned on the sparse anchor grid. Deterministic per seed.
    """
    from scipy.spatial import cKDTree

    points, normals = sample_surface(mesh, cfg.surface_samples, seed=cfg.seed)
    tree = cKDTree(points)

    # per-contact curvature: every neighbor's normal within the cone
    cos_curv = math.cos(math.radians(cfg.curvature_max_angle))
    curvature_ok = np.empty(len(points), dtype=bool)
    radius = 0.5 * gripper.finger_depth
    for i, neighbors in enumerate(tree.query_ball_point(points, radius)):
        curvature_ok[i] = bool(np.all(normals[neighbors] @ normals[i] >= cos_curv))

    pairs = tree.query_pairs(gripper.max_width, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]

    cos_perp = math.cos(math.radians(cfg.perpendicularity_max_angle))
    center_local, half_extents = gripper.body_box()

    grasps: list[GraspPose] = []
    if len(pairs) == 0:
        raise EmptyResult("no contact pairs within the gripper stroke")
    ii, jj = pairs[:, 0], pairs[:, 1]
    delta = points[jj] - points[ii]
    widths = np.linalg.norm(delta, axis=1)
    ok = widths > 1e-9
    u = delta / np.where(widths > 0, widths, 1.0)[:, None]
    ok &= (-np.einsum("pd,pd->p", normals[ii], u) >= cos_perp)
    ok &= (np.einsum("pd,pd->p", normals[jj], u) >= cos_perp)
    ok &= curvature_ok[ii] & curvature_ok[jj]

    for i, j in pairs[ok]:
        candidates = grasp_poses_for_line(points[i], points[j],
                                          cfg.rotations_per_axis)
        n = cfg.rotations_per_axis
        for k in range(n):
            g, twin = candidates[k], candidates[k + n]
            # the body box is symmetric under the twin flip, so one SAT check
            # covers both poses
            center = g.pose.apply(center_local)
            if obb_intersects_mesh(center, g.pose.rotation, half_extents, mesh):
                continue
            grasps.append(g)
            grasps.append(twin)

    if not grasps:
        raise EmptyResult("no valid grasps for this gripper/mesh combination")
    return downsample_anchors(grasps, cfg.anchor_cell,
                              rotations=cfg.rotations_per_axis)


def _rotation_bin(g: GraspPose, rotations: int) -> tuple[int, int]:
    """(rotation bin, finger role) recovered from the stored contact pair and
    the pose's approach column; the half-bin offset keeps the exact rotation
    lattice away from bin edges."""
    u = (g.contact_b - g.contact_a) / g.width
    if u[int(np.argmax(np.abs(u)))] < 0:
        u = -u
    r0 = _stable_perpendicular(u)
    r1 = np.cross(u, r0)
    z = g.pose.rotation[:, 2]
    theta = math.atan2(float(z @ r1), float(z @ r0)) % (2.0 * math.pi)
    bin_width = 2.0 * math.pi / rotations
    rot_bin = int((theta + bin_width / 2.0) // bin_width) % rotations
    role = 0 if float(g.pose.rotation[:, 0] @ u) > 0 else 1
    return rot_bin, role


def downsample_anchors(grasps: list[GraspPose], anchor_cell: float,
                       rotations: int = 24) -> list[GraspPose]:
    """Keep one grasp per (midpoint grid cell, rotation bin, finger role),
    preferring the lowest index; output order is stable."""
    seen = set()
    kept = []
    for g in grasps:
        mid = 0.5 * (g.contact_a + g.contact_b)
        if math.isinf(anchor_cell):
            cell = (0, 0, 0)
        else:
            # cells centered on integer multiples of anchor_cell, so a tight
            # midpoint cluster near a grid point shares one anchor
            cell = tuple(np.rint(mid / anchor_cell).astype(np.int64))
        key = (cell, *_rotation_bin(g, rotations))
        if key in seen:
            continue
        seen.add(key)
        kept.append(g)
    return kept


# ---------------------------------------------------------------------------
# Selection

def select_grasp(grasps: list[GraspPose], object_pose: PoseSE3,
                 scene: PointCloud, object_mask: np.ndarray,
                 current_tool_axis: np.ndarray, gripper: GripperModel,
                 cfg: SelectConfig) -> GraspPose | None:
    """Pick the safest reachable grasp against the observed scene.

    Grasps are lifted to the camera frame through the object pose; candidates
    whose approach direction deviates from the current tool axis by more than
    max_approach_angle are rejected, as are those with any non-object scene
    point within collision_radius of the gripper body box. The survivor
    maximizing clearance wins (ties by index); with no obstacles the
    clearance is +inf. Returns None when nothing survives.
    """
    mask = np.asarray(object_mask, dtype=bool).reshape(-1)
    if len(mask) != len(scene):
        raise ShapeError(f"{len(mask)} mask entries for {len(scene)} points")
    obstacles = scene.points[~mask]
    tool = np.asarray(current_tool_axis, dtype=np.float64)
    tool = tool / np.linalg.norm(tool)
    approach_local = np.asarray(gripper.approach_axis)
    cos_limit = math.cos(math.radians(cfg.max_approach_angle))
    center_local, half_extents = gripper.body_box()

    best: GraspPose | None = None
    best_clearance = -math.inf
    for g in grasps:
        pose_cam = compose(object_pose, g.pose)
        approach = pose_cam.rotation @ approach_local
        if float(approach @ tool) < cos_limit:
            continue
        if len(obstacles):
            clearance = float(point_box_distance(
                obstacles, pose_cam.apply(center_local), pose_cam.rotation,
                half_extents).min())
            if clearance < cfg.collision_radius:
                continue
        else:
            clearance = math.inf
        if clearance > best_clearance:
            best_clearance = clearance
            best = replace(
                g,
                pose=pose_cam,
                contact_a=object_pose.apply(g.contact_a),
                contact_b=object_pose.apply(g.contact_b),
                quality=clearance,
            )
    return best
