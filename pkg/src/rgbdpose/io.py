"""Disk formats.

Depth travels as 16-bit grayscale PNG in millimeters (0 = invalid), RGB as
8-bit PNG/JPEG, meshes as ASCII OBJ or binary little-endian PLY, point clouds
as binary little-endian PLY, labels as per-frame JSON, network predictions as
raw float32 blobs with a JSON sidecar, and grasps as JSON arrays.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .core import (BoundingBox2D, CameraIntrinsics, DepthImage, PointCloud,
                   PoseSE3, RgbImage, TriangleMesh)
from .errors import InputError
from .grasp import GraspPose
from .pose import KeypointPrediction, KeypointSet

# ---------------------------------------------------------------------------
# Images

def write_depth_png(path, depth: DepthImage) -> None:
    mm = np.rint(depth.data.astype(np.float64) * 1000.0)
    mm = np.clip(mm, 0, 65535).astype(np.uint16)
    Image.fromarray(mm).save(Path(path), format="PNG")


def read_depth_png(path) -> DepthImage:
    arr = np.asarray(Image.open(Path(path)))
    if arr.ndim != 2:
        raise InputError(f"{path}: depth PNG must be single-channel")
    return DepthImage.from_array(arr.astype(np.float32) / 1000.0)


def write_rgb(path, rgb: RgbImage) -> None:
    Image.fromarray(rgb.data).save(Path(path))


def read_rgb(path) -> RgbImage:
    img = Image.open(Path(path)).convert("RGB")
    return RgbImage.from_array(np.asarray(img))


# ---------------------------------------------------------------------------
# Label JSON

def write_label_json(path, object_id: str, intrinsics: CameraIntrinsics,
                     pose: PoseSE3, bbox: BoundingBox2D) -> None:
    doc = {
        "object_id": object_id,
        "cam_K": intrinsics.cam_k,
        "R": [float(x) for x in pose.rotation.ravel()],
        "t": [float(x) for x in pose.translation],
        "bbox": [bbox.x_min, bbox.y_min, bbox.x_max, bbox.y_max],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def read_label_json(path):
    doc = json.loads(Path(path).read_text())
    try:
        intrinsics = CameraIntrinsics.from_cam_k(doc["cam_K"])
        pose = PoseSE3(np.asarray(doc["R"], dtype=np.float64).reshape(3, 3),
                       np.asarray(doc["t"], dtype=np.float64))
        x0, y0, x1, y1 = doc["bbox"]
        bbox = BoundingBox2D(x0, y0, x1, y1)
        return str(doc["object_id"]), intrinsics, pose, bbox
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: malformed label JSON ({exc})") from exc


# ---------------------------------------------------------------------------
# OBJ

def write_obj(path, mesh: TriangleMesh) -> None:
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.9g} {v[1]:.9g} {v[2]:.9g}")
    if mesh.normals is not None:
        for n in mesh.normals:
            lines.append(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}")
        for t in mesh.triangles:
            lines.append("f " + " ".join(f"{i + 1}//{i + 1}" for i in t))
    else:
        for t in mesh.triangles:
            lines.append("f " + " ".join(str(i + 1) for i in t))
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> TriangleMesh:
    """ASCII OBJ with v/vn/f records; polygons are fan-triangulated. Normals
    are kept only when they pair one-to-one with vertices."""
    vertices, normals, faces = [], [], []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        tag = parts[0]
        if tag == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif tag == "vn":
            normals.append([float(x) for x in parts[1:4]])
        elif tag == "f":
            idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if not vertices:
        raise InputError(f"{path}: no vertices")
    keep_normals = len(normals) == len(vertices)
    return TriangleMesh(
        vertices=np.asarray(vertices, dtype=np.float64),
        triangles=np.asarray(faces, dtype=np.int64).reshape(-1, 3),
        normals=np.asarray(normals, dtype=np.float64) if keep_normals else None,
    )


# ---------------------------------------------------------------------------
# PLY (binary little-endian)

_PLY_TYPES = {
    "float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8",
    "uchar": "u1", "uint8": "u1", "char": "i1", "int8": "i1",
    "short": "<i2", "ushort": "<u2", "int": "<i4", "int32": "<i4",
    "uint": "<u4", "uint32": "<u4",
}


def _parse_ply_header(blob: bytes):
    end = blob.index(b"end_header\n") + len(b"end_header\n")
    lines = blob[:end].decode("ascii").splitlines()
    if lines[0].strip() != "ply":
        raise InputError("not a PLY file")
    if not any("binary_little_endian" in ln for ln in lines):
        raise InputError("only binary little-endian PLY is supported")
    elements = []  # (name, count, [(prop, dtype) or ("list", counttype, itemtype, name)])
    for line in lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if parts[1] == "list":
                elements[-1][2].append(("list", parts[2], parts[3], parts[4]))
            else:
                elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))
    return elements, end


def _write_ply(path, vertex_fields: list[tuple[str, str, np.ndarray]],
               faces: np.ndarray | None) -> None:
    count = len(vertex_fields[0][2])
    header = ["ply", "format binary_little_endian 1.0",
              f"element vertex {count}"]
    for name, ply_type, _ in vertex_fields:
        header.append(f"property {ply_type} {name}")
    if faces is not None:
        header.append(f"element face {len(faces)}")
        header.append("property list uchar int vertex_indices")
    header.append("end_header")

    dtype = np.dtype([(name, _PLY_TYPES[ply_type])
                      for name, ply_type, _ in vertex_fields])
    rec = np.empty(count, dtype=dtype)
    for name, _, column in vertex_fields:
        rec[name] = column

    with open(Path(path), "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        fh.write(rec.tobytes())
        if faces is not None:
            face_dtype = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
            face_rec = np.empty(len(faces), dtype=face_dtype)
            face_rec["n"] = 3
            face_rec["idx"] = faces
            fh.write(face_rec.tobytes())


def write_cloud_ply(path, cloud: PointCloud) -> None:
    fields = [("x", "float", cloud.points[:, 0].astype(np.float32)),
              ("y", "float", cloud.points[:, 1].astype(np.float32)),
              ("z", "float", cloud.points[:, 2].astype(np.float32))]
    if cloud.normals is not None:
        for i, name in enumerate(("nx", "ny", "nz")):
            fields.append((name, "float", cloud.normals[:, i].astype(np.float32)))
    if cloud.colors is not None:
        rgb = np.rint(np.clip(cloud.colors, 0.0, 1.0) * 255.0).astype(np.uint8)
        for i, name in enumerate(("red", "green", "blue")):
            fields.append((name, "uchar", rgb[:, i]))
    _write_ply(path, fields, None)


def write_mesh_ply(path, mesh: TriangleMesh) -> None:
    fields = [("x", "float", mesh.vertices[:, 0].astype(np.float32)),
              ("y", "float", mesh.vertices[:, 1].astype(np.float32)),
              ("z", "float", mesh.vertices[:, 2].astype(np.float32))]
    if mesh.normals is not None:
        for i, name in enumerate(("nx", "ny", "nz")):
            fields.append((name, "float", mesh.normals[:, i].astype(np.float32)))
    _write_ply(path, fields, np.asarray(mesh.triangles, dtype=np.int64))


def _read_ply(path):
    blob = Path(path).read_bytes()
    elements, offset = _parse_ply_header(blob)
    out = {}
    for name, count, props in elements:
        if any(p[0] == "list" for p in props):
            if len(props) != 1:
                raise InputError("mixed list/scalar PLY elements unsupported")
            _, count_type, item_type, prop_name = props[0]
            ct = np.dtype(_PLY_TYPES[count_type])
            it = np.dtype(_PLY_TYPES[item_type])
            rows = []
            for _ in range(count):
                n = int(np.frombuffer(blob, dtype=ct, count=1, offset=offset)[0])
                offset += ct.itemsize
                row = np.frombuffer(blob, dtype=it, count=n, offset=offset)
                offset += n * it.itemsize
                if n != 3:
                    for k in range(1, n - 1):
                        rows.append([row[0], row[k], row[k + 1]])
                else:
                    rows.append(row.tolist())
            out[name] = {prop_name: np.asarray(rows, dtype=np.int64).reshape(-1, 3)}
        else:
            dtype = np.dtype([(p[0], p[1]) for p in props])
            rec = np.frombuffer(blob, dtype=dtype, count=count, offset=offset)
            offset += dtype.itemsize * count
            out[name] = {p[0]: rec[p[0]] for p in props}
    return out


def read_cloud_ply(path) -> PointCloud:
    data = _read_ply(path).get("vertex")
    if data is None:
        raise InputError(f"{path}: no vertex element")
    points = np.column_stack([data["x"], data["y"], data["z"]]).astype(np.float64)
    normals = colors = None
    if all(k in data for k in ("nx", "ny", "nz")):
        normals = np.column_stack([data["nx"], data["ny"], data["nz"]]).astype(np.float64)
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        lengths[lengths == 0] = 1.0
        normals = normals / lengths  # float32 storage loses unit length
    if all(k in data for k in ("red", "green", "blue")):
        colors = np.column_stack([data["red"], data["green"],
                                  data["blue"]]).astype(np.float64) / 255.0
    return PointCloud(points=points, normals=normals, colors=colors)


def read_mesh_ply(path) -> TriangleMesh:
    parsed = _read_ply(path)
    data = parsed.get("vertex")
    if data is None:
        raise InputError(f"{path}: no vertex element")
    points = np.column_stack([data["x"], data["y"], data["z"]]).astype(np.float64)
    normals = None
    if all(k in data for k in ("nx", "ny", "nz")):
        normals = np.column_stack([data["nx"], data["ny"], data["nz"]]).astype(np.float64)
    faces = parsed.get("face", {}).get("vertex_indices",
                                       np.zeros((0, 3), dtype=np.int64))
    return TriangleMesh(vertices=points, triangles=faces, normals=normals)


def read_mesh(path) -> TriangleMesh:
    path = Path(path)
    if path.suffix.lower() == ".obj":
        return read_obj(path)
    if path.suffix.lower() == ".ply":
        return read_mesh_ply(path)
    raise InputError(f"{path}: unsupported mesh format")


# ---------------------------------------------------------------------------
# Prediction blobs (the boundary where DNN outputs enter the system)

def write_prediction(dir_path, frame_id: str, object_id: str,
                     pred: KeypointPrediction) -> None:
    """One float32 blob per frame plus a JSON sidecar describing the layout."""
    dir_path = Path(dir_path)
    dir_path.mkdir(parents=True, exist_ok=True)
    tensors = {
        "points": pred.points.astype("<f4"),
        "offsets": pred.offsets.astype("<f4"),
        "scores": pred.scores.astype("<f4"),
    }
    fields = {}
    offset = 0
    blob = bytearray()
    for name, tensor in tensors.items():
        raw = np.ascontiguousarray(tensor).tobytes()
        fields[name] = {"offset_bytes": offset, "shape": list(tensor.shape)}
        blob.extend(raw)
        offset += len(raw)
    sidecar = {
        "schema_version": 1,
        "frame_id": frame_id,
        "object_id": object_id,
        "blob": f"{frame_id}.bin",
        "shape": [int(pred.points.shape[0]), int(pred.num_keypoints)],
        "order": "row-major",
        "dtype": "float32",
        "fields": fields,
    }
    (dir_path / f"{frame_id}.bin").write_bytes(bytes(blob))
    (dir_path / f"{frame_id}.json").write_text(json.dumps(sidecar, indent=1))


def read_prediction(sidecar_path):
    """Returns (frame_id, object_id, KeypointPrediction)."""
    sidecar_path = Path(sidecar_path)
    try:
        doc = json.loads(sidecar_path.read_text())
        if doc.get("order") != "row-major" or doc.get("dtype") != "float32":
            raise InputError("unsupported tensor layout")
        blob = (sidecar_path.parent / doc["blob"]).read_bytes()
        arrays = {}
        for name in ("points", "offsets", "scores"):
            field = doc["fields"][name]
            shape = tuple(int(x) for x in field["shape"])
            n = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(blob, dtype="<f4", count=n,
                                offset=int(field["offset_bytes"]))
            arrays[name] = arr.reshape(shape).astype(np.float64)
        pred = KeypointPrediction(points=arrays["points"],
                                  offsets=arrays["offsets"],
                                  scores=np.clip(arrays["scores"], 0.0, 1.0))
        return str(doc["frame_id"]), str(doc.get("object_id", "")), pred
    except InputError:
        raise
    except Exception as exc:
        raise InputError(f"{sidecar_path}: malformed prediction ({exc})") from exc


# ---------------------------------------------------------------------------
# Keypoints and grasps

def write_keypoints_json(path, kps: KeypointSet) -> None:
    Path(path).write_text(json.dumps(
        {"keypoints": [[float(x) for x in row] for row in kps.keypoints]}))


def read_keypoints_json(path) -> KeypointSet:
    doc = json.loads(Path(path).read_text())
    data = doc["keypoints"] if isinstance(doc, dict) else doc
    return KeypointSet(np.asarray(data, dtype=np.float64))


def write_grasps_json(path, grasps: list[GraspPose]) -> None:
    rows = [grasp_to_json(g) for g in grasps]
    Path(path).write_text(json.dumps(rows, indent=1))


def grasp_to_json(g: GraspPose) -> dict:
    return {
        "R": [float(x) for x in g.pose.rotation.ravel()],
        "t": [float(x) for x in g.pose.translation],
        "width": float(g.width),
        "contacts": [[float(x) for x in g.contact_a],
                     [float(x) for x in g.contact_b]],
    }


def read_grasps_json(path) -> list[GraspPose]:
    rows = json.loads(Path(path).read_text())
    grasps = []
    for row in rows:
        try:
            pose = PoseSE3(np.asarray(row["R"], dtype=np.float64).reshape(3, 3),
                           np.asarray(row["t"], dtype=np.float64))
            grasps.append(GraspPose(pose=pose, width=float(row["width"]),
                                    contact_a=row["contacts"][0],
                                    contact_b=row["contacts"][1]))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"{path}: malformed grasp record ({exc})") from exc
    return grasps
