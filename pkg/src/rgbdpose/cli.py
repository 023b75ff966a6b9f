"""Batch command-line front-end.

Subcommands: augment (rotation + domain randomization over a dataset),
inspect (reality-gap statistics), estimate (keypoint voting over prediction
dumps), evaluate (ADD(S) success rates), grasps (offline generation), select
(online selection). Every command is reproducible: the same inputs and seed
produce byte-identical outputs for any --jobs value.
"""

from __future__ import annotations

import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from . import io as rio
from .augment import (AnnotatedFrame, BackgroundConfig, DepthAugmentConfig,
                      PerlinRange, RgbAugmentConfig, augment_depth,
                      augment_rgb, rotate_frame)
from .core import PoseSE3
from .errors import EmptyResult, InputError, RgbdPoseError
from .grasp import (GraspGenConfig, GripperModel, SelectConfig,
                    generate_grasps, select_grasp)
from .metrics import depth_psd, evaluate_pose, rgb_statistics, success_rate
from .noise import GridNoiseParams, derive_seed
from .pose import VoteConfig, fit_rigid, vote_keypoints

SCHEMA_VERSION = 1

# ---------------------------------------------------------------------------
# Dataset manifest

@dataclass(frozen=True)
class FrameEntry:
    frame_id: str
    rgb: Path
    depth: Path
    label: Path
    mask: Path | None = None


@dataclass(frozen=True)
class ObjectEntry:
    mesh: Path
    keypoints: Path | None
    diameter: float
    symmetric: bool


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    frames: list[FrameEntry]
    objects: dict[str, ObjectEntry]


def load_manifest(path) -> DatasetManifest:
    """Parse and validate a dataset manifest; every referenced file must
    exist and diameters must be positive."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read manifest ({exc})") from exc
    root = (path.parent / doc["root"]).resolve() if "root" in doc \
        else path.parent.resolve()

    def resolve(rel, required=True):
        if rel is None:
            return None
        p = root / rel
        if required and not p.is_file():
            raise InputError(f"{path}: missing referenced file {p}")
        return p

    frames = []
    for row in doc.get("frames", []):
        frames.append(FrameEntry(
            frame_id=str(row["id"]),
            rgb=resolve(row["rgb"]),
            depth=resolve(row["depth"]),
            label=resolve(row["label"]),
            mask=resolve(row.get("mask")),
        ))
    objects = {}
    for object_id, row in doc.get("objects", {}).items():
        diameter = float(row["diameter"])
        if diameter <= 0:
            raise InputError(f"{path}: object {object_id} diameter must be > 0")
        objects[object_id] = ObjectEntry(
            mesh=resolve(row["mesh"]),
            keypoints=resolve(row.get("keypoints")),
            diameter=diameter,
            symmetric=bool(row.get("symmetric", False)),
        )
    return DatasetManifest(root=root, frames=frames, objects=objects)


# ---------------------------------------------------------------------------
# Augmentation config document

_RANGE = {"type": "array", "items": {"type": "number"},
          "minItems": 2, "maxItems": 2}
_PERLIN_RANGE = {
    "type": "object",
    "properties": {"frequency": _RANGE, "amplitude": _RANGE,
                   "octaves": {"type": "integer", "minimum": 1}},
    "additionalProperties": False,
}
_GRID = {
    "type": "object",
    "properties": {"grid_cols": {"type": "integer", "minimum": 2},
                   "grid_rows": {"type": "integer", "minimum": 2},
                   "sigma": {"type": "number", "minimum": 0}},
    "required": ["grid_cols", "grid_rows", "sigma"],
    "additionalProperties": False,
}

AUGMENT_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "schema_version": {"type": "integer"},
        "rgb": {
            "type": "object",
            "properties": {
                "brightness_delta": _RANGE,
                "saturation_scale_range": _RANGE,
                "hue_delta_degrees": _RANGE,
                "contrast_scale_range": _RANGE,
                "sharpen_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "blur_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "gaussian_sigma_range": _RANGE,
                "perlin_params_range": _PERLIN_RANGE,
            },
            "additionalProperties": False,
        },
        "depth": {
            "type": "object",
            "properties": {
                "gaussian_sigma": {"type": "number", "minimum": 0},
                "shift_perlin": _PERLIN_RANGE,
                "warp_perlin": _PERLIN_RANGE,
                "warp_max_shift": {"type": "number", "minimum": 0},
                "sobel_threshold": {"type": "number", "exclusiveMinimum": 0},
                "edge_dilation": {"type": "integer", "minimum": 0},
                "hole_perlin": _PERLIN_RANGE,
                "hole_threshold": {"type": "number"},
                "background": {
                    "type": ["object", "null"],
                    "properties": {
                        "max_tilt_radians": {"type": "number", "minimum": 0},
                        "grid_a": _GRID,
                        "grid_b": _GRID,
                        "offset_behind": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

# Randomization defaults; the ranges are tuning choices, adjust per dataset.
DEFAULT_AUGMENT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "rgb": {
        "brightness_delta": [-20.0, 20.0],
        "saturation_scale_range": [0.7, 1.3],
        "hue_delta_degrees": [-10.0, 10.0],
        "contrast_scale_range": [0.8, 1.2],
        "sharpen_prob": 0.15,
        "blur_prob": 0.15,
        "gaussian_sigma_range": [0.0, 6.0],
        "perlin_params_range": {"frequency": [2.0, 8.0],
                                "amplitude": [0.0, 12.0], "octaves": 2},
    },
    "depth": {
        "gaussian_sigma": 0.004,
        "shift_perlin": {"frequency": [2.0, 10.0],
                         "amplitude": [0.003, 0.015], "octaves": 2},
        "warp_perlin": {"frequency": [4.0, 16.0],
                        "amplitude": [1.0, 3.0], "octaves": 1},
        "warp_max_shift": 3.0,
        "sobel_threshold": 0.08,
        "edge_dilation": 1,
        "hole_perlin": {"frequency": [6.0, 14.0],
                        "amplitude": [1.0, 1.0], "octaves": 1},
        "hole_threshold": 0.6,
        "background": {
            "max_tilt_radians": 0.26,
            "grid_a": {"grid_cols": 4, "grid_rows": 3, "sigma": 0.05},
            "grid_b": {"grid_cols": 9, "grid_rows": 7, "sigma": 0.02},
            "offset_behind": 0.05,
        },
    },
}


def load_augment_config(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: cannot read config ({exc})") from exc
    import jsonschema

    try:
        jsonschema.validate(doc, AUGMENT_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path}: config rejected by schema ({exc.message})") from exc
    return doc


def _pair(value) -> tuple[float, float]:
    return float(value[0]), float(value[1])


def _perlin_range(doc: dict | None) -> PerlinRange:
    if not doc:
        return PerlinRange()
    return PerlinRange(frequency=_pair(doc.get("frequency", [4.0, 4.0])),
                       amplitude=_pair(doc.get("amplitude", [0.0, 0.0])),
                       octaves=int(doc.get("octaves", 1)))


def rgb_config_from_doc(doc: dict | None, seed: int) -> RgbAugmentConfig:
    doc = doc or {}
    return RgbAugmentConfig(
        brightness_delta=_pair(doc.get("brightness_delta", [0.0, 0.0])),
        saturation_scale_range=_pair(doc.get("saturation_scale_range", [1.0, 1.0])),
        hue_delta_degrees=_pair(doc.get("hue_delta_degrees", [0.0, 0.0])),
        contrast_scale_range=_pair(doc.get("contrast_scale_range", [1.0, 1.0])),
        sharpen_prob=float(doc.get("sharpen_prob", 0.0)),
        blur_prob=float(doc.get("blur_prob", 0.0)),
        gaussian_sigma_range=_pair(doc.get("gaussian_sigma_range", [0.0, 0.0])),
        perlin_params_range=_perlin_range(doc.get("perlin_params_range")),
        seed=seed,
    )


def depth_config_from_doc(doc: dict | None, seed: int) -> DepthAugmentConfig:
    doc = doc or {}
    bg_doc = doc.get("background")
    background = None
    if bg_doc:
        background = BackgroundConfig(
            max_tilt_radians=float(bg_doc.get("max_tilt_radians", 0.26)),
            grid_a=GridNoiseParams(**bg_doc["grid_a"]),
            grid_b=GridNoiseParams(**bg_doc["grid_b"]),
            offset_behind=float(bg_doc.get("offset_behind", 0.05)),
        )
    return DepthAugmentConfig(
        gaussian_sigma=float(doc.get("gaussian_sigma", 0.0)),
        shift_perlin=_perlin_range(doc.get("shift_perlin")),
        warp_perlin=_perlin_range(doc.get("warp_perlin")),
        warp_max_shift=float(doc.get("warp_max_shift", 0.0)),
        sobel_threshold=float(doc.get("sobel_threshold", 0.05)),
        edge_dilation=int(doc.get("edge_dilation", 0)),
        background=background,
        hole_perlin=_perlin_range(doc.get("hole_perlin")),
        hole_threshold=float(doc.get("hole_threshold", np.inf)),
        seed=seed,
    )


# ---------------------------------------------------------------------------
# augment

def _load_frame(entry: dict) -> AnnotatedFrame:
    rgb = rio.read_rgb(entry["rgb"])
    depth = rio.read_depth_png(entry["depth"])
    object_id, intrinsics, pose, bbox = rio.read_label_json(entry["label"])
    mask = None
    if entry.get("mask"):
        from PIL import Image

        mask = np.asarray(Image.open(entry["mask"])) > 0
    return AnnotatedFrame(rgb=rgb, depth=depth, intrinsics=intrinsics,
                          pose=pose, bbox=bbox, mask=mask, object_id=object_id)


def _augment_worker(payload: dict) -> dict:
    """Process one frame: rotate `rotations` times, augment each survivor,
    write images and adjusted labels. Top-level so it pickles for the pool."""
    try:
        frame = _load_frame(payload)
        out_dir = Path(payload["out_dir"])
        rotations = payload["rotations"]
        frame_seed = payload["frame_seed"]
        written = 0
        discarded = 0
        for k in range(rotations):
            rotated = rotate_frame(frame, 2.0 * np.pi * k / rotations,
                                   payload["min_visible"])
            if rotated is None:
                discarded += 1
                continue
            sub_seed = derive_seed(frame_seed, "rotation", k)
            rgb_cfg = rgb_config_from_doc(payload["config"].get("rgb"),
                                          seed=derive_seed(sub_seed, "rgb"))
            depth_cfg = depth_config_from_doc(payload["config"].get("depth"),
                                              seed=derive_seed(sub_seed, "depth"))
            rgb = augment_rgb(rotated.rgb, rgb_cfg)
            depth = augment_depth(rotated.depth, depth_cfg, rotated.intrinsics,
                                  foreground_mask=rotated.mask)
            stem = f"{payload['frame_id']}_r{k:02d}"
            rio.write_rgb(out_dir / f"{stem}.png", rgb)
            rio.write_depth_png(out_dir / f"{stem}_depth.png", depth)
            rio.write_label_json(out_dir / f"{stem}.json", rotated.object_id,
                                 rotated.intrinsics, rotated.pose, rotated.bbox)
            written += 1
        return {"frame_id": payload["frame_id"], "written": written,
                "discarded": discarded}
    except Exception as exc:  # recorded in the summary, processing continues
        return {"frame_id": payload["frame_id"], "error": str(exc)}


@click.group()
@click.option("--seed", type=int, default=0, show_default=True,
              help="Master seed; per-frame seeds are derived from it.")
@click.option("--jobs", type=int, default=1, show_default=True,
              help="Worker processes; output is identical for any value.")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Augmentation config JSON (see AUGMENT_CONFIG_SCHEMA).")
@click.pass_context
def main(ctx, seed, jobs, config_path):
    """Sim-to-real RGBD batch tools."""
    ctx.ensure_object(dict)
    ctx.obj["seed"] = seed
    ctx.obj["jobs"] = max(1, jobs)
    ctx.obj["config_path"] = config_path


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@main.command("augment")
@click.argument("manifest_path", type=click.Path(exists=True))
@click.argument("out_dir", type=click.Path())
@click.option("--rotations", type=int, default=1, show_default=True)
@click.option("--min-visible", type=float, default=0.0, show_default=True,
              help="Also discard rotations keeping less than this fraction "
                   "of the box area in view (0 = center rule only).")
@click.pass_context
def cmd_augment(ctx, manifest_path, out_dir, rotations, min_visible):
    """Rotate and domain-randomize every frame of a dataset."""
    seed, jobs = ctx.obj["seed"], ctx.obj["jobs"]
    try:
        manifest = load_manifest(manifest_path)
        if rotations < 1:
            raise InputError("--rotations must be >= 1")
        if not 0.0 <= min_visible <= 1.0:
            raise InputError("--min-visible must be in [0, 1]")
        config = (load_augment_config(ctx.obj["config_path"])
                  if ctx.obj["config_path"] else DEFAULT_AUGMENT_CONFIG)
    except RgbdPoseError as exc:
        _fail(str(exc))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payloads = [{
        "frame_id": f.frame_id,
        "rgb": str(f.rgb), "depth": str(f.depth), "label": str(f.label),
        "mask": str(f.mask) if f.mask else None,
        "out_dir": str(out), "rotations": rotations, "config": config,
        "min_visible": min_visible,
        "frame_seed": derive_seed(seed, f.frame_id),
    } for f in manifest.frames]

    if jobs == 1:
        results = [_augment_worker(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_augment_worker, payloads))

    failures = [r for r in results if "error" in r]
    summary = {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "rotations": rotations,
        "frames_in": len(payloads),
        "frames_out": sum(r.get("written", 0) for r in results),
        "discarded": sum(r.get("discarded", 0) for r in results),
        "per_frame": results,
        "failures": failures,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    click.echo(f"augmented {summary['frames_out']} frames "
               f"({summary['discarded']} discarded, {len(failures)} failed)")
    if failures:
        sys.exit(1)


# ---------------------------------------------------------------------------
# inspect

def _sample_frames(manifest: DatasetManifest, n: int, seed: int):
    frames = manifest.frames
    if n >= len(frames):
        if n > len(frames):
            click.echo(f"warning: requested {n} frames, only "
                       f"{len(frames)} available; using all", err=True)
        return frames
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(len(frames), size=n, replace=False))
    return [frames[i] for i in idx]


def _set_statistics(frames, bins):
    rgbs = [rio.read_rgb(f.rgb) for f in frames]
    depths = [rio.read_depth_png(f.depth) for f in frames]
    stats = rgb_statistics(rgbs)
    profile = depth_psd(depths, bins=bins)
    stats["psd"] = {"frequencies": profile.frequencies.tolist(),
                    "power": profile.power.tolist()}
    return stats


@main.command("inspect")
@click.argument("real_manifest", type=click.Path(exists=True))
@click.argument("synth_manifest", type=click.Path(exists=True))
@click.argument("out_report", type=click.Path())
@click.option("--sample-n", type=int, default=50, show_default=True)
@click.option("--bins", type=int, default=64, show_default=True)
@click.option("--plot/--no-plot", default=False,
              help="Also write SVG plots next to the report.")
@click.pass_context
def cmd_inspect(ctx, real_manifest, synth_manifest, out_report, sample_n,
                bins, plot):
    """Compare reality-gap statistics of two datasets."""
    seed = ctx.obj["seed"]
    try:
        real = load_manifest(real_manifest)
        synth = load_manifest(synth_manifest)
        if not real.frames or not synth.frames:
            raise InputError("both manifests must contain frames")
        real_stats = _set_statistics(
            _sample_frames(real, sample_n, derive_seed(seed, "real")), bins)
        synth_stats = _set_statistics(
            _sample_frames(synth, sample_n, derive_seed(seed, "synth")), bins)
    except RgbdPoseError as exc:
        _fail(str(exc))

    delta = (np.asarray(synth_stats["psd"]["power"])
             - np.asarray(real_stats["psd"]["power"]))
    report = {
        "schema_version": SCHEMA_VERSION,
        "sample_n": sample_n,
        "real": real_stats,
        "synthetic": synth_stats,
        "psd_delta": delta.tolist(),
    }
    Path(out_report).write_text(json.dumps(report, indent=1))
    if plot:
        _write_inspect_plots(Path(out_report), real_stats, synth_stats)
    click.echo(f"report written to {out_report}")


def _write_inspect_plots(report_path: Path, real_stats, synth_stats):
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for stats, label in ((real_stats, "real"), (synth_stats, "synthetic")):
        freq = np.asarray(stats["psd"]["frequencies"])
        power = np.asarray(stats["psd"]["power"])
        ax.semilogy(freq[1:], np.maximum(power[1:], 1e-20), label=label)
    ax.set_xlabel("spatial frequency (cycles/pixel)")
    ax.set_ylabel("mean power")
    ax.legend()
    fig.savefig(report_path.with_suffix(".psd.svg"), format="svg")
    plt.close(fig)


# ---------------------------------------------------------------------------
# estimate

def _keypoints_for(object_id: str, keypoints_path: Path):
    if keypoints_path.is_dir():
        candidate = keypoints_path / f"{object_id}.json"
        if not candidate.is_file():
            raise InputError(f"no keypoint file for object {object_id}")
        return rio.read_keypoints_json(candidate)
    return rio.read_keypoints_json(keypoints_path)


@main.command("estimate")
@click.argument("predictions_dir", type=click.Path(exists=True))
@click.argument("out_jsonl", type=click.Path())
@click.option("--keypoints", "keypoints_path", type=click.Path(exists=True),
              required=True,
              help="Keypoint JSON file, or a directory of <object_id>.json.")
@click.option("--top-n", type=int, default=128, show_default=True)
@click.option("--score-threshold", type=float, default=0.5, show_default=True)
def cmd_estimate(predictions_dir, out_jsonl, keypoints_path, top_n,
                 score_threshold):
    """Run keypoint voting + SVD fit over a directory of prediction dumps."""
    sidecars = sorted(Path(predictions_dir).glob("*.json"))
    if not sidecars:
        _fail(f"no prediction sidecars in {predictions_dir}")
    cfg = VoteConfig(top_n=top_n, score_threshold=score_threshold)
    keypoints_path = Path(keypoints_path)

    rows = []
    for sidecar in sidecars:
        t0 = time.perf_counter()
        try:
            frame_id, object_id, pred = rio.read_prediction(sidecar)
            model_kps = _keypoints_for(object_id, keypoints_path)
            t1 = time.perf_counter()
            voted = vote_keypoints(pred, cfg)
            t2 = time.perf_counter()
            pose = fit_rigid(model_kps, voted)
            t3 = time.perf_counter()
            rows.append({
                "frame_id": frame_id,
                "object_id": object_id,
                "R": [float(x) for x in pose.rotation.ravel()],
                "t": [float(x) for x in pose.translation],
                "timing_ms": {
                    "preprocessing": (t1 - t0) * 1000.0,
                    "voting": (t2 - t1) * 1000.0,
                    "fit": (t3 - t2) * 1000.0,
                },
            })
        except (RgbdPoseError, OSError) as exc:
            rows.append({"frame_id": sidecar.stem, "error": str(exc)})
    Path(out_jsonl).write_text(
        "\n".join(json.dumps(row) for row in rows) + "\n")
    click.echo(f"estimated {len(rows)} frames -> {out_jsonl}")


# ---------------------------------------------------------------------------
# evaluate

def _read_jsonl(path):
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if line:
            rows.append(json.loads(line))
    return rows


def _pose_from(row, prefix=""):
    return PoseSE3(
        np.asarray(row[prefix + "R"], dtype=np.float64).reshape(3, 3),
        np.asarray(row[prefix + "t"], dtype=np.float64),
    )


@main.command("evaluate")
@click.argument("poses_jsonl", type=click.Path(exists=True))
@click.argument("manifest_path", type=click.Path(exists=True))
@click.argument("out_report", type=click.Path())
@click.option("--gt", "gt_jsonl", type=click.Path(exists=True), default=None,
              help="Ground-truth JSONL; omit when poses_jsonl rows carry "
                   "pred_R/pred_t/gt_R/gt_t.")
@click.option("--threshold", type=float, default=0.1, show_default=True,
              help="Success threshold as a fraction of the object diameter.")
def cmd_evaluate(poses_jsonl, manifest_path, out_report, gt_jsonl, threshold):
    """ADD(S) success rates per object plus a pooled All row."""
    try:
        manifest = load_manifest(manifest_path)
        records = _collect_eval_records(poses_jsonl, gt_jsonl)
        per_object: dict[str, list] = {}
        for rec in records:
            object_id = rec["object_id"]
            entry = manifest.objects.get(object_id)
            if entry is None:
                raise InputError(f"object {object_id} not in manifest")
            mesh = rio.read_mesh(entry.mesh)
            result = evaluate_pose(mesh.vertices, rec["pred"], rec["gt"],
                                   entry.diameter, threshold)
            per_object.setdefault(object_id, []).append(result)
    except RgbdPoseError as exc:
        _fail(str(exc))

    objects_report = {}
    pooled_hits = 0
    pooled_total = 0
    for object_id, results in sorted(per_object.items()):
        symmetric = manifest.objects[object_id].symmetric
        hits = sum(1 for r in results
                   if (r.adds if symmetric else r.add) < threshold * r.diameter)
        objects_report[object_id] = {
            "frames": len(results),
            "symmetric": symmetric,
            "add_rate": success_rate(results, False, threshold),
            "adds_rate": success_rate(results, True, threshold),
            "rate": hits / len(results),
        }
        pooled_hits += hits
        pooled_total += len(results)

    report = {
        "schema_version": SCHEMA_VERSION,
        "threshold_fraction": threshold,
        "objects": objects_report,
        "all": {"frames": pooled_total,
                "rate": pooled_hits / pooled_total if pooled_total else 0.0},
    }
    Path(out_report).write_text(json.dumps(report, indent=1))
    for object_id, row in objects_report.items():
        click.echo(f"{object_id}: {100.0 * row['rate']:.1f}% "
                   f"({row['frames']} frames)")
    click.echo(f"All: {100.0 * report['all']['rate']:.1f}%")


def _collect_eval_records(poses_jsonl, gt_jsonl):
    rows = _read_jsonl(poses_jsonl)
    records = []
    if gt_jsonl is None:
        for row in rows:
            if "pred_R" not in row:
                raise InputError(
                    "combined records need pred_R/pred_t/gt_R/gt_t; "
                    "pass --gt for two-file evaluation")
            records.append({"object_id": str(row["object_id"]),
                            "pred": _pose_from(row, "pred_"),
                            "gt": _pose_from(row, "gt_")})
        return records
    gt_by_frame = {str(r["frame_id"]): r for r in _read_jsonl(gt_jsonl)}
    for row in rows:
        if "error" in row:
            raise InputError(f"frame {row.get('frame_id')}: prediction "
                             f"failed upstream ({row['error']})")
        frame_id = str(row["frame_id"])
        gt_row = gt_by_frame.get(frame_id)
        if gt_row is None:
            raise InputError(f"no ground truth for frame {frame_id}")
        records.append({"object_id": str(row["object_id"]),
                        "pred": _pose_from(row),
                        "gt": _pose_from(gt_row)})
    return records


# ---------------------------------------------------------------------------
# grasps / select

def _load_gripper(path) -> GripperModel:
    try:
        doc = json.loads(Path(path).read_text())
        return GripperModel(
            max_width=float(doc["max_width"]),
            finger_depth=float(doc["finger_depth"]),
            bounding_box=tuple(float(x) for x in doc["bounding_box"]),
            approach_axis=tuple(float(x) for x in
                                doc.get("approach_axis", (0.0, 0.0, 1.0))),
        )
    except (OSError, KeyError, ValueError, TypeError,
            json.JSONDecodeError) as exc:
        raise InputError(f"{path}: malformed gripper JSON ({exc})") from exc


@main.command("grasps")
@click.argument("mesh_path", type=click.Path(exists=True))
@click.argument("gripper_json", type=click.Path(exists=True))
@click.argument("out_json", type=click.Path())
@click.option("--surface-samples", type=int, default=128, show_default=True)
@click.option("--rotations", type=int, default=24, show_default=True)
@click.option("--perp-angle", type=float, default=15.0, show_default=True)
@click.option("--curvature-angle", type=float, default=30.0, show_default=True)
@click.option("--anchor-cell", type=float, default=0.03, show_default=True)
@click.pass_context
def cmd_grasps(ctx, mesh_path, gripper_json, out_json, surface_samples,
               rotations, perp_angle, curvature_angle, anchor_cell):
    """Generate antipodal grasp candidates for a mesh."""
    try:
        mesh = rio.read_mesh(mesh_path)
        gripper = _load_gripper(gripper_json)
        cfg = GraspGenConfig(
            surface_samples=surface_samples,
            rotations_per_axis=rotations,
            perpendicularity_max_angle=perp_angle,
            curvature_max_angle=curvature_angle,
            anchor_cell=anchor_cell,
            seed=ctx.obj["seed"],
        )
        grasps = generate_grasps(mesh, gripper, cfg)
    except EmptyResult:
        _fail("no valid grasps found", code=2)
    except (RgbdPoseError, ValueError) as exc:
        _fail(str(exc))
    rio.write_grasps_json(out_json, grasps)
    click.echo(f"{len(grasps)} grasps -> {out_json}")


@main.command("select")
@click.argument("grasps_json", type=click.Path(exists=True))
@click.argument("pose_json", type=click.Path(exists=True))
@click.argument("scene_ply", type=click.Path(exists=True))
@click.argument("gripper_json", type=click.Path(exists=True))
@click.option("--mask", "mask_json", type=click.Path(exists=True), default=None,
              help="JSON array of 0/1 object flags per scene point; without "
                   "it every scene point is an obstacle.")
@click.option("--max-approach-angle", type=float, default=60.0,
              show_default=True)
@click.option("--collision-radius", type=float, default=0.01,
              show_default=True)
@click.option("--tool-axis", nargs=3, type=float, default=(0.0, 0.0, 1.0),
              show_default=True)
def cmd_select(grasps_json, pose_json, scene_ply, gripper_json, mask_json,
               max_approach_angle, collision_radius, tool_axis):
    """Pick the safest grasp against an observed scene cloud."""
    try:
        grasps = rio.read_grasps_json(grasps_json)
        doc = json.loads(Path(pose_json).read_text())
        object_pose = _pose_from(doc)
        scene = rio.read_cloud_ply(scene_ply)
        gripper = _load_gripper(gripper_json)
        if mask_json is not None:
            mask = np.asarray(json.loads(Path(mask_json).read_text()),
                              dtype=bool)
        else:
            mask = np.zeros(len(scene), dtype=bool)
        chosen = select_grasp(
            grasps, object_pose, scene, mask,
            current_tool_axis=np.asarray(tool_axis),
            gripper=gripper,
            cfg=SelectConfig(max_approach_angle=max_approach_angle,
                             collision_radius=collision_radius),
        )
    except (RgbdPoseError, OSError, json.JSONDecodeError, KeyError,
            ValueError) as exc:
        _fail(str(exc))
    if chosen is None:
        _fail("no grasp survives the filters", code=2)
    doc = rio.grasp_to_json(chosen)
    doc["quality"] = None if np.isinf(chosen.quality) else float(chosen.quality)
    click.echo(json.dumps(doc))


if __name__ == "__main__":
    main()
