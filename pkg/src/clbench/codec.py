"""Bit-exact readers/writers for every on-disk format.

Canonical serialization rules shared by all JSON artifacts: keys in a fixed
order, floats rendered with 9 significant digits, LF line endings.  Saving
a loaded canonical artifact reproduces it byte for byte.  Strict readers
reject unknown fields; lenient readers ignore them (CLI ingestion of
third-party data).

Tensor container ("CLTN"): little-endian header
``magic(4) version(u8) dtype(u8) rank(u16) dims(rank x u32)`` followed by
the row-major f32 payload.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .autolabel import KeyPoint, LabelConfig, LabelGrid
from .errors import (
    BadMagic,
    DimOverflow,
    InvariantViolation,
    ParseError,
    TruncatedPayload,
    UnsupportedVersion,
)
from .geometry import CameraModel, ResizeCrop, SE3Pose, quat_normalize
from .vectormap import LaneKind, Polyline3, VectorMap

# Quaternions in files may be off unit norm by at most this much; smaller
# deviations (from 9-digit rounding) are kept verbatim, larger ones up to
# the gate are renormalized.
QUAT_NORM_GATE = 1e-6
QUAT_KEEP_TOL = 1e-9


# ---------------------------------------------------------------------------
# Canonical JSON emitter
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """Canonical 9-significant-digit rendering."""
    x = float(x)
    if not math.isfinite(x):
        raise InvariantViolation(f"non-finite value {x} cannot be serialized")
    return format(x, ".9g")


def _emit_scalar(v: Any) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"cannot serialize {type(v)}")


def _is_scalar(v: Any) -> bool:
    return v is None or isinstance(v, (bool, np.bool_, int, np.integer, float, np.floating, str))


def dumps_canonical(obj: Any, pretty: bool = True) -> str:
    """Render with fixed key order (dict insertion order) and canonical floats.

    In pretty mode containers break across lines but lists of scalars stay
    inline; compact mode emits a single line (used for NDJSON records).
    """
    out: list[str] = []
    _emit(obj, out, 0, pretty)
    return "".join(out)


def _emit(obj: Any, out: list[str], depth: int, pretty: bool) -> None:
    pad = "  " * depth if pretty else ""
    inner = "  " * (depth + 1) if pretty else ""
    nl = "\n" if pretty else ""
    sep = "," + nl if pretty else ", "
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + nl)
        for k, (key, val) in enumerate(obj.items()):
            out.append(inner + json.dumps(key) + ": ")
            _emit(val, out, depth + 1, pretty)
            if k < len(obj) - 1:
                out.append(sep)
            else:
                out.append(nl)
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        if all(_is_scalar(v) for v in items):
            out.append("[" + ", ".join(_emit_scalar(v) for v in items) + "]")
            return
        out.append("[" + nl)
        for k, val in enumerate(items):
            out.append(inner)
            _emit(val, out, depth + 1, pretty)
            if k < len(items) - 1:
                out.append(sep)
            else:
                out.append(nl)
        out.append(pad + "]")
    else:
        out.append(_emit_scalar(obj))


def _write_text(path: Path | str, text: str) -> None:
    Path(path).write_bytes(text.encode("utf-8"))


# ---------------------------------------------------------------------------
# Parse helpers
# ---------------------------------------------------------------------------

def _load_json(path: Path | str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON: {e}") from e


def _as_obj(v: Any, path: str) -> dict:
    if not isinstance(v, dict):
        raise ParseError(f"{path}: expected object, got {type(v).__name__}")
    return v


def _check_keys(d: dict, path: str, required: Sequence[str], optional: Sequence[str], strict: bool) -> None:
    for k in required:
        if k not in d:
            raise ParseError(f"{path}: missing field {k!r}")
    if strict:
        allowed = set(required) | set(optional)
        for k in d:
            if k not in allowed:
                raise ParseError(f"{path}: unknown field {k!r}")


def _as_float(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{path}: expected number, got {type(v).__name__}")
    return float(v)


def _as_int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{path}: expected integer, got {type(v).__name__}")
    return v


def _as_str(v: Any, path: str) -> str:
    if not isinstance(v, str):
        raise ParseError(f"{path}: expected string, got {type(v).__name__}")
    return v


def _as_bool(v: Any, path: str) -> bool:
    if not isinstance(v, bool):
        raise ParseError(f"{path}: expected boolean, got {type(v).__name__}")
    return v


def _as_vec(v: Any, n: int, path: str) -> list[float]:
    if not isinstance(v, list) or len(v) != n:
        raise ParseError(f"{path}: expected {n}-element array")
    return [_as_float(x, f"{path}[{k}]") for k, x in enumerate(v)]


def _parse_quat(v: Any, path: str) -> np.ndarray:
    q = np.array(_as_vec(v, 4, path))
    norm = float(np.linalg.norm(q))
    if abs(norm - 1.0) > QUAT_NORM_GATE:
        raise ParseError(f"{path}: quaternion norm {norm} off unit by > {QUAT_NORM_GATE}")
    if abs(norm - 1.0) > QUAT_KEEP_TOL:
        q = quat_normalize(q)
    return q


# ---------------------------------------------------------------------------
# Vector map
# ---------------------------------------------------------------------------

def dumps_map(vmap: VectorMap) -> str:
    lanes = []
    for lane in vmap.lanes.values():
        lanes.append(
            {
                "id": lane.lane_id,
                "kind": lane.kind.value,
                "is_intersection": lane.is_intersection,
                "successors": list(vmap.successors.get(lane.lane_id, [])),
                "points": [[float(c) for c in p] for p in lane.points],
            }
        )
    return dumps_canonical({"lanes": lanes}) + "\n"


def save_map(path: Path | str, vmap: VectorMap) -> None:
    _write_text(path, dumps_map(vmap))


def load_map(path: Path | str, strict: bool = True) -> VectorMap:
    root = _as_obj(_load_json(path), "map")
    _check_keys(root, "map", ["lanes"], [], strict)
    if not isinstance(root["lanes"], list):
        raise ParseError("map.lanes: expected array")
    lanes: dict[str, Polyline3] = {}
    successors: dict[str, list[str]] = {}
    for k, entry in enumerate(root["lanes"]):
        path_k = f"map.lanes[{k}]"
        d = _as_obj(entry, path_k)
        _check_keys(d, path_k, ["id", "kind", "is_intersection", "successors", "points"], [], strict)
        lane_id = _as_str(d["id"], f"{path_k}.id")
        kind = _as_str(d["kind"], f"{path_k}.kind")
        if kind not in (LaneKind.CENTERLINE.value, LaneKind.BOUNDARY.value):
            raise ParseError(f"{path_k}.kind: unknown kind {kind!r}")
        if not isinstance(d["points"], list):
            raise ParseError(f"{path_k}.points: expected array")
        pts = [_as_vec(p, 3, f"{path_k}.points[{m}]") for m, p in enumerate(d["points"])]
        if not isinstance(d["successors"], list):
            raise ParseError(f"{path_k}.successors: expected array")
        succs = [_as_str(s, f"{path_k}.successors[{m}]") for m, s in enumerate(d["successors"])]
        if lane_id in lanes:
            raise InvariantViolation(f"{path_k}: duplicate lane id {lane_id!r}")
        lanes[lane_id] = Polyline3(
            np.array(pts, dtype=np.float64).reshape(-1, 3),
            lane_id,
            LaneKind(kind),
            _as_bool(d["is_intersection"], f"{path_k}.is_intersection"),
        )
        if succs:
            successors[lane_id] = succs
    return VectorMap(lanes=lanes, successors=successors)


# ---------------------------------------------------------------------------
# Pose track (NDJSON)
# ---------------------------------------------------------------------------

def dumps_pose(pose: SE3Pose) -> str:
    return dumps_canonical(
        {
            "timestamp_ns": pose.timestamp_ns,
            "t": [float(x) for x in pose.t],
            "q": [float(x) for x in pose.q],
        },
        pretty=False,
    )


def save_pose_track(path: Path | str, track: Sequence[SE3Pose]) -> None:
    _write_text(path, "".join(dumps_pose(p) + "\n" for p in track))


def load_pose_track(path: Path | str, strict: bool = True) -> list[SE3Pose]:
    track: list[SE3Pose] = []
    prev_t = -1
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{Path(path).name}:{ln}"
        try:
            d = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{where}: invalid JSON: {e}") from e
        d = _as_obj(d, where)
        _check_keys(d, where, ["timestamp_ns", "t", "q"], [], strict)
        t_ns = _as_int(d["timestamp_ns"], f"{where}.timestamp_ns")
        if t_ns <= prev_t:
            raise ParseError(f"{where}: timestamps must be strictly increasing")
        prev_t = t_ns
        track.append(
            SE3Pose(
                t_ns,
                np.array(_as_vec(d["t"], 3, f"{where}.t")),
                _parse_quat(d["q"], f"{where}.q"),
            )
        )
    return track


# ---------------------------------------------------------------------------
# Frames manifest (NDJSON)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameRef:
    frame_id: str
    timestamp_ns: int


def save_frames(path: Path | str, frames: Sequence[FrameRef]) -> None:
    _write_text(
        path,
        "".join(
            dumps_canonical({"frame_id": f.frame_id, "timestamp_ns": f.timestamp_ns}, pretty=False)
            + "\n"
            for f in frames
        ),
    )


def load_frames(path: Path | str, strict: bool = True) -> list[FrameRef]:
    out: list[FrameRef] = []
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        where = f"{Path(path).name}:{ln}"
        try:
            d = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"{where}: invalid JSON: {e}") from e
        d = _as_obj(d, where)
        _check_keys(d, where, ["frame_id", "timestamp_ns"], [], strict)
        out.append(
            FrameRef(
                _as_str(d["frame_id"], f"{where}.frame_id"),
                _as_int(d["timestamp_ns"], f"{where}.timestamp_ns"),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Calibration
# ---------------------------------------------------------------------------

def dumps_calibration(cameras: dict[str, CameraModel]) -> str:
    entries = []
    for cam_id, cam in cameras.items():
        tr = cam.transform
        entries.append(
            {
                "id": cam_id,
                "fx": float(cam.fx),
                "fy": float(cam.fy),
                "cx": float(cam.cx),
                "cy": float(cam.cy),
                "width": cam.width,
                "height": cam.height,
                "extrinsic": {
                    "t": [float(x) for x in cam.extrinsic.t],
                    "q": [float(x) for x in cam.extrinsic.q],
                },
                "transform": {
                    "crop_x0": tr.crop_x0,
                    "crop_y0": tr.crop_y0,
                    "crop_w": tr.crop_w,
                    "crop_h": tr.crop_h,
                    "scale_x": float(tr.scale_x),
                    "scale_y": float(tr.scale_y),
                },
            }
        )
    return dumps_canonical({"cameras": entries}) + "\n"


def save_calibration(path: Path | str, cameras: dict[str, CameraModel]) -> None:
    _write_text(path, dumps_calibration(cameras))


def load_calibration(path: Path | str, strict: bool = True) -> dict[str, CameraModel]:
    root = _as_obj(_load_json(path), "calibration")
    _check_keys(root, "calibration", ["cameras"], [], strict)
    if not isinstance(root["cameras"], list):
        raise ParseError("calibration.cameras: expected array")
    out: dict[str, CameraModel] = {}
    for k, entry in enumerate(root["cameras"]):
        pk = f"calibration.cameras[{k}]"
        d = _as_obj(entry, pk)
        _check_keys(
            d,
            pk,
            ["id", "fx", "fy", "cx", "cy", "width", "height", "extrinsic", "transform"],
            [],
            strict,
        )
        cam_id = _as_str(d["id"], f"{pk}.id")
        if cam_id in out:
            raise InvariantViolation(f"{pk}: duplicate camera id {cam_id!r}")
        ext = _as_obj(d["extrinsic"], f"{pk}.extrinsic")
        _check_keys(ext, f"{pk}.extrinsic", ["t", "q"], [], strict)
        tr = _as_obj(d["transform"], f"{pk}.transform")
        _check_keys(
            tr,
            f"{pk}.transform",
            ["crop_x0", "crop_y0", "crop_w", "crop_h", "scale_x", "scale_y"],
            [],
            strict,
        )
        out[cam_id] = CameraModel(
            fx=_as_float(d["fx"], f"{pk}.fx"),
            fy=_as_float(d["fy"], f"{pk}.fy"),
            cx=_as_float(d["cx"], f"{pk}.cx"),
            cy=_as_float(d["cy"], f"{pk}.cy"),
            width=_as_int(d["width"], f"{pk}.width"),
            height=_as_int(d["height"], f"{pk}.height"),
            extrinsic=SE3Pose(
                0,
                np.array(_as_vec(ext["t"], 3, f"{pk}.extrinsic.t")),
                _parse_quat(ext["q"], f"{pk}.extrinsic.q"),
            ),
            transform=ResizeCrop(
                crop_x0=_as_int(tr["crop_x0"], f"{pk}.transform.crop_x0"),
                crop_y0=_as_int(tr["crop_y0"], f"{pk}.transform.crop_y0"),
                crop_w=_as_int(tr["crop_w"], f"{pk}.transform.crop_w"),
                crop_h=_as_int(tr["crop_h"], f"{pk}.transform.crop_h"),
                scale_x=_as_float(tr["scale_x"], f"{pk}.transform.scale_x"),
                scale_y=_as_float(tr["scale_y"], f"{pk}.transform.scale_y"),
            ),
        )
    return out


# ---------------------------------------------------------------------------
# Label files
# ---------------------------------------------------------------------------

def dumps_label(grid: LabelGrid) -> str:
    cfg = grid.config
    kps = []
    for kp in grid.keypoints:
        entry: dict[str, Any] = {
            "cell": [kp.cell[0], kp.cell[1]],
            "offset": [float(kp.offset[0]), float(kp.offset[1])],
            "pixel": [float(kp.pixel[0]), float(kp.pixel[1])],
            "depth_m": None if kp.depth_m is None else float(kp.depth_m),
            "xyz_cam": None if kp.xyz_cam is None else [float(x) for x in kp.xyz_cam],
            "lane_id": kp.lane_id,
        }
        kps.append(entry)
    doc = {
        "frame_id": grid.frame_id,
        "camera_id": grid.camera_id,
        "timestamp_ns": grid.timestamp_ns,
        "config": {"h0": cfg.h0, "w0": cfg.w0, "h1": cfg.h1, "w1": cfg.w1, "s": cfg.s},
        "keypoints": kps,
    }
    return dumps_canonical(doc) + "\n"


def save_label(path: Path | str, grid: LabelGrid) -> None:
    _write_text(path, dumps_label(grid))


def load_label(path: Path | str, strict: bool = True) -> LabelGrid:
    root = _as_obj(_load_json(path), "label")
    _check_keys(root, "label", ["frame_id", "camera_id", "timestamp_ns", "config", "keypoints"], [], strict)
    c = _as_obj(root["config"], "label.config")
    _check_keys(c, "label.config", ["h0", "w0", "h1", "w1", "s"], [], strict)
    cfg = LabelConfig(
        h1=_as_int(c["h1"], "label.config.h1"),
        w1=_as_int(c["w1"], "label.config.w1"),
        s=_as_int(c["s"], "label.config.s"),
        h0=_as_int(c["h0"], "label.config.h0"),
        w0=_as_int(c["w0"], "label.config.w0"),
        max_depth_m=math.inf,  # filter thresholds are not stored in label files
    )
    if not isinstance(root["keypoints"], list):
        raise ParseError("label.keypoints: expected array")
    kps = []
    for k, entry in enumerate(root["keypoints"]):
        pk = f"label.keypoints[{k}]"
        d = _as_obj(entry, pk)
        _check_keys(d, pk, ["cell", "offset", "pixel", "depth_m", "xyz_cam", "lane_id"], [], strict)
        cell = d["cell"]
        if not isinstance(cell, list) or len(cell) != 2:
            raise ParseError(f"{pk}.cell: expected [i, j]")
        depth = d["depth_m"]
        xyz = d["xyz_cam"]
        lane = d["lane_id"]
        kps.append(
            KeyPoint(
                cell=(_as_int(cell[0], f"{pk}.cell[0]"), _as_int(cell[1], f"{pk}.cell[1]")),
                offset=tuple(_as_vec(d["offset"], 2, f"{pk}.offset")),
                pixel=tuple(_as_vec(d["pixel"], 2, f"{pk}.pixel")),
                depth_m=None if depth is None else _as_float(depth, f"{pk}.depth_m"),
                xyz_cam=None if xyz is None else np.array(_as_vec(xyz, 3, f"{pk}.xyz_cam")),
                lane_id=None if lane is None else _as_str(lane, f"{pk}.lane_id"),
            )
        )
    return LabelGrid(
        config=cfg,
        frame_id=_as_str(root["frame_id"], "label.frame_id"),
        camera_id=_as_str(root["camera_id"], "label.camera_id"),
        keypoints=tuple(kps),
        timestamp_ns=_as_int(root["timestamp_ns"], "label.timestamp_ns"),
    )


# ---------------------------------------------------------------------------
# CLTN tensor container
# ---------------------------------------------------------------------------

MAGIC = b"CLTN"
VERSION = 1
DTYPE_F32 = 1
MAX_RANK = 8
_MAX_PAYLOAD_BYTES = 1 << 40


@dataclass(frozen=True, eq=False)
class TensorBlob:
    """A row-major little-endian f32 tensor with its declared dims."""

    dims: tuple[int, ...]
    data: np.ndarray  # float32, shape == dims

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not 1 <= len(dims) <= MAX_RANK:
            raise DimOverflow(f"rank must be in [1, {MAX_RANK}], got {len(dims)}")
        for d in dims:
            if not 0 <= d < (1 << 32):
                raise DimOverflow(f"dim {d} does not fit in u32")
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.shape != dims:
            raise InvariantViolation(f"payload shape {arr.shape} != dims {dims}")
        object.__setattr__(self, "data", arr)

    @staticmethod
    def from_array(arr: np.ndarray) -> "TensorBlob":
        arr = np.asarray(arr)
        return TensorBlob(dims=arr.shape, data=arr.astype(np.float32))


def write_tensor(blob: TensorBlob) -> bytes:
    header = struct.pack("<4sBBH", MAGIC, VERSION, DTYPE_F32, len(blob.dims))
    dims = struct.pack(f"<{len(blob.dims)}I", *blob.dims)
    payload = blob.data.astype("<f4", copy=False).tobytes(order="C")
    return header + dims + payload


def read_tensor(data: bytes) -> TensorBlob:
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}")
    if len(data) < 8:
        raise TruncatedPayload("header truncated")
    version, dtype, rank = struct.unpack_from("<BBH", data, 4)
    if version != VERSION:
        raise UnsupportedVersion(f"version {version} not supported")
    if dtype != DTYPE_F32:
        raise UnsupportedVersion(f"dtype {dtype} not supported")
    if not 1 <= rank <= MAX_RANK:
        raise DimOverflow(f"rank must be in [1, {MAX_RANK}], got {rank}")
    dims_end = 8 + 4 * rank
    if len(data) < dims_end:
        raise TruncatedPayload("dims truncated")
    dims = struct.unpack_from(f"<{rank}I", data, 8)
    count = 1
    for d in dims:
        count *= d
    if count * 4 > _MAX_PAYLOAD_BYTES:
        raise DimOverflow(f"payload of {count} elements too large")
    expected = dims_end + 4 * count
    if len(data) < expected:
        raise TruncatedPayload(f"payload needs {expected} bytes, file has {len(data)}")
    if len(data) > expected:
        raise ParseError(f"{len(data) - expected} trailing bytes after payload")
    arr = np.frombuffer(data, dtype="<f4", count=count, offset=dims_end).reshape(dims)
    return TensorBlob(dims=dims, data=arr)


def save_tensor(path: Path | str, arr: np.ndarray) -> None:
    Path(path).write_bytes(write_tensor(TensorBlob.from_array(arr)))


def load_tensor(path: Path | str) -> np.ndarray:
    return read_tensor(Path(path).read_bytes()).data


# ---------------------------------------------------------------------------
# Prediction frames (manifest + three tensors)
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PredictionFrame:
    """Raw prediction tensors for one frame, as read from disk."""

    frame_id: str
    camera_id: str
    conf: np.ndarray  # (h1, w1)
    offset: np.ndarray  # (h1, w1, 2)
    depth: np.ndarray  # (h1, w1)


def save_prediction_frame(
    out_dir: Path | str,
    frame_id: str,
    camera_id: str,
    conf: np.ndarray,
    offset: np.ndarray,
    depth: np.ndarray,
) -> Path:
    """Write ``{frame_id}_{camera_id}.pred.json`` plus three .cltn tensors."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{frame_id}_{camera_id}"
    save_tensor(out_dir / f"{stem}.conf.cltn", conf)
    save_tensor(out_dir / f"{stem}.offset.cltn", offset)
    save_tensor(out_dir / f"{stem}.depth.cltn", depth)
    manifest = {
        "frame_id": frame_id,
        "camera_id": camera_id,
        "conf": f"{stem}.conf.cltn",
        "offset": f"{stem}.offset.cltn",
        "depth": f"{stem}.depth.cltn",
    }
    path = out_dir / f"{stem}.pred.json"
    _write_text(path, dumps_canonical(manifest) + "\n")
    return path


def load_prediction_frame(manifest_path: Path | str, strict: bool = True) -> PredictionFrame:
    manifest_path = Path(manifest_path)
    d = _as_obj(_load_json(manifest_path), manifest_path.name)
    _check_keys(d, manifest_path.name, ["frame_id", "camera_id", "conf", "offset", "depth"], [], strict)
    base = manifest_path.parent
    conf = load_tensor(base / _as_str(d["conf"], "conf"))
    offset = load_tensor(base / _as_str(d["offset"], "offset"))
    depth = load_tensor(base / _as_str(d["depth"], "depth"))
    if conf.ndim != 2 or offset.shape != conf.shape + (2,) or depth.shape != conf.shape:
        raise ParseError(
            f"{manifest_path.name}: tensor shapes disagree "
            f"(conf {conf.shape}, offset {offset.shape}, depth {depth.shape})"
        )
    return PredictionFrame(
        frame_id=_as_str(d["frame_id"], "frame_id"),
        camera_id=_as_str(d["camera_id"], "camera_id"),
        conf=conf,
        offset=offset,
        depth=depth,
    )


# ---------------------------------------------------------------------------
# Eval reports
# ---------------------------------------------------------------------------

def dumps_report(report) -> str:
    from .metrics import EvalReport  # local import to keep module deps one-way

    assert isinstance(report, EvalReport)
    doc = {
        "windows": [
            {
                "n": w.n,
                "tp": w.tp,
                "fp": w.fp,
                "fn": w.fn,
                "precision": float(w.precision),
                "recall": float(w.recall),
                "f1": float(w.f1),
            }
            for w in report.windows
        ],
        "avg_depth_error": float(report.avg_depth_error),
        "frames": report.frames_evaluated,
        "keypoints": report.keypoints_evaluated,
    }
    return dumps_canonical(doc) + "\n"


def save_report(path: Path | str, report) -> None:
    _write_text(path, dumps_report(report))


def load_report(path: Path | str, strict: bool = True):
    from .metrics import EvalReport, WindowResult

    root = _as_obj(_load_json(path), "report")
    _check_keys(root, "report", ["windows", "avg_depth_error", "frames", "keypoints"], [], strict)
    windows = []
    for k, w in enumerate(root["windows"]):
        pk = f"report.windows[{k}]"
        d = _as_obj(w, pk)
        _check_keys(d, pk, ["n", "tp", "fp", "fn", "precision", "recall", "f1"], [], strict)
        windows.append(
            WindowResult(
                n=_as_int(d["n"], f"{pk}.n"),
                tp=_as_int(d["tp"], f"{pk}.tp"),
                fp=_as_int(d["fp"], f"{pk}.fp"),
                fn=_as_int(d["fn"], f"{pk}.fn"),
                precision=_as_float(d["precision"], f"{pk}.precision"),
                recall=_as_float(d["recall"], f"{pk}.recall"),
                f1=_as_float(d["f1"], f"{pk}.f1"),
            )
        )
    return EvalReport(
        windows=tuple(windows),
        avg_depth_error=_as_float(root["avg_depth_error"], "report.avg_depth_error"),
        frames_evaluated=_as_int(root["frames"], "report.frames"),
        keypoints_evaluated=_as_int(root["keypoints"], "report.keypoints"),
    )
