"""Command-line entry point.

Subcommands: ``synth`` (generate a corpus), ``label`` (auto-label frames),
``decode`` (prediction tensors to key-points), ``eval`` (benchmark),
``losses-check`` (oracle loss values for one frame), ``inspect``
(pretty-print any artifact).

Exit codes: 0 success, 1 data error (with a diagnostic on stderr),
2 usage error.  Outputs are deterministic for fixed inputs and config;
the worker count only affects wall time.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import codec, geometry, losses, metrics, synth
from .autolabel import LabelConfig, label_frame
from .decoder import DecodeConfig, PredictionGrid, decode
from .errors import ConfigMismatch, GridMismatch, ParseError, ToolkitError
from .metrics import EvalConfig
from .vectormap import resample_polyline

WORKERS_ENV = "CLINET_BENCH_WORKERS"


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _pool_map(fn, jobs, workers: int) -> list:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _load_config_file(path: str | None, section: str) -> dict:
    if not path:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON: {e}") from e
    part = doc.get(section, {})
    if not isinstance(part, dict):
        raise ParseError(f"{path}: section {section!r} must be an object")
    return part


_LABEL_FLAG_FIELDS = {
    "h1": "h1",
    "w1": "w1",
    "s": "s",
    "max_depth": "max_depth_m",
    "min_points": "min_points_per_segment",
    "min_pixel_spacing": "min_pixel_spacing",
    "resample_spacing": "resample_spacing_m",
    "min_segment_length": "min_segment_length_m",
}


def _label_config(args) -> LabelConfig:
    fields = dict(_load_config_file(args.config, "label"))
    for flag, field_name in _LABEL_FLAG_FIELDS.items():
        v = getattr(args, flag, None)
        if v is not None:
            fields[field_name] = v
    return LabelConfig(**fields)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rig = synth.default_camera_rig(args.image_width, args.image_height)
    length = args.trajectory_length
    if args.frames is not None:
        if args.frames < 1:
            raise ToolkitError("--frames must be >= 1")
        # length/speed*rate floors to frames-1 (plus the t=0 frame)
        length = args.speed * (args.frames - 0.6) / args.frame_rate
    spec = synth.SceneSpec(
        seed=args.seed,
        layout=args.layout,
        lane_width_m=args.lane_width,
        num_lanes=args.num_lanes,
        trajectory_length_m=length,
        speed_mps=args.speed,
        frame_rate_hz=args.frame_rate,
        camera_rig=rig,
    )
    scene = synth.generate_scene(spec)
    codec.save_map(out / "map.json", scene.vmap)
    codec.save_pose_track(out / "poses.ndjson", scene.track)
    codec.save_calibration(out / "calibration.json", scene.cameras)
    codec.save_frames(out / "frames.ndjson", scene.frames)
    if not args.no_images:
        img_dir = out / "images"
        img_dir.mkdir(exist_ok=True)
        size = (args.image_width, args.image_height)

        def render(job):
            frame, cam_id, cam = job
            pose = geometry.interpolate_pose(scene.track, frame.timestamp_ns)
            img = synth.rasterize_frame(scene.vmap, cam, pose, size, road_width_m=spec.lane_width_m)
            img.save(img_dir / f"{frame.frame_id}_{cam_id}.png")

        jobs = [(f, cid, cam) for f in scene.frames for cid, cam in scene.cameras.items()]
        _pool_map(render, jobs, args.workers)
    print(f"synth: {len(scene.frames)} frames, {len(scene.vmap.lanes)} lanes -> {out}")
    return 0


# ---------------------------------------------------------------------------
# label
# ---------------------------------------------------------------------------

def _select_frames(frames: list[codec.FrameRef], stride: int) -> list[codec.FrameRef]:
    ordered = sorted(frames, key=lambda f: f.frame_id)
    return ordered[::stride]


def cmd_label(args) -> int:
    cfg = _label_config(args)
    vmap = codec.load_map(args.map, strict=False)
    track = codec.load_pose_track(args.poses, strict=False)
    cameras = codec.load_calibration(args.calib, strict=False)
    if args.frames:
        frames = codec.load_frames(args.frames, strict=False)
    else:
        frames = [codec.FrameRef(f"{k:06d}", p.timestamp_ns) for k, p in enumerate(track)]
    frames = _select_frames(frames, args.frame_stride)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    # resample once per lane; the cache is read-only inside the pool
    cache = {
        lane.lane_id: resample_polyline(lane, cfg.resample_spacing_m)
        for lane in vmap.centerlines()
        if not lane.is_intersection
    }

    def run(job):
        frame, cam_id, cam = job
        grid = label_frame(
            vmap,
            cam,
            track,
            frame.timestamp_ns,
            cfg,
            frame_id=frame.frame_id,
            camera_id=cam_id,
            resampled_cache=cache,
        )
        codec.save_label(out / f"{frame.frame_id}_{cam_id}.json", grid)
        return grid.n_keypoints

    jobs = [(f, cid, cam) for f in frames for cid, cam in cameras.items()]
    counts = _pool_map(run, jobs, args.workers)
    print(f"label: {len(jobs)} frames, {sum(counts)} keypoints -> {out}")
    return 0


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------

def _derived_scale(camera_adj, h1: int, w1: int) -> int:
    sx, rx = divmod(camera_adj.width, w1)
    sy, ry = divmod(camera_adj.height, h1)
    if rx or ry or sx != sy or sx < 1:
        raise ConfigMismatch(
            f"image {camera_adj.width}x{camera_adj.height} is not an integer multiple "
            f"of grid {w1}x{h1}"
        )
    return sx


def _pred_manifests(pred_dir: Path) -> list[Path]:
    return sorted(pred_dir.glob("*.pred.json"))


def cmd_decode(args) -> int:
    cameras = codec.load_calibration(args.calib, strict=False)
    pred_dir = Path(args.pred)
    manifests = _pred_manifests(pred_dir)
    if not manifests:
        raise ToolkitError(f"no *.pred.json manifests under {pred_dir}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dcfg = DecodeConfig(
        conf_threshold=args.conf_threshold, legacy_offset_formula=args.legacy_offset_formula
    )

    def run(path):
        pf = codec.load_prediction_frame(path, strict=False)
        if pf.camera_id not in cameras:
            raise ToolkitError(f"{path.name}: unknown camera {pf.camera_id!r}")
        cam = geometry.adjust_intrinsics(cameras[pf.camera_id])
        h1, w1 = pf.conf.shape
        s = _derived_scale(cam, h1, w1)
        cfg = LabelConfig(h1=h1, w1=w1, s=s, max_depth_m=np.inf)
        grid = PredictionGrid.from_tensors(
            pf.conf, pf.offset, pf.depth, cfg, frame_id=pf.frame_id, camera_id=pf.camera_id
        )
        kps = decode(grid, cam, dcfg)
        from .autolabel import LabelGrid

        out_grid = LabelGrid(
            config=cfg, frame_id=pf.frame_id, camera_id=pf.camera_id, keypoints=tuple(kps)
        )
        codec.save_label(out / f"{pf.frame_id}_{pf.camera_id}.json", out_grid)
        return len(kps)

    counts = _pool_map(run, manifests, args.workers)
    print(f"decode: {len(manifests)} frames, {sum(counts)} keypoints -> {out}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _gt_label_paths(gt_dir: Path) -> list[Path]:
    return sorted(p for p in gt_dir.glob("*.json") if not p.name.endswith(".pred.json"))


def cmd_eval(args) -> int:
    windows = tuple(int(w) for w in args.windows.split(","))
    ecfg = EvalConfig(window_sizes=windows, frame_stride=args.frame_stride, averaging=args.averaging)
    gt_dir = Path(args.gt)
    gt_paths = _gt_label_paths(gt_dir)
    if not gt_paths:
        raise ToolkitError(f"no label files under {gt_dir}")
    grids = [codec.load_label(p, strict=False) for p in gt_paths]
    frame_ids = sorted({g.frame_id for g in grids})
    selected = set(frame_ids[:: ecfg.frame_stride])
    grids = [g for g in grids if g.frame_id in selected]

    pred_dir = Path(args.pred)
    manifests = _pred_manifests(pred_dir)
    dcfg = DecodeConfig(args.conf_threshold)
    pred_kps: dict[tuple[str, str], list] = {}
    if manifests:
        cameras = None
        if args.calib:
            cameras = {
                cid: geometry.adjust_intrinsics(c)
                for cid, c in codec.load_calibration(args.calib, strict=False).items()
            }
        by_key = {}
        for path in manifests:
            pf = codec.load_prediction_frame(path, strict=False)
            by_key[(pf.frame_id, pf.camera_id)] = pf
        for g in grids:
            key = (g.frame_id, g.camera_id)
            pf = by_key.get(key)
            if pf is None:
                raise ToolkitError(f"missing prediction for frame {key[0]} camera {key[1]}")
            if pf.conf.shape != (g.config.h1, g.config.w1):
                raise GridMismatch(
                    f"frame {g.frame_id}: prediction grid {pf.conf.shape} != "
                    f"label grid ({g.config.h1}, {g.config.w1})"
                )
            if cameras is None or g.camera_id not in cameras:
                raise ToolkitError(
                    f"--calib covering camera {g.camera_id!r} is required to decode tensors"
                )
            grid = PredictionGrid.from_tensors(pf.conf, pf.offset, pf.depth, g.config)
            pred_kps[key] = decode(grid, cameras[g.camera_id], dcfg)
    else:
        pred_paths = _gt_label_paths(pred_dir)
        by_key = {}
        for p in pred_paths:
            pg = codec.load_label(p, strict=False)
            by_key[(pg.frame_id, pg.camera_id)] = pg
        for g in grids:
            key = (g.frame_id, g.camera_id)
            pg = by_key.get(key)
            if pg is None:
                raise ToolkitError(f"missing prediction for frame {key[0]} camera {key[1]}")
            if (pg.config.h1, pg.config.w1) != (g.config.h1, g.config.w1):
                raise GridMismatch(
                    f"frame {g.frame_id}: prediction grid ({pg.config.h1}, {pg.config.w1}) "
                    f"!= label grid ({g.config.h1}, {g.config.w1})"
                )
            pred_kps[key] = list(pg.keypoints)

    frame_evals = [
        metrics.evaluate_frame(g, pred_kps[(g.frame_id, g.camera_id)], ecfg) for g in grids
    ]
    report = metrics.aggregate(frame_evals, ecfg)
    text = codec.dumps_report(report)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_bytes(text.encode("utf-8"))
    sys.stdout.write(text)
    if args.per_frame:
        lines = []
        for fe in sorted(frame_evals, key=lambda f: (f.frame_id, f.camera_id)):
            doc = {
                "frame_id": fe.frame_id,
                "camera_id": fe.camera_id,
                "windows": [
                    {"n": n, "tp": c[0], "fp": c[1], "fn": c[2]}
                    for n, c in sorted(fe.counts.items(), reverse=True)
                ],
                "depth_err_sum": fe.depth_err_sum,
                "depth_err_count": fe.depth_err_count,
                "n_gt": fe.n_gt,
            }
            lines.append(codec.dumps_canonical(doc, pretty=False) + "\n")
        Path(args.per_frame).write_bytes("".join(lines).encode("utf-8"))
    return 0


# ---------------------------------------------------------------------------
# losses-check
# ---------------------------------------------------------------------------

def cmd_losses_check(args) -> int:
    grid = codec.load_label(args.label, strict=False)
    pf = codec.load_prediction_frame(args.pred, strict=False)
    if pf.conf.shape != (grid.config.h1, grid.config.w1):
        raise GridMismatch(
            f"prediction grid {pf.conf.shape} != label grid "
            f"({grid.config.h1}, {grid.config.w1})"
        )
    f, o, z = grid.target_grids()
    f_hat = np.clip(pf.conf.astype(np.float64), 0.0, 1.0)
    o_hat = np.clip(pf.offset.astype(np.float64), 0.0, 1.0)
    z_hat = pf.depth.astype(np.float64)
    l_conf = losses.conf_loss(f, f_hat)
    l_offset = losses.offset_loss(f, o, o_hat)
    l_depth = losses.depth_loss(f, z, z_hat)
    l_total = losses.total_loss(l_conf, l_offset, l_depth, losses.LossConfig(args.gamma))
    doc = {"l_conf": l_conf, "l_offset": l_offset, "l_depth": l_depth, "l_total": l_total}
    sys.stdout.write(codec.dumps_canonical(doc) + "\n")
    return 0


# ---------------------------------------------------------------------------
# inspect
# ---------------------------------------------------------------------------

def cmd_inspect(args) -> int:
    path = Path(args.path)
    raw = path.read_bytes()
    if raw[:4] == codec.MAGIC:
        blob = codec.read_tensor(raw)
        a = blob.data
        print(f"{path.name}: CLTN tensor f32 dims={list(blob.dims)}")
        print(f"  min={a.min():.6g} max={a.max():.6g} mean={a.mean():.6g}")
        return 0
    if raw[:8] == b"\x89PNG\r\n\x1a\n":
        from PIL import Image

        with Image.open(path) as img:
            print(f"{path.name}: PNG image {img.size[0]}x{img.size[1]} {img.mode}")
        return 0
    text = raw.decode("utf-8")
    first = text.lstrip()[:1]
    if first != "{":
        raise ToolkitError(f"{path.name}: unrecognized artifact")
    # NDJSON? every non-empty line parses as its own object
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and all(ln.lstrip().startswith("{") and ln.rstrip().endswith("}") for ln in lines):
        head = json.loads(lines[0])
        if "q" in head and "timestamp_ns" in head:
            track = codec.load_pose_track(path, strict=False)
            span = track[-1].timestamp_ns - track[0].timestamp_ns
            print(f"{path.name}: pose track, {len(track)} poses over {span/1e9:.3f}s")
            return 0
        if set(head) == {"frame_id", "timestamp_ns"}:
            frames = codec.load_frames(path, strict=False)
            print(f"{path.name}: frames manifest, {len(frames)} frames")
            return 0
    doc = json.loads(text)
    if "lanes" in doc:
        vmap = codec.load_map(path, strict=False)
        ncl = len(vmap.centerlines())
        nbd = len(vmap.boundaries())
        nint = sum(1 for l in vmap.lanes.values() if l.is_intersection)
        print(f"{path.name}: vector map, {ncl} centerlines, {nbd} boundaries, {nint} intersection lanes")
    elif "cameras" in doc:
        cams = codec.load_calibration(path, strict=False)
        print(f"{path.name}: calibration, {len(cams)} cameras")
        for cid, cam in cams.items():
            adj = geometry.adjust_intrinsics(cam)
            print(f"  {cid}: {cam.width}x{cam.height} -> {adj.width}x{adj.height}, fx={adj.fx:g}")
    elif "keypoints" in doc and "config" in doc:
        grid = codec.load_label(path, strict=False)
        cfg = grid.config
        print(
            f"{path.name}: label frame={grid.frame_id} camera={grid.camera_id} "
            f"grid={cfg.h1}x{cfg.w1} s={cfg.s} keypoints={grid.n_keypoints}"
        )
    elif "windows" in doc:
        report = codec.load_report(path, strict=False)
        print(f"{path.name}: eval report over {report.frames_evaluated} frames")
        for w in report.windows:
            print(
                f"  window {w.n}: P={w.precision:.3f} R={w.recall:.3f} F1={w.f1:.3f} "
                f"(tp={w.tp} fp={w.fp} fn={w.fn})"
            )
        print(f"  avg depth error: {report.avg_depth_error:.4f}")
    elif "conf" in doc and "frame_id" in doc:
        pf = codec.load_prediction_frame(path, strict=False)
        print(
            f"{path.name}: prediction frame={pf.frame_id} camera={pf.camera_id} "
            f"grid={pf.conf.shape[0]}x{pf.conf.shape[1]}"
        )
    else:
        raise ToolkitError(f"{path.name}: unrecognized artifact")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clbench",
        description="Centerline key-point auto-labeling and benchmarking toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--layout", default="straight",
                   choices=[l.value for l in synth.Layout])
    p.add_argument("--lane-width", type=float, default=3.5)
    p.add_argument("--num-lanes", type=int, default=2)
    p.add_argument("--trajectory-length", type=float, default=100.0)
    p.add_argument("--speed", type=float, default=10.0)
    p.add_argument("--frame-rate", type=float, default=10.0)
    p.add_argument("--frames", type=int, default=None,
                   help="override trajectory length to produce exactly this many frames")
    p.add_argument("--image-width", type=int, default=512)
    p.add_argument("--image-height", type=int, default=256)
    p.add_argument("--no-images", action="store_true")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("label", help="auto-label frames from a map and pose track")
    p.add_argument("--map", required=True)
    p.add_argument("--poses", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--frames", default=None, help="frames manifest (default: one frame per pose)")
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="JSON config file; flags win")
    p.add_argument("--frame-stride", type=int, default=1)
    p.add_argument("--workers", type=int, default=_default_workers())
    p.add_argument("--h1", type=int, default=None)
    p.add_argument("--w1", type=int, default=None)
    p.add_argument("--s", type=int, default=None)
    p.add_argument("--max-depth", type=float, default=None)
    p.add_argument("--min-points", type=int, default=None)
    p.add_argument("--min-pixel-spacing", type=float, default=None)
    p.add_argument("--resample-spacing", type=float, default=None)
    p.add_argument("--min-segment-length", type=float, default=None)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("decode", help="decode prediction tensors into key-point files")
    p.add_argument("--pred", required=True, help="directory of *.pred.json manifests")
    p.add_argument("--calib", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("--legacy-offset-formula", action="store_true")
    p.add_argument("--workers", type=int, default=_default_workers())
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="benchmark predictions against labels")
    p.add_argument("--gt", required=True, help="directory of label files")
    p.add_argument("--pred", required=True,
                   help="directory of *.pred.json manifests or decoded key-point files")
    p.add_argument("--calib", default=None)
    p.add_argument("--out", default=None, help="report JSON path (always printed to stdout)")
    p.add_argument("--per-frame", default=None, help="optional per-frame NDJSON breakdown")
    p.add_argument("--windows", default="5,3,1")
    p.add_argument("--frame-stride", type=int, default=10)
    p.add_argument("--conf-threshold", type=float, default=0.5)
    p.add_argument("--averaging", choices=["micro", "macro"], default="micro")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("losses-check", help="oracle loss values for one frame")
    p.add_argument("--label", required=True)
    p.add_argument("--pred", required=True, help="prediction manifest (*.pred.json)")
    p.add_argument("--gamma", type=float, default=1.0)
    p.set_defaults(func=cmd_losses_check)

    p = sub.add_parser("inspect", help="pretty-print any artifact")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
