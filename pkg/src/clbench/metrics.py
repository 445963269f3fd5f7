"""Windowed occupancy-grid matching and normalized depth error.

Matching builds a binary occupancy grid of predicted key-point cells, then
visits ground-truth key-points in row-major cell order.  Each GT key-point
scans the n x n window centered on its cell (clipped at the grid border):
an empty window is a false negative; otherwise it is a true positive, the
GT point pairs with the nearest set cell (ties row-major), and that cell is
zeroed so later GT points cannot reuse the same prediction.  Cells still
set after all GT points are false positives.

Consuming only the matched cell (rather than the whole window) keeps the
rule consistent: a perfect prediction scores tp = N_e at every window size,
and tp never decreases as the window grows.

Depth error is the L1 residual between paired GT and predicted depths,
divided by the GT point's 3D distance from the camera center, so the same
absolute error costs more near the camera.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .autolabel import KeyPoint, LabelGrid
from .errors import GridMismatch, InvariantViolation


@dataclass(frozen=True)
class EvalConfig:
    window_sizes: tuple[int, ...] = (5, 3, 1)
    frame_stride: int = 10
    averaging: str = "micro"  # pooled counts; "macro" averages per-frame ratios

    def __post_init__(self):
        object.__setattr__(self, "window_sizes", tuple(self.window_sizes))
        if not self.window_sizes:
            raise InvariantViolation("at least one window size required")
        for n in self.window_sizes:
            if n < 1 or n % 2 == 0:
                raise InvariantViolation(f"window sizes must be odd and >= 1, got {n}")
        if self.frame_stride < 1:
            raise InvariantViolation(f"frame_stride must be >= 1, got {self.frame_stride}")
        if self.averaging not in ("micro", "macro"):
            raise InvariantViolation(f"averaging must be 'micro' or 'macro', got {self.averaging}")


@dataclass(frozen=True)
class WindowResult:
    n: int
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_counts(n: int, tp: int, fp: int, fn: int) -> "WindowResult":
        p, r, f1 = f1_from_counts(tp, fp, fn)
        return WindowResult(n=n, tp=tp, fp=fp, fn=fn, precision=p, recall=r, f1=f1)


@dataclass(frozen=True)
class EvalReport:
    windows: tuple[WindowResult, ...]
    avg_depth_error: float
    frames_evaluated: int
    keypoints_evaluated: int


@dataclass
class FrameEval:
    """Per-frame raw material for aggregation (counts, pooled depth errors)."""

    frame_id: str = ""
    camera_id: str = ""
    counts: dict[int, tuple[int, int, int]] = field(default_factory=dict)  # n -> (tp, fp, fn)
    depth_err_sum: float = 0.0
    depth_err_count: int = 0
    n_gt: int = 0


def f1_from_counts(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with the zero-denominator-means-zero convention."""
    if tp < 0 or fp < 0 or fn < 0:
        raise InvariantViolation("counts must be >= 0")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _pred_cells(gt: LabelGrid, pred: Sequence[KeyPoint]) -> dict[tuple[int, int], KeyPoint]:
    """Predicted key-points by cell (first one wins); validates grid bounds."""
    h1, w1 = gt.config.h1, gt.config.w1
    cells: dict[tuple[int, int], KeyPoint] = {}
    for kp in pred:
        i, j = kp.cell
        if not (0 <= i < h1 and 0 <= j < w1):
            raise GridMismatch(f"predicted cell {kp.cell} outside {h1}x{w1} grid")
        cells.setdefault((i, j), kp)
    return cells


def _match(
    gt: LabelGrid, pred: Sequence[KeyPoint], window_n: int
) -> tuple[int, int, int, list[tuple[KeyPoint, KeyPoint]]]:
    """Windowed matching; returns (tp, fp, fn, matched GT/pred pairs)."""
    if window_n < 1 or window_n % 2 == 0:
        raise InvariantViolation(f"window size must be odd and >= 1, got {window_n}")
    cells = _pred_cells(gt, pred)
    h1, w1 = gt.config.h1, gt.config.w1
    occ = np.zeros((h1, w1), dtype=bool)
    for (i, j) in cells:
        occ[i, j] = True
    half = window_n // 2
    tp = fn = 0
    pairs: list[tuple[KeyPoint, KeyPoint]] = []
    for kp in gt.keypoints:  # already row-major
        i, j = kp.cell
        lo_i, hi_i = max(0, i - half), min(h1, i + half + 1)
        lo_j, hi_j = max(0, j - half), min(w1, j + half + 1)
        window = occ[lo_i:hi_i, lo_j:hi_j]
        if not window.any():
            fn += 1
            continue
        tp += 1
        rows, cols = np.nonzero(window)
        rows = rows + lo_i
        cols = cols + lo_j
        d2 = (rows - i) ** 2 + (cols - j) ** 2
        order = np.lexsort((cols, rows, d2))  # nearest first, ties row-major
        ci, cj = int(rows[order[0]]), int(cols[order[0]])
        pairs.append((kp, cells[(ci, cj)]))
        occ[ci, cj] = False
    fp = int(np.count_nonzero(occ))
    return tp, fp, fn, pairs


def match_frame(gt: LabelGrid, pred: Sequence[KeyPoint], window_n: int) -> tuple[int, int, int]:
    """(tp, fp, fn) of one frame under the n x n window rule."""
    tp, fp, fn, _ = _match(gt, pred, window_n)
    return tp, fp, fn


def depth_error_frame(gt: LabelGrid, pred: Sequence[KeyPoint], window_n: int) -> list[float]:
    """Normalized depth errors of matched pairs; pairs without a valid depth
    on either side contribute nothing."""
    _, _, _, pairs = _match(gt, pred, window_n)
    errors = []
    for gt_kp, pred_kp in pairs:
        if gt_kp.depth_m is None or pred_kp.depth_m is None or gt_kp.xyz_cam is None:
            continue
        dist = float(np.linalg.norm(gt_kp.xyz_cam))
        errors.append(abs(gt_kp.depth_m - pred_kp.depth_m) / dist)
    return errors


def evaluate_frame(gt: LabelGrid, pred: Sequence[KeyPoint], cfg: EvalConfig) -> FrameEval:
    """All configured window sizes plus depth errors (paired at the largest
    window) for one frame."""
    fe = FrameEval(frame_id=gt.frame_id, camera_id=gt.camera_id, n_gt=gt.n_keypoints)
    for n in cfg.window_sizes:
        tp, fp, fn, _ = _match(gt, pred, n)
        fe.counts[n] = (tp, fp, fn)
    errors = depth_error_frame(gt, pred, max(cfg.window_sizes))
    fe.depth_err_sum = float(sum(errors))
    fe.depth_err_count = len(errors)
    return fe


def aggregate(frames: Iterable[FrameEval], cfg: EvalConfig) -> EvalReport:
    """Corpus report from per-frame results; order-independent.

    Micro averaging pools tp/fp/fn across frames before computing ratios;
    macro averages the per-frame ratios.  Depth error is always the mean
    over all matched key-points.
    """
    frames = list(frames)
    windows = []
    for n in cfg.window_sizes:
        if cfg.averaging == "micro":
            tp = sum(fe.counts.get(n, (0, 0, 0))[0] for fe in frames)
            fp = sum(fe.counts.get(n, (0, 0, 0))[1] for fe in frames)
            fn = sum(fe.counts.get(n, (0, 0, 0))[2] for fe in frames)
            windows.append(WindowResult.from_counts(n, tp, fp, fn))
        else:
            tp = fp = fn = 0
            ps, rs, f1s = [], [], []
            for fe in frames:
                c = fe.counts.get(n, (0, 0, 0))
                tp, fp, fn = tp + c[0], fp + c[1], fn + c[2]
                p, r, f1 = f1_from_counts(*c)
                ps.append(p)
                rs.append(r)
                f1s.append(f1)
            m = len(frames) or 1
            windows.append(
                WindowResult(
                    n=n,
                    tp=tp,
                    fp=fp,
                    fn=fn,
                    precision=math.fsum(ps) / m,
                    recall=math.fsum(rs) / m,
                    f1=math.fsum(f1s) / m,
                )
            )
    # fsum is exactly rounded, so totals do not depend on frame order
    err_sum = math.fsum(fe.depth_err_sum for fe in frames)
    err_count = sum(fe.depth_err_count for fe in frames)
    return EvalReport(
        windows=tuple(windows),
        avg_depth_error=err_sum / err_count if err_count else 0.0,
        frames_evaluated=len(frames),
        keypoints_evaluated=sum(fe.n_gt for fe in frames),
    )
