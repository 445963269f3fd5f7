import numpy as np
import numpy.testing as npt
import pytest

from clbench.errors import InvariantViolation
from clbench.vectormap import (
    LaneKind,
    Polyline3,
    VectorMap,
    clip_to_horizon,
    cumulative_lengths,
    resample_polyline,
)


def line(pts, lane_id="a", kind=LaneKind.CENTERLINE, inter=False):
    return Polyline3(np.asarray(pts, dtype=float), lane_id, kind, inter)


# --- independent oracle -----------------------------------------------------

def arc_walk(points: np.ndarray, position: float) -> np.ndarray:
    """Brute-force point at a given arc length (plain loop, no vector tricks)."""
    acc = 0.0
    for k in range(len(points) - 1):
        seg = float(np.linalg.norm(points[k + 1] - points[k]))
        if acc + seg >= position - 1e-12:
            u = (position - acc) / seg
            return points[k] + u * (points[k + 1] - points[k])
        acc += seg
    return points[-1]


def point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + t * ab))


class TestPolylineInvariants:
    def test_needs_two_points(self):
        with pytest.raises(InvariantViolation):
            line([[0, 0, 0]])

    def test_rejects_duplicate_consecutive(self):
        with pytest.raises(InvariantViolation):
            line([[0, 0, 0], [0, 0, 0], [1, 0, 0]])

    def test_rejects_non_finite(self):
        with pytest.raises(InvariantViolation):
            line([[0, 0, 0], [np.inf, 0, 0]])

    def test_map_rejects_dangling_successor(self):
        lanes = {"a": line([[0, 0, 0], [1, 0, 0]], "a")}
        with pytest.raises(InvariantViolation):
            VectorMap(lanes=lanes, successors={"a": ["missing"]})

    def test_map_rejects_mismatched_key(self):
        with pytest.raises(InvariantViolation):
            VectorMap(lanes={"b": line([[0, 0, 0], [1, 0, 0]], "a")})


class TestResample:
    def test_straight_segment_spacing_2(self):
        p = line([[0, 0, 0], [10, 0, 0]])
        out = resample_polyline(p, 2.0)
        npt.assert_allclose(out.points[:, 0], [0, 2, 4, 6, 8, 10])
        npt.assert_allclose(out.points[:, 1:], 0)

    def test_spacing_beyond_length_keeps_endpoints(self):
        p = line([[0, 0, 0], [10, 0, 0]])
        out = resample_polyline(p, 25.0)
        assert out.points.shape == (2, 3)
        npt.assert_allclose(out.points, [[0, 0, 0], [10, 0, 0]])

    def test_l_shape_spacing_1(self):
        p = line([[0, 0, 0], [4, 0, 0], [4, 3, 0]])
        out = resample_polyline(p, 1.0)
        assert out.points.shape[0] == 8
        # cumulative arc lengths 0..7, positions verified against the walk oracle
        cum = cumulative_lengths(out.points)
        npt.assert_allclose(cum, np.arange(8), atol=1e-12)
        for k, pos in enumerate(np.arange(8.0)):
            npt.assert_allclose(out.points[k], arc_walk(p.points, pos), atol=1e-12)

    def test_preserves_metadata(self):
        p = line([[0, 0, 0], [4, 0, 0]], "lane9", LaneKind.BOUNDARY, True)
        out = resample_polyline(p, 1.0)
        assert out.lane_id == "lane9"
        assert out.kind is LaneKind.BOUNDARY
        assert out.is_intersection

    def test_rejects_nonpositive_spacing(self):
        with pytest.raises(InvariantViolation):
            resample_polyline(line([[0, 0, 0], [1, 0, 0]]), 0.0)

    @pytest.mark.parametrize("seed", range(8))
    def test_random_polyline_properties(self, seed):
        rng = np.random.default_rng(seed)
        n = rng.integers(2, 12)
        steps = rng.uniform(0.3, 4.0, size=(n, 3)) * rng.choice([-1, 1], size=(n, 3))
        pts = np.cumsum(np.vstack([[0, 0, 0], steps]), axis=0)
        p = line(pts)
        spacing = float(rng.uniform(0.2, 5.0))
        out = resample_polyline(p, spacing)

        # endpoints exact
        npt.assert_allclose(out.points[0], pts[0])
        npt.assert_allclose(out.points[-1], pts[-1])
        # arc length preserved
        assert abs(out.arc_length() - p.arc_length()) <= 1e-9
        # gaps bounded by spacing (dedupe slack included)
        gaps = np.linalg.norm(np.diff(out.points, axis=0), axis=1)
        assert np.all(gaps <= spacing + 1e-6)
        # every output point lies on some original segment
        for q in out.points:
            d = min(
                point_segment_distance(q, pts[k], pts[k + 1]) for k in range(len(pts) - 1)
            )
            assert d <= 1e-9
        # idempotent on its own output
        again = resample_polyline(out, spacing)
        npt.assert_allclose(again.points, out.points, atol=0)


class TestClipToHorizon:
    def test_all_inside_single_run(self):
        p = line([[0, 0, 0], [1, 0, 0], [2, 0, 0]])
        runs = clip_to_horizon(p, (0.0, 0.0), 10.0)
        assert len(runs) == 1
        npt.assert_allclose(runs[0].points, p.points)

    def test_all_outside_empty(self):
        p = line([[100, 0, 0], [101, 0, 0]])
        assert clip_to_horizon(p, (0.0, 0.0), 10.0) == []

    def test_crossing_truncated_against_brute_force(self):
        pts = np.array([[0, 0, 0], [2, 0, 0], [4, 0, 0], [6, 0, 0], [8, 0, 0]], dtype=float)
        p = line(pts)
        radius = 5.0
        runs = clip_to_horizon(p, (0.0, 0.0), radius)
        inside = [bool(np.hypot(q[0], q[1]) <= radius) for q in pts]  # brute force
        assert inside == [True, True, True, False, False]
        assert len(runs) == 1
        npt.assert_allclose(runs[0].points, pts[:3])

    def test_short_runs_dropped(self):
        pts = np.array([[0, 0, 0], [50, 0, 0], [51, 0, 0], [50, 1, 0], [0, 1, 0]], dtype=float)
        p = line(pts)
        runs = clip_to_horizon(p, (0.0, 0.0), 5.0)
        assert runs == []  # the two inside points are separate length-1 runs

    def test_z_ignored(self):
        p = line([[0, 0, 100], [1, 0, 100]])
        runs = clip_to_horizon(p, (0.0, 0.0), 2.0)
        assert len(runs) == 1

    def test_run_order_preserved(self):
        rng = np.random.default_rng(5)
        pts = np.cumsum(rng.uniform(0.5, 2.0, size=(30, 3)), axis=0)
        p = line(pts)
        runs = clip_to_horizon(p, (20.0, 20.0), 12.0)
        flat = np.vstack([r.points for r in runs]) if runs else np.empty((0, 3))
        # brute-force membership: kept points appear in original order
        d = np.hypot(pts[:, 0] - 20.0, pts[:, 1] - 20.0)
        mask = d <= 12.0
        kept = pts[mask]
        if flat.size and kept.size:
            # every run point is one of the inside points
            for q in flat:
                assert np.any(np.all(np.isclose(kept, q), axis=1))
