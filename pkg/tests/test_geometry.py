import math

import numpy as np
import numpy.testing as npt
import pytest

from clbench.errors import (
    BehindCamera,
    EmptyTrack,
    InvariantViolation,
    NonPositiveDepth,
    OutOfRange,
)
from clbench.geometry import (
    CameraModel,
    ResizeCrop,
    SE3Pose,
    adjust_intrinsics,
    apply_resize_crop,
    compose,
    interpolate_pose,
    invert,
    project,
    project_points,
    quat_about_axis,
    quat_from_matrix,
    rotation_matrix,
    slerp,
    transform_point,
    transform_points,
    unproject,
)


def pose(t, q, ts=0):
    return SE3Pose(ts, np.asarray(t, dtype=float), np.asarray(q, dtype=float))


IDENTITY_Q = (1.0, 0.0, 0.0, 0.0)


class TestProject:
    def test_optical_axis_hits_principal_point(self, camera):
        assert project(camera, (0.0, 0.0, 10.0)) == (320.0, 240.0)

    def test_hand_pinhole_arithmetic(self, camera):
        # x = 500 * 1/10 + 320, y = 500 * 2/10 + 240
        assert project(camera, (1.0, 2.0, 10.0)) == (370.0, 340.0)

    def test_negative_depth_raises(self, camera):
        with pytest.raises(BehindCamera):
            project(camera, (0.0, 0.0, -1.0))
        with pytest.raises(BehindCamera):
            project(camera, (1.0, 1.0, 0.0))

    def test_vectorized_matches_scalar(self, camera):
        rng = np.random.default_rng(7)
        pts = np.column_stack(
            [rng.uniform(-5, 5, 100), rng.uniform(-5, 5, 100), rng.uniform(0.1, 50, 100)]
        )
        batch = project_points(camera, pts)
        for k in range(pts.shape[0]):
            x, y = project(camera, pts[k])
            assert batch[k, 0] == x and batch[k, 1] == y


class TestUnproject:
    def test_principal_point_on_axis(self, camera):
        npt.assert_allclose(unproject(camera, (320.0, 240.0), 10.0), [0.0, 0.0, 10.0])

    def test_inverse_of_project_example(self, camera):
        npt.assert_allclose(unproject(camera, (370.0, 340.0), 10.0), [1.0, 2.0, 10.0])

    def test_round_trip(self, camera):
        px = project(camera, unproject(camera, (100.0, 50.0), 4.0))
        npt.assert_allclose(px, (100.0, 50.0), atol=1e-9)

    def test_nonpositive_depth_raises(self, camera):
        with pytest.raises(NonPositiveDepth):
            unproject(camera, (10.0, 10.0), 0.0)
        with pytest.raises(NonPositiveDepth):
            unproject(camera, (10.0, 10.0), -3.0)

    def test_mutual_inverse_property(self, camera):
        rng = np.random.default_rng(42)
        for _ in range(2000):
            px = (rng.uniform(0, 640), rng.uniform(0, 480))
            z = rng.uniform(1e-3, 100.0)
            p = unproject(camera, px, z)
            back = project(camera, p)
            npt.assert_allclose(back, px, atol=1e-9)
            p2 = unproject(camera, back, p[2])
            npt.assert_allclose(p2, p, atol=1e-9)


class TestAdjustIntrinsics:
    def test_identity_transform_is_noop(self, camera):
        adj = adjust_intrinsics(camera)
        assert (adj.fx, adj.fy, adj.cx, adj.cy) == (500.0, 500.0, 320.0, 240.0)
        assert (adj.width, adj.height) == (640, 480)

    def test_pure_scale(self):
        cam = CameraModel(
            fx=500.0, fy=400.0, cx=320.0, cy=240.0, width=640, height=480,
            transform=ResizeCrop(0, 0, 640, 480, 0.5, 0.5),
        )
        adj = adjust_intrinsics(cam)
        assert adj.fx == 250.0 and adj.cx == 160.0
        assert adj.fy == 200.0 and adj.cy == 120.0
        assert (adj.width, adj.height) == (320, 240)

    def test_pure_crop_shift(self):
        cam = CameraModel(
            fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480,
            transform=ResizeCrop(100, 0, 540, 480, 1.0, 1.0),
        )
        adj = adjust_intrinsics(cam)
        assert adj.cx == 220.0
        assert adj.width == 540

    def test_commutes_with_projection(self):
        cam = CameraModel(
            fx=480.0, fy=470.0, cx=310.0, cy=250.0, width=640, height=480,
            transform=ResizeCrop(40, 20, 560, 440, 0.75, 0.5),
        )
        adj = adjust_intrinsics(cam)
        rng = np.random.default_rng(3)
        for _ in range(500):
            p = np.array([rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0.5, 80)])
            direct = project(adj, p)
            via_original = apply_resize_crop(cam.transform, project(cam, p))
            npt.assert_allclose(direct, via_original, atol=1e-9)

    def test_crop_outside_source_rejected(self):
        with pytest.raises(InvariantViolation):
            CameraModel(
                fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480,
                transform=ResizeCrop(600, 0, 100, 480, 1.0, 1.0),
            )


class TestSE3:
    def test_invert_identity(self):
        inv = invert(SE3Pose.identity())
        npt.assert_allclose(inv.t, [0, 0, 0])
        npt.assert_allclose(inv.q, [1, 0, 0, 0])

    def test_pure_translation(self):
        a = pose([1, 0, 0], IDENTITY_Q)
        npt.assert_allclose(transform_point(a, [0, 0, 0]), [1, 0, 0])

    def test_rotate_then_translate(self):
        # 90 degrees about z then translate (1,0,0): (1,0,0) -> (0,1,0) -> (1,1,0)
        a = pose([1, 0, 0], quat_about_axis(np.array([0, 0, 1.0]), math.pi / 2))
        npt.assert_allclose(transform_point(a, [1, 0, 0]), [1, 1, 0], atol=1e-12)

    def test_compose_then_invert_is_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            a = pose(rng.normal(size=3), q)
            ident = compose(a, invert(a))
            npt.assert_allclose(ident.t, [0, 0, 0], atol=1e-9)
            npt.assert_allclose(rotation_matrix(ident.q), np.eye(3), atol=1e-9)

    def test_compose_matches_sequential_transform(self):
        rng = np.random.default_rng(12)
        for _ in range(200):
            qa, qb = rng.normal(size=4), rng.normal(size=4)
            a = pose(rng.normal(size=3), qa / np.linalg.norm(qa))
            b = pose(rng.normal(size=3), qb / np.linalg.norm(qb))
            p = rng.normal(size=3)
            npt.assert_allclose(
                transform_point(compose(a, b), p),
                transform_point(a, transform_point(b, p)),
                atol=1e-9,
            )

    def test_compose_associative(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            ps = []
            for _ in range(3):
                q = rng.normal(size=4)
                ps.append(pose(rng.normal(size=3), q / np.linalg.norm(q)))
            a, b, c = ps
            left = compose(compose(a, b), c)
            right = compose(a, compose(b, c))
            npt.assert_allclose(left.t, right.t, atol=1e-9)
            npt.assert_allclose(rotation_matrix(left.q), rotation_matrix(right.q), atol=1e-9)

    def test_norms_preserved(self):
        rng = np.random.default_rng(14)
        p = SE3Pose.identity()
        for _ in range(400):
            q = rng.normal(size=4)
            p = compose(p, pose(rng.normal(size=3), q / np.linalg.norm(q)))
        assert abs(np.linalg.norm(p.q) - 1.0) <= 1e-9
        assert abs(np.linalg.norm(invert(p).q) - 1.0) <= 1e-9

    def test_transform_points_matches_scalar(self):
        rng = np.random.default_rng(15)
        q = rng.normal(size=4)
        a = pose(rng.normal(size=3), q / np.linalg.norm(q))
        pts = rng.normal(size=(50, 3))
        batch = transform_points(a, pts)
        for k in range(50):
            npt.assert_allclose(batch[k], transform_point(a, pts[k]), atol=1e-12)

    def test_unit_norm_enforced(self):
        with pytest.raises(InvariantViolation):
            pose([0, 0, 0], [1.0, 0.0, 0.0, 1e-4])
        with pytest.raises(InvariantViolation):
            SE3Pose(-1, np.zeros(3), np.array([1.0, 0, 0, 0]))

    def test_quat_from_matrix_round_trip(self):
        rng = np.random.default_rng(16)
        for _ in range(300):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            r = rotation_matrix(q)
            q2 = quat_from_matrix(r)
            npt.assert_allclose(rotation_matrix(q2), r, atol=1e-9)


class TestInterpolatePose:
    def track(self):
        return [
            pose([0, 0, 0], IDENTITY_Q, ts=0),
            pose([2, 0, 0], IDENTITY_Q, ts=100),
            pose([2, 2, 0], quat_about_axis(np.array([0, 0, 1.0]), math.pi / 2), ts=200),
        ]

    def test_sample_timestamp_returns_sample(self):
        track = self.track()
        for sample in track:
            p = interpolate_pose(track, sample.timestamp_ns)
            npt.assert_allclose(p.t, sample.t)
            npt.assert_allclose(p.q, sample.q)
            assert p.timestamp_ns == sample.timestamp_ns

    def test_linear_midpoint(self):
        p = interpolate_pose(self.track(), 50)
        npt.assert_allclose(p.t, [1, 0, 0])
        assert p.timestamp_ns == 50

    def test_slerp_midpoint_oracle(self):
        # independent oracle: half of a 90 degree rotation is 45 degrees
        p = interpolate_pose(self.track(), 150)
        expected = np.array([math.cos(math.pi / 8), 0.0, 0.0, math.sin(math.pi / 8)])
        npt.assert_allclose(p.q, expected, atol=1e-12)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            interpolate_pose(self.track(), 201)
        with pytest.raises(OutOfRange):
            interpolate_pose(self.track(), -1)

    def test_empty_track(self):
        with pytest.raises(EmptyTrack):
            interpolate_pose([], 0)

    def test_continuity(self):
        # displacement shrinks in proportion to the time step
        track = self.track()
        base = interpolate_pose(track, 150)
        for eps in (1, 2, 5):
            near = interpolate_pose(track, 150 + eps)
            assert np.linalg.norm(near.t - base.t) <= 0.05 * eps
            assert np.linalg.norm(near.q - base.q) <= 0.05 * eps

    def test_unit_norm_along_track(self):
        track = self.track()
        for t in range(0, 201, 7):
            p = interpolate_pose(track, t)
            assert abs(np.linalg.norm(p.q) - 1.0) <= 1e-9

    def test_shortest_arc(self):
        q0 = np.array([1.0, 0, 0, 0])
        q1 = -quat_about_axis(np.array([0, 0, 1.0]), math.pi / 4)  # same rotation, negated
        mid = slerp(q0, q1, 0.5)
        npt.assert_allclose(
            rotation_matrix(mid),
            rotation_matrix(quat_about_axis(np.array([0, 0, 1.0]), math.pi / 8)),
            atol=1e-12,
        )
