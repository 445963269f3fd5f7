import numpy as np
import pytest

from clbench.geometry import CameraModel, ResizeCrop, SE3Pose, quat_from_matrix


@pytest.fixture
def camera():
    """Plain VGA pinhole with identity transform."""
    return CameraModel(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)


@pytest.fixture
def front_cam_rotation():
    """Camera axes in the ego frame: x right, y down, z forward."""
    return np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


@pytest.fixture
def forward_camera(front_cam_rotation):
    """Forward-looking camera 1.5 m above the ego origin, 512x256 adjusted
    image via a 0.5 resize (matches the desk-scale label config)."""
    extrinsic = SE3Pose(0, np.array([0.0, 0.0, 1.5]), quat_from_matrix(front_cam_rotation))
    return CameraModel(
        fx=512.0,
        fy=512.0,
        cx=512.0,
        cy=256.0,
        width=1024,
        height=512,
        extrinsic=extrinsic,
        transform=ResizeCrop(0, 0, 1024, 512, 0.5, 0.5),
    )
