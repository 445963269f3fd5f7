"""Auto-labeling and benchmarking toolkit for image-space centerline
key-point detection."""

from . import autolabel, codec, decoder, geometry, losses, metrics, synth, vectormap
from .autolabel import KeyPoint, LabelConfig, LabelGrid, label_frame, quantize_to_grid
from .decoder import DecodeConfig, PredictionGrid, decode
from .errors import ToolkitError
from .geometry import CameraModel, ResizeCrop, SE3Pose
from .losses import LossConfig, conf_loss, depth_loss, offset_loss, total_loss
from .metrics import EvalConfig, EvalReport, aggregate, f1_from_counts, match_frame
from .vectormap import Polyline3, VectorMap

__version__ = "0.1.0"

__all__ = [
    "autolabel",
    "codec",
    "decoder",
    "geometry",
    "losses",
    "metrics",
    "synth",
    "vectormap",
    "KeyPoint",
    "LabelConfig",
    "LabelGrid",
    "label_frame",
    "quantize_to_grid",
    "DecodeConfig",
    "PredictionGrid",
    "decode",
    "ToolkitError",
    "CameraModel",
    "ResizeCrop",
    "SE3Pose",
    "LossConfig",
    "conf_loss",
    "depth_loss",
    "offset_loss",
    "total_loss",
    "EvalConfig",
    "EvalReport",
    "aggregate",
    "f1_from_counts",
    "match_frame",
    "Polyline3",
    "VectorMap",
    "__version__",
]
