"""Pose-guided person image synthesis: Python bindings for the native core."""

import json

from ._core import (
    ConfigError,
    ParseError,
    SchemaError,
    __version__,
    inception_score,
    joint_names,
    load_keypoints,
    make_microdataset,
    rasterize,
    ssim,
    synthesize,
)
from . import _core


def evaluate(gen, target, n_splits=10, label=""):
    """SSIM / Inception Score report for two folders, as a dict."""
    return json.loads(_core.evaluate(str(gen), str(target), n_splits, label))


__all__ = [
    "ConfigError",
    "ParseError",
    "SchemaError",
    "__version__",
    "evaluate",
    "inception_score",
    "joint_names",
    "load_keypoints",
    "make_microdataset",
    "rasterize",
    "ssim",
    "synthesize",
]
