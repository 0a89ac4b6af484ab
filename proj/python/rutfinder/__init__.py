"""Pothole detection on dense disparity maps."""

import json

from . import _rutfinder
from ._rutfinder import (
    Error,
    clean_and_label,
    estimate_roll,
    load_disparity,
    make_benchmark,
    otsu_threshold,
    pixel_metrics,
    save_pfm,
    scaled_min_pixels,
    sigma_d,
)

__all__ = [
    "Error",
    "clean_and_label",
    "default_config",
    "detect",
    "estimate_roll",
    "load_disparity",
    "make_benchmark",
    "make_scene",
    "otsu_threshold",
    "pixel_metrics",
    "render_scene",
    "save_pfm",
    "scaled_min_pixels",
    "sigma_d",
]


def default_config():
    return json.loads(_rutfinder.default_config())


def detect(disparity, config=None, **overrides):
    """Run the detector. `config` is a dict of config keys; keyword
    arguments override single keys. The result's "report" is a dict."""
    cfg = dict(config or {})
    cfg.update(overrides)
    out = _rutfinder.detect(disparity, json.dumps(cfg) if cfg else "")
    out["report"] = json.loads(out["report"])
    return out


def make_scene(preset="rolled", seed=42, index=0, width=600, height=400):
    return json.loads(_rutfinder.make_scene(preset, seed, index, width, height))


def render_scene(spec):
    """spec: dict as returned by make_scene. Returns (disparity, pothole_mask, road_mask)."""
    return _rutfinder.render_scene(json.dumps(spec))
