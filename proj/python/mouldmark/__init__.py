"""Chain and laid line measurement for watermark images."""

import json

import numpy as np

from . import _core
from ._core import MouldmarkError, detect_peaks, preset_names, radon, tv_functional

__all__ = [
    "MouldmarkError",
    "band_pass",
    "calibrate",
    "decompose",
    "detect_chains",
    "detect_laids",
    "detect_peaks",
    "phantom",
    "preset_names",
    "radon",
    "read_gray",
    "spectral_response",
    "tv_functional",
    "write_png",
]


def _flow(flow):
    return json.dumps(flow or {})


def phantom(preset=None, seed=0, spec=None):
    """Returns (image, scale, truth) for a preset name or a spec dict."""
    if spec is not None:
        image, scale, truth = _core.phantom_from_spec(json.dumps(spec))
    else:
        image, scale, truth = _core.phantom(preset, seed)
    return image, scale, json.loads(truth)


def preset_spec(preset, seed=0):
    return json.loads(_core.preset_spec(preset, seed))


def read_gray(path):
    """Returns (image, scale) with values in [0, 1]."""
    return _core.read_gray(str(path))


def write_png(path, image):
    _core.write_png(str(path), np.asarray(image, dtype=float))


def spectral_response(image, flow=None):
    """Returns (times, S) of the TV flow."""
    times, amplitude = _core.spectral_response(image, _flow(flow))
    return np.asarray(times), np.asarray(amplitude)


def band_pass(image, t_lo, t_hi, flow=None):
    return _core.band_pass(image, t_lo, t_hi, _flow(flow))


def decompose(image, edges, flow=None):
    """Returns (snapped edges, bands, residual); bands sum with the residual to the image."""
    edges, bands, residual = _core.decompose(image, list(edges), _flow(flow))
    return edges, bands, residual


def calibrate(image, method="explicit", **params):
    return json.loads(_core.calibrate(image, json.dumps({"method": method, **params})))


def detect_chains(image, px_per_mm=None, config=None, scale=None):
    return json.loads(_core.detect_chains(image, px_per_mm, json.dumps(config or {}), scale))


def detect_laids(image, px_per_mm=None, config=None, scale=None):
    return json.loads(_core.detect_laids(image, px_per_mm, json.dumps(config or {}), scale))
