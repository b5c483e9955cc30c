import numpy as np
import pytest

import mouldmark as mm


def test_presets_listed():
    names = mm.preset_names()
    assert "chain-basic" in names
    assert "laid-basic" in names


def test_phantom_is_deterministic():
    a, scale, truth = mm.phantom("chain-basic", seed=4)
    b, _, _ = mm.phantom("chain-basic", seed=4)
    assert scale == 10
    assert truth["line_positions_px"] == [50, 150, 250]
    assert np.array_equal(a, b)


def test_decompose_reconstructs():
    rng = np.random.default_rng(1)
    image = rng.random((24, 20))
    edges, bands, residual = mm.decompose(image, [0.05, 0.2], {"t_max": 0.26})
    assert len(bands) == 2
    assert np.max(np.abs(sum(bands) + residual - image)) < 1e-9


def test_disk_tv():
    image, _, _ = mm.phantom("disk")
    assert abs(mm.tv_functional(image) - 2 * np.pi * 10 * 0.5) < 0.15 * 2 * np.pi * 10 * 0.5


def test_radon_keeps_mass():
    image, _, _ = mm.phantom("disk")
    data, angles, offsets = mm.radon(image, [0.0, 33.0, 90.0])
    assert data.shape == (3, len(offsets))
    assert np.allclose(data.sum(axis=1), image.sum(), rtol=1e-9)


def test_peaks():
    assert mm.detect_peaks([0, 3, 0, 2, 0, 5, 0], threshold=1, min_separation=3) == [1, 5]


def test_chain_detection():
    image, scale, truth = mm.phantom("chain-basic", seed=1)
    report = mm.detect_chains(image, px_per_mm=scale)
    assert report["positions_px"] == pytest.approx(truth["line_positions_px"], abs=2)
    assert report["distances_mm"] == pytest.approx([10, 10], abs=0.2)


def test_ruler_calibration():
    image, _, _ = mm.phantom("ruler")
    assert mm.calibrate(image, "ruler")["pixels_per_mm"] == 20


def test_errors_carry_codes():
    image, _, _ = mm.phantom("laid-basic", seed=1)
    with pytest.raises(mm.MouldmarkError) as info:
        mm.detect_laids(image)
    assert info.value.code == "missing_calibration"


def test_png_round_trip(tmp_path):
    image, _, _ = mm.phantom("disk")
    mm.write_png(tmp_path / "disk.png", image)
    back, _ = mm.read_gray(tmp_path / "disk.png")
    assert np.max(np.abs(back - image)) <= 0.5 / 255 + 1e-12
