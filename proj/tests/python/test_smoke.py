import math

import numpy as np
import pytest

import rutfinder


@pytest.fixture(scope="module")
def scene():
    spec = rutfinder.make_scene("rolled", seed=7, index=2)
    disparity, potholes, road = rutfinder.render_scene(spec)
    return spec, disparity, potholes, road


def test_render_shapes(scene):
    spec, disparity, potholes, road = scene
    assert disparity.shape == (spec["height"], spec["width"])
    assert potholes.dtype == np.bool_
    assert not np.any(potholes & road)


def test_detect_counts_injected_potholes(scene):
    spec, disparity, potholes, _ = scene
    w = rutfinder.scaled_min_pixels(spec["width"], spec["height"])
    out = rutfinder.detect(disparity, min_pixels=w, threads=1)
    assert out["count"] == len(spec["potholes"])
    assert out["report"]["pothole_count"] == out["count"]
    assert abs(out["theta"] - spec["theta"]) < 1e-3
    m = rutfinder.pixel_metrics(out["labels"] > 0, potholes)
    assert m["f_score"] > 0.9


def test_roll_trace(scene):
    _, disparity, _, _ = scene
    r = rutfinder.estimate_roll(disparity, prescan_count=0)
    assert r["iterations"] == 21
    assert r["bracket_widths"][-1] <= math.pi / 18000


def test_small_helpers():
    boundary, variance = rutfinder.otsu_threshold([5, 0, 0, 0, 5], [0, 0, 0, 0, 20])
    assert boundary == 2.5
    assert variance == pytest.approx(4.0)
    assert rutfinder.sigma_d([29.0, 31.0]) == 1.0
    mask = np.zeros((6, 6), dtype=np.uint8)
    mask[1:3, 1:3] = 1
    mask[5, 5] = 1
    labels = rutfinder.clean_and_label(mask, min_pixels=2)
    assert labels.max() == 1 and labels[5, 5] == 0
    assert rutfinder.default_config()["eps_d"] == 6.2


def test_errors_are_raised():
    with pytest.raises(rutfinder.Error):
        rutfinder.detect(np.full((30, 40), 20.0))
    with pytest.raises(rutfinder.Error):
        rutfinder.detect(np.ones((10, 10)), no_such_key=1)
    with pytest.raises(rutfinder.Error):
        rutfinder.sigma_d([1.0])


def test_pfm_round_trip(tmp_path, scene):
    _, disparity, _, _ = scene
    path = str(tmp_path / "f.pfm")
    rutfinder.save_pfm(path, disparity)
    back = rutfinder.load_disparity(path)
    np.testing.assert_array_equal(np.isnan(back), np.isnan(disparity))
    ok = ~np.isnan(disparity)
    np.testing.assert_allclose(back[ok], disparity[ok], rtol=1e-6)
