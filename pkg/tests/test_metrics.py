import math

import numpy as np
import pytest

from rightsmark.base import DimensionError
from rightsmark.metrics import PSNR_IDENTICAL, bit_errors, hist_intersection, mse, psnr, ssim


def loop_mse(a, b):
    total = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            d = float(a[i, j]) - float(b[i, j])
            total += d * d
    return total / a.size


def test_mse_against_double_loop(rng):
    a = rng.integers(0, 256, (40, 30), dtype=np.uint8)
    b = rng.integers(0, 256, (40, 30), dtype=np.uint8)
    assert abs(mse(a, b) - loop_mse(a, b)) <= 1e-12


def test_psnr_definition(rng):
    a = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    b = a.copy()
    assert mse(a, b) == 0 and psnr(a, b) == PSNR_IDENTICAL
    b[0, 0] ^= 1
    assert psnr(a, b) == pytest.approx(20 * math.log10(255) - 10 * math.log10(1 / 256), abs=1e-9)


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        mse(np.zeros((4, 4), np.uint8), np.zeros((4, 5), np.uint8))


def test_ssim_matches_skimage(camera, rng):
    skm = pytest.importorskip("skimage.metrics")
    noisy = np.clip(camera + rng.normal(0, 12, camera.shape), 0, 255).astype(np.uint8)
    ours = ssim(camera, noisy)
    ref = skm.structural_similarity(camera, noisy, gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False, data_range=255)
    assert ours.score == pytest.approx(ref, abs=1e-9)
    assert ours.map.shape == camera.shape


def test_ssim_identity_exact(astronaut):
    r = ssim(astronaut, astronaut.copy())
    assert r.score == 1.0
    assert np.all(r.map == 1.0)


def test_ssim_too_small():
    with pytest.raises(DimensionError):
        ssim(np.zeros((8, 8), np.uint8), np.zeros((8, 8), np.uint8))


def test_histogram_intersection():
    black, white = np.zeros((8, 8), np.uint8), np.full((8, 8), 255, np.uint8)
    assert hist_intersection(black, white) == 0.0
    assert hist_intersection(black, black) == 100.0
    half = black.copy()
    half[:4] = 255
    assert hist_intersection(black, half) == 50.0
    # normalised: size does not matter
    assert hist_intersection(black, np.zeros((3, 5), np.uint8)) == 100.0


def test_bit_errors():
    assert bit_errors([0, 1, 1, 0], [0, 1, 0, 1]) == 2
    with pytest.raises(ValueError):
        bit_errors([0, 1], [0, 1, 1])
