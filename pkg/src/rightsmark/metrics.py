"""Image quality and distance metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import correlate

from .base import DimensionError, check_bits, check_image, check_same_shape
from .imaging import to_grayscale

PSNR_IDENTICAL = float("inf")


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = check_image(a, name="first image")
    y = check_image(b, name="second image")
    check_same_shape(x, y)
    return x.astype(np.float64), y.astype(np.float64)


def mse(a, b) -> float:
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr(a, b, max_value: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical inputs give ``inf``."""
    err = mse(a, b)
    if err == 0:
        return PSNR_IDENTICAL
    return float(20 * np.log10(max_value) - 10 * np.log10(err))


def bit_errors(a, b) -> int:
    x = check_bits(a, None, name="first bits")
    y = check_bits(b, None, name="second bits")
    if x.size != y.size:
        raise ValueError(f"bit vectors differ in length: {x.size} vs {y.size}")
    return int(np.count_nonzero(x != y))


@dataclass(frozen=True)
class SsimParams:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    data_range: float = 255.0

    @property
    def c1(self) -> float:
        return (self.k1 * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.data_range) ** 2

    def kernel(self) -> np.ndarray:
        r = np.arange(self.window) - (self.window - 1) / 2
        g = np.exp(-(r**2) / (2 * self.sigma**2))
        g /= g.sum()
        return np.outer(g, g)


class SsimResult(NamedTuple):
    score: float
    map: np.ndarray


def ssim(a, b, params: SsimParams = SsimParams()) -> SsimResult:
    """Gaussian-windowed SSIM.

    The per-pixel map covers the whole image (reflected borders); the score
    averages the map away from a half-window border, where every window lies
    inside the image.
    """
    x, y = _pair(to_grayscale(check_image(a)), to_grayscale(check_image(b)))
    if min(x.shape) < params.window:
        raise DimensionError(f"images smaller than the {params.window}x{params.window} SSIM window")
    k = params.kernel()

    def filt(img):
        return correlate(img, k, mode="reflect")

    mu_x, mu_y = filt(x), filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    c1, c2 = params.c1, params.c2
    smap = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    pad = (params.window - 1) // 2
    score = float(smap[pad:-pad, pad:-pad].mean()) if pad else float(smap.mean())
    return SsimResult(score, smap)


def gray_histogram(img) -> np.ndarray:
    gray = to_grayscale(img)
    hist = np.bincount(gray.ravel(), minlength=256).astype(np.float64)
    return hist / hist.sum()


def hist_intersection(a, b) -> float:
    """Percentage overlap of the normalised 256-bin luma histograms."""
    ca = np.bincount(to_grayscale(a).ravel(), minlength=256).astype(np.int64)
    cb = np.bincount(to_grayscale(b).ravel(), minlength=256).astype(np.int64)
    na, nb = int(ca.sum()), int(cb.sum())
    # cross-multiplied counts keep the sum exact in integers
    overlap = int(np.minimum(ca * nb, cb * na).sum())
    return 100.0 * overlap / (na * nb)
