"""Blind block-transform watermarking of 4096-bit payloads.

Three codecs share one estimator interface:

* ``DCT`` orders the mid-band pair (3,2)/(2,3) of every 8x8 block DCT.
* ``DWT_DCT`` orders the pair (2,1)/(1,2) of 4x4 DCT blocks in the Haar LL band.
* ``DCT_SVD`` quantises the largest singular value of every 8x8 DCT block (QIM).

Embedding is followed by a few refinement passes that re-check each block after
rounding and clamping to 8 bits and push any block whose margin fell short,
so an unattacked round trip is exact. Extraction never needs the host.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter, median_filter, minimum_filter
from sklearn.base import BaseEstimator

from .base import (
    N_WATERMARK_BITS,
    DimensionError,
    check_bits,
    check_gray,
    check_image,
    to_uint8,
)
from .imaging import to_grayscale
from .kernels import (
    SubbandSet,
    dct2_blocks,
    dwt_haar,
    from_blocks,
    idct2_blocks,
    idwt_haar,
    svd_batch,
    to_blocks,
)

HOST_SHAPE = (512, 512)
GRID = 64  # blocks per side, one payload bit each

DEFAULT_STRENGTH = {"DCT": 28.0, "DWT_DCT": 6.0, "DCT_SVD": 40.0}
CODEC_ALIASES = {
    "dct": "DCT",
    "dwtdct": "DWT_DCT",
    "dwt_dct": "DWT_DCT",
    "dctsvd": "DCT_SVD",
    "dct_svd": "DCT_SVD",
}


@dataclass(frozen=True)
class Codec:
    kind: str = "DCT"
    strength: float | None = None

    def __post_init__(self):
        kind = CODEC_ALIASES.get(self.kind.lower(), self.kind.upper())
        if kind not in DEFAULT_STRENGTH:
            raise ValueError(f"unknown codec {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        strength = DEFAULT_STRENGTH[kind] if self.strength is None else float(self.strength)
        if not strength > 0:
            raise ValueError("codec strength must be positive")
        object.__setattr__(self, "strength", strength)

    def estimator(self, **kwargs) -> "BlockWatermark":
        return _CODEC_CLASSES[self.kind](strength=self.strength, **kwargs)


_NEIGHBOURS = np.ones((3, 3), dtype=bool)
_NEIGHBOURS[1, 1] = False


def suppress_impulses(img, threshold: int = 32, gate: float = 2.5e-4) -> np.ndarray:
    """Switching median filter for salt-and-pepper damage.

    A pixel is an impulse candidate when it sits at 0 (or 255) and all eight
    neighbours are more than ``threshold`` away from that extreme. Candidates
    are replaced by their 3x3 median, but only when they make up at least
    ``gate`` of the image; isolated saturated pixels in clean content stay put.
    """
    x = check_gray(img)
    wide = x.astype(np.int16)
    nmax = maximum_filter(wide, footprint=_NEIGHBOURS, mode="reflect")
    nmin = minimum_filter(wide, footprint=_NEIGHBOURS, mode="reflect")
    mask = ((wide == 255) & (nmax < 255 - threshold)) | ((wide == 0) & (nmin > threshold))
    if mask.sum() < gate * x.size:
        return x
    out = x.copy()
    out[mask] = median_filter(x, size=3, mode="reflect")[mask]
    return out


def _check_host(img) -> np.ndarray:
    x = check_gray(img, name="host")
    if x.shape != HOST_SHAPE:
        raise DimensionError(f"host must be {HOST_SHAPE[1]}x{HOST_SHAPE[0]}, got {x.shape[1]}x{x.shape[0]}")
    return x


class BlockWatermark(BaseEstimator):
    """Shared estimator surface for the three codecs.

    ``fit(bits)`` stores the payload, ``transform(image)`` embeds it,
    ``predict(image)`` extracts bits blindly and ``score(image)`` reports the
    fraction of payload bits recovered. Colour hosts are watermarked through
    their luma; see :func:`embed_color`.
    """

    kind = ""

    def __init__(self, strength=None, max_refine=8, impulse_filter=True):
        self.strength = strength
        self.max_refine = max_refine
        self.impulse_filter = impulse_filter

    @property
    def effective_strength(self) -> float:
        return DEFAULT_STRENGTH[self.kind] if self.strength is None else float(self.strength)

    def fit(self, X, y=None):
        self.bits_ = check_bits(X, N_WATERMARK_BITS)
        return self

    def _fitted_bits(self) -> np.ndarray:
        if not hasattr(self, "bits_"):
            raise AttributeError(f"{type(self).__name__} is not fitted; call fit(bits) first")
        return self.bits_

    def transform(self, X):
        bits = self._fitted_bits()
        if _is_single(X):
            return self._embed_any(X, bits)
        return [self._embed_any(img, bits) for img in X]

    def predict(self, X):
        if _is_single(X):
            return self.extract(X)
        return np.stack([self.extract(img) for img in X])

    def score(self, X, y=None):
        bits = self._fitted_bits() if y is None else check_bits(y)
        got = self.predict(X)
        return float(np.mean(got == bits))

    def _embed_any(self, img, bits):
        arr = check_image(img)
        if arr.ndim == 3:
            return self._embed_color(arr, bits)
        return self.embed(arr, bits)

    def embed(self, host, bits) -> np.ndarray:
        x = _check_host(host)
        bits = check_bits(bits, N_WATERMARK_BITS).reshape(GRID, GRID)
        out = to_uint8(self._first_pass(x.astype(np.float64), bits))
        return self._refine(out, bits)

    def extract(self, subject) -> np.ndarray:
        x = _check_host(subject)
        if self.impulse_filter:
            x = suppress_impulses(x)
        return self._decide(x.astype(np.float64)).ravel().astype(np.uint8)

    def _refine(self, img: np.ndarray, bits: np.ndarray) -> np.ndarray:
        out = img
        for _ in range(self.max_refine):
            need = self._deficient(out.astype(np.float64), bits)
            if not need.any():
                break
            out = to_uint8(self._repair(out.astype(np.float64), bits, need))
        return out

    def _embed_color(self, host: np.ndarray, bits) -> np.ndarray:
        bits = check_bits(bits, N_WATERMARK_BITS).reshape(GRID, GRID)
        gray = _check_host(to_grayscale(host))
        marked = to_uint8(self._first_pass(gray.astype(np.float64), bits))
        out = _apply_luma_delta(host, marked.astype(np.int16) - gray)
        for _ in range(self.max_refine):
            luma = to_grayscale(out)
            need = self._deficient(luma.astype(np.float64), bits)
            if not need.any():
                break
            fixed = to_uint8(self._repair(luma.astype(np.float64), bits, need))
            out = _apply_luma_delta(out, fixed.astype(np.int16) - luma)
        return out

    # codec hooks
    def _first_pass(self, x, bits):
        raise NotImplementedError

    def _deficient(self, x, bits):
        raise NotImplementedError

    def _repair(self, x, bits, need):
        raise NotImplementedError

    def _decide(self, x):
        raise NotImplementedError


def _apply_luma_delta(rgb: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return np.clip(rgb.astype(np.int16) + delta[..., None], 0, 255).astype(np.uint8)


def _is_single(X) -> bool:
    return isinstance(X, np.ndarray) and (X.ndim == 2 or (X.ndim == 3 and X.shape[2] == 3))


class _PairRelation(BlockWatermark):
    """Orders two DCT coefficients so that their difference carries one bit."""

    first = (3, 2)
    second = (2, 3)
    repair_slack = 0.5

    def _coeffs(self, x):
        raise NotImplementedError

    def _invert(self, coeffs, x):
        raise NotImplementedError

    def _margin(self, coeffs, bits):
        sign = np.where(bits == 1, 1.0, -1.0)
        return sign * (coeffs[..., self.first[0], self.first[1]] - coeffs[..., self.second[0], self.second[1]])

    def _push(self, x, bits, mask, target):
        coeffs = self._coeffs(x)
        sign = np.where(bits == 1, 1.0, -1.0)
        margin = self._margin(coeffs, bits)
        shift = np.where(mask & (margin < target), (target - margin) / 2.0, 0.0)
        coeffs[..., self.first[0], self.first[1]] += sign * shift
        coeffs[..., self.second[0], self.second[1]] -= sign * shift
        return self._invert(coeffs, x)

    def _first_pass(self, x, bits):
        return self._push(x, bits, np.ones(bits.shape, dtype=bool), self.effective_strength)

    def _deficient(self, x, bits):
        return self._margin(self._coeffs(x), bits) < self.effective_strength

    def _repair(self, x, bits, need):
        return self._push(x, bits, need, self.effective_strength + self.repair_slack)

    def _decide(self, x):
        coeffs = self._coeffs(x)
        return coeffs[..., self.first[0], self.first[1]] > coeffs[..., self.second[0], self.second[1]]


class DCTWatermark(_PairRelation):
    """Coefficient-pair relation in the 8x8 block DCT of the host."""

    kind = "DCT"

    def _coeffs(self, x):
        return dct2_blocks(to_blocks(x, 8))

    def _invert(self, coeffs, x):
        return from_blocks(idct2_blocks(coeffs))


class DWTDCTWatermark(_PairRelation):
    """Coefficient-pair relation in 4x4 DCT blocks of the Haar LL subband."""

    kind = "DWT_DCT"
    first = (2, 1)
    second = (1, 2)

    def _coeffs(self, x):
        return dct2_blocks(to_blocks(dwt_haar(x).LL, 4))

    def _invert(self, coeffs, x):
        bands = dwt_haar(x)
        ll = from_blocks(idct2_blocks(coeffs))
        return idwt_haar(SubbandSet(ll, bands.LH, bands.HL, bands.HH))


class DCTSVDWatermark(BlockWatermark):
    """Dithered QIM on the largest singular value of each 8x8 DCT block.

    Bit 0 lands sigma_1 at a quarter of its quantisation cell, bit 1 at three
    quarters; extraction reads which half of the cell sigma_1 falls in.
    """

    kind = "DCT_SVD"

    def _sigma(self, x, index=None):
        coeffs = dct2_blocks(to_blocks(x, 8)).reshape(-1, 8, 8)
        sub = coeffs if index is None else coeffs[index]
        u, s, v = svd_batch(sub)
        return coeffs, u, s, v

    def _targets(self, sigma1, bits):
        step = self.effective_strength
        offset = np.where(bits == 1, 0.75 * step, 0.25 * step)
        return step * np.floor(sigma1 / step) + offset

    def _move(self, x, bits, mask, fallback=None):
        index = np.flatnonzero(mask.ravel())
        coeffs, u, s, v = self._sigma(x, index)
        sigma1 = s[:, 0]
        target = self._targets(sigma1, bits.ravel()[index])
        if fallback is not None:
            # saturated blocks cannot rise: use the same phase one cell down
            lower = target - self.effective_strength
            target = np.where(fallback.ravel()[index] & (lower > 0), lower, target)
        coeffs[index] += (target - sigma1)[:, None, None] * (u[:, :, 0, None] * v[:, None, :, 0])
        return from_blocks(idct2_blocks(coeffs.reshape(GRID, GRID, 8, 8)))

    def _phase_margin(self, x, bits):
        step = self.effective_strength
        _, _, s, _ = self._sigma(x)
        phase = np.mod(s[:, 0], step)
        centre = np.where(bits.ravel() == 1, 0.75 * step, 0.25 * step)
        return (step / 4 - np.abs(phase - centre)).reshape(GRID, GRID)

    def _first_pass(self, x, bits):
        return self._move(x, bits, np.ones(bits.shape, dtype=bool))

    def _deficient(self, x, bits):
        return self._phase_margin(x, bits) < self.effective_strength / 8

    def _repair(self, x, bits, need):
        stuck = need & (x.reshape(GRID, 8, GRID, 8).max(axis=(1, 3)) >= 255)
        return self._move(x, bits, need, fallback=stuck)

    def _decide(self, x):
        _, _, s, _ = self._sigma(x)
        return (np.mod(s[:, 0], self.effective_strength) >= self.effective_strength / 2).reshape(GRID, GRID)


_CODEC_CLASSES = {
    "DCT": DCTWatermark,
    "DWT_DCT": DWTDCTWatermark,
    "DCT_SVD": DCTSVDWatermark,
}


def embed(host, bits, codec: Codec | str = "DCT") -> np.ndarray:
    """Embed 4096 bits into a 512x512 grayscale host."""
    return _as_codec(codec).estimator().embed(host, bits)


def extract(subject, codec: Codec | str = "DCT") -> np.ndarray:
    """Blindly extract 4096 bits from a 512x512 grayscale image."""
    return _as_codec(codec).estimator().extract(subject)


def embed_color(host, bits, codec: Codec | str = "DCT") -> np.ndarray:
    """Embed through the luma of an RGB host by adding the same delta to each channel."""
    arr = check_image(host)
    est = _as_codec(codec).estimator()
    if arr.ndim == 2:
        return est.embed(arr, bits)
    return est._embed_color(arr, bits)


def extract_any(subject, codec: Codec | str = "DCT") -> np.ndarray:
    """Extract from grayscale or RGB input (RGB is reduced to luma first)."""
    return extract(to_grayscale(subject), codec)


def _as_codec(codec) -> Codec:
    return codec if isinstance(codec, Codec) else Codec(codec)
