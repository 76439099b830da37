"""Seeded watermark attacks and tampering operations.

Every operation is a pure function of (image, spec): stochastic kinds draw
from ``numpy.random.default_rng(spec.seed)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import correlate, median_filter, uniform_filter

from .base import check_image, to_uint8
from .imaging import Rect, copy_region, paste_region, resize_bilinear, to_grayscale
from .kernels import jpeg_roundtrip, jpeg_roundtrip_rgb

ATTACK_KINDS = (
    "color",
    "histogram",
    "blur",
    "median_blur",
    "gaussian_blur",
    "erase",
    "jpeg",
    "gaussian_noise",
    "salt_pepper",
)
TAMPER_KINDS = ("copy_move", "image_splicing", "text_splicing", "resize", "cropping", "noise_blur")

_ATTACK_DEFAULTS = {
    "color": {"shift": 30, "channel": 0},
    "histogram": {},
    "blur": {"ksize": 3},
    "median_blur": {"ksize": 3},
    "gaussian_blur": {"ksize": 5, "sigma": 1.0},
    "erase": {"rect": None, "value": 0},
    "jpeg": {"qf": 50},
    "gaussian_noise": {"sigma": 5.0},
    "salt_pepper": {"density": 0.01},
}

_TAMPER_DEFAULTS = {
    "copy_move": {"src": [64, 64, 64, 64], "dst": [256, 256]},
    "image_splicing": {"at": [200, 200], "size": 96, "match_tones": True},
    "text_splicing": {"text": "COPY", "at": [180, 460], "scale": 4, "value": 0},
    "resize": {"scale": 0.75},
    "cropping": {"keep": 0.75},
    "noise_blur": {"sigma": 8.0, "ksize": 3},
}


def _canonical(kind: str, params: dict, seed: int) -> str:
    return json.dumps({"kind": kind, "params": params, "seed": seed}, sort_keys=True, separators=(",", ":"))


def _merge(kind: str, defaults: dict, params: dict) -> dict:
    unknown = set(params) - set(defaults[kind])
    if unknown:
        raise ValueError(f"unknown parameters for {kind}: {sorted(unknown)}")
    return {**defaults[kind], **params}


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack {self.kind!r}; expected one of {ATTACK_KINDS}")
        object.__setattr__(self, "params", _merge(self.kind, _ATTACK_DEFAULTS, dict(self.params)))
        _validate_attack(self.kind, self.params)

    def canonical(self) -> str:
        return _canonical(self.kind, self.params, self.seed)

    @classmethod
    def from_canonical(cls, text: str) -> "AttackSpec":
        obj = json.loads(text)
        return cls(obj["kind"], obj["params"], obj["seed"])


@dataclass(frozen=True)
class TamperSpec:
    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TAMPER_KINDS:
            raise ValueError(f"unknown tamper {self.kind!r}; expected one of {TAMPER_KINDS}")
        object.__setattr__(self, "params", _merge(self.kind, _TAMPER_DEFAULTS, dict(self.params)))
        _validate_tamper(self.kind, self.params)

    def canonical(self) -> str:
        return _canonical(self.kind, self.params, self.seed)

    @classmethod
    def from_canonical(cls, text: str) -> "TamperSpec":
        obj = json.loads(text)
        return cls(obj["kind"], obj["params"], obj["seed"])


def _validate_attack(kind: str, p: dict) -> None:
    if kind == "color" and p["channel"] not in (0, 1, 2):
        raise ValueError("color channel must be 0, 1 or 2")
    if kind in ("blur", "median_blur", "gaussian_blur") and (p["ksize"] < 1 or p["ksize"] % 2 == 0):
        raise ValueError("kernel size must be a positive odd integer")
    if kind == "gaussian_blur" and p["sigma"] <= 0:
        raise ValueError("sigma must be positive")
    if kind == "jpeg" and not (isinstance(p["qf"], int) and 1 <= p["qf"] <= 100):
        raise ValueError("jpeg quality factor must be an integer in 1..100")
    if kind == "gaussian_noise" and p["sigma"] < 0:
        raise ValueError("noise sigma must be non-negative")
    if kind == "salt_pepper" and not 0 <= p["density"] <= 1:
        raise ValueError("salt-and-pepper density must lie in [0, 1]")
    if kind == "erase":
        if p["rect"] is not None and len(p["rect"]) != 4:
            raise ValueError("erase rect must be [x, y, w, h]")
        if not 0 <= p["value"] <= 255:
            raise ValueError("erase value must lie in [0, 255]")


def _validate_tamper(kind: str, p: dict) -> None:
    if kind == "resize" and not 0 < p["scale"] <= 4:
        raise ValueError("resize scale must lie in (0, 4]")
    if kind == "cropping" and not 0 < p["keep"] <= 1:
        raise ValueError("cropping fraction must lie in (0, 1]")
    if kind == "text_splicing":
        if p["scale"] < 1:
            raise ValueError("text scale must be at least 1")
        bad = set(p["text"].upper()) - set(FONT_5X7)
        if bad:
            raise ValueError(f"characters not in the built-in font: {sorted(bad)}")
    if kind == "noise_blur" and (p["sigma"] < 0 or p["ksize"] < 1 or p["ksize"] % 2 == 0):
        raise ValueError("noise_blur needs sigma >= 0 and an odd kernel size")
    if kind == "image_splicing" and p["size"] < 2:
        raise ValueError("splice patch must be at least 2 pixels wide")


# ---- attacks ----


def _per_channel(img: np.ndarray, fn) -> np.ndarray:
    if img.ndim == 2:
        return fn(img)
    return np.stack([fn(img[..., c]) for c in range(img.shape[2])], axis=-1)


def _gaussian_kernel(ksize: int, sigma: float) -> np.ndarray:
    r = np.arange(ksize) - (ksize - 1) / 2
    g = np.exp(-(r**2) / (2 * sigma**2))
    k = np.outer(g, g)
    return k / k.sum()


def equalize(gray: np.ndarray) -> np.ndarray:
    """Global histogram equalisation of an 8-bit plane."""
    hist = np.bincount(gray.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    nz = cdf[hist > 0]
    cdf_min = nz[0]
    total = gray.size
    if total == cdf_min:
        return gray.copy()
    lut = np.floor((cdf - cdf_min) / (total - cdf_min) * 255 + 0.5)
    return np.clip(lut, 0, 255).astype(np.uint8)[gray]


def apply_attack(image, spec: AttackSpec) -> np.ndarray:
    img = check_image(image)
    p = spec.params
    kind = spec.kind
    h, w = img.shape[:2]

    if kind == "color":
        out = img.astype(np.int16)
        if out.ndim == 2:
            out = out + p["shift"]
        else:
            out[..., p["channel"]] += p["shift"]
        return np.clip(out, 0, 255).astype(np.uint8)

    if kind == "histogram":
        gray = to_grayscale(img)
        eq = equalize(gray)
        if img.ndim == 2:
            return eq
        delta = eq.astype(np.int16) - gray
        return np.clip(img.astype(np.int16) + delta[..., None], 0, 255).astype(np.uint8)

    if kind == "blur":
        return _per_channel(img, lambda c: to_uint8(uniform_filter(c.astype(np.float64), p["ksize"], mode="reflect")))

    if kind == "median_blur":
        return _per_channel(img, lambda c: median_filter(c, size=p["ksize"], mode="reflect"))

    if kind == "gaussian_blur":
        k = _gaussian_kernel(p["ksize"], p["sigma"])
        return _per_channel(img, lambda c: to_uint8(correlate(c.astype(np.float64), k, mode="reflect")))

    if kind == "erase":
        rect = Rect(*p["rect"]) if p["rect"] is not None else Rect(w // 4, h // 4, w // 8, h // 8)
        rect.check_within(w, h)
        out = img.copy()
        out[rect.slices] = p["value"]
        return out

    if kind == "jpeg":
        return jpeg_roundtrip(img, p["qf"]) if img.ndim == 2 else jpeg_roundtrip_rgb(img, p["qf"])

    rng = np.random.default_rng(spec.seed)
    if kind == "gaussian_noise":
        return to_uint8(img + rng.normal(0.0, p["sigma"], img.shape))

    if kind == "salt_pepper":
        u = rng.random((h, w))
        out = img.copy()
        half = p["density"] / 2
        out[u < half] = 0
        out[(u >= half) & (u < p["density"])] = 255
        return out

    raise AssertionError(kind)


# ---- tampering ----

FONT_5X7 = {
    " ": ["00000"] * 7,
    "A": ["01110", "10001", "10001", "11111", "10001", "10001", "10001"],
    "B": ["11110", "10001", "10001", "11110", "10001", "10001", "11110"],
    "C": ["01110", "10001", "10000", "10000", "10000", "10001", "01110"],
    "D": ["11110", "10001", "10001", "10001", "10001", "10001", "11110"],
    "E": ["11111", "10000", "10000", "11110", "10000", "10000", "11111"],
    "F": ["11111", "10000", "10000", "11110", "10000", "10000", "10000"],
    "G": ["01110", "10001", "10000", "10111", "10001", "10001", "01111"],
    "H": ["10001", "10001", "10001", "11111", "10001", "10001", "10001"],
    "I": ["01110", "00100", "00100", "00100", "00100", "00100", "01110"],
    "J": ["00111", "00010", "00010", "00010", "00010", "10010", "01100"],
    "K": ["10001", "10010", "10100", "11000", "10100", "10010", "10001"],
    "L": ["10000", "10000", "10000", "10000", "10000", "10000", "11111"],
    "M": ["10001", "11011", "10101", "10101", "10001", "10001", "10001"],
    "N": ["10001", "10001", "11001", "10101", "10011", "10001", "10001"],
    "O": ["01110", "10001", "10001", "10001", "10001", "10001", "01110"],
    "P": ["11110", "10001", "10001", "11110", "10000", "10000", "10000"],
    "Q": ["01110", "10001", "10001", "10001", "10101", "10010", "01101"],
    "R": ["11110", "10001", "10001", "11110", "10100", "10010", "10001"],
    "S": ["01111", "10000", "10000", "01110", "00001", "00001", "11110"],
    "T": ["11111", "00100", "00100", "00100", "00100", "00100", "00100"],
    "U": ["10001", "10001", "10001", "10001", "10001", "10001", "01110"],
    "V": ["10001", "10001", "10001", "10001", "10001", "01010", "00100"],
    "W": ["10001", "10001", "10001", "10101", "10101", "10101", "01010"],
    "X": ["10001", "10001", "01010", "00100", "01010", "10001", "10001"],
    "Y": ["10001", "10001", "01010", "00100", "00100", "00100", "00100"],
    "Z": ["11111", "00001", "00010", "00100", "01000", "10000", "11111"],
    "0": ["01110", "10001", "10011", "10101", "11001", "10001", "01110"],
    "1": ["00100", "01100", "00100", "00100", "00100", "00100", "01110"],
    "2": ["01110", "10001", "00001", "00010", "00100", "01000", "11111"],
    "3": ["11111", "00010", "00100", "00010", "00001", "10001", "01110"],
    "4": ["00010", "00110", "01010", "10010", "11111", "00010", "00010"],
    "5": ["11111", "10000", "11110", "00001", "00001", "10001", "01110"],
    "6": ["00110", "01000", "10000", "11110", "10001", "10001", "01110"],
    "7": ["11111", "00001", "00010", "00100", "01000", "01000", "01000"],
    "8": ["01110", "10001", "10001", "01110", "10001", "10001", "01110"],
    "9": ["01110", "10001", "10001", "01111", "00001", "00010", "01100"],
}


def render_text(text: str, scale: int = 1) -> np.ndarray:
    """Boolean ink mask for ``text`` in the 5x7 font, one blank column between glyphs."""
    glyphs = []
    for i, ch in enumerate(text.upper()):
        g = np.array([[c == "1" for c in row] for row in FONT_5X7[ch]])
        if i:
            glyphs.append(np.zeros((7, 1), dtype=bool))
        glyphs.append(g)
    mask = np.hstack(glyphs) if glyphs else np.zeros((7, 0), dtype=bool)
    return np.kron(mask, np.ones((scale, scale), dtype=bool)).astype(bool)


def synthetic_patch(size: int, rng: np.random.Generator) -> np.ndarray:
    """Smooth foreign texture: a coarse random field with a random linear ramp."""
    coarse = rng.uniform(0, 255, (max(2, size // 8),) * 2)
    field_ = resize_bilinear(to_uint8(coarse), size, size).astype(np.float64)
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)
    a, b = rng.uniform(-60, 60, 2)
    return to_uint8(field_ + a * xx + b * yy)


def match_histogram(source: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Rank-order tone mapping of ``source`` onto the sample values of ``reference``."""
    order = np.argsort(source.ravel(), kind="stable")
    ref_sorted = np.sort(reference.ravel())
    idx = np.linspace(0, ref_sorted.size - 1, source.size).round().astype(int)
    out = np.empty(source.size, dtype=np.uint8)
    out[order] = ref_sorted[idx]
    return out.reshape(source.shape)


def apply_tamper(image, spec: TamperSpec) -> np.ndarray:
    img = check_image(image)
    p = spec.params
    kind = spec.kind
    h, w = img.shape[:2]

    if kind == "copy_move":
        patch = copy_region(img, Rect(*p["src"]))
        return paste_region(img, patch, *p["dst"])

    if kind == "image_splicing":
        rng = np.random.default_rng(spec.seed)
        size = p["size"]
        x, y = p["at"]
        Rect(x, y, size, size).check_within(w, h)
        planes = img[..., None] if img.ndim == 2 else img
        patch = np.stack([synthetic_patch(size, rng) for _ in range(planes.shape[2])], axis=-1)
        if p["match_tones"]:
            # tone-match each plane to the region it replaces, as a careful forger would
            dest = planes[y : y + size, x : x + size]
            patch = np.stack([match_histogram(patch[..., c], dest[..., c]) for c in range(planes.shape[2])], axis=-1)
        if img.ndim == 2:
            patch = patch[..., 0]
        return paste_region(img, patch, x, y)

    if kind == "text_splicing":
        mask = render_text(p["text"], p["scale"])
        x, y = p["at"]
        Rect(x, y, mask.shape[1], mask.shape[0]).check_within(w, h)
        out = img.copy()
        region = out[y : y + mask.shape[0], x : x + mask.shape[1]]
        region[mask] = p["value"]
        return out

    if kind == "resize":
        return resize_bilinear(img, max(1, round(w * p["scale"])), max(1, round(h * p["scale"])))

    if kind == "cropping":
        cw, ch = max(1, round(w * p["keep"])), max(1, round(h * p["keep"]))
        return copy_region(img, Rect((w - cw) // 2, (h - ch) // 2, cw, ch))

    if kind == "noise_blur":
        rng = np.random.default_rng(spec.seed)
        noisy = to_uint8(img + rng.normal(0.0, p["sigma"], img.shape))
        return _per_channel(noisy, lambda c: to_uint8(uniform_filter(c.astype(np.float64), p["ksize"], mode="reflect")))

    raise AssertionError(kind)


def default_attacks(seed: int = 0) -> list[AttackSpec]:
    return [AttackSpec(k, seed=seed) for k in ATTACK_KINDS]


def default_tampers(seed: int = 0) -> list[TamperSpec]:
    return [TamperSpec(k, seed=seed) for k in TAMPER_KINDS]
