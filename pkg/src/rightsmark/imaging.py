"""8-bit raster I/O, grayscale conversion, resampling and region edits."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .base import ImageFormatError, check_gray, check_image, to_uint8


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def check_within(self, width: int, height: int) -> None:
        if self.w < 1 or self.h < 1 or self.x < 0 or self.y < 0:
            raise ValueError(f"invalid rect {self}")
        if self.x + self.w > width or self.y + self.h > height:
            raise ValueError(f"rect {self} exceeds image bounds {width}x{height}")

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def area(self) -> int:
        return self.w * self.h

    def iou(self, other: "Rect") -> float:
        ix = max(0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        inter = ix * iy
        union = self.area() + other.area() - inter
        return inter / union if union else 0.0


_PNG_MODES = {"L": None, "LA": "L", "RGB": None, "RGBA": "RGB", "P": "RGB"}


def _decode(source, label: str) -> np.ndarray:
    try:
        with PILImage.open(source) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{label}: not a PNG file")
            if im.mode not in _PNG_MODES:
                raise ImageFormatError(f"{label}: unsupported PNG mode {im.mode} (8-bit only)")
            if im.mode == "P":
                im = im.convert("RGBA")
            target = _PNG_MODES.get(im.mode)
            if target is not None:
                im = im.convert(target)
            im.load()
            arr = np.array(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{label}: malformed PNG ({exc})") from exc
    return check_image(arr)


def load_png(path) -> np.ndarray:
    """Decode an 8-bit PNG into ``(H, W)`` or ``(H, W, 3)`` uint8; alpha is dropped."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return _decode(path, str(path))


def decode_png(data: bytes) -> np.ndarray:
    return _decode(io.BytesIO(data), "PNG bytes")


def encode_png(img) -> bytes:
    """Deterministic PNG encoding (no metadata chunks)."""
    arr = check_image(img)
    buf = io.BytesIO()
    PILImage.fromarray(arr, mode="L" if arr.ndim == 2 else "RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img, path) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def to_grayscale(img) -> np.ndarray:
    """BT.601 luma, rounded half-up. Single-channel input is returned unchanged."""
    arr = check_image(img)
    if arr.ndim == 2:
        return arr
    rgb = arr.astype(np.float64)
    y = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return to_uint8(y)


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix of source coverage fractions, rows summing to 1."""
    scale = n_in / n_out
    weights = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * scale, (i + 1) * scale
        j0, j1 = int(np.floor(lo)), min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            weights[i, j] = min(hi, j + 1) - max(lo, j)
    return weights / scale


def resize_area(img, out_w: int, out_h: int) -> np.ndarray:
    """Area-average resample of a grayscale image, rounded half-up."""
    arr = check_gray(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be positive")
    h, w = arr.shape
    if (w, h) == (out_w, out_h):
        return arr.copy()
    rows = _area_weights(h, out_h)
    cols = _area_weights(w, out_w)
    out = rows @ arr.astype(np.float64) @ cols.T
    # guard against 127.49999 from summation order on exact .5 means
    return to_uint8(np.round(out, 9))


def resize_bilinear(img, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resample with half-pixel centres and edge clamping."""
    arr = check_image(img)
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be positive")
    h, w = arr.shape[:2]
    if (w, h) == (out_w, out_h):
        return arr.copy()
    src = arr.astype(np.float64)
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]
    if src.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bottom = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    return to_uint8(top * (1 - fy) + bottom * fy)


def copy_region(img, src: Rect) -> np.ndarray:
    arr = check_image(img)
    src.check_within(arr.shape[1], arr.shape[0])
    return arr[src.slices].copy()


def paste_region(img, patch, x: int, y: int) -> np.ndarray:
    arr = check_image(img)
    patch = check_image(patch)
    if patch.ndim != arr.ndim:
        raise ValueError("patch and image channel counts differ")
    Rect(x, y, patch.shape[1], patch.shape[0]).check_within(arr.shape[1], arr.shape[0])
    out = arr.copy()
    out[y : y + patch.shape[0], x : x + patch.shape[1]] = patch
    return out
