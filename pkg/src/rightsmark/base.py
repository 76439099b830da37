"""Input validation helpers shared by the estimators and functional API.

Images are plain numpy arrays: ``(H, W)`` for grayscale, ``(H, W, 3)`` for RGB,
always ``uint8``. Watermark payloads are flat ``uint8`` arrays of 0/1.
"""

from __future__ import annotations

import numpy as np

N_WATERMARK_BITS = 4096


class ImageFormatError(ValueError):
    """Raised when an array is not a valid 8-bit raster."""


class DimensionError(ValueError):
    """Raised when image shapes do not agree with an operation's contract."""


def check_image(img, *, allow_color: bool = True, name: str = "image") -> np.ndarray:
    """Validate an 8-bit raster and return it as a C-contiguous uint8 array.

    Float or wider integer input is accepted only if every sample is an
    integer in [0, 255].
    """
    arr = np.asarray(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 2:
        pass
    elif arr.ndim == 3 and arr.shape[2] == 3:
        if not allow_color:
            raise ImageFormatError(f"{name} must be single-channel, got shape {arr.shape}")
    else:
        raise ImageFormatError(f"{name} must have shape (H, W) or (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ImageFormatError(f"{name} is empty")
    if arr.dtype != np.uint8:
        if arr.dtype.kind not in "uif":
            raise ImageFormatError(f"{name} has non-numeric dtype {arr.dtype}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.max() > 255:
            raise ImageFormatError(f"{name} samples must lie in [0, 255]")
        if arr.dtype.kind == "f" and not np.all(arr == np.round(arr)):
            raise ImageFormatError(f"{name} samples must be integers")
        arr = arr.astype(np.uint8)
    return np.ascontiguousarray(arr)


def check_gray(img, name: str = "image") -> np.ndarray:
    return check_image(img, allow_color=False, name=name)


def check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def check_bits(bits, n_bits: int | None = N_WATERMARK_BITS, name: str = "bits") -> np.ndarray:
    """Validate a flat 0/1 vector, returning it as uint8."""
    arr = np.asarray(bits)
    if arr.ndim == 2:
        arr = arr.ravel()
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if n_bits is not None and arr.size != n_bits:
        raise ValueError(f"{name} must have length {n_bits}, got {arr.size}")
    if arr.dtype == bool:
        return arr.astype(np.uint8)
    if arr.size and not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return arr.astype(np.uint8)


def as_float(img: np.ndarray) -> np.ndarray:
    return np.asarray(img, dtype=np.float64)


def to_uint8(values: np.ndarray) -> np.ndarray:
    """Round half-up and clamp a real array to 8-bit samples."""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)
