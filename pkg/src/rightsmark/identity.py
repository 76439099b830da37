"""Image identity: difference hash, raster content digest and Hamming distance."""

from __future__ import annotations

import hashlib
import struct

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .base import check_image
from .imaging import resize_area, to_grayscale


class Hash64(int):
    """64-bit perceptual hash that renders as 16 lowercase hex digits."""

    def __new__(cls, value):
        if isinstance(value, str):
            text = value.lower().removeprefix("0x")
            if len(text) != 16:
                raise ValueError(f"Hash64 hex must be 16 characters, got {value!r}")
            value = int(text, 16)
        value = int(value)
        if not 0 <= value < 1 << 64:
            raise ValueError("Hash64 out of range")
        return super().__new__(cls, value)

    def __str__(self) -> str:
        return f"{int(self):016x}"

    def __repr__(self) -> str:
        return f"Hash64('{self}')"

    @property
    def hex(self) -> str:
        return str(self)


def dhash(img) -> Hash64:
    """Horizontal difference hash on a 9x8 area-averaged luma thumbnail.

    Bit (r, c) is set when pixel (r, c+1) is brighter than (r, c); bits are
    packed row-major, most significant first.
    """
    gray = to_grayscale(img)
    thumb = resize_area(gray, 9, 8).astype(np.int16)
    bits = (thumb[:, 1:] > thumb[:, :-1]).ravel()
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return Hash64(value)


def hamming64(a, b) -> int:
    return (int(Hash64(a)) ^ int(Hash64(b))).bit_count()


class ContentDigest(bytes):
    def __new__(cls, digest: bytes):
        if len(digest) != 32:
            raise ValueError("ContentDigest must be 32 bytes")
        return super().__new__(cls, digest)

    def __str__(self) -> str:
        return self.hex()


def content_hash(data: bytes) -> ContentDigest:
    """SHA-256 of an exact byte sequence."""
    return ContentDigest(hashlib.sha256(bytes(data)).digest())


def raster_bytes(img) -> bytes:
    """Canonical raster form: width, height, channels (u32 big-endian), then samples."""
    arr = check_image(img)
    h, w = arr.shape[:2]
    channels = 1 if arr.ndim == 2 else 3
    return struct.pack(">III", w, h, channels) + arr.tobytes()


def image_digest(img) -> ContentDigest:
    return content_hash(raster_bytes(img))


class DHasher(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping a batch of images to their 64-bit dHashes.

    ``transform`` returns an int array of shape (n_images,) (uint64 values);
    ``hex`` renders them as strings.
    """

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        return np.array([int(dhash(img)) for img in _iter_images(X)], dtype=np.uint64)

    @staticmethod
    def hex(hashes) -> list[str]:
        return [str(Hash64(int(h))) for h in hashes]


def _iter_images(X):
    # a lone (H, W) or (H, W, 3) array is one image, anything else a sequence
    if isinstance(X, np.ndarray) and (X.ndim == 2 or (X.ndim == 3 and X.shape[2] == 3)):
        return [X]
    return list(X)
