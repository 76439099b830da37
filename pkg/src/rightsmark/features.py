"""Single-scale ORB-style features: FAST-9 corners ranked by Harris response,
intensity-centroid orientation and rotated 256-bit BRIEF descriptors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter, maximum_filter, sobel, uniform_filter

from .base import DimensionError, check_gray
from .imaging import to_grayscale

BRIEF_SEED = 0x5EC0DE
PATCH_RADIUS = 15
PAIR_EXTENT = 13
# rotated pair offsets reach PAIR_EXTENT * sqrt(2)
BORDER = max(PATCH_RADIUS, int(np.ceil(PAIR_EXTENT * np.sqrt(2)))) + 1
MIN_SIDE = 32

# Bresenham circle of radius 3, clockwise from 12 o'clock, as (dx, dy)
_CIRCLE = np.array(
    [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
     (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]
)
_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.uint16)


@dataclass(frozen=True)
class Keypoint:
    x: int
    y: int
    response: float
    angle: float


@dataclass
class FeatureSet:
    keypoints: list[Keypoint]
    descriptors: np.ndarray  # (n, 32) uint8, 256 bits per row

    def __len__(self) -> int:
        return len(self.keypoints)


def brief_pattern(seed: int = BRIEF_SEED, n_pairs: int = 256) -> np.ndarray:
    """(n_pairs, 4) integer offsets (x1, y1, x2, y2) inside the oriented patch."""
    rng = np.random.default_rng(seed)
    pts = np.clip(np.round(rng.normal(0.0, 31 / 5, (n_pairs, 4))), -PAIR_EXTENT, PAIR_EXTENT)
    return pts.astype(np.int64)


def _disk_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    yy, xx = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    inside = xx**2 + yy**2 <= radius**2
    return xx[inside], yy[inside]


def fast9(gray: np.ndarray, threshold: int = 20) -> tuple[np.ndarray, np.ndarray]:
    """FAST-9 segment test: returns (corner mask, score map).

    A pixel is a corner when 9 contiguous circle pixels are all brighter than
    p + threshold or all darker than p - threshold. The score is the larger of
    the summed excess over the brighter and the darker circle pixels.
    """
    img = gray.astype(np.int16)
    h, w = img.shape
    core = img[3 : h - 3, 3 : w - 3]
    ring = np.stack([img[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx] for dx, dy in _CIRCLE])
    brighter = ring > core + threshold
    darker = ring < core - threshold

    def has_arc(flags):
        doubled = np.concatenate([flags, flags[:8]])
        found = np.zeros(core.shape, dtype=bool)
        for start in range(16):
            found |= np.logical_and.reduce(doubled[start : start + 9])
        return found

    corner = has_arc(brighter) | has_arc(darker)
    diff = ring - core
    score = np.maximum(
        np.where(brighter, diff - threshold, 0).sum(axis=0),
        np.where(darker, -diff - threshold, 0).sum(axis=0),
    ).astype(np.float64)
    mask = np.zeros((h, w), dtype=bool)
    scores = np.zeros((h, w))
    mask[3 : h - 3, 3 : w - 3] = corner
    scores[3 : h - 3, 3 : w - 3] = np.where(corner, score, 0.0)
    return mask, scores


def harris_response(gray: np.ndarray, k: float = 0.04, window: int = 7) -> np.ndarray:
    img = gray.astype(np.float64)
    ix = sobel(img, axis=1, mode="reflect")
    iy = sobel(img, axis=0, mode="reflect")
    sxx = uniform_filter(ix * ix, window, mode="reflect")
    syy = uniform_filter(iy * iy, window, mode="reflect")
    sxy = uniform_filter(ix * iy, window, mode="reflect")
    return sxx * syy - sxy * sxy - k * (sxx + syy) ** 2


def detect_features(
    img,
    n_keypoints: int | None = 500,
    fast_threshold: int = 20,
    seed: int = BRIEF_SEED,
) -> FeatureSet:
    """Oriented FAST corners with rotated BRIEF descriptors.

    ``n_keypoints`` caps the Harris-ranked corner list; ``None`` keeps them all.
    """
    gray = check_gray(to_grayscale(img))
    h, w = gray.shape
    if h < MIN_SIDE or w < MIN_SIDE:
        raise DimensionError(f"feature detection needs at least {MIN_SIDE}x{MIN_SIDE}, got {w}x{h}")

    corner, score = fast9(gray, fast_threshold)
    corner &= score == maximum_filter(score, size=3, mode="constant")
    corner[:BORDER] = corner[h - BORDER :] = False
    corner[:, :BORDER] = corner[:, w - BORDER :] = False
    ys, xs = np.nonzero(corner)
    if ys.size == 0:
        return FeatureSet([], np.zeros((0, 32), dtype=np.uint8))

    harris = harris_response(gray)[ys, xs]
    # strongest first; ties resolved by raster position for determinism
    order = np.lexsort((xs, ys, -harris))
    if n_keypoints is not None:
        order = order[:n_keypoints]
    ys, xs, harris = ys[order], xs[order], harris[order]

    dx, dy = _disk_offsets(PATCH_RADIUS)
    patch = gray[ys[:, None] + dy[None, :], xs[:, None] + dx[None, :]].astype(np.float64)
    angles = np.arctan2((patch * dy).sum(axis=1), (patch * dx).sum(axis=1))

    smooth = gaussian_filter(gray.astype(np.float64), sigma=2.0, mode="reflect")
    pairs = brief_pattern(seed)
    cos, sin = np.cos(angles)[:, None], np.sin(angles)[:, None]

    def sample(px, py):
        rx = np.rint(px[None, :] * cos - py[None, :] * sin).astype(np.int64)
        ry = np.rint(px[None, :] * sin + py[None, :] * cos).astype(np.int64)
        return smooth[ys[:, None] + ry, xs[:, None] + rx]

    bits = sample(pairs[:, 0], pairs[:, 1]) < sample(pairs[:, 2], pairs[:, 3])
    descriptors = np.packbits(bits, axis=1)
    keypoints = [Keypoint(int(x), int(y), float(r), float(a)) for x, y, r, a in zip(xs, ys, harris, angles)]
    return FeatureSet(keypoints, descriptors)


def hamming_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between two stacks of packed descriptors."""
    if a.size == 0 or b.size == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.int64)
    xor = np.bitwise_xor(a[:, None, :], b[None, :, :])
    return _POPCOUNT[xor].sum(axis=2, dtype=np.int64)


def mutual_matches(a: np.ndarray, b: np.ndarray, max_distance: int = 64) -> list[tuple[int, int, int]]:
    """Cross-checked nearest neighbours within ``max_distance`` bits: (i, j, distance)."""
    dist = hamming_matrix(a, b)
    if dist.size == 0:
        return []
    best_j = dist.argmin(axis=1)
    best_i = dist.argmin(axis=0)
    out = []
    for i, j in enumerate(best_j):
        if best_i[j] == i and dist[i, j] <= max_distance:
            out.append((i, int(j), int(dist[i, j])))
    return out
