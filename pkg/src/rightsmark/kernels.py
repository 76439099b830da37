"""Transform kernels: orthonormal block DCT, 1-level Haar DWT, batched 8x8 SVD
and a JPEG quantisation round trip."""

from __future__ import annotations

from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .base import DimensionError, as_float, check_gray, to_uint8


class ConvergenceError(RuntimeError):
    pass


@lru_cache(maxsize=None)
def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II basis; row k is the k-th cosine."""
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    mat = np.sqrt(2.0 / n) * np.cos(np.pi * (2 * x + 1) * k / (2 * n))
    mat[0, :] = np.sqrt(1.0 / n)
    mat.setflags(write=False)
    return mat


def _check_square(block) -> np.ndarray:
    arr = np.asarray(block, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square block, got shape {arr.shape}")
    if arr.shape[0] not in (4, 8):
        raise DimensionError(f"block side must be 4 or 8, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("block has non-finite entries")
    return arr


def dct2(block) -> np.ndarray:
    """2-D orthonormal DCT-II of a 4x4 or 8x8 block."""
    arr = _check_square(block)
    d = dct_matrix(arr.shape[0])
    return d @ arr @ d.T


def idct2(coeffs) -> np.ndarray:
    arr = _check_square(coeffs)
    d = dct_matrix(arr.shape[0])
    return d.T @ arr @ d


# Batched helpers over stacks shaped (..., n, n).

def dct2_blocks(blocks: np.ndarray) -> np.ndarray:
    d = dct_matrix(blocks.shape[-1])
    return d @ blocks @ d.T


def idct2_blocks(coeffs: np.ndarray) -> np.ndarray:
    d = dct_matrix(coeffs.shape[-1])
    return d.T @ coeffs @ d


def to_blocks(arr: np.ndarray, n: int) -> np.ndarray:
    """(H, W) -> (H/n, W/n, n, n) view-copy in raster block order."""
    h, w = arr.shape
    if h % n or w % n:
        raise DimensionError(f"{h}x{w} is not divisible into {n}x{n} blocks")
    return arr.reshape(h // n, n, w // n, n).swapaxes(1, 2).copy()


def from_blocks(blocks: np.ndarray) -> np.ndarray:
    by, bx, n, _ = blocks.shape
    return blocks.swapaxes(1, 2).reshape(by * n, bx * n)


class SubbandSet(NamedTuple):
    LL: np.ndarray
    LH: np.ndarray
    HL: np.ndarray
    HH: np.ndarray


def dwt_haar(img) -> SubbandSet:
    """One level of the orthonormal 2-D Haar transform.

    For each 2x2 cell [[a, b], [c, d]]: LL=(a+b+c+d)/2, LH=(a+b-c-d)/2,
    HL=(a-b+c-d)/2, HH=(a-b-c+d)/2.
    """
    x = as_float(img)
    if x.ndim != 2:
        raise DimensionError("dwt_haar expects a 2-D array")
    h, w = x.shape
    if h % 2 or w % 2:
        raise DimensionError(f"dwt_haar needs even dimensions, got {h}x{w}")
    a = x[0::2, 0::2]
    b = x[0::2, 1::2]
    c = x[1::2, 0::2]
    d = x[1::2, 1::2]
    return SubbandSet(
        (a + b + c + d) / 2,
        (a + b - c - d) / 2,
        (a - b + c - d) / 2,
        (a - b - c + d) / 2,
    )


def idwt_haar(bands: SubbandSet) -> np.ndarray:
    ll, lh, hl, hh = (np.asarray(b, dtype=np.float64) for b in bands)
    if not (ll.shape == lh.shape == hl.shape == hh.shape):
        raise DimensionError("subbands must share one shape")
    h, w = ll.shape
    out = np.empty((2 * h, 2 * w))
    out[0::2, 0::2] = (ll + lh + hl + hh) / 2
    out[0::2, 1::2] = (ll + lh - hl - hh) / 2
    out[1::2, 0::2] = (ll - lh + hl - hh) / 2
    out[1::2, 1::2] = (ll - lh - hl + hh) / 2
    return out


SVD_MAX_SWEEPS = 100
SVD_TOL = 1e-12


def svd_batch(mats: np.ndarray, max_sweeps: int = SVD_MAX_SWEEPS, tol: float = SVD_TOL):
    """Cyclic one-sided Jacobi SVD over a stack of square matrices.

    Returns (U, S, V) with ``mats[i] = U[i] @ diag(S[i]) @ V[i].T`` and S
    sorted descending per matrix.
    """
    a = np.array(mats, dtype=np.float64)
    if a.ndim == 2:
        a = a[None]
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DimensionError("svd_batch expects a stack of square matrices")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    batch, n, _ = a.shape
    work = a.transpose(0, 2, 1).copy()  # rows of work are columns of the matrix
    v = np.tile(np.eye(n), (batch, 1, 1))  # rows of v are columns of V
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    # columns below round-off of the whole matrix are treated as converged
    floor = (np.finfo(np.float64).eps * np.linalg.norm(a, axis=(1, 2))) ** 2

    for _ in range(max_sweeps):
        rotated = False
        for p, q in pairs:
            cp, cq = work[:, p], work[:, q]
            alpha = np.einsum("ij,ij->i", cp, cp)
            beta = np.einsum("ij,ij->i", cq, cq)
            gamma = np.einsum("ij,ij->i", cp, cq)
            active = (np.abs(gamma) > tol * np.sqrt(alpha * beta)) & (np.abs(gamma) > floor)
            if not active.any():
                continue
            g = np.where(active, gamma, 1.0)
            zeta = (beta - alpha) / (2.0 * g)
            t = np.sign(zeta) / (np.abs(zeta) + np.hypot(1.0, zeta))
            t = np.where(zeta == 0, 1.0, t)
            active &= t != 0
            if not active.any():
                continue
            rotated = True
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            c = np.where(active, c, 1.0)[:, None]
            s = np.where(active, s, 0.0)[:, None]
            new_p = c * cp - s * cq
            new_q = s * cp + c * cq
            work[:, p], work[:, q] = new_p, new_q
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = c * vp - s * vq
            v[:, q] = s * vp + c * vq
        if not rotated:
            break
    else:
        raise ConvergenceError(f"Jacobi SVD did not converge in {max_sweeps} sweeps")

    sigma = np.linalg.norm(work, axis=2)
    order = np.argsort(-sigma, axis=1, kind="stable")
    idx = np.arange(batch)[:, None]
    sigma = sigma[idx, order]
    work = work[idx, order]
    v = v[idx, order]

    u = np.zeros_like(work)
    scale = np.maximum(sigma[:, :1], 1.0)
    nonzero = sigma > 1e-13 * scale
    u[nonzero] = work[nonzero] / sigma[nonzero][:, None]
    for i in np.flatnonzero(~nonzero.all(axis=1)):
        u[i] = _complete_basis(u[i], nonzero[i])
    return u.transpose(0, 2, 1), sigma, v.transpose(0, 2, 1)


def _complete_basis(rows: np.ndarray, keep: np.ndarray) -> np.ndarray:
    """Replace the rows not in ``keep`` with an orthonormal completion."""
    n = rows.shape[0]
    basis = [rows[k] for k in range(n) if keep[k]]
    for e in np.eye(n):
        if len(basis) == n:
            break
        vec = e - sum((e @ b) * b for b in basis) if basis else e.copy()
        norm = np.linalg.norm(vec)
        if norm > 1e-8:
            basis.append(vec / norm)
    out = rows.copy()
    fill = iter(basis[int(keep.sum()):])
    for k in range(n):
        if not keep[k]:
            out[k] = next(fill)
    return out


def svd8(m):
    """SVD of a single 8x8 matrix: returns (U, S, V) with M = U diag(S) V^T."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.shape != (8, 8):
        raise DimensionError(f"svd8 expects an 8x8 matrix, got {arr.shape}")
    u, s, v = svd_batch(arr[None])
    return u[0], s[0], v[0]


JPEG_LUMA_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)


JPEG_CHROMA_TABLE = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.int64,
)


def quant_table(qf: int, base: np.ndarray = JPEG_LUMA_TABLE) -> np.ndarray:
    """libjpeg-style quality scaling of a base quantisation table."""
    if isinstance(qf, bool) or int(qf) != qf or not 1 <= int(qf) <= 100:
        raise ValueError(f"quality factor must be an integer in 1..100, got {qf}")
    qf = int(qf)
    scale = 5000 // qf if qf < 50 else 200 - 2 * qf
    table = (base * scale + 50) // 100
    return np.clip(table, 1, 255).astype(np.float64)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _quantise_plane(x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Level-shifted block DCT quantisation of a real plane; returns reals."""
    h, w = x.shape
    ph, pw = (-h) % 8, (-w) % 8
    if ph or pw:
        x = np.pad(x, ((0, ph), (0, pw)), mode="reflect" if min(h, w) > 1 else "edge")
    coeffs = dct2_blocks(to_blocks(x - 128.0, 8))
    coeffs = _round_half_away(coeffs / q) * q
    return (from_blocks(idct2_blocks(coeffs)) + 128.0)[:h, :w]


def jpeg_roundtrip(img, qf: int) -> np.ndarray:
    """Baseline-JPEG quantisation damage on a grayscale image, no entropy coding."""
    q = quant_table(qf)
    arr = check_gray(img)
    return to_uint8(_quantise_plane(as_float(arr), q))


def jpeg_roundtrip_rgb(img, qf: int) -> np.ndarray:
    """JFIF YCbCr conversion, per-plane quantisation (no subsampling), back to RGB."""
    ql, qc = quant_table(qf), quant_table(qf, JPEG_CHROMA_TABLE)
    rgb = np.asarray(img, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128 + 0.5 * r - 0.418688 * g - 0.081312 * b
    # planes are stored as 8-bit samples before the DCT, as an encoder would
    y, cb, cr = (_quantise_plane(to_uint8(p).astype(np.float64), qt) for p, qt in ((y, ql), (cb, qc), (cr, qc)))
    out = np.stack(
        [
            y + 1.402 * (cr - 128),
            y - 0.344136 * (cb - 128) - 0.714136 * (cr - 128),
            y + 1.772 * (cb - 128),
        ],
        axis=-1,
    )
    return to_uint8(out)
