"""QR watermark payloads.

A block hash is encoded as a byte-mode QR symbol (ECC level L, mask 0,
smallest version 1..10 that fits) and centred in a 64x64 bit matrix, giving
exactly one bit per 8x8 block of a 512x512 host.
"""

from __future__ import annotations

import numpy as np

from .base import N_WATERMARK_BITS, check_bits

MATRIX_SIDE = 64
MAX_VERSION = 10

# ---- GF(256) with primitive polynomial x^8 + x^4 + x^3 + x^2 + 1 ----

GF_POLY = 0x11D
GF_EXP = np.zeros(512, dtype=np.int64)
GF_LOG = np.zeros(256, dtype=np.int64)
_x = 1
for _i in range(255):
    GF_EXP[_i] = _x
    GF_LOG[_x] = _i
    _x <<= 1
    if _x & 0x100:
        _x ^= GF_POLY
GF_EXP[255:510] = GF_EXP[:255]
del _x, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def rs_generator(nsym: int) -> list[int]:
    """Monic generator polynomial prod_{i<nsym} (x - a^i), highest degree first."""
    g = [1]
    for i in range(nsym):
        root = int(GF_EXP[i])
        nxt = g + [0]
        for j in range(len(g)):
            nxt[j + 1] ^= gf_mul(g[j], root)
        g = nxt
    return g


def rs_encode(data: bytes, nsym: int) -> bytes:
    """Reed-Solomon parity: remainder of data(x) * x^nsym modulo the generator."""
    if nsym < 0:
        raise ValueError("nsym must be non-negative")
    if nsym == 0:
        return b""
    gen = rs_generator(nsym)
    rem = [0] * nsym
    for byte in data:
        factor = byte ^ rem[0]
        rem = rem[1:] + [0]
        if factor:
            for j in range(nsym):
                rem[j] ^= gf_mul(gen[j + 1], factor)
    return bytes(rem)


# ---- QR symbol construction ----

# ECC level L only, indexed by version (index 0 unused).
_ECC_PER_BLOCK_L = (None, 7, 10, 15, 20, 26, 18, 20, 24, 30, 18)
_NUM_BLOCKS_L = (None, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4)
_FORMAT_ECC_L = 0b01
MASK_PATTERN = 0


def _raw_data_modules(version: int) -> int:
    result = (16 * version + 128) * version + 64
    if version >= 2:
        n_align = version // 7 + 2
        result -= (25 * n_align - 10) * n_align - 55
        if version >= 7:
            result -= 36
    return result


def data_codewords(version: int) -> int:
    return _raw_data_modules(version) // 8 - _ECC_PER_BLOCK_L[version] * _NUM_BLOCKS_L[version]


def _count_bits(version: int) -> int:
    return 8 if version <= 9 else 16


def byte_capacity(version: int) -> int:
    """Byte-mode payload capacity at ECC level L."""
    return (data_codewords(version) * 8 - 4 - _count_bits(version)) // 8


def choose_version(n_bytes: int) -> int:
    for v in range(1, MAX_VERSION + 1):
        if byte_capacity(v) >= n_bytes:
            return v
    raise ValueError(
        f"payload of {n_bytes} bytes exceeds QR version {MAX_VERSION} capacity "
        f"({byte_capacity(MAX_VERSION)} bytes at ECC L)"
    )


def _alignment_positions(version: int) -> list[int]:
    if version == 1:
        return []
    n_align = version // 7 + 2
    step = (version * 8 + n_align * 3 + 5) // (n_align * 4 - 4) * 2
    last = version * 4 + 10
    return [6] + [last - i * step for i in range(n_align - 2, -1, -1)]


def _bch_format_bits(data5: int) -> int:
    rem = data5
    for _ in range(10):
        rem = (rem << 1) ^ ((rem >> 9) * 0x537)
    return ((data5 << 10) | rem) ^ 0x5412


def _bch_version_bits(version: int) -> int:
    rem = version
    for _ in range(12):
        rem = (rem << 1) ^ ((rem >> 11) * 0x1F25)
    return (version << 12) | rem


class _Symbol:
    def __init__(self, version: int):
        self.version = version
        self.size = 17 + 4 * version
        self.modules = np.zeros((self.size, self.size), dtype=bool)
        self.is_function = np.zeros((self.size, self.size), dtype=bool)

    def set_function(self, x: int, y: int, dark: bool) -> None:
        self.modules[y, x] = dark
        self.is_function[y, x] = True

    def draw_function_patterns(self) -> None:
        size = self.size
        for i in range(size):
            self.set_function(6, i, i % 2 == 0)
            self.set_function(i, 6, i % 2 == 0)
        self._finder(3, 3)
        self._finder(size - 4, 3)
        self._finder(3, size - 4)
        pos = _alignment_positions(self.version)
        last = len(pos) - 1
        for i, py in enumerate(pos):
            for j, px in enumerate(pos):
                # skip the three finder corners
                if (i, j) in ((0, 0), (0, last), (last, 0)):
                    continue
                self._alignment(px, py)
        self.draw_format_bits()
        self._version_bits()

    def _finder(self, cx: int, cy: int) -> None:
        for dy in range(-4, 5):
            for dx in range(-4, 5):
                x, y = cx + dx, cy + dy
                if 0 <= x < self.size and 0 <= y < self.size:
                    dist = max(abs(dx), abs(dy))
                    self.set_function(x, y, dist not in (2, 4))

    def _alignment(self, cx: int, cy: int) -> None:
        for dy in range(-2, 3):
            for dx in range(-2, 3):
                self.set_function(cx + dx, cy + dy, max(abs(dx), abs(dy)) != 1)

    def draw_format_bits(self) -> None:
        bits = _bch_format_bits((_FORMAT_ECC_L << 3) | MASK_PATTERN)
        bit = lambda i: bool((bits >> i) & 1)  # noqa: E731
        for i in range(6):
            self.set_function(8, i, bit(i))
        self.set_function(8, 7, bit(6))
        self.set_function(8, 8, bit(7))
        self.set_function(7, 8, bit(8))
        for i in range(9, 15):
            self.set_function(14 - i, 8, bit(i))
        size = self.size
        for i in range(8):
            self.set_function(size - 1 - i, 8, bit(i))
        for i in range(8, 15):
            self.set_function(8, size - 15 + i, bit(i))
        self.set_function(8, size - 8, True)  # dark module

    def _version_bits(self) -> None:
        if self.version < 7:
            return
        bits = _bch_version_bits(self.version)
        for i in range(18):
            dark = bool((bits >> i) & 1)
            a, b = self.size - 11 + i % 3, i // 3
            self.set_function(a, b, dark)
            self.set_function(b, a, dark)

    def place_codewords(self, codewords: bytes) -> None:
        size = self.size
        i = 0
        total = len(codewords) * 8
        right = size - 1
        while right >= 1:
            if right == 6:
                right = 5
            for vert in range(size):
                for j in range(2):
                    x = right - j
                    upward = ((right + 1) & 2) == 0
                    y = size - 1 - vert if upward else vert
                    if not self.is_function[y, x] and i < total:
                        self.modules[y, x] = bool((codewords[i >> 3] >> (7 - (i & 7))) & 1)
                        i += 1
            right -= 2

    def apply_mask(self) -> None:
        yy, xx = np.indices(self.modules.shape)
        invert = ((xx + yy) % 2 == 0) & ~self.is_function
        self.modules ^= invert


def _encode_data(payload: bytes, version: int) -> bytes:
    bits: list[int] = []

    def put(value: int, n: int) -> None:
        bits.extend((value >> i) & 1 for i in range(n - 1, -1, -1))

    put(0b0100, 4)
    put(len(payload), _count_bits(version))
    for byte in payload:
        put(byte, 8)
    capacity = data_codewords(version) * 8
    put(0, min(4, capacity - len(bits)))
    put(0, (-len(bits)) % 8)
    pad = 0xEC
    while len(bits) < capacity:
        put(pad, 8)
        pad ^= 0xEC ^ 0x11
    return bytes(int("".join(map(str, bits[k : k + 8])), 2) for k in range(0, len(bits), 8))


def _add_ecc_and_interleave(data: bytes, version: int) -> bytes:
    n_blocks = _NUM_BLOCKS_L[version]
    ecc_len = _ECC_PER_BLOCK_L[version]
    raw = _raw_data_modules(version) // 8
    n_short = n_blocks - raw % n_blocks
    short_len = raw // n_blocks
    blocks = []
    k = 0
    for i in range(n_blocks):
        dlen = short_len - ecc_len + (0 if i < n_short else 1)
        chunk = data[k : k + dlen]
        k += dlen
        ecc = rs_encode(chunk, ecc_len)
        if i < n_short:
            chunk = chunk + b"\x00"  # placeholder keeps columns aligned
        blocks.append(chunk + ecc)
    out = bytearray()
    for col in range(len(blocks[0])):
        for i, block in enumerate(blocks):
            if col != short_len - ecc_len or i >= n_short:
                out.append(block[col])
    return bytes(out)


def qr_symbol(text: str) -> np.ndarray:
    """Bare QR symbol (no quiet zone) as a bool array, True = dark."""
    payload = text.encode("utf-8")
    version = choose_version(len(payload))
    sym = _Symbol(version)
    sym.draw_function_patterns()
    sym.place_codewords(_add_ecc_and_interleave(_encode_data(payload, version), version))
    sym.apply_mask()
    return sym.modules.copy()


def qr_matrix(text: str) -> np.ndarray:
    """64x64 uint8 matrix (1 = dark) with the QR symbol centred on a light field."""
    sym = qr_symbol(text)
    side = sym.shape[0]
    off = (MATRIX_SIDE - side) // 2
    out = np.zeros((MATRIX_SIDE, MATRIX_SIDE), dtype=np.uint8)
    out[off : off + side, off : off + side] = sym
    return out


def qr_version_for(text: str) -> int:
    return choose_version(len(text.encode("utf-8")))


def matrix_bits(matrix) -> np.ndarray:
    arr = np.asarray(matrix)
    if arr.shape != (MATRIX_SIDE, MATRIX_SIDE):
        raise ValueError(f"expected a {MATRIX_SIDE}x{MATRIX_SIDE} matrix, got {arr.shape}")
    return check_bits(arr.ravel(), N_WATERMARK_BITS)


def bits_matrix(bits) -> np.ndarray:
    return check_bits(bits, N_WATERMARK_BITS).reshape(MATRIX_SIDE, MATRIX_SIDE)


def block_payload(block_hash: str) -> str:
    """Watermark text for a ledger block hash: '0x' + 64 lowercase hex."""
    h = block_hash.lower().removeprefix("0x")
    if len(h) != 64 or any(c not in "0123456789abcdef" for c in h):
        raise ValueError(f"not a 64-hex block hash: {block_hash!r}")
    return "0x" + h


def matrix_image(matrix) -> np.ndarray:
    """Render a bit matrix as a grayscale image, dark modules at intensity 0."""
    return np.where(np.asarray(matrix, dtype=bool), 0, 255).astype(np.uint8)
