"""End-to-end registration, verification and benchmarking.

Registration fingerprints the image, appends a ledger block, embeds the QR of
``"0x" + block_hash`` and stores both the original and the watermarked PNG in
the content store. Verification extracts the watermark blindly, finds the
closest ledger block by QR bit distance, confirms the perceptual hash against
the stored original and runs the tamper-detection layers.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable

import numpy as np

from .attacks import apply_attack, apply_tamper, default_attacks, default_tampers
from .base import DimensionError, check_image
from .detection import TamperReport, detect_report
from .identity import dhash, hamming64, image_digest
from .imaging import decode_png, encode_png, resize_area, resize_bilinear, save_png
from .metrics import bit_errors, mse, psnr
from .payload import block_payload, matrix_bits, qr_matrix
from .registry import ContentStore, Ledger, LedgerError, RegistrationArgs, derive_address
from .watermark import HOST_SHAPE, Codec, embed_color, extract_any

TAU_QR = 820
TAU_HASH = 10
NO_MATCH = "no watermark match"
CONFIRMED = "ownership confirmed"
HASH_MISMATCH = "watermark matched, perceptual hash differs"
BENCH_CODECS = ("DCT", "DWT_DCT", "DCT_SVD")
MAX_LISTED_BOXES = 20


@dataclass
class PipelineConfig:
    codec: str = "DCT"
    strength: float | None = None
    resize: bool = True  # otherwise non-512x512 input raises DimensionError
    tau_qr: int = TAU_QR
    tau_hash: int = TAU_HASH
    clock: Callable[[], float] = time.time

    def codec_spec(self) -> Codec:
        return Codec(self.codec, self.strength)


@dataclass(frozen=True)
class OwnerInfo:
    owner: str
    author: str
    name: str
    email: str
    copyright: str

    def address(self) -> str:
        o = self.owner.strip().lower()
        if o.startswith("0x") and len(o) == 42 and all(c in "0123456789abcdef" for c in o[2:]):
            return o
        return derive_address(self.owner)


@dataclass
class RegistrationOutcome:
    block_hash: str
    block_number: int
    image_id: str
    image_hash: str
    cas_cid: str
    original_cid: str
    manifest_cid: str
    watermarked: np.ndarray = field(repr=False)
    watermarked_path: str | None = None


def _working_copy(img, config: PipelineConfig) -> np.ndarray:
    arr = check_image(img)
    if arr.shape[:2] == HOST_SHAPE:
        return arr
    if not config.resize:
        raise DimensionError(f"host must be {HOST_SHAPE[1]}x{HOST_SHAPE[0]}, got {arr.shape[1]}x{arr.shape[0]}")
    return resize_area(arr, HOST_SHAPE[1], HOST_SHAPE[0])


@lru_cache(maxsize=4096)
def _payload_bits(block_hash: str) -> bytes:
    return matrix_bits(qr_matrix(block_payload(block_hash))).tobytes()


def payload_bits(block_hash: str) -> np.ndarray:
    """The 4096 watermark bits that encode a block hash."""
    return np.frombuffer(_payload_bits(block_hash), dtype=np.uint8).copy()


def register(image, owner: OwnerInfo, ledger_dir, cas_dir, config: PipelineConfig | None = None,
             out_path=None) -> RegistrationOutcome:
    config = config or PipelineConfig()
    work = _working_copy(image, config)
    store = ContentStore(cas_dir)
    ledger = Ledger(ledger_dir, clock=config.clock)

    image_id = dhash(work)
    image_hash = image_digest(work)
    original_cid = store.put(encode_png(work))
    args = RegistrationArgs(
        owner_address=owner.address(),
        image_hash=str(image_hash),
        creation_name=owner.name,
        creation_author=owner.author,
        copyright_owner=owner.copyright,
        mail_address=owner.email,
        image_id=str(image_id),
    )
    # the block commits to the original; the watermark then commits to the block
    block = ledger.append(args, original_cid)

    codec = config.codec_spec()
    marked = embed_color(work, payload_bits(block.block_hash), codec)
    marked_cid = store.put(encode_png(marked))
    manifest = {
        "block_hash": block.block_hash,
        "codec": codec.kind,
        "original": original_cid,
        "strength": codec.strength,
        "watermarked": marked_cid,
    }
    manifest_cid = store.put(json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode())
    store.set_ref(block.block_hash, manifest_cid)

    if out_path is not None:
        save_png(marked, out_path)
    return RegistrationOutcome(
        block.block_hash, block.block_number, str(image_id), str(image_hash), marked_cid,
        original_cid, manifest_cid, marked, None if out_path is None else str(out_path),
    )


def load_manifest(store: ContentStore, block_hash: str) -> dict:
    return json.loads(store.get(store.get_ref(block_hash)))


@dataclass
class VerificationReport:
    matched: bool
    status: str
    best_block_hash: str | None
    best_block_number: int | None
    qr_bit_error_distance: int | None
    dhash_hamming: int | None
    owner: dict | None
    tamper: TamperReport | None
    thresholds: dict

    def to_dict(self) -> dict:
        return {
            "matched": self.matched,
            "status": self.status,
            "best_block_hash": self.best_block_hash,
            "best_block_number": self.best_block_number,
            "qr_bit_error_distance": self.qr_bit_error_distance,
            "dhash_hamming": self.dhash_hamming,
            "owner": self.owner,
            "tamper": None if self.tamper is None else self.tamper.to_dict(),
            "thresholds": self.thresholds,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def to_text(self) -> str:
        lines = [f"status: {self.status}"]
        if self.best_block_hash is not None:
            lines += [
                f"block: #{self.best_block_number} {self.best_block_hash}",
                f"qr bit errors: {self.qr_bit_error_distance} (max {self.thresholds['tau_qr']})",
            ]
        if self.dhash_hamming is not None:
            lines.append(f"dhash hamming: {self.dhash_hamming} (max {self.thresholds['tau_hash']})")
        if self.owner:
            lines += [f"{k}: {v}" for k, v in self.owner.items()]
        if self.tamper is not None:
            t = self.tamper
            lines += [
                "tamper layers:",
                f"  ssim       {t.ssim:.4f}  {'FLAG' if t.flags['ssim'] else 'ok'}",
                f"  mfr        {t.mfr.percent:.2f}%  {'FLAG' if t.flags['mfr'] else 'ok'}",
                f"  histogram  {t.histogram:.2f}%  {'FLAG' if t.flags['histogram'] else 'ok'}",
                f"  regions    {len(t.boxes)}",
            ]
            lines += [f"    x={b.x} y={b.y} w={b.w} h={b.h}" for b in t.boxes[:MAX_LISTED_BOXES]]
            if len(t.boxes) > MAX_LISTED_BOXES:
                lines.append(f"    ... {len(t.boxes) - MAX_LISTED_BOXES} more")
        return "\n".join(lines) + "\n"


def verify(image, ledger_dir, cas_dir, config: PipelineConfig | None = None) -> VerificationReport:
    config = config or PipelineConfig()
    subject = check_image(image)
    thresholds = {"tau_qr": config.tau_qr, "tau_hash": config.tau_hash}
    blocks = Ledger(ledger_dir).blocks()
    if not blocks:
        raise LedgerError("ledger is empty")

    host = subject
    if host.shape[:2] != HOST_SHAPE:
        host = resize_bilinear(host, HOST_SHAPE[1], HOST_SHAPE[0])
    bits = extract_any(host, config.codec_spec())
    # minimum distance, earliest block on ties
    best = min(blocks, key=lambda b: (bit_errors(bits, payload_bits(b.block_hash)), b.block_number))
    distance = bit_errors(bits, payload_bits(best.block_hash))
    if distance > config.tau_qr:
        return VerificationReport(False, NO_MATCH, None, None, None, None, None, None, thresholds)

    store = ContentStore(cas_dir)
    manifest = load_manifest(store, best.block_hash)
    original = decode_png(store.get(best.cas_cid))
    marked = decode_png(store.get(manifest["watermarked"]))
    ham = hamming64(dhash(subject), dhash(original))
    matched = ham <= config.tau_hash
    a = best.args
    owner = {
        "owner_address": a.owner_address,
        "creation_name": a.creation_name,
        "creation_author": a.creation_author,
        "copyright_owner": a.copyright_owner,
        "mail_address": a.mail_address,
        "image_id": a.image_id,
        "image_hash": a.image_hash,
    }
    # tamper layers compare against the registered watermarked asset
    tamper = detect_report(marked, subject)
    return VerificationReport(
        matched, CONFIRMED if matched else HASH_MISMATCH, best.block_hash, best.block_number,
        distance, ham, owner, tamper, thresholds,
    )


def bench(image, out_dir=None, seed: int = 0, codecs=BENCH_CODECS) -> dict:
    """Attack and tamper tables for one image; writes bench.json and bench.txt when ``out_dir`` is set."""
    host = _working_copy(image, PipelineConfig())
    bits = payload_bits(str(image_digest(host)))
    attacks = default_attacks(seed)
    rows = []
    for kind in codecs:
        codec = Codec(kind)
        marked = embed_color(host, bits, codec)
        distortion = {"mse": mse(host, marked), "psnr": psnr(host, marked)}
        for spec in attacks:
            errors = bit_errors(extract_any(apply_attack(marked, spec), codec), bits)
            rows.append({"codec": kind, "attack": json.loads(spec.canonical()), **distortion, "bit_errors": errors})
    tampers = []
    for spec in default_tampers(seed):
        r = detect_report(host, apply_tamper(host, spec))
        tampers.append({
            "tamper": json.loads(spec.canonical()),
            "ssim": r.ssim,
            "mfr": r.mfr.percent,
            "histogram": r.histogram,
            "boxes": [[b.x, b.y, b.w, b.h] for b in r.boxes],
        })
    result = {"image_hash": str(image_digest(host)), "watermark": rows, "tamper": tampers}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
        (out / "bench.txt").write_text(bench_text(result))
    return result


def bench_text(result: dict) -> str:
    lines = ["Watermark attacks", f"{'codec':8} {'attack':15} {'MSE':>9} {'PSNR':>8} {'bit errors':>10}"]
    for r in result["watermark"]:
        lines.append(f"{r['codec']:8} {r['attack']['kind']:15} {r['mse']:9.4f} {r['psnr']:8.3f} {r['bit_errors']:10d}")
    lines += ["", "Tamper detection", f"{'tamper':15} {'SSIM':>7} {'MFR %':>7} {'Hist %':>7}"]
    for r in result["tamper"]:
        lines.append(f"{r['tamper']['kind']:15} {r['ssim']:7.4f} {r['mfr']:7.2f} {r['histogram']:7.2f}")
    return "\n".join(lines) + "\n"

