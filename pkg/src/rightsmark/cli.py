"""Command-line interface: ``rightsmark <command> ...``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .attacks import ATTACK_KINDS, TAMPER_KINDS, AttackSpec, TamperSpec, apply_attack, apply_tamper
from .base import DimensionError, ImageFormatError
from .imaging import load_png, save_png
from .payload import bits_matrix, matrix_bits, matrix_image, qr_matrix
from .pipeline import NO_MATCH, OwnerInfo, PipelineConfig, bench, bench_text, register, verify
from .registry import CidNotFoundError, CorruptObjectError, Ledger, LedgerError
from .watermark import Codec, embed_color, extract_any

CODEC_CHOICES = ("dct", "dwtdct", "dctsvd")


def _param(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def _add_codec(p: argparse.ArgumentParser) -> None:
    p.add_argument("--codec", choices=CODEC_CHOICES, default="dct")
    p.add_argument("--strength", type=float, default=None, help="codec strength (default per codec)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rightsmark", description="Image rights registration and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="register an image and write its watermarked copy")
    p.add_argument("--image", required=True)
    for name in ("owner", "author", "name", "email", "copyright"):
        p.add_argument(f"--{name}", required=True)
    p.add_argument("--ledger", required=True)
    p.add_argument("--cas", required=True)
    p.add_argument("--out", help="watermarked PNG path (default: <image>.wm.png)")
    p.add_argument("--no-resize", action="store_true", help="reject non-512x512 input instead of resizing")
    _add_codec(p)

    p = sub.add_parser("verify", help="verify ownership and run tamper detection")
    p.add_argument("--image", required=True)
    p.add_argument("--ledger", required=True)
    p.add_argument("--cas", required=True)
    p.add_argument("--report", help="write the JSON report here")
    _add_codec(p)

    p = sub.add_parser("embed", help="embed a QR payload into a 512x512 image")
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True, help="payload text encoded as a QR symbol")
    p.add_argument("--out", required=True)
    _add_codec(p)

    p = sub.add_parser("extract", help="extract the 64x64 watermark matrix as a PNG")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=4)
    _add_codec(p)

    p = sub.add_parser("attack", help="apply a watermark attack")
    p.add_argument("--image", required=True)
    p.add_argument("--type", required=True, choices=ATTACK_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qf", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--density", type=float)
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True)

    p = sub.add_parser("tamper", help="apply a tampering operation")
    p.add_argument("--image", required=True)
    p.add_argument("--type", required=True, choices=TAMPER_KINDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", type=_param, action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--out", required=True)

    p = sub.add_parser("bench", help="run the attack and tamper benchmark tables")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("qr", help="render the QR matrix for a text as a PNG")
    p.add_argument("--text", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--scale", type=int, default=4)

    p = sub.add_parser("validate", help="check ledger integrity")
    p.add_argument("--ledger", required=True)
    return parser


def _codec(args) -> Codec:
    return Codec(args.codec, args.strength)


def _scaled(matrix_img: np.ndarray, scale: int) -> np.ndarray:
    if scale < 1:
        raise ValueError("scale must be at least 1")
    return np.kron(matrix_img, np.ones((scale, scale), dtype=np.uint8))


def _cmd_register(args) -> int:
    config = PipelineConfig(codec=args.codec, strength=args.strength, resize=not args.no_resize)
    owner = OwnerInfo(args.owner, args.author, args.name, args.email, args.copyright)
    out = args.out or str(Path(args.image).with_suffix("")) + ".wm.png"
    o = register(load_png(args.image), owner, args.ledger, args.cas, config, out_path=out)
    print(f"block #{o.block_number} {o.block_hash}")
    print(f"image id {o.image_id}")
    print(f"image hash {o.image_hash}")
    print(f"watermarked {o.cas_cid} -> {out}")
    return 0


def _cmd_verify(args) -> int:
    report = verify(load_png(args.image), args.ledger, args.cas, PipelineConfig(codec=args.codec, strength=args.strength))
    sys.stdout.write(report.to_text())
    if args.report:
        Path(args.report).write_text(report.to_json())
    if report.status == NO_MATCH:
        print("the image is not registered; run `rightsmark register` to register it")
    return 0 if report.matched else 1


def _cmd_embed(args) -> int:
    bits = matrix_bits(qr_matrix(args.text))
    save_png(embed_color(load_png(args.image), bits, _codec(args)), args.out)
    return 0


def _cmd_extract(args) -> int:
    bits = extract_any(load_png(args.image), _codec(args))
    save_png(_scaled(matrix_image(bits_matrix(bits)), args.scale), args.out)
    return 0


def _cmd_attack(args) -> int:
    params = dict(args.param)
    for key in ("qf", "sigma", "density"):
        value = getattr(args, key)
        if value is not None:
            params[key] = value
    spec = AttackSpec(args.type, params, args.seed)
    save_png(apply_attack(load_png(args.image), spec), args.out)
    print(spec.canonical())
    return 0


def _cmd_tamper(args) -> int:
    spec = TamperSpec(args.type, dict(args.param), args.seed)
    save_png(apply_tamper(load_png(args.image), spec), args.out)
    print(spec.canonical())
    return 0


def _cmd_bench(args) -> int:
    result = bench(load_png(args.image), args.out, seed=args.seed)
    sys.stdout.write(bench_text(result))
    return 0


def _cmd_qr(args) -> int:
    save_png(_scaled(matrix_image(qr_matrix(args.text)), args.scale), args.out)
    return 0


def _cmd_validate(args) -> int:
    status = Ledger(args.ledger).validate()
    if status.ok:
        print("ledger ok")
        return 0
    print(f"ledger invalid at block {status.violation.position}: {status.violation.reason}")
    return 1


_COMMANDS = {
    "register": _cmd_register,
    "verify": _cmd_verify,
    "embed": _cmd_embed,
    "extract": _cmd_extract,
    "attack": _cmd_attack,
    "tamper": _cmd_tamper,
    "bench": _cmd_bench,
    "qr": _cmd_qr,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return 2
    except (ImageFormatError, DimensionError, LedgerError, CidNotFoundError,
            CorruptObjectError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
