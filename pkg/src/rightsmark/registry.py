"""Hash-chained append-only ledger and a content-addressed object store.

The ledger is a local single-writer stand-in for a blockchain: one JSON object
per line, each block committing to its predecessor through ``prev_block_hash``.
Block hashes cover a length-prefixed binary serialisation, never the JSON text,
so they do not depend on formatting.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import struct
import tempfile
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, NamedTuple

GENESIS_PREV = "0" * 64
CID_PREFIX = "cas1-"
LEDGER_FILE = "ledger.jsonl"

_HEX64 = re.compile(r"[0-9a-f]{64}")
_HEX16 = re.compile(r"[0-9a-f]{16}")
_ADDRESS = re.compile(r"0x[0-9a-f]{40}")
_CID = re.compile(CID_PREFIX + r"[0-9a-f]{64}")


class LedgerError(Exception):
    pass


class CidNotFoundError(KeyError):
    pass


class CorruptObjectError(Exception):
    pass


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def derive_address(identity_text: str) -> str:
    """Ethereum-style address: ``0x`` + first 20 bytes of SHA-256(identity)."""
    if not isinstance(identity_text, str) or not identity_text:
        raise ValueError("identity text must be a non-empty string")
    return "0x" + hashlib.sha256(identity_text.encode("utf-8")).digest()[:20].hex()


def _length_prefixed(items: Iterable[tuple[str, str]]) -> bytes:
    out = bytearray()
    for name, value in items:
        for part in (name.encode("utf-8"), value.encode("utf-8")):
            out += struct.pack(">I", len(part))
            out += part
    return bytes(out)


@dataclass(frozen=True)
class RegistrationArgs:
    owner_address: str
    image_hash: str
    creation_name: str
    creation_author: str
    copyright_owner: str
    mail_address: str
    image_id: str

    def __post_init__(self):
        for f in fields(self):
            if not isinstance(getattr(self, f.name), str):
                raise TypeError(f"{f.name} must be a string")
        if not _ADDRESS.fullmatch(self.owner_address):
            raise ValueError(f"owner_address must be 0x + 40 lowercase hex, got {self.owner_address!r}")
        if not _HEX64.fullmatch(self.image_hash):
            raise ValueError(f"image_hash must be 64 lowercase hex, got {self.image_hash!r}")
        if not _HEX16.fullmatch(self.image_id):
            raise ValueError(f"image_id must be 16 lowercase hex, got {self.image_id!r}")
        for name in ("creation_name", "creation_author", "copyright_owner", "mail_address"):
            if not getattr(self, name).strip():
                raise ValueError(f"{name} must not be empty")

    def items(self) -> list[tuple[str, str]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def canonical_bytes(self) -> bytes:
        return _length_prefixed(self.items())

    def transaction_hash(self) -> str:
        return sha256_hex(self.canonical_bytes())


@dataclass(frozen=True)
class Block:
    block_number: int
    prev_block_hash: str
    timestamp: int
    transaction_hash: str
    transaction_index: int
    log_index: int
    args: RegistrationArgs
    cas_cid: str
    block_hash: str = ""

    def hash_items(self) -> list[tuple[str, str]]:
        head = [
            ("block_number", str(self.block_number)),
            ("prev_block_hash", self.prev_block_hash),
            ("timestamp", str(self.timestamp)),
            ("transaction_hash", self.transaction_hash),
            ("transaction_index", str(self.transaction_index)),
            ("log_index", str(self.log_index)),
        ]
        return head + [("args." + k, v) for k, v in self.args.items()] + [("cas_cid", self.cas_cid)]

    def compute_hash(self) -> str:
        return sha256_hex(_length_prefixed(self.hash_items()))

    def sealed(self) -> "Block":
        return Block(**{**self._fields(), "block_hash": self.compute_hash()})

    def _fields(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        """One canonical ledger line (without the trailing newline)."""
        record = {
            "block_number": self.block_number,
            "prev_block_hash": self.prev_block_hash,
            "block_hash": self.block_hash,
            "timestamp": self.timestamp,
            "transaction_hash": self.transaction_hash,
            "transaction_index": self.transaction_index,
            "log_index": self.log_index,
            "args": asdict(self.args),
            "cas_cid": self.cas_cid,
        }
        return json.dumps(record, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Block":
        record = json.loads(line)
        if not isinstance(record, dict):
            raise LedgerError("ledger record is not an object")
        expected = ["block_number", "prev_block_hash", "block_hash", "timestamp", "transaction_hash",
                    "transaction_index", "log_index", "args", "cas_cid"]
        if list(record) != expected:
            raise LedgerError(f"unexpected ledger fields {list(record)}")
        for key in ("block_number", "timestamp", "transaction_index", "log_index"):
            if type(record[key]) is not int:
                raise LedgerError(f"{key} must be an integer")
        args = record.pop("args")
        if not isinstance(args, dict) or list(args) != [f.name for f in fields(RegistrationArgs)]:
            raise LedgerError("malformed args")
        return cls(args=RegistrationArgs(**args), **record)


class Violation(NamedTuple):
    position: int
    reason: str


class ChainStatus(NamedTuple):
    ok: bool
    violation: Violation | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_chain(blocks: list[Block]) -> ChainStatus:
    """Recompute every hash and link; report the first violation found."""
    prev_hash, prev_time = GENESIS_PREV, None
    for i, b in enumerate(blocks):
        if b.block_number != i:
            return ChainStatus(False, Violation(i, f"block number {b.block_number}, expected {i}"))
        if b.prev_block_hash != prev_hash:
            return ChainStatus(False, Violation(i, "previous hash does not link"))
        if b.block_hash != b.compute_hash():
            return ChainStatus(False, Violation(i, "block hash mismatch"))
        if b.transaction_hash != b.args.transaction_hash():
            return ChainStatus(False, Violation(i, "transaction hash mismatch"))
        if b.transaction_index != 0 or b.log_index != 0:
            return ChainStatus(False, Violation(i, "non-zero transaction or log index"))
        if not _CID.fullmatch(b.cas_cid):
            return ChainStatus(False, Violation(i, "malformed content id"))
        if prev_time is not None and b.timestamp < prev_time:
            return ChainStatus(False, Violation(i, "timestamp goes backwards"))
        prev_hash, prev_time = b.block_hash, b.timestamp
    return ChainStatus(True)


def parse_ledger(data: bytes) -> tuple[list[Block], ChainStatus]:
    """Parse raw ledger bytes; any non-canonical line is a violation."""
    blocks: list[Block] = []
    if data and not data.endswith(b"\n"):
        return blocks, ChainStatus(False, Violation(data.count(b"\n"), "truncated record"))
    for i, raw in enumerate(data.split(b"\n")[:-1] if data else []):
        try:
            line = raw.decode("utf-8")
            block = Block.from_json(line)
        except (UnicodeDecodeError, ValueError, TypeError, LedgerError) as exc:
            return blocks, ChainStatus(False, Violation(i, f"unreadable record: {exc}"))
        if block.to_json() != line:
            return blocks, ChainStatus(False, Violation(i, "record is not in canonical form"))
        blocks.append(block)
    return blocks, validate_chain(blocks)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Ledger:
    """Append-only chain persisted as ``ledger.jsonl`` inside ``directory``."""

    def __init__(self, directory, clock: Callable[[], float] = time.time):
        self.directory = Path(directory)
        self.path = self.directory / LEDGER_FILE
        self.clock = clock

    def read_bytes(self) -> bytes:
        return self.path.read_bytes() if self.path.exists() else b""

    def blocks(self) -> list[Block]:
        blocks, status = parse_ledger(self.read_bytes())
        if not status:
            v = status.violation
            raise LedgerError(f"ledger invalid at block {v.position}: {v.reason}")
        return blocks

    def validate(self) -> ChainStatus:
        return parse_ledger(self.read_bytes())[1]

    def append(self, args: RegistrationArgs, cas_cid: str) -> Block:
        if not _CID.fullmatch(cas_cid):
            raise ValueError(f"malformed content id {cas_cid!r}")
        chain = self.blocks()
        ts = int(self.clock())
        if chain and ts < chain[-1].timestamp:
            raise LedgerError("clock went backwards")
        block = Block(
            block_number=len(chain),
            prev_block_hash=chain[-1].block_hash if chain else GENESIS_PREV,
            timestamp=ts,
            transaction_hash=args.transaction_hash(),
            transaction_index=0,
            log_index=0,
            args=args,
            cas_cid=cas_cid,
        ).sealed()
        self.directory.mkdir(parents=True, exist_ok=True)
        with open(self.path, "ab") as fh:
            fh.write(block.to_json().encode("utf-8") + b"\n")
            fh.flush()
            os.fsync(fh.fileno())
        return block

    def find(self, block_hash: str) -> Block:
        for b in self.blocks():
            if b.block_hash == block_hash:
                return b
        raise KeyError(block_hash)


def append_registration(ledger: Ledger, args: RegistrationArgs, cas_cid: str) -> Block:
    return ledger.append(args, cas_cid)


class ContentStore:
    """Content-addressed object store laid out as ``objects/<2 hex>/<cid>``.

    Named references under ``refs/`` map stable names to content ids.
    """

    def __init__(self, root):
        self.root = Path(root)

    @staticmethod
    def cid_for(data: bytes) -> str:
        return CID_PREFIX + sha256_hex(data)

    def _object_path(self, cid: str) -> Path:
        if not isinstance(cid, str) or not _CID.fullmatch(cid):
            raise ValueError(f"malformed content id {cid!r}")
        digest = cid[len(CID_PREFIX):]
        return self.root / "objects" / digest[:2] / cid

    def put(self, data: bytes) -> str:
        data = bytes(data)
        cid = self.cid_for(data)
        path = self._object_path(cid)
        if not path.exists():
            _atomic_write(path, data)
        return cid

    def get(self, cid: str) -> bytes:
        path = self._object_path(cid)
        if not path.exists():
            raise CidNotFoundError(cid)
        data = path.read_bytes()
        if self.cid_for(data) != cid:
            raise CorruptObjectError(f"stored object {cid} fails its content check")
        return data

    def __contains__(self, cid: str) -> bool:
        try:
            return self._object_path(cid).exists()
        except ValueError:
            return False

    def set_ref(self, name: str, cid: str) -> None:
        if not re.fullmatch(r"[0-9A-Za-z_.-]+", name):
            raise ValueError(f"invalid ref name {name!r}")
        self._object_path(cid)
        _atomic_write(self.root / "refs" / name, cid.encode("ascii"))

    def get_ref(self, name: str) -> str:
        path = self.root / "refs" / name
        if not path.exists():
            raise CidNotFoundError(name)
        return path.read_text("ascii").strip()


def cas_put(store: ContentStore, data: bytes) -> str:
    return store.put(data)


def cas_get(store: ContentStore, cid: str) -> bytes:
    return store.get(cid)
