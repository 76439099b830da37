import hashlib
import json
import struct

import numpy as np
import pytest

from conftest import GOLDEN
from rightsmark.registry import (
    GENESIS_PREV,
    Block,
    CidNotFoundError,
    ContentStore,
    CorruptObjectError,
    Ledger,
    LedgerError,
    RegistrationArgs,
    derive_address,
    parse_ledger,
    validate_chain,
)

# Table 1 sample record. The published owner address has an 'l' where a hex
# digit belongs and a 31-digit image hash, so both are replaced by valid values.
TABLE1 = dict(
    owner_address="0x51ba1bc194580887ce1d305774c58c678e25cb86",
    image_hash=hashlib.sha256(b"Lenna Image").hexdigest(),
    creation_name="Lenna Image",
    creation_author="Tiroshan Madushanka",
    copyright_owner="University of Kelaniya",
    mail_address="tiroshanm@kln.ac.lk",
    image_id="7670795b33135a38",
)
EMPTY_CID = "cas1-" + hashlib.sha256(b"").hexdigest()


def make_args(i=0):
    return RegistrationArgs(**{**TABLE1, "image_id": f"{i:016x}", "creation_name": f"Image {i}"})


def test_derive_address():
    a = derive_address("alice")
    assert a == "0x" + hashlib.sha256(b"alice").hexdigest()[:40]
    assert len(a) == 42 and derive_address("alice") == a != derive_address("bob")
    with pytest.raises(ValueError):
        derive_address("")


@pytest.mark.parametrize(
    "field,value",
    [("owner_address", "0x51balbc194580887ce1d305774c58c678e25cb86"), ("image_id", "7670795b3313"),
     ("image_hash", "a9e7c071d11a2aec6a8c8100061985d"), ("mail_address", " ")],
)
def test_args_validation(field, value):
    with pytest.raises(ValueError):
        RegistrationArgs(**{**TABLE1, field: value})


def test_transaction_hash_is_length_prefixed():
    args = RegistrationArgs(**TABLE1)
    buf = b""
    for k, v in args.items():
        for part in (k.encode(), v.encode()):
            buf += struct.pack(">I", len(part)) + part
    assert args.transaction_hash() == hashlib.sha256(buf).hexdigest()


def test_genesis_and_links(tmp_path, fixed_clock):
    led = Ledger(tmp_path, clock=fixed_clock)
    b0 = led.append(make_args(0), EMPTY_CID)
    b1 = led.append(make_args(1), EMPTY_CID)
    assert b0.block_number == 0 and b0.prev_block_hash == GENESIS_PREV
    assert b1.prev_block_hash == b0.block_hash and b1.timestamp > b0.timestamp
    assert b0.transaction_index == b0.log_index == 0
    assert led.validate().ok and led.find(b1.block_hash) == b1


def test_golden_table1_block(tmp_path):
    led = Ledger(tmp_path, clock=lambda: 1_700_000_000)
    block = led.append(RegistrationArgs(**TABLE1), EMPTY_CID)
    golden = (GOLDEN / "ledger_table1.jsonl").read_bytes()
    assert led.read_bytes() == golden
    parsed = Block.from_json(golden.decode().strip())
    assert parsed == block and parsed.args == RegistrationArgs(**TABLE1)


def test_clock_must_not_go_backwards(tmp_path):
    times = iter([100, 50])
    led = Ledger(tmp_path, clock=lambda: next(times))
    led.append(make_args(0), EMPTY_CID)
    with pytest.raises(LedgerError):
        led.append(make_args(1), EMPTY_CID)


def test_reorder_and_edit_detected(tmp_path, fixed_clock):
    led = Ledger(tmp_path, clock=fixed_clock)
    blocks = [led.append(make_args(i), EMPTY_CID) for i in range(3)]
    assert validate_chain(blocks).ok
    swapped = [blocks[1], blocks[0], blocks[2]]
    assert validate_chain(swapped).violation.position == 0
    lines = led.read_bytes().decode().splitlines()
    rec = json.loads(lines[1])
    rec["args"]["creation_name"] = "Forged"
    lines[1] = json.dumps(rec, separators=(",", ":"), ensure_ascii=False)
    _, status = parse_ledger(("\n".join(lines) + "\n").encode())
    assert not status.ok and status.violation.position == 1


def test_tampered_ledger_refuses_append(tmp_path, fixed_clock):
    led = Ledger(tmp_path, clock=fixed_clock)
    led.append(make_args(0), EMPTY_CID)
    led.path.write_bytes(led.read_bytes().replace(b"Image 0", b"Image 9"))
    with pytest.raises(LedgerError):
        led.append(make_args(1), EMPTY_CID)


def test_byte_mutations_detected(tmp_path, fixed_clock, rng):
    led = Ledger(tmp_path, clock=fixed_clock)
    for i in range(5):
        led.append(make_args(i), EMPTY_CID)
    raw = led.read_bytes()
    for _ in range(200):
        b = bytearray(raw)
        pos = int(rng.integers(len(b)))
        b[pos] = (b[pos] + int(rng.integers(1, 256))) % 256
        assert not parse_ledger(bytes(b))[1].ok


def test_cas_roundtrip_and_layout(tmp_path):
    store = ContentStore(tmp_path)
    data = b"watermarked bytes"
    cid = store.put(data)
    assert cid == "cas1-" + hashlib.sha256(data).hexdigest()
    assert store.get(cid) == data and store.put(data) == cid
    path = tmp_path / "objects" / cid[5:7] / cid
    assert path.read_bytes() == data
    assert len(list((tmp_path / "objects").rglob("cas1-*"))) == 1
    assert cid in store and ContentStore(tmp_path).get(cid) == data


def test_cas_errors(tmp_path):
    store = ContentStore(tmp_path)
    with pytest.raises(CidNotFoundError):
        store.get("cas1-" + "0" * 64)
    with pytest.raises(ValueError):
        store.get("not-a-cid")
    cid = store.put(b"abc")
    (tmp_path / "objects" / cid[5:7] / cid).write_bytes(b"abd")
    with pytest.raises(CorruptObjectError):
        store.get(cid)


def test_cas_refs(tmp_path):
    store = ContentStore(tmp_path)
    cid = store.put(b"manifest")
    store.set_ref("ab" * 32, cid)
    assert store.get_ref("ab" * 32) == cid
    with pytest.raises(CidNotFoundError):
        store.get_ref("missing")
    with pytest.raises(ValueError):
        store.set_ref("../escape", cid)


def test_golden_block_hash_recomputed_independently():
    rec = json.loads((GOLDEN / "ledger_table1.jsonl").read_text())
    items = [(k, str(rec[k])) for k in ("block_number", "prev_block_hash", "timestamp", "transaction_hash",
                                        "transaction_index", "log_index")]
    items += [("args." + k, v) for k, v in rec["args"].items()] + [("cas_cid", rec["cas_cid"])]
    buf = b"".join(struct.pack(">I", len(p)) + p for k, v in items for p in (k.encode(), v.encode()))
    assert rec["block_hash"] == hashlib.sha256(buf).hexdigest()
