#!/usr/bin/env python3
"""Reference encoder and hasher for the ledger goldens.

Written from the byte layout alone (no shared code with the Rust crate) so
the fixtures it produces act as an independent check. Re-running it must
reproduce the committed files byte for byte.
"""
import hashlib
import json
import struct
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "fixtures" / "golden"


def u64(n):
    return struct.pack(">Q", n)


def i64(n):
    return struct.pack(">q", n)


def blob(b):
    return struct.pack(">I", len(b)) + b


def text(s):
    return blob(s.encode("utf-8"))


def value(v):
    if isinstance(v, bool):
        return b"\x03" + (b"\x01" if v else b"\x00")
    if isinstance(v, int):
        return b"\x02" + i64(v)
    return b"\x01" + text(v)


def attributes(attrs):
    out = struct.pack(">I", len(attrs))
    for k in sorted(attrs, key=lambda k: k.encode("utf-8")):
        out += text(k) + value(attrs[k])
    return out


def unsigned(e):
    return text(e["event_id"]) + text(e["event_type"]) + attributes(e["attributes"]) + text(e["emitter"]) + u64(e["logical_ts"])


def sign(e, secret):
    e["signature"] = hashlib.sha256(secret.encode("utf-8") + unsigned(e)).hexdigest()
    return e


def event_bytes(e):
    return unsigned(e) + blob(bytes.fromhex(e["signature"]))


def events_digest(events):
    return hashlib.sha256(b"".join(event_bytes(e) for e in events)).hexdigest()


def header_bytes(h):
    return (
        u64(h["index"])
        + blob(bytes.fromhex(h["prev_hash"]))
        + blob(bytes.fromhex(h["events_digest"]))
        + text(h["miner"])
        + u64(h["nonce"])
    )


def header_hash(h):
    return hashlib.sha256(header_bytes(h)).hexdigest()


GENESIS = {
    "index": 0,
    "prev_hash": "00" * 32,
    "events_digest": events_digest([]),
    "miner": "genesis",
    "nonce": 0,
}

TARGET_2_252 = 1 << 252


def mine(events, prev, target, miner):
    h = {
        "index": prev["index"] + 1,
        "prev_hash": header_hash(prev),
        "events_digest": events_digest(events),
        "miner": miner,
        "nonce": 0,
    }
    while int(header_hash(h), 16) >= target:
        h["nonce"] += 1
    return h


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "genesis_header.hex").write_text(header_bytes(GENESIS).hex() + "\n")
    (OUT / "genesis_hash.hex").write_text(header_hash(GENESIS) + "\n")
    (OUT / "empty_events_digest.hex").write_text(hashlib.sha256(b"").hexdigest() + "\n")

    secrets = {p: p + "-secret" for p in ["hospital", "bob", "alice", "charlie", "dana"]}
    admit = sign(
        {
            "event_id": "e0",
            "event_type": "Admit",
            "attributes": {"patient": "charlie", "nurse": "bob"},
            "emitter": "hospital",
            "logical_ts": 1,
        },
        secrets["hospital"],
    )
    (OUT / "admit_event.hex").write_text(event_bytes(admit).hex() + "\n")
    mined = mine([admit], GENESIS, TARGET_2_252, "p1")
    (OUT / "mined_2pow252.json").write_text(
        json.dumps({"target_bits": 252, "event": admit, "header": mined, "hash": header_hash(mined)}, indent=2) + "\n"
    )

    # Ten mined blocks on genesis, two hospital events each.
    blocks = [{"header": GENESIS, "events": []}]
    ts = 0
    for k in range(1, 11):
        patient = "charlie" if k % 2 else "dana"
        evs = []
        for event_type, attrs, emitter in [
            ("Admit", {"patient": f"{patient}-{k}", "nurse": "alice" if k % 3 else "bob"}, "hospital"),
            ("Consent", {"patient": f"{patient}-{k}"}, patient),
        ]:
            ts += 1
            evs.append(
                sign(
                    {"event_id": f"g{ts}", "event_type": event_type, "attributes": attrs, "emitter": emitter, "logical_ts": ts},
                    secrets[emitter],
                )
            )
        header = mine(evs, blocks[-1]["header"], TARGET_2_252, f"p{(k - 1) % 5 + 1}")
        blocks.append({"header": header, "events": evs})
    (OUT / "chain10.json").write_text(json.dumps({"blocks": blocks}, indent=2) + "\n")
    (OUT / "chain10_tip.hex").write_text(header_hash(blocks[-1]["header"]) + "\n")


if __name__ == "__main__":
    main()
