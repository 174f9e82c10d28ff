#!/usr/bin/env python3
"""Independent canonical-encoding oracle.

Re-implements the byte layouts of docs/wire-format.md from scratch,
without importing the package, and prints reference hashes that the test
suite pins. If the package's encoder ever drifts from the documented
layout, the pinned values catch it.
"""

import hashlib
import struct

SCALE = 10**18


def u32(v):
    return struct.pack(">I", v)


def u64(v):
    return struct.pack(">Q", v)


def i128(v):
    return v.to_bytes(16, "big", signed=True)


def enc_str(s):
    b = s.encode("utf-8")
    return u32(len(b)) + b


def empty_state_bytes():
    # no accounts | next id 1 | empty registry | height 0
    return u32(0) + u64(1) + u32(0) + u64(0)


def one_account_state_bytes():
    # account 1 holding 1000000.0 coins, nothing else
    account = (
        u64(1)
        + i128(1_000_000 * SCALE)
        + u32(0)  # assets
        + u64(0)  # seq
        + b"\x00"  # no contract source
        + u32(0)  # storage
    )
    return u32(1) + account + u64(2) + u32(0) + u64(0)


def genesis_block_bytes(state_root):
    return (
        u64(0)  # height
        + b"\x00" * 32  # parent
        + u32(0)  # proposer
        + u64(0)  # tick
        + u32(0)  # transactions
        + state_root
    )


def main():
    empty_root = hashlib.sha256(empty_state_bytes()).digest()
    print("empty_state_root", empty_root.hex())
    ref_root = hashlib.sha256(one_account_state_bytes()).digest()
    print("reference_genesis_state_root", ref_root.hex())
    block_hash = hashlib.sha256(genesis_block_bytes(ref_root)).digest()
    print("reference_genesis_block_hash", block_hash.hex())


if __name__ == "__main__":
    main()
