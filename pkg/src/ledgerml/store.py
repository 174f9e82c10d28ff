"""Durable persistence: an append-only block log and state snapshots.

Log entry layout: [u32 BE length][canonical block bytes][8-byte checksum],
where the checksum is the first 8 bytes of SHA-256 over the block bytes.
A torn or corrupt FINAL entry is silently truncated on open (crash
recovery); a bad entry anywhere earlier is fatal corruption.
"""

from __future__ import annotations

import hashlib
import os
import struct
from pathlib import Path

from .ledger import (
    Block,
    ChainState,
    LedgerError,
    apply_block,
    compute_state_root,
    decode_block,
    decode_state,
    encode_block,
    encode_state,
    genesis_block,
    hash_block,
)

CHECKSUM_BYTES = 8


class StoreError(Exception):
    pass


class HeightGap(StoreError):
    pass


class Corruption(StoreError):
    def __init__(self, height: int, detail: str = ""):
        super().__init__(f"corruption at height {height}" + (f": {detail}" if detail else ""))
        self.height = height


class ChecksumMismatch(StoreError):
    pass


class RootMismatch(StoreError):
    pass


def _checksum(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()[:CHECKSUM_BYTES]


class BlockLog:
    """Append-only log of canonical block bytes. The height index is
    rebuilt by scanning on open; appends are flushed and fsynced before
    returning."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.blocks: list[Block] = []
        self._load()

    def _load(self) -> None:
        self.blocks = []
        if not self.path.exists():
            self.path.touch()
            return
        raw = self.path.read_bytes()
        pos = 0
        entries: list[tuple[bytes, int]] = []  # (block bytes, end offset)
        truncate_at: int | None = None
        while pos < len(raw):
            if pos + 4 > len(raw):
                truncate_at = pos
                break
            (length,) = struct.unpack(">I", raw[pos : pos + 4])
            end = pos + 4 + length + CHECKSUM_BYTES
            if end > len(raw):
                truncate_at = pos
                break
            body = raw[pos + 4 : pos + 4 + length]
            check = raw[pos + 4 + length : end]
            if check != _checksum(body):
                if end == len(raw):
                    # damaged final entry: recoverable, drop it
                    truncate_at = pos
                    break
                raise Corruption(len(entries), "checksum mismatch mid-log")
            entries.append((body, end))
            pos = end
        if truncate_at is not None:
            # a damaged entry is only recoverable if it is the last one
            with open(self.path, "r+b") as f:
                f.truncate(truncate_at)
                f.flush()
                os.fsync(f.fileno())
        expected = None
        for i, (body, _) in enumerate(entries):
            try:
                block = decode_block(body)
            except LedgerError as e:
                raise Corruption(i, str(e)) from None
            if expected is not None and block.height != expected:
                raise Corruption(block.height, "heights not consecutive")
            expected = block.height + 1
            self.blocks.append(block)

    @property
    def last_height(self) -> int | None:
        return self.blocks[-1].height if self.blocks else None

    def append(self, block: Block) -> None:
        if self.blocks and block.height != self.blocks[-1].height + 1:
            raise HeightGap(
                f"append height {block.height} after {self.blocks[-1].height}"
            )
        body = encode_block(block)
        entry = struct.pack(">I", len(body)) + body + _checksum(body)
        with open(self.path, "ab") as f:
            f.write(entry)
            f.flush()
            os.fsync(f.fileno())
        self.blocks.append(block)


def load_chain(path: str | Path, genesis: ChainState) -> ChainState:
    """Replay all intact blocks through the state machine. The first log
    entry, when present, must be the genesis block of `genesis`."""
    log = BlockLog(path)
    state = genesis
    for block in log.blocks:
        if block.height == 0:
            if hash_block(block) != hash_block(genesis_block(genesis)):
                raise Corruption(0, "genesis block does not match genesis state")
            continue
        try:
            state = apply_block(state, block)
        except LedgerError as e:
            raise Corruption(block.height, str(e)) from None
    return state


SNAPSHOT_MAGIC = b"LMSNAP01"


def write_snapshot(state: ChainState, path: str | Path) -> None:
    body = encode_state(state)
    root = compute_state_root(state)
    payload = (
        SNAPSHOT_MAGIC
        + struct.pack(">Q", state.height)
        + root
        + state.head_hash
        + struct.pack(">I", len(body))
        + body
    )
    with open(path, "wb") as f:
        f.write(payload + _checksum(payload))
        f.flush()
        os.fsync(f.fileno())


def read_snapshot(path: str | Path) -> ChainState:
    raw = Path(path).read_bytes()
    if len(raw) < len(SNAPSHOT_MAGIC) + 8 + 32 + 32 + 4 + CHECKSUM_BYTES:
        raise ChecksumMismatch("snapshot too short")
    payload, check = raw[:-CHECKSUM_BYTES], raw[-CHECKSUM_BYTES:]
    if check != _checksum(payload):
        raise ChecksumMismatch("snapshot checksum mismatch")
    if payload[:8] != SNAPSHOT_MAGIC:
        raise ChecksumMismatch("bad snapshot magic")
    (height,) = struct.unpack(">Q", payload[8:16])
    root = payload[16:48]
    head_hash = payload[48:80]
    (body_len,) = struct.unpack(">I", payload[80:84])
    body = payload[84 : 84 + body_len]
    if len(body) != body_len or 84 + body_len != len(payload):
        raise ChecksumMismatch("snapshot length mismatch")
    try:
        state = decode_state(body, head_hash)
    except LedgerError as e:
        raise ChecksumMismatch(f"undecodable snapshot: {e}") from None
    if state.height != height:
        raise RootMismatch("snapshot height mismatch")
    if compute_state_root(state) != root:
        raise RootMismatch("snapshot root mismatch")
    return state
