"""The runtime value universe shared by the contract interpreter and the
model engine, with its canonical byte encoding.

The encoding is the unit of consensus: state roots hash these bytes, so
every choice here (tags, widths, byte order, map ordering) is part of the
protocol and must never change silently.

Encoding, all integers big-endian:
    Int      0x01  i64
    Dec      0x02  i128 (fixed-point, 10^18 scale)
    Dbl      0x03  IEEE-754 binary64 bit pattern
    Str      0x04  u32 length + UTF-8 bytes
    Bool     0x05  one byte, 0 or 1
    Bytes    0x06  u32 length + bytes
    List     0x07  u32 count + encoded items
    Rec      0x08  u32 count + (Str key, value)* in field order
    ModelRef 0x09  u32 handle index
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .fixedpoint import format_dec


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class VInt:
    v: int


@dataclass(frozen=True)
class VDec:
    raw: int


@dataclass(frozen=True)
class VDbl:
    v: float


@dataclass(frozen=True)
class VStr:
    v: str


@dataclass(frozen=True)
class VBool:
    v: bool


@dataclass(frozen=True)
class VBytes:
    v: bytes


@dataclass(frozen=True)
class VList:
    items: tuple


@dataclass(frozen=True)
class VRec:
    fields: tuple  # ((name, Value), ...), order is meaningful

    def get(self, name: str):
        for k, v in self.fields:
            if k == name:
                return v
        return None


@dataclass(frozen=True)
class VModel:
    handle: int


Value = VInt | VDec | VDbl | VStr | VBool | VBytes | VList | VRec | VModel

# "no value": the empty record. Used for absent assets and missing
# storage keys; renders as "none".
NONE = VRec(())

INT_MIN = -(1 << 63)
INT_MAX = (1 << 63) - 1


def encode_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack(">I", len(b)) + b


def encode_value(val: Value) -> bytes:
    if isinstance(val, VInt):
        return b"\x01" + struct.pack(">q", val.v)
    if isinstance(val, VDec):
        return b"\x02" + val.raw.to_bytes(16, "big", signed=True)
    if isinstance(val, VDbl):
        if val.v != val.v:
            raise EncodingError("NaN has no canonical encoding")
        return b"\x03" + struct.pack(">d", val.v)
    if isinstance(val, VStr):
        return b"\x04" + encode_str(val.v)
    if isinstance(val, VBool):
        return b"\x05" + (b"\x01" if val.v else b"\x00")
    if isinstance(val, VBytes):
        return b"\x06" + struct.pack(">I", len(val.v)) + val.v
    if isinstance(val, VList):
        out = [b"\x07", struct.pack(">I", len(val.items))]
        for item in val.items:
            out.append(encode_value(item))
        return b"".join(out)
    if isinstance(val, VRec):
        out = [b"\x08", struct.pack(">I", len(val.fields))]
        for name, item in val.fields:
            out.append(encode_str(name))
            out.append(encode_value(item))
        return b"".join(out)
    if isinstance(val, VModel):
        return b"\x09" + struct.pack(">I", val.handle)
    raise EncodingError(f"not a Value: {val!r}")


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise EncodingError("truncated value")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def string(self) -> str:
        n = self.u32()
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as e:
            raise EncodingError(f"bad UTF-8: {e}") from None


def _decode(r: _Reader) -> Value:
    tag = r.take(1)[0]
    if tag == 0x01:
        return VInt(struct.unpack(">q", r.take(8))[0])
    if tag == 0x02:
        return VDec(int.from_bytes(r.take(16), "big", signed=True))
    if tag == 0x03:
        v = struct.unpack(">d", r.take(8))[0]
        if v != v:
            raise EncodingError("NaN in encoded value")
        return VDbl(v)
    if tag == 0x04:
        return VStr(r.string())
    if tag == 0x05:
        b = r.take(1)[0]
        if b not in (0, 1):
            raise EncodingError("bad bool byte")
        return VBool(b == 1)
    if tag == 0x06:
        n = r.u32()
        return VBytes(r.take(n))
    if tag == 0x07:
        n = r.u32()
        return VList(tuple(_decode(r) for _ in range(n)))
    if tag == 0x08:
        n = r.u32()
        fields = []
        for _ in range(n):
            name = r.string()
            fields.append((name, _decode(r)))
        return VRec(tuple(fields))
    if tag == 0x09:
        return VModel(r.u32())
    raise EncodingError(f"unknown value tag 0x{tag:02x}")


def decode_value(buf: bytes) -> Value:
    r = _Reader(buf)
    val = _decode(r)
    if r.pos != len(buf):
        raise EncodingError("trailing bytes after value")
    return val


def render(val: Value) -> str:
    """Deterministic human rendering, used by the contract str() builtin
    and receipt logs. Doubles use shortest round-trip form.
    """
    if isinstance(val, VInt):
        return str(val.v)
    if isinstance(val, VDec):
        return format_dec(val.raw)
    if isinstance(val, VDbl):
        return repr(val.v)
    if isinstance(val, VStr):
        return val.v
    if isinstance(val, VBool):
        return "true" if val.v else "false"
    if isinstance(val, VBytes):
        return "0x" + val.v.hex()
    if isinstance(val, VList):
        return "[" + ", ".join(render(x) for x in val.items) + "]"
    if isinstance(val, VRec):
        if not val.fields:
            return "none"
        return "{" + ", ".join(f"{k}: {render(v)}" for k, v in val.fields) + "}"
    if isinstance(val, VModel):
        return f"model#{val.handle}"
    raise EncodingError(f"not a Value: {val!r}")
