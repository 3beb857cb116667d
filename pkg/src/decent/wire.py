"""Canonical binary encoding helpers shared by every wire format.

All integers are big-endian. Variable-length fields carry a 4-byte length
prefix; policy trees use unsigned LEB128 varints.
"""
from __future__ import annotations

import struct


class DecodeError(ValueError):
    """Raised when a byte string is not a valid canonical encoding."""


def encode_varint(n: int) -> bytes:
    if n < 0:
        raise ValueError("varint must be non-negative")
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


class Writer:
    def __init__(self) -> None:
        self._parts: list[bytes] = []

    def u8(self, n: int) -> "Writer":
        self._parts.append(struct.pack(">B", n))
        return self

    def u32(self, n: int) -> "Writer":
        self._parts.append(struct.pack(">I", n))
        return self

    def u64(self, n: int) -> "Writer":
        self._parts.append(struct.pack(">Q", n))
        return self

    def varint(self, n: int) -> "Writer":
        self._parts.append(encode_varint(n))
        return self

    def raw(self, b: bytes) -> "Writer":
        self._parts.append(bytes(b))
        return self

    def blob(self, b: bytes) -> "Writer":
        self._parts.append(struct.pack(">I", len(b)))
        self._parts.append(bytes(b))
        return self

    def text(self, s: str) -> "Writer":
        return self.blob(s.encode("utf-8"))

    def opt_blob(self, b: bytes | None) -> "Writer":
        if b is None:
            return self.u8(0)
        return self.u8(1).blob(b)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = memoryview(bytes(data))
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if n < 0 or self._pos + n > len(self._data):
            raise DecodeError("truncated input")
        out = self._data[self._pos:self._pos + n].tobytes()
        self._pos += n
        return out

    def u8(self) -> int:
        return self._take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self._take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def varint(self) -> int:
        shift = 0
        n = 0
        while True:
            b = self.u8()
            n |= (b & 0x7F) << shift
            if not b & 0x80:
                return n
            shift += 7
            if shift > 63:
                raise DecodeError("varint too long")

    def raw(self, n: int) -> bytes:
        return self._take(n)

    def blob(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        try:
            return self.blob().decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(str(exc)) from exc

    def opt_blob(self) -> bytes | None:
        flag = self.u8()
        if flag == 0:
            return None
        if flag != 1:
            raise DecodeError(f"bad optional flag {flag}")
        return self.blob()

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos

    def done(self) -> None:
        if self.remaining:
            raise DecodeError(f"{self.remaining} trailing bytes")
