"""Canonical byte encoding used for signing, hashing and wire formats.

Integers are fixed-width big-endian (unsigned 64-bit), byte strings and text
are prefixed with a 32-bit big-endian length.  Field order is fixed by the
caller, so two encoders that write the same fields produce identical bytes.
"""

from __future__ import annotations

import hashlib
import struct

U64_MAX = 2**64 - 1


class DecodeError(ValueError):
    """Raised when a canonical byte string cannot be parsed."""


def digest(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def enc_int(value: int) -> bytes:
    if not 0 <= value <= U64_MAX:
        raise ValueError(f"integer out of range for u64: {value}")
    return struct.pack(">Q", value)


def enc_bytes(value: bytes) -> bytes:
    return struct.pack(">I", len(value)) + bytes(value)


def enc_str(value: str) -> bytes:
    return enc_bytes(value.encode("utf-8"))


def enc_bool(value: bool) -> bytes:
    return b"\x01" if value else b"\x00"


class Reader:
    """Sequential reader over a canonical byte string."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._pos = 0

    def _take(self, n: int) -> bytes:
        end = self._pos + n
        if end > len(self._data):
            raise DecodeError(f"truncated input: need {n} bytes at offset {self._pos}")
        chunk = self._data[self._pos:end]
        self._pos = end
        return chunk

    def int(self) -> int:
        return struct.unpack(">Q", self._take(8))[0]

    def bytes(self) -> bytes:
        (length,) = struct.unpack(">I", self._take(4))
        return self._take(length)

    def str(self) -> str:
        raw = self.bytes()
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError("invalid utf-8 in text field") from exc

    def bool(self) -> bool:
        flag = self._take(1)
        if flag not in (b"\x00", b"\x01"):
            raise DecodeError(f"invalid boolean byte {flag!r}")
        return flag == b"\x01"

    def byte(self) -> int:
        return self._take(1)[0]

    def fixed(self, n: int) -> bytes:
        return self._take(n)

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._data)

    def finish(self) -> None:
        if not self.exhausted:
            raise DecodeError(f"{len(self._data) - self._pos} trailing bytes")
