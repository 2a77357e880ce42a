"""Compressed-file container: header, model binding, symbol count, message."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .ans import Message, deserialize_message, serialize_message

MAGIC = b"FLPC"
VERSION = 1
_HEADER = struct.Struct(">4sB8sQ")


class ContainerError(ValueError):
    pass


@dataclass(frozen=True)
class Container:
    model_hash: bytes
    count: int
    message: Message

    def to_bytes(self) -> bytes:
        if len(self.model_hash) != 8:
            raise ValueError("model hash must be 8 bytes")
        return _HEADER.pack(MAGIC, VERSION, self.model_hash, self.count) + \
            serialize_message(self.message)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Container":
        if len(data) < _HEADER.size:
            raise ContainerError("truncated container header")
        magic, version, model_hash, count = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise ContainerError(f"bad magic {magic!r}, not a flipkit container")
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version}")
        try:
            message = deserialize_message(data[_HEADER.size:])
        except ValueError as e:
            raise ContainerError(f"bad payload: {e}") from None
        return cls(model_hash, count, message)
