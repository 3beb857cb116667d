"""Canonical binary DHT messages.

Frame: ``u8 kind | u64 request id | 20-byte sender id | body``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

from ..wire import DecodeError, Reader, Writer
from .storage import OBJECT_ID_LEN, StoredRecord

NODE_ID_LEN = 20


class Kind(IntEnum):
    PING = 0x01
    FIND_NODE = 0x02
    PUT_NEW = 0x03
    PUT_UPDATE = 0x04
    APPEND = 0x05
    DELETE = 0x06
    GET = 0x07
    REPLICATE = 0x08

    PONG = 0x81
    NODES = 0x82
    OK = 0x83
    REFUSED = 0x84
    RECORD = 0x85
    NOT_FOUND = 0x86


@dataclass(frozen=True)
class Message:
    kind: Kind
    request_id: int
    sender: int
    body: bytes = b""

    def to_bytes(self) -> bytes:
        return (
            Writer().u8(self.kind).u64(self.request_id).raw(self.sender.to_bytes(NODE_ID_LEN, "big")).getvalue()
            + self.body
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "Message":
        r = Reader(data)
        try:
            kind = Kind(r.u8())
        except ValueError as exc:
            raise DecodeError(str(exc)) from None
        request_id = r.u64()
        sender = int.from_bytes(r.raw(NODE_ID_LEN), "big")
        return cls(kind, request_id, sender, r.raw(r.remaining))

    def reply(self, kind: Kind, sender: int, body: bytes = b"") -> "Message":
        return Message(kind, self.request_id, sender, body)


# -- bodies --------------------------------------------------------------------------

def key_body(key: int | bytes) -> bytes:
    if isinstance(key, int):
        key = key.to_bytes(OBJECT_ID_LEN, "big")
    return bytes(key)


def read_key(body: bytes) -> bytes:
    if len(body) != OBJECT_ID_LEN:
        raise DecodeError("bad key length")
    return body


def nodes_body(ids: list[int]) -> bytes:
    w = Writer().u32(len(ids))
    for i in ids:
        w.raw(i.to_bytes(NODE_ID_LEN, "big"))
    return w.getvalue()


def read_nodes(body: bytes) -> list[int]:
    r = Reader(body)
    out = [int.from_bytes(r.raw(NODE_ID_LEN), "big") for _ in range(r.u32())]
    r.done()
    return out


def keyed_blob_body(obj_id: bytes, blob: bytes) -> bytes:
    return Writer().raw(obj_id).blob(blob).getvalue()


def read_keyed_blob(body: bytes) -> tuple[bytes, bytes]:
    r = Reader(body)
    obj_id, blob = r.raw(OBJECT_ID_LEN), r.blob()
    r.done()
    return obj_id, blob


def record_body(rec: StoredRecord) -> bytes:
    return rec.to_bytes()


def read_record(body: bytes) -> StoredRecord:
    return StoredRecord.from_bytes(body)
