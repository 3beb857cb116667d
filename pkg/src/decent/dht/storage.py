"""What a storage node keeps, and the rules it applies to writes.

A storage node sees only opaque sealed blobs plus two plaintext fields: the
version (for freshness) and the per-object write-authentication key. It never
learns content keys, signature keys or policies.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

from ..crypto.primitives import verify
from ..wire import Reader, Writer

OBJECT_ID_LEN = 20
MAX_APPEND_ENTRY = 64 * 1024


class Behavior(str, Enum):
    HONEST = "honest"
    DROP = "drop"  # accepts writes, stores nothing, never answers reads
    STALE = "stale"  # keeps the first version it saw, ignores updates
    REFUSE_APPEND = "refuse-append"
    GARBAGE = "garbage"  # answers reads with a forged, higher-versioned blob


class Refused(Exception):
    def __init__(self, reason: str) -> None:
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class StoredRecord:
    obj_id: bytes
    version: int
    wapk: bytes
    blob: bytes
    auth_sig: bytes = b""
    appends: tuple = ()

    def digest(self) -> bytes:
        return record_digest(self.obj_id, self.version, self.wapk, self.blob)

    def to_bytes(self) -> bytes:
        w = Writer().raw(self.obj_id).u64(self.version).blob(self.wapk).blob(self.blob).blob(self.auth_sig)
        w.u32(len(self.appends))
        for entry in self.appends:
            w.blob(entry)
        return w.getvalue()

    @classmethod
    def read(cls, r: Reader) -> "StoredRecord":
        obj_id = r.raw(OBJECT_ID_LEN)
        version = r.u64()
        wapk, blob, sig = r.blob(), r.blob(), r.blob()
        appends = tuple(r.blob() for _ in range(r.u32()))
        return cls(obj_id, version, wapk, blob, sig, appends)

    @classmethod
    def from_bytes(cls, data: bytes) -> "StoredRecord":
        r = Reader(data)
        rec = cls.read(r)
        r.done()
        return rec


def record_digest(obj_id: bytes, version: int, wapk: bytes, blob: bytes) -> bytes:
    h = hashlib.sha256(b"decent/record")
    h.update(Writer().raw(obj_id).u64(version).blob(wapk).blob(blob).getvalue())
    return h.digest()


def write_auth_message(obj_id: bytes, version: int, digest: bytes) -> bytes:
    return b"decent/write" + obj_id + version.to_bytes(8, "big") + digest


def delete_auth_message(obj_id: bytes, version: int) -> bytes:
    return b"decent/delete" + obj_id + version.to_bytes(8, "big")


def write_authorized(rec: StoredRecord, wapk: bytes) -> bool:
    return verify(wapk, write_auth_message(rec.obj_id, rec.version, rec.digest()), rec.auth_sig)


def entry_digest(entry: bytes) -> bytes:
    return hashlib.sha256(entry).digest()


def merge_appends(existing: tuple, incoming: tuple) -> tuple:
    """Union by entry digest, keeping existing order and appending new arrivals."""
    seen = {entry_digest(e) for e in existing}
    out = list(existing)
    for e in incoming:
        d = entry_digest(e)
        if d not in seen:
            seen.add(d)
            out.append(e)
    return tuple(out)


@dataclass(frozen=True)
class Tombstone:
    obj_id: bytes
    wapk: bytes
    version: int
    signature: bytes

    def valid(self) -> bool:
        return verify(self.wapk, delete_auth_message(self.obj_id, self.version), self.signature)


@dataclass
class RecordStore:
    """Per-node record table enforcing claim-once, write authentication and freshness.

    Deletions leave a tombstone bound to the deleted record's WAPK so replica
    repair cannot resurrect the object; a new WAPK may claim the id again.
    """

    records: dict = field(default_factory=dict)
    tombstones: dict = field(default_factory=dict)

    def get(self, obj_id: bytes) -> StoredRecord | None:
        return self.records.get(obj_id)

    def put_new(self, rec: StoredRecord) -> None:
        if rec.obj_id in self.records:
            raise Refused("object id already claimed")
        if not write_authorized(rec, rec.wapk):
            raise Refused("claim not signed by the record's write key")
        tomb = self.tombstones.get(rec.obj_id)
        if tomb is not None:
            if tomb.wapk == rec.wapk:
                raise Refused("object was deleted")
            del self.tombstones[rec.obj_id]
        self.records[rec.obj_id] = replace(rec, appends=())

    def put_update(self, rec: StoredRecord) -> None:
        cur = self.records.get(rec.obj_id)
        if cur is None:
            self.put_new(rec)
            return
        if rec.wapk != cur.wapk:
            raise Refused("write key does not match stored record")
        if rec.version <= cur.version:
            raise Refused("stale version")
        if not write_authorized(rec, cur.wapk):
            raise Refused("bad write signature")
        # appends live beside the body and survive overwrites
        self.records[rec.obj_id] = replace(rec, appends=cur.appends)

    def append(self, obj_id: bytes, entry: bytes) -> None:
        cur = self.records.get(obj_id)
        if cur is None:
            raise Refused("unknown object")
        if len(entry) > MAX_APPEND_ENTRY:
            raise Refused("append entry too large")
        self.records[obj_id] = replace(cur, appends=cur.appends + (entry,))

    def delete(self, obj_id: bytes, signature: bytes) -> None:
        cur = self.records.get(obj_id)
        if cur is None:
            raise Refused("unknown object")
        tomb = Tombstone(obj_id, cur.wapk, cur.version, signature)
        if not tomb.valid():
            raise Refused("bad delete signature")
        del self.records[obj_id]
        self.tombstones[obj_id] = tomb

    def bury(self, tomb: Tombstone) -> bool:
        """Apply a tombstone relayed by another replica."""
        cur = self.records.get(tomb.obj_id)
        known = self.tombstones.get(tomb.obj_id)
        if known is not None and known.wapk == tomb.wapk:
            return False
        if cur is not None and cur.wapk != tomb.wapk:
            return False
        if not tomb.valid():
            return False
        self.records.pop(tomb.obj_id, None)
        self.tombstones[tomb.obj_id] = tomb
        return True

    def replicate(self, rec: StoredRecord) -> bool:
        """Absorb a copy pushed by another replica. Returns True if state changed."""
        cur = self.records.get(rec.obj_id)
        if cur is None:
            tomb = self.tombstones.get(rec.obj_id)
            if tomb is not None and tomb.wapk == rec.wapk:
                return False
            if not write_authorized(rec, rec.wapk):
                return False
            if tomb is not None:
                del self.tombstones[rec.obj_id]
            self.records[rec.obj_id] = rec
            return True
        if rec.wapk != cur.wapk:
            return False
        changed = False
        if rec.version > cur.version and write_authorized(rec, cur.wapk):
            cur = replace(rec, appends=cur.appends)
            changed = True
        if rec.appends:
            merged = merge_appends(cur.appends, rec.appends)
            if len(merged) != len(cur.appends):
                cur = replace(cur, appends=merged)
                changed = True
        if changed:
            self.records[rec.obj_id] = cur
        return changed
