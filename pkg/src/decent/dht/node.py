"""A storage node: routing table + record store + (possibly adversarial) behavior.

Each node is a single-threaded state machine; ``handle`` processes one
request at a time.
"""
from __future__ import annotations

import random
from dataclasses import replace

from ..wire import DecodeError
from . import messages as m
from .messages import Kind, Message
from .routing import K_BUCKET, RoutingTable
from .storage import Behavior, RecordStore, Refused, StoredRecord, Tombstone


class DhtNode:
    def __init__(
        self,
        node_id: int,
        k: int = K_BUCKET,
        behavior: Behavior = Behavior.HONEST,
        ping=None,
        capture: bool = False,
    ) -> None:
        self.node_id = node_id
        self.behavior = Behavior(behavior)
        self.routing = RoutingTable(node_id, k, ping)
        self.store = RecordStore()
        self.capture = capture
        self.observed: list[bytes] = []
        self._garbage = random.Random(node_id)

    @property
    def honest(self) -> bool:
        return self.behavior is Behavior.HONEST

    def handle(self, src: int, data: bytes) -> bytes | None:
        if self.capture:
            self.observed.append(bytes(data))
        try:
            msg = Message.from_bytes(data)
        except DecodeError:
            return None
        self.routing.update(msg.sender)
        try:
            resp = self.dispatch(msg)
        except DecodeError:
            resp = msg.reply(Kind.REFUSED, self.node_id, b"malformed request")
        return None if resp is None else resp.to_bytes()

    def dispatch(self, msg: Message) -> Message | None:
        kind = msg.kind
        me = self.node_id
        if kind is Kind.PING:
            return msg.reply(Kind.PONG, me)
        if kind is Kind.FIND_NODE:
            target = int.from_bytes(m.read_key(msg.body), "big")
            return msg.reply(Kind.NODES, me, m.nodes_body(self.routing.closest(target)))
        if kind is Kind.GET:
            rec = self.serve_get(m.read_key(msg.body))
            if rec is None:
                return msg.reply(Kind.NOT_FOUND, me)
            return msg.reply(Kind.RECORD, me, m.record_body(rec))
        try:
            if kind is Kind.PUT_NEW:
                self.put_new(m.read_record(msg.body))
            elif kind is Kind.PUT_UPDATE:
                self.put_update(m.read_record(msg.body))
            elif kind is Kind.APPEND:
                self.append(*m.read_keyed_blob(msg.body))
            elif kind is Kind.DELETE:
                self.delete(*m.read_keyed_blob(msg.body))
            elif kind is Kind.REPLICATE:
                self.replicate(m.read_record(msg.body))
            else:
                return msg.reply(Kind.REFUSED, me, b"unexpected message kind")
        except Refused as exc:
            return msg.reply(Kind.REFUSED, me, exc.reason.encode())
        return msg.reply(Kind.OK, me)

    # -- storage operations, behavior-aware ------------------------------------------

    def put_new(self, rec: StoredRecord) -> None:
        if self.behavior is Behavior.DROP:
            return
        if self.behavior is Behavior.STALE and rec.obj_id in self.store.records:
            return
        self.store.put_new(rec)

    def put_update(self, rec: StoredRecord) -> None:
        if self.behavior is Behavior.DROP:
            return
        if self.behavior is Behavior.STALE and rec.obj_id in self.store.records:
            return
        self.store.put_update(rec)

    def append(self, obj_id: bytes, entry: bytes) -> None:
        if self.behavior in (Behavior.DROP, Behavior.REFUSE_APPEND):
            return
        self.store.append(obj_id, entry)

    def delete(self, obj_id: bytes, signature: bytes) -> None:
        if self.behavior is Behavior.DROP:
            return
        self.store.delete(obj_id, signature)

    def replicate(self, rec: StoredRecord) -> bool:
        if self.behavior is Behavior.DROP:
            return False
        if self.behavior is Behavior.STALE and rec.obj_id in self.store.records:
            return False
        if self.behavior is Behavior.REFUSE_APPEND:
            rec = replace(rec, appends=())
        return self.store.replicate(rec)

    def bury(self, tomb: Tombstone) -> bool:
        if not self.honest:
            return False
        return self.store.bury(tomb)

    def serve_get(self, obj_id: bytes) -> StoredRecord | None:
        if self.behavior is Behavior.DROP:
            return None
        rec = self.store.get(obj_id)
        if self.behavior is Behavior.GARBAGE and rec is not None:
            junk = bytes(self._garbage.getrandbits(8) for _ in range(len(rec.blob)))
            return replace(rec, version=rec.version + 1, blob=junk)
        return rec
