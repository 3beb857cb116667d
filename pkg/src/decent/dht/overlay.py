"""Overlay membership, iterative lookups and the client-side storage API."""
from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field, replace

from ..crypto.group import SYSTEM_RNG, Rng
from . import messages as m
from .kernels import IdTable, bucket_index
from .messages import NODE_ID_LEN, Kind, Message
from .node import DhtNode
from .routing import ID_BITS, K_BUCKET
from .storage import OBJECT_ID_LEN, Behavior, StoredRecord, merge_appends
from .transport import InstantTransport, Transport


class DhtLookupError(Exception):
    pass


class NoReplicaResponded(DhtLookupError):
    pass


@dataclass
class DhtConfig:
    k: int = K_BUCKET
    alpha: int = 3
    replicas: int = 5
    # "iterative" runs Kademlia lookups to find replica sets; "oracle" uses the
    # true closest live nodes (stands in for secure routing)
    routing: str = "iterative"


@dataclass
class LookupResult:
    nodes: list
    hops: int
    queried: int


@dataclass
class WriteResult:
    accepted: int = 0
    refused: list = field(default_factory=list)
    unreachable: int = 0

    @property
    def ok(self) -> bool:
        return self.accepted > 0


@dataclass
class MaintenanceReport:
    pushes: int = 0
    repaired: int = 0
    buried: int = 0


def as_int(key: bytes | int) -> int:
    return key if isinstance(key, int) else int.from_bytes(key, "big")


class Overlay:
    """All nodes of one simulated network sharing a transport."""

    def __init__(
        self,
        transport: Transport | None = None,
        config: DhtConfig | None = None,
        rng: Rng = SYSTEM_RNG,
        capture: bool = False,
    ) -> None:
        self.transport = transport if transport is not None else InstantTransport()
        self.config = config or DhtConfig()
        self.rng = rng
        self.capture = capture
        self.nodes: dict[int, DhtNode] = {}
        self.live = IdTable()
        self._request_ids = itertools.count(1)

    def next_request_id(self) -> int:
        return next(self._request_ids)

    def new_id(self) -> int:
        while True:
            nid = int.from_bytes(self.rng.token_bytes(NODE_ID_LEN), "big")
            if nid not in self.nodes:
                return nid

    def is_alive(self, node_id: int) -> bool:
        return node_id in self.live

    def add_node(
        self,
        node_id: int | None = None,
        behavior: Behavior = Behavior.HONEST,
        bootstrap: int | None = None,
        lookups: bool = True,
    ) -> DhtNode:
        """Join a node, seeding its table from ``bootstrap`` then looking up its own id.

        ``lookups=False`` skips the join lookups; only useful when replica sets
        come from oracle routing and routing tables are never consulted.
        """
        if node_id is None:
            node_id = self.new_id()
        node = DhtNode(node_id, self.config.k, behavior, ping=self.is_alive, capture=self.capture)
        if bootstrap is None and len(self.live):
            bootstrap = next(iter(self.live))
        self.nodes[node_id] = node
        self.live.add(node_id)
        self.transport.register(node_id, node.handle)
        if bootstrap is not None:
            node.routing.update(bootstrap)
            if not lookups:
                return node
            client = self.client(node_id)
            client.lookup(node_id)
            self.refresh_empty_buckets(node)
        return node

    def refresh_empty_buckets(self, node: DhtNode) -> None:
        """Look up a random id in each empty bucket beyond the nearest neighbor."""
        routing = node.routing
        nearest = routing.closest(node.node_id, 1)
        if not nearest:
            return
        lowest = bucket_index(node.node_id, nearest[0])
        client = self.client(node.node_id)
        for i in range(lowest + 1, ID_BITS):
            if routing.buckets[i]:
                continue
            offset = int.from_bytes(self.rng.token_bytes(NODE_ID_LEN), "big") % (1 << i)
            client.lookup(node.node_id ^ ((1 << i) | offset))

    def remove_node(self, node_id: int) -> DhtNode:
        node = self.nodes.pop(node_id)
        self.live.remove(node_id)
        self.transport.unregister(node_id)
        return node

    def hand_off(self, node_id: int) -> int:
        """Graceful leave: an honest node pushes its store to each key's replica set."""
        node = self.nodes[node_id]
        if not node.honest:
            return 0
        pushes = 0
        r = self.config.replicas
        for tomb in list(node.store.tombstones.values()):
            for peer in self.closest_live(tomb.obj_id, r + 1):
                if peer != node_id:
                    pushes += 1
                    self.nodes[peer].bury(tomb)
        for rec in list(node.store.records.values()):
            for peer in [p for p in self.closest_live(rec.obj_id, r + 1) if p != node_id][:r]:
                pushes += 1
                self.nodes[peer].replicate(rec)
        return pushes

    def closest_live(self, target: bytes | int, n: int) -> list[int]:
        return self.live.closest(as_int(target), n)

    def client(self, node_id: int, stats: Counter | None = None) -> "DhtClient":
        return DhtClient(self, node_id, stats)

    def honest_nodes(self) -> list[DhtNode]:
        return [n for n in self.nodes.values() if n.honest]

    def replica_maintenance(self) -> MaintenanceReport:
        """One repair round: every honest holder re-pushes what it stores.

        Records and tombstones go to the current R closest live nodes of each
        key. Holders displaced from a replica set keep their copies and keep
        pushing them, so a copy survives as long as one honest holder does.
        """
        report = MaintenanceReport()
        targets: dict[bytes, list[DhtNode]] = {}

        def replica_nodes(obj_id: bytes) -> list[DhtNode]:
            found = targets.get(obj_id)
            if found is None:
                found = [self.nodes[i] for i in self.closest_live(obj_id, self.config.replicas)]
                targets[obj_id] = found
            return found

        for node_id in list(self.live):
            node = self.nodes[node_id]
            if not node.honest:
                continue
            for tomb in list(node.store.tombstones.values()):
                for peer in replica_nodes(tomb.obj_id):
                    if peer is not node:
                        report.pushes += 1
                        report.buried += peer.bury(tomb)
            for rec in list(node.store.records.values()):
                for peer in replica_nodes(rec.obj_id):
                    if peer is not node:
                        report.pushes += 1
                        report.repaired += peer.replicate(rec)
        return report


class DhtClient:
    """Storage operations issued from one overlay node."""

    def __init__(self, overlay: Overlay, node_id: int, stats: Counter | None = None) -> None:
        self.overlay = overlay
        self.node_id = node_id
        self.stats = stats if stats is not None else Counter()

    @property
    def node(self) -> DhtNode:
        return self.overlay.nodes[self.node_id]

    def _rpc(self, kind: Kind, dests: list[int], body: bytes = b"") -> list[Message | None]:
        reqs = []
        for dst in dests:
            msg = Message(kind, self.overlay.next_request_id(), self.node_id, body)
            reqs.append((dst, msg.to_bytes()))
        self.stats["messages"] += len(reqs)
        out = []
        for raw in self.overlay.transport.call_many(self.node_id, reqs):
            if raw is None:
                out.append(None)
                continue
            try:
                out.append(Message.from_bytes(raw))
            except ValueError:
                out.append(None)
        return out

    def lookup(self, target: bytes | int) -> LookupResult:
        """Iterative Kademlia node lookup; returns the k closest nodes that answered.

        Rounds query ``alpha`` unqueried nodes among the current k best. When a
        round brings nothing closer than the best already seen, one final round
        queries every remaining unqueried node of the k best. ``hops`` counts
        rounds of network round trips.
        """
        cfg = self.overlay.config
        t = as_int(target)
        me = self.node_id
        routing = self.node.routing
        shortlist = IdTable(routing.closest(t, cfg.k))
        shortlist.add(me)
        queried = {me}
        failed: set[int] = set()
        hops = 0

        def best() -> list[int]:
            return [i for i in shortlist.closest(t, cfg.k + len(failed)) if i not in failed][: cfg.k]

        closest_seen = best()[0] ^ t
        exhaustive = False
        while True:
            pending = [i for i in best() if i not in queried]
            if not pending:
                break
            if not exhaustive:
                pending = pending[: cfg.alpha]
            hops += 1
            queried.update(pending)
            replies = self._rpc(Kind.FIND_NODE, pending, m.key_body(t))
            for peer, reply in zip(pending, replies):
                if reply is None or reply.kind is not Kind.NODES:
                    failed.add(peer)
                    routing.remove(peer)
                    continue
                routing.update(peer)
                try:
                    found = m.read_nodes(reply.body)
                except ValueError:
                    continue
                for nid in found:
                    if nid not in failed:
                        shortlist.add(nid)
            head = best()[0] ^ t
            if head < closest_seen:
                closest_seen = head
            else:
                exhaustive = True
        nodes = best()
        if nodes == [me] and len(self.overlay.live) > 1:
            raise DhtLookupError("no reachable contact")
        self.stats["lookups"] += 1
        self.stats["hops"] += hops
        return LookupResult(nodes, hops, len(queried) - 1)

    def replica_set(self, obj_id: bytes, width: int | None = None) -> list[int]:
        cfg = self.overlay.config
        n = width or cfg.replicas
        if cfg.routing == "oracle":
            return self.overlay.closest_live(obj_id, n)
        return self.lookup(obj_id).nodes[:n]

    def _write(self, kind: Kind, obj_id: bytes, body: bytes) -> WriteResult:
        result = WriteResult()
        for reply in self._rpc(kind, self.replica_set(obj_id), body):
            if reply is None:
                result.unreachable += 1
            elif reply.kind is Kind.OK:
                result.accepted += 1
            else:
                result.refused.append(reply.body.decode(errors="replace"))
        return result

    def put_new(self, rec: StoredRecord) -> WriteResult:
        self.stats["puts"] += 1
        return self._write(Kind.PUT_NEW, rec.obj_id, m.record_body(rec))

    def put_update(self, rec: StoredRecord) -> WriteResult:
        self.stats["puts"] += 1
        return self._write(Kind.PUT_UPDATE, rec.obj_id, m.record_body(rec))

    def republish(self, rec: StoredRecord) -> WriteResult:
        """Publisher refresh: push a record we wrote to its current replica set."""
        self.stats["republishes"] += 1
        return self._write(Kind.REPLICATE, rec.obj_id, m.record_body(rec))

    def append(self, obj_id: bytes, entry: bytes) -> WriteResult:
        self.stats["appends"] += 1
        return self._write(Kind.APPEND, obj_id, m.keyed_blob_body(obj_id, entry))

    def delete(self, obj_id: bytes, signature: bytes) -> WriteResult:
        self.stats["deletes"] += 1
        return self._write(Kind.DELETE, obj_id, m.keyed_blob_body(obj_id, signature))

    def get_fresh(self, obj_id: bytes, width: int | None = None) -> list[StoredRecord]:
        """Query the replica set concurrently and return every distinct candidate.

        Candidates are grouped by (version, body digest) and ordered by
        descending version; every candidate carries the union of all append
        lists seen, since appends are reconciled at read time. The caller verifies them.
        Raises NoReplicaResponded when no queried node answers at all.
        """
        if len(obj_id) != OBJECT_ID_LEN:
            raise ValueError("object ids are 20 bytes")
        self.stats["gets"] += 1
        dests = self.replica_set(obj_id, width)
        replies = self._rpc(Kind.GET, dests, m.key_body(obj_id))
        answered = 0
        candidates: dict[tuple, StoredRecord] = {}
        appends: tuple = ()
        for reply in replies:
            if reply is None:
                continue
            answered += 1
            if reply.kind is not Kind.RECORD:
                continue
            try:
                rec = m.read_record(reply.body)
            except ValueError:
                continue
            if rec.obj_id != obj_id:
                continue
            appends = merge_appends(appends, rec.appends)
            candidates.setdefault((rec.version, rec.wapk, rec.digest(), rec.auth_sig), rec)
        if dests and not answered:
            raise NoReplicaResponded(obj_id.hex())
        return sorted((replace(r, appends=appends) for r in candidates.values()), key=lambda r: -r.version)
