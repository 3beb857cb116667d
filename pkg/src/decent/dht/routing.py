"""Kademlia k-bucket routing table."""
from __future__ import annotations

from collections import OrderedDict
from typing import Callable

from .kernels import IdTable, bucket_index

ID_BITS = 160
K_BUCKET = 20


class RoutingTable:
    """Bucket ``i`` holds contacts at XOR distance in ``[2^i, 2^(i+1))``.

    When a bucket is full, the least-recently-seen contact is pinged; it is
    evicted only if it fails to answer, otherwise the newcomer is dropped.
    """

    def __init__(self, own_id: int, k: int = K_BUCKET, ping: Callable[[int], bool] | None = None) -> None:
        self.own_id = own_id
        self.k = k
        self.ping = ping
        self.buckets: list[OrderedDict] = [OrderedDict() for _ in range(ID_BITS)]
        self._ids = IdTable()

    def update(self, node_id: int) -> bool:
        if node_id == self.own_id:
            return False
        bucket = self.buckets[bucket_index(self.own_id, node_id)]
        if node_id in bucket:
            bucket.move_to_end(node_id)
            return True
        if len(bucket) >= self.k:
            lrs = next(iter(bucket))
            if self.ping is not None and self.ping(lrs):
                bucket.move_to_end(lrs)
                return False
            self.remove(lrs)
        bucket[node_id] = None
        self._ids.add(node_id)
        return True

    def remove(self, node_id: int) -> None:
        if node_id == self.own_id:
            return
        bucket = self.buckets[bucket_index(self.own_id, node_id)]
        if node_id in bucket:
            del bucket[node_id]
            self._ids.remove(node_id)

    def closest(self, target: int, n: int | None = None) -> list[int]:
        return self._ids.closest(target, self.k if n is None else n)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._ids

    def __len__(self) -> int:
        return len(self._ids)

    def contacts(self) -> list[int]:
        return list(self._ids)
