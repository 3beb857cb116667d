"""Abstract request/response channel between overlay addresses.

Handlers take raw request bytes and return raw response bytes, or ``None``
for no answer (the caller sees a timeout).
"""
from __future__ import annotations

from collections import Counter
from typing import Callable, Protocol, Sequence

Handler = Callable[[int, bytes], "bytes | None"]


class Transport(Protocol):
    def register(self, addr: int, handler: Handler) -> None: ...
    def unregister(self, addr: int) -> None: ...
    def call(self, src: int, dst: int, payload: bytes) -> bytes | None: ...
    def call_many(self, src: int, requests: Sequence[tuple[int, bytes]]) -> list: ...


class InstantTransport:
    """Synchronous in-memory delivery with no modeled latency."""

    def __init__(self) -> None:
        self.handlers: dict[int, Handler] = {}
        self.stats: Counter = Counter()

    def register(self, addr: int, handler: Handler) -> None:
        self.handlers[addr] = handler

    def unregister(self, addr: int) -> None:
        self.handlers.pop(addr, None)

    def call(self, src: int, dst: int, payload: bytes) -> bytes | None:
        return self.call_many(src, [(dst, payload)])[0]

    def call_many(self, src: int, requests: Sequence[tuple[int, bytes]]) -> list:
        out = []
        for dst, payload in requests:
            self.stats["messages"] += 1
            self.stats["bytes"] += len(payload)
            handler = self.handlers.get(dst)
            resp = handler(src, payload) if handler else None
            if resp is not None:
                self.stats["messages"] += 1
                self.stats["bytes"] += len(resp)
            else:
                self.stats["timeouts"] += 1
            out.append(resp)
        return out
