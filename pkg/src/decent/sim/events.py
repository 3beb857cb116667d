"""Deterministic discrete-event loop.

Events fire in (time, insertion order). Time is simulated milliseconds and
only moves forward.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable


@dataclass
class TraceEvent:
    time: float
    kind: str
    detail: str
    cost: float = 0.0


@dataclass
class EventLoop:
    now: float = 0.0
    tracing: bool = False
    trace: list = field(default_factory=list)
    _queue: list = field(default_factory=list)
    _seq: itertools.count = field(default_factory=itertools.count)

    def schedule(self, delay: float, action: Callable[[], None]) -> None:
        if delay < 0:
            raise ValueError("cannot schedule into the past")
        heapq.heappush(self._queue, (self.now + delay, next(self._seq), action))

    def run(self) -> None:
        while self._queue:
            t, _, action = heapq.heappop(self._queue)
            self.now = t
            action()

    def advance(self, ms: float, kind: str = "compute", detail: str = "") -> None:
        """Spend ``ms`` of local time, e.g. on crypto."""
        if ms < 0:
            raise ValueError("negative duration")
        self.now += ms
        if self.tracing:
            self.trace.append(TraceEvent(self.now, kind, detail, ms))

    def record(self, kind: str, detail: str, cost: float = 0.0) -> None:
        if self.tracing:
            self.trace.append(TraceEvent(self.now, kind, detail, cost))

    def pending(self) -> int:
        return len(self._queue)
