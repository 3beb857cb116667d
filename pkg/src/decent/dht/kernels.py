"""Select the compiled XOR kernels when built, else the pure-Python ones.

Set ``DECENT_PURE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os
from typing import Iterable

from . import _pykernels

python_backend = _pykernels

if os.environ.get("DECENT_PURE_PYTHON"):
    compiled_backend = None
else:
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

backend = compiled_backend or python_backend
BACKEND = backend.BACKEND


class IdTable:
    """A set of 160-bit ids answering k-closest queries under the XOR metric."""

    def __init__(self, ids: Iterable[int] = (), impl=None) -> None:
        self._impl = impl or backend
        self._ids: list[int] = []
        self._pos: dict[int, int] = {}
        self._table = None
        for x in ids:
            self.add(x)

    def add(self, x: int) -> None:
        if x in self._pos:
            return
        self._pos[x] = len(self._ids)
        self._ids.append(x)
        self._table = None

    def remove(self, x: int) -> None:
        i = self._pos.pop(x)
        last = self._ids.pop()
        if i < len(self._ids):
            self._ids[i] = last
            self._pos[last] = i
        self._table = None

    def __contains__(self, x: int) -> bool:
        return x in self._pos

    def __len__(self) -> int:
        return len(self._ids)

    def __iter__(self):
        return iter(self._ids)

    def closest(self, target: int, k: int) -> list[int]:
        if self._table is None:
            self._table = self._impl.build_table(self._ids)
        return [self._ids[i] for i in self._impl.closest(self._table, target, k)]


def bucket_index(a: int, b: int) -> int:
    return backend.bucket_index(a, b)
