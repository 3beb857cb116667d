"""Pure-Python fallback for the XOR-metric kernels in ``_kernels.pyx``."""
from __future__ import annotations

import heapq
from typing import Sequence

BACKEND = "python"


def build_table(ids: Sequence[int]) -> list[int]:
    return list(ids)


def closest(table: list[int], target: int, k: int) -> list[int]:
    if k <= 0:
        return []
    return heapq.nsmallest(k, range(len(table)), key=lambda i: table[i] ^ target)


def bucket_index(a: int, b: int) -> int:
    return (a ^ b).bit_length() - 1
