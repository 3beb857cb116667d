"""Shamir secret sharing over Z_q, with shares at x = 1..n."""
from __future__ import annotations

from typing import Iterable, Sequence

from .group import SYSTEM_RNG, Rng


def split(secret: int, k: int, n: int, q: int, rng: Rng = SYSTEM_RNG) -> list[int]:
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    coeffs = [secret % q] + [rng.randbelow(q) for _ in range(k - 1)]
    shares = []
    for x in range(1, n + 1):
        # Horner
        y = 0
        for c in reversed(coeffs):
            y = (y * x + c) % q
        shares.append(y)
    return shares


def lagrange_at_zero(xs: Sequence[int], i: int, q: int) -> int:
    num = 1
    den = 1
    for j in xs:
        if j != i:
            num = num * j % q
            den = den * (j - i) % q
    if den == 0:
        raise ValueError("duplicate x-coordinates")
    return num * pow(den, -1, q) % q


def combine(points: Iterable[tuple[int, int]], q: int) -> int:
    points = list(points)
    xs = [x for x, _ in points]
    return sum(lagrange_at_zero(xs, x, q) * y for x, y in points) % q
