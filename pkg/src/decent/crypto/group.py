"""Prime-order subgroups of Z_p^* used for the exponent-blinding scheme.

Elements are Python ints in [1, p). Exponentiation goes through gmpy2 when it
is importable and falls back to the builtin ``pow`` otherwise.
"""
from __future__ import annotations

import secrets
from dataclasses import dataclass
from functools import cached_property
from typing import Protocol

try:
    import gmpy2
except ImportError:  # pragma: no cover - exercised only without gmpy2
    gmpy2 = None


class Rng(Protocol):
    def randbelow(self, n: int) -> int: ...
    def token_bytes(self, n: int) -> bytes: ...


class SystemRng:
    """OS randomness; the default everywhere."""

    def randbelow(self, n: int) -> int:
        return secrets.randbelow(n)

    def token_bytes(self, n: int) -> bytes:
        return secrets.token_bytes(n)


class SeededRng:
    """Reproducible randomness for simulations and tests. Not for real keys."""

    def __init__(self, seed: int | str | bytes) -> None:
        import random

        self._r = random.Random(seed)

    def randbelow(self, n: int) -> int:
        return self._r.randrange(n)

    def token_bytes(self, n: int) -> bytes:
        return self._r.getrandbits(8 * n).to_bytes(n, "big") if n else b""

    def random(self) -> float:
        return self._r.random()

    def fork(self, label: str) -> "SeededRng":
        return SeededRng(f"{self._r.getrandbits(64)}:{label}")


SYSTEM_RNG = SystemRng()


class GroupError(ValueError):
    pass


# (p, q, g): p prime, q prime dividing p - 1, g of order q.
# Regenerate with scripts/gen_groups.py.
_PARAMS = {
    "schnorr-2048-256": (
        0xbe326cd241490d3cc4eeae6a83550f14904eff0d9cc4b1d2d0709b197aa487dee870a4c6b620e9d90009c667746752c4d701465fb8bd99f57a1c8b77066529cfe0c1749afddb0eb247bbf557b0e11b7f6bf1b9744da5430984087ea709042af89c51510501a7573382734dafc59cab1217a1e4aed49fb6b893eeb41ceddd99a4debc0f573b7ef5f42bb357cbc44092f039f105473dc002a3489af535046fc689541572d7d47366a0d9449159764318692cf9ace0d3ea11946e03c28527bc3386905a5507d4c17979dad932db890181a51404fee05207569c58bffd20b886d903bf2eba89b744f9c4c6d955c08c0976d1d8eba4f4bdf94e6ecb4c3bde65c8f9f1,
        0x8e7618e6d8cdbad406de7739218d2c4634681603c9e7d0abb68b87d104a4cb73,
        0xaf767d7fbc6da933118d08112121fc421377738669c38cfda5331eea9e62f85ccc9769b0cf395210314bce1aa31f121681130c91b35ce781f982341190964be7e83ccd3017eeb9f0cf6065d5142ff6b91d1f6f4d408c93117cd610481b9c395af010d9b42e3c9401a42757ea012a759c986cf0c1a325aded6bbedf57226062f8aa93ac0057e88fdd0e258f8efb34b9179883d23e2ec0324a07c302fb1ace0de22d45205fbf4d551104650842d7503a12b2c6198f913e9c46447a6c7f3b8f0ed4fcc0c3b5c261b53451ff15e8012c51129e8141aa8e19f397cacfe0fbaae7b22eedd25e3bd9496197d1dd01227043e835f94b6e6cbc90da4755f78cfa5f7bc3fd,
    ),
    "schnorr-1024-160": (
        0xe92e513f3ef6b88e3699fa01717b9f80f86a781a8d328afc77915b8fc8e621b163fec1fccfef95d6d732ffb59331ed002f8c591f978a44e63bb76977d987a5ac4f8ac3b2528d30431b712fe6bdb778c60097cc65605cdf5624c40c68b4f61a479a94c1c1ad6b207e00b9aa60ff5a8e2fab8cd8a05c5a0935faf2fde4dcc52f71,
        0xea0fa9adc8a9153dd205a927f831630abe131c63,
        0xce7fa3b3da4f5af4f33a730807aad7422029dec73c953e58fd09c4f8e7f52ce87363f39c39949e3f648c3aff164bc916dcfe0d3574c399512d9746fdc7f049a5bfaa617ad88a0478e4ec7985b2fda0814a9fb2d6dc43450f7e489b01701dafa9a974948dfbf8eb64639f854066eb158bac8086b3086d6b699309e53c6b6af61c,
    ),
    "toy-256-64": (
        0xd63b284d6517363b571a89d49283ea5f3b732215b3817ca81882712798809269,
        0xbe0238a94f635ebd,
        0x6eb6ec339b890bba635ed4268a69d4401becb48cffe0a19b587dceb75ee70aa1,
    ),
}

DEFAULT_GROUP = "schnorr-2048-256"


@dataclass(frozen=True)
class Group:
    name: str
    p: int
    q: int
    g: int

    @cached_property
    def element_len(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @cached_property
    def scalar_len(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @cached_property
    def _mp(self):
        return gmpy2.mpz(self.p) if gmpy2 is not None else self.p

    def exp(self, base: int, e: int) -> int:
        if gmpy2 is not None:
            return int(gmpy2.powmod(base, e % self.q, self._mp))
        return pow(base, e % self.q, self.p)

    def base_exp(self, e: int) -> int:
        return self.exp(self.g, e)

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    @property
    def identity(self) -> int:
        return 1

    def is_element(self, x: int) -> bool:
        if not 0 < x < self.p:
            return False
        # exp() reduces the exponent mod q, so raise to q directly here
        if gmpy2 is not None:
            return int(gmpy2.powmod(x, self.q, self._mp)) == 1
        return pow(x, self.q, self.p) == 1

    def check_element(self, x: int) -> int:
        if not self.is_element(x):
            raise GroupError("value is not an element of the subgroup")
        return x

    def random_scalar(self, rng: Rng = SYSTEM_RNG) -> int:
        """Uniform in [1, q - 1]."""
        return 1 + rng.randbelow(self.q - 1)

    def random_blinding(self, rng: Rng = SYSTEM_RNG) -> int:
        """Uniform in [2, q - 1], so a blinding never leaves a value unchanged."""
        return 2 + rng.randbelow(self.q - 2)

    def inverse(self, x: int) -> int:
        return pow(x, -1, self.q)

    def encode_element(self, x: int) -> bytes:
        return x.to_bytes(self.element_len, "big")

    def decode_element(self, data: bytes) -> int:
        if len(data) != self.element_len:
            raise GroupError("bad element length")
        return self.check_element(int.from_bytes(data, "big"))

    def encode_scalar(self, x: int) -> bytes:
        return (x % self.q).to_bytes(self.scalar_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_len:
            raise GroupError("bad scalar length")
        return int.from_bytes(data, "big") % self.q


_CACHE: dict[str, Group] = {}


def get_group(name: str = DEFAULT_GROUP) -> Group:
    if name not in _CACHE:
        try:
            p, q, g = _PARAMS[name]
        except KeyError:
            raise GroupError(f"unknown group {name!r}; known: {sorted(_PARAMS)}") from None
        _CACHE[name] = Group(name, p, q, g)
    return _CACHE[name]


def group_names() -> list[str]:
    return sorted(_PARAMS)
