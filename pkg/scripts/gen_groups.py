"""Regenerate the embedded Schnorr group parameters in decent/crypto/group.py.

Parameters are derived from a fixed seed label so anyone can re-run this and
check the constants were not chosen adversarially.
"""
import hashlib

import gmpy2


def _expand(label: bytes, bits: int) -> int:
    out = b""
    counter = 0
    while len(out) * 8 < bits:
        out += hashlib.sha256(label + counter.to_bytes(4, "big")).digest()
        counter += 1
    n = int.from_bytes(out, "big") >> (len(out) * 8 - bits)
    return n | (1 << (bits - 1))


def generate(name: str, pbits: int, qbits: int):
    q = int(gmpy2.next_prime(_expand(b"decent-q-" + name.encode(), qbits)))
    assert q.bit_length() == qbits
    seed = _expand(b"decent-p-" + name.encode(), pbits)
    k = seed // q
    k += k & 1  # p - 1 = k*q must be even
    while True:
        p = k * q + 1
        if p.bit_length() == pbits and gmpy2.is_prime(p, 64):
            break
        k += 2
    h = 2
    while True:
        g = pow(h, (p - 1) // q, p)
        if g != 1:
            break
        h += 1
    return p, q, g


if __name__ == "__main__":
    for name, pb, qb in [("schnorr-2048-256", 2048, 256), ("schnorr-1024-160", 1024, 160), ("toy-256-64", 256, 64)]:
        p, q, g = generate(name, pb, qb)
        print(f'    "{name}": (\n        0x{p:x},\n        0x{q:x},\n        0x{g:x},\n    ),')
