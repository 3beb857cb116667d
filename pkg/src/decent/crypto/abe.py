"""Policy-based hybrid encryption with a proxy in every decryption.

Pairing-free construction:

* Each attribute ``a`` of a key authority has a secret exponent ``a`` and a
  public element ``g^a``.
* Encryption picks ``r`` and a root secret ``s``, Shamir-splits ``s`` down the
  policy tree and masks each leaf share with ``KDF(g^(r a))``. The payload is
  sealed under ``KDF(s)``.
* A contact holds ``a * x`` for a per-(contact, attribute) blinding ``x``. The
  authority's proxy holds ``1/x``. To recover ``g^(r a)`` the contact sends
  ``(g^r)^(a x y)`` for a fresh ``y``, the proxy raises it to ``1/x``, and the
  contact strips ``y``. Revocation deletes the proxy entry, so the contact can
  no longer unmask any leaf for that attribute, on old and new ciphertexts.
* Delegation multiplies in another blinding held by the delegator's proxy, so
  a delegated key needs every proxy on the chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Protocol, Sequence

from .. import policy as pol
from ..policy import AttributeId, Leaf, PolicyTree
from ..wire import DecodeError, Reader, Writer
from . import shamir
from .group import SYSTEM_RNG, Group, Rng, get_group
from .primitives import AuthenticationError, CryptoError, kdf, sym_open, sym_seal


class PolicyUnsatisfied(CryptoError):
    """The key's attributes cannot satisfy the ciphertext policy."""


class ProxyRefused(CryptoError):
    """The proxy holds no entry for (holder, attribute): revoked or never issued."""


class RevokedError(ProxyRefused):
    """Every satisfying leaf selection needs an attribute the proxy refused."""


class ProxyUnavailable(CryptoError):
    """A proxy (or proxy share node) did not answer."""


class DecryptionError(AuthenticationError):
    """Reconstructed root secret failed to open the sealed payload."""


class UnknownAttribute(CryptoError, KeyError):
    pass


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b, strict=True))


# -- keys -------------------------------------------------------------------------

@dataclass(frozen=True)
class PublicParams:
    group: Group
    elements: Mapping[AttributeId, int]


@dataclass(frozen=True)
class MasterKey:
    owner: str
    group: Group
    exponents: Mapping[AttributeId, int]
    seed: bytes = b""

    @cached_property
    def public_params(self) -> PublicParams:
        return PublicParams(self.group, {a: self.group.base_exp(e) for a, e in self.exponents.items()})

    @property
    def attributes(self) -> set[AttributeId]:
        return set(self.exponents)

    def owner_seal_key(self, label: bytes = b"owner-seal") -> bytes:
        """Symmetric key only the owner can derive; used to seal write keys to self."""
        return kdf(self.seed, label)

    def to_bytes(self) -> bytes:
        w = Writer().text(self.owner).text(self.group.name).blob(self.seed).u32(len(self.exponents))
        for attr in sorted(self.exponents):
            w.raw(attr).blob(self.group.encode_scalar(self.exponents[attr]))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "MasterKey":
        r = Reader(data)
        owner, group = r.text(), get_group(r.text())
        seed = r.blob()
        exps = {}
        for _ in range(r.u32()):
            attr = r.raw(pol.ATTRIBUTE_ID_LEN)
            exps[attr] = group.decode_scalar(r.blob())
        r.done()
        return cls(owner, group, exps, seed)


def keygen_master(
    names: Sequence[str],
    group: Group | None = None,
    rng: Rng = SYSTEM_RNG,
    owner: str = "",
) -> tuple[MasterKey, dict[str, AttributeId]]:
    group = group or get_group()
    master = MasterKey(owner, group, {}, rng.token_bytes(32))
    return extend_master(master, names, rng)


def extend_master(master: MasterKey, names: Sequence[str], rng: Rng = SYSTEM_RNG) -> tuple[MasterKey, dict[str, AttributeId]]:
    """Add fresh attributes to an authority. Existing ids are untouched."""
    if len(set(names)) != len(names):
        raise ValueError("duplicate attribute name")
    exps = dict(master.exponents)
    ids = {}
    for name in names:
        attr = rng.token_bytes(pol.ATTRIBUTE_ID_LEN)
        while attr in exps:
            attr = rng.token_bytes(pol.ATTRIBUTE_ID_LEN)
        exps[attr] = master.group.random_scalar(rng)
        ids[name] = attr
    return MasterKey(master.owner, master.group, exps, master.seed), ids


@dataclass(frozen=True)
class ContactKey:
    """Blinded attribute exponents held by a contact.

    ``hops`` lists ``(proxy_owner, holder_at_that_proxy)`` in the order the
    proxies must be applied: the nearest delegator first, the key authority last.
    """

    holder: str
    issuer: str
    group: Group
    exponents: Mapping[AttributeId, int]
    hops: tuple

    @property
    def depth(self) -> int:
        return len(self.hops) - 1

    @property
    def attributes(self) -> set[AttributeId]:
        return set(self.exponents)

    def to_bytes(self) -> bytes:
        w = Writer().text(self.holder).text(self.issuer).text(self.group.name).u32(len(self.exponents))
        for attr in sorted(self.exponents):
            w.raw(attr).blob(self.group.encode_scalar(self.exponents[attr]))
        w.u32(len(self.hops))
        for owner, holder in self.hops:
            w.text(owner).text(holder)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ContactKey":
        r = Reader(data)
        holder, issuer, group = r.text(), r.text(), get_group(r.text())
        exps = {}
        for _ in range(r.u32()):
            attr = r.raw(pol.ATTRIBUTE_ID_LEN)
            exps[attr] = group.decode_scalar(r.blob())
        hops = tuple((r.text(), r.text()) for _ in range(r.u32()))
        r.done()
        return cls(holder, issuer, group, exps, hops)


# -- proxies ----------------------------------------------------------------------

class ProxyHandle(Protocol):
    owner: str

    def transform(self, holder: str, attr: AttributeId, element: int) -> int: ...


@dataclass
class ProxyState:
    """Unblinding scalars held by a key authority's revocation proxy.

    Mutated by issue/revoke; callers serialize those mutations. ``transform``
    only reads and may run concurrently.
    """

    owner: str
    group: Group
    entries: dict = field(default_factory=dict)  # (holder, attr) -> 1/x mod q

    def transform(self, holder: str, attr: AttributeId, element: int) -> int:
        return proxy_transform(self, holder, attr, element)

    def revoke(self, holder: str, attrs: Iterable[AttributeId]) -> "ProxyState":
        return revoke(self, holder, attrs)

    def holders(self) -> set[str]:
        return {h for h, _ in self.entries}

    def to_bytes(self) -> bytes:
        w = Writer().text(self.owner).text(self.group.name).u32(len(self.entries))
        for (holder, attr) in sorted(self.entries):
            w.text(holder).raw(attr).blob(self.group.encode_scalar(self.entries[holder, attr]))
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProxyState":
        r = Reader(data)
        owner, group = r.text(), get_group(r.text())
        entries = {}
        for _ in range(r.u32()):
            holder = r.text()
            attr = r.raw(pol.ATTRIBUTE_ID_LEN)
            entries[holder, attr] = group.decode_scalar(r.blob())
        r.done()
        return cls(owner, group, entries)


def proxy_transform(proxy: ProxyState, holder: str, attr: AttributeId, element: int) -> int:
    try:
        unblind = proxy.entries[holder, attr]
    except KeyError:
        raise ProxyRefused(f"no proxy entry for {holder!r}") from None
    return proxy.group.exp(element, unblind)


def issue_key(
    master: MasterKey,
    proxy: ProxyState,
    holder: str,
    attrs: Iterable[AttributeId],
    rng: Rng = SYSTEM_RNG,
) -> ContactKey:
    """Issue blinded attribute keys; re-issuing an attribute rotates its blinding."""
    group = master.group
    exps = {}
    for attr in attrs:
        try:
            a = master.exponents[attr]
        except KeyError:
            raise UnknownAttribute(attr.hex()) from None
        x = group.random_blinding(rng)
        exps[attr] = a * x % group.q
        proxy.entries[holder, attr] = group.inverse(x)
    return ContactKey(holder, master.owner, group, exps, ((proxy.owner, holder),))


def revoke(proxy, holder: str, attrs: Iterable[AttributeId]):
    """Drop (holder, attr) entries from a proxy or proxy share. Absent entries are ignored."""
    for attr in attrs:
        proxy.entries.pop((holder, attr), None)
    return proxy


def delegate(
    key: ContactKey,
    delegator_proxy: ProxyState,
    new_holder: str,
    attrs: Iterable[AttributeId],
    rng: Rng = SYSTEM_RNG,
) -> ContactKey:
    if delegator_proxy.owner != key.holder:
        raise ValueError("delegation must go through the delegator's own proxy")
    group = key.group
    exps = {}
    for attr in attrs:
        try:
            b = key.exponents[attr]
        except KeyError:
            raise UnknownAttribute(f"{attr.hex()} not held by {key.holder!r}") from None
        x = group.random_blinding(rng)
        exps[attr] = b * x % group.q
        delegator_proxy.entries[new_holder, attr] = group.inverse(x)
    return ContactKey(new_holder, key.issuer, group, exps, ((delegator_proxy.owner, new_holder),) + key.hops)


# -- threshold proxies ------------------------------------------------------------

@dataclass
class ProxyShareState:
    """One node's Shamir share of every unblinding scalar of a proxy."""

    owner: str
    group: Group
    index: int
    threshold: int
    entries: dict = field(default_factory=dict)

    def partial(self, holder: str, attr: AttributeId, element: int, subset: Sequence[int]) -> int:
        """Return ``element^(lambda_i * share_i)`` for the responding ``subset``."""
        if self.index not in subset:
            raise ValueError("share index not in subset")
        try:
            share = self.entries[holder, attr]
        except KeyError:
            raise ProxyRefused(f"no proxy share for {holder!r}") from None
        lam = shamir.lagrange_at_zero(list(subset), self.index, self.group.q)
        return self.group.exp(element, lam * share)

    def revoke(self, holder: str, attrs: Iterable[AttributeId]) -> "ProxyShareState":
        return revoke(self, holder, attrs)


def split_proxy(proxy: ProxyState, n: int, t: int, rng: Rng = SYSTEM_RNG) -> list[ProxyShareState]:
    if not 1 <= t <= n:
        raise ValueError(f"need 1 <= t <= n, got t={t}, n={n}")
    shares = [ProxyShareState(proxy.owner, proxy.group, i + 1, t) for i in range(n)]
    for key, scalar in proxy.entries.items():
        install_share(shares, key[0], key[1], scalar, rng)
    return shares


def install_share(
    shares: Sequence[ProxyShareState], holder: str, attr: AttributeId, scalar: int, rng: Rng = SYSTEM_RNG
) -> None:
    t = shares[0].threshold
    values = shamir.split(scalar, t, len(shares), shares[0].group.q, rng)
    for share, value in zip(shares, values):
        share.entries[holder, attr] = value


class ThresholdProxy:
    """Client-side handle that combines ``t`` share responses into one transform."""

    def __init__(self, shares: Sequence, threshold: int, owner: str | None = None) -> None:
        self.shares = list(shares)
        self.threshold = threshold
        self.owner = owner if owner is not None else self.shares[0].owner
        self.group = self.shares[0].group

    def transform(self, holder: str, attr: AttributeId, element: int) -> int:
        candidates = list(self.shares)
        while len(candidates) >= self.threshold:
            chosen = candidates[: self.threshold]
            subset = [s.index for s in chosen]
            parts = []
            for share in chosen:
                try:
                    parts.append(share.partial(holder, attr, element, subset))
                except ProxyUnavailable:
                    candidates.remove(share)
                    break
            else:
                return combine_partials(self.group, parts)
        raise ProxyUnavailable("fewer than threshold proxy shares reachable")


def combine_partials(group: Group, parts: Iterable[int]) -> int:
    out = group.identity
    for p in parts:
        out = group.mul(out, p)
    return out


# -- proxy wire messages ------------------------------------------------------------

PROXY_OK = 0
PROXY_REVOKED = 1


@dataclass(frozen=True)
class ProxyRequest:
    holder: str
    attr: AttributeId
    element: bytes
    subset: tuple = ()

    def to_bytes(self) -> bytes:
        w = Writer().text(self.holder).raw(self.attr).blob(self.element).u32(len(self.subset))
        for i in self.subset:
            w.u32(i)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "ProxyRequest":
        r = Reader(data)
        holder, attr, element = r.text(), r.raw(pol.ATTRIBUTE_ID_LEN), r.blob()
        subset = tuple(r.u32() for _ in range(r.u32()))
        r.done()
        return cls(holder, attr, element, subset)


def encode_proxy_response(element: bytes | None) -> bytes:
    if element is None:
        return bytes([PROXY_REVOKED])
    return bytes([PROXY_OK]) + element


def decode_proxy_response(data: bytes) -> bytes | None:
    if not data:
        raise DecodeError("empty proxy response")
    if data[0] == PROXY_REVOKED and len(data) == 1:
        return None
    if data[0] != PROXY_OK:
        raise DecodeError("bad proxy response status")
    return data[1:]


def serve_proxy_request(state, request: bytes) -> bytes:
    """Answer one encoded request against a ProxyState or ProxyShareState."""
    req = ProxyRequest.from_bytes(request)
    group = state.group
    element = group.decode_element(req.element)
    try:
        if isinstance(state, ProxyShareState):
            out = state.partial(req.holder, req.attr, element, req.subset)
        else:
            out = proxy_transform(state, req.holder, req.attr, element)
    except ProxyRefused:
        return encode_proxy_response(None)
    return encode_proxy_response(group.encode_element(out))


# -- ciphertexts --------------------------------------------------------------------

@dataclass(frozen=True)
class PolicyCiphertext:
    c0: int
    policy: PolicyTree
    masked_shares: tuple
    sealed: bytes

    def to_bytes(self) -> bytes:
        w = Writer()
        nbytes = (self.c0.bit_length() + 7) // 8 or 1
        w.blob(self.c0.to_bytes(nbytes, "big")).blob(pol.to_bytes(self.policy)).u32(len(self.masked_shares))
        for m in self.masked_shares:
            w.blob(m)
        w.blob(self.sealed)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PolicyCiphertext":
        r = Reader(data)
        c0 = int.from_bytes(r.blob(), "big")
        tree = pol.from_bytes(r.blob())
        masked = tuple(r.blob() for _ in range(r.u32()))
        sealed = r.blob()
        r.done()
        if len(masked) != sum(1 for _ in pol.iter_leaves(tree)):
            raise DecodeError("share count does not match policy leaves")
        return cls(c0, tree, masked, sealed)


def _leaf_mask(group: Group, seed: int, leaf_index: int) -> bytes:
    return kdf(group.encode_element(seed), b"leaf-mask" + leaf_index.to_bytes(4, "big"), group.scalar_len)


def _seal_key(group: Group, root_secret: int) -> bytes:
    return kdf(group.encode_scalar(root_secret), b"root-seal")


def _payload_ad(group: Group, c0: int, tree: PolicyTree) -> bytes:
    return group.encode_element(c0) + pol.to_bytes(tree)


def encrypt(
    policy: PolicyTree,
    payload: bytes,
    params: PublicParams,
    rng: Rng = SYSTEM_RNG,
    *,
    r: int | None = None,
    root_secret: int | None = None,
) -> PolicyCiphertext:
    group = params.group
    r = group.random_scalar(rng) if r is None else r
    s = rng.randbelow(group.q) if root_secret is None else root_secret
    c0 = group.base_exp(r)

    shares: dict = {}

    def walk(node: PolicyTree, path: tuple, secret: int) -> None:
        if isinstance(node, Leaf):
            shares[path] = secret
            return
        parts = shamir.split(secret, node.k, len(node.children), group.q, rng)
        for i, child in enumerate(node.children):
            walk(child, path + (i,), parts[i])

    walk(policy, (), s)
    masked = []
    for j, (path, leaf) in enumerate(pol.iter_leaves(policy)):
        try:
            pk = params.elements[leaf.attr]
        except KeyError:
            raise UnknownAttribute(leaf.attr.hex()) from None
        seed = group.exp(pk, r)
        masked.append(_xor(group.encode_scalar(shares[path]), _leaf_mask(group, seed, j)))
    sealed = sym_seal(_seal_key(group, s), payload, _payload_ad(group, c0, policy), rng)
    return PolicyCiphertext(c0, policy, tuple(masked), sealed)


def open_with_leaf_seeds(ct: PolicyCiphertext, group: Group, selection: pol.Selection, seeds: Mapping[int, int]) -> bytes:
    """Unmask the selected leaves with their ``g^(r a)`` seeds and open the payload."""
    values = {}
    for path, j, _ in selection.leaves:
        mask = _leaf_mask(group, seeds[j], j)
        values[path] = group.decode_scalar(_xor(ct.masked_shares[j], mask))
    return open_with_leaf_shares(ct, group, selection, values)


def open_with_leaf_shares(ct: PolicyCiphertext, group: Group, selection: pol.Selection, values: Mapping) -> bytes:
    def value(path: tuple) -> int:
        if path in values:
            return values[path]
        k, chosen = selection.nodes[path]
        return shamir.combine(((i + 1, value(path + (i,))) for i in chosen), group.q)

    secret = value(())
    try:
        return sym_open(_seal_key(group, secret), ct.sealed, _payload_ad(group, ct.c0, ct.policy))
    except AuthenticationError:
        raise DecryptionError("sealed payload failed to open") from None


def _blinded_seed(
    ct: PolicyCiphertext,
    key: ContactKey,
    attr: AttributeId,
    proxies: Sequence[ProxyHandle],
    rng: Rng,
) -> int:
    group = key.group
    y = group.random_scalar(rng)
    element = group.exp(ct.c0, key.exponents[attr] * y)
    for proxy, (_, hop_holder) in zip(proxies, key.hops):
        element = proxy.transform(hop_holder, attr, element)
    return group.exp(element, group.inverse(y))


def decrypt(
    ct: PolicyCiphertext,
    key: ContactKey,
    proxies: Sequence[ProxyHandle],
    rng: Rng = SYSTEM_RNG,
    *,
    strict: bool = True,
) -> bytes:
    """Recover the payload through the proxy chain.

    ``proxies[i]`` must serve hop ``key.hops[i]``. If a proxy refuses an
    attribute, the decryptor re-plans around it; the call fails with
    ``RevokedError`` only when no selection avoids the refused attributes.
    """
    if strict and len(proxies) != key.depth + 1:
        raise ValueError(f"key of depth {key.depth} needs {key.depth + 1} proxies, got {len(proxies)}")
    group = key.group
    group.check_element(ct.c0)
    held = set(key.exponents)
    refused: set[AttributeId] = set()
    seeds_by_attr: dict[AttributeId, int] = {}
    while True:
        selection = pol.satisfying_leaf_selection(ct.policy, held - refused)
        if selection is None:
            if refused:
                raise RevokedError("proxy refused every usable attribute")
            raise PolicyUnsatisfied("key attributes do not satisfy the policy")
        try:
            for _, _, attr in selection.leaves:
                if attr not in seeds_by_attr:
                    seeds_by_attr[attr] = _blinded_seed(ct, key, attr, proxies, rng)
        except ProxyRefused:
            refused.add(attr)
            continue
        seeds = {j: seeds_by_attr[attr] for _, j, attr in selection.leaves}
        return open_with_leaf_seeds(ct, group, selection, seeds)


def decrypt_with_master(ct: PolicyCiphertext, master: MasterKey) -> bytes:
    """The key authority opens its own ciphertexts without any proxy."""
    group = master.group
    selection = pol.satisfying_leaf_selection(ct.policy, master.attributes)
    if selection is None:
        raise PolicyUnsatisfied("policy mentions attributes of another authority")
    seeds = {j: group.exp(ct.c0, master.exponents[attr]) for _, j, attr in selection.leaves}
    return open_with_leaf_seeds(ct, group, selection, seeds)


def proxy_rounds(ct: PolicyCiphertext, key: ContactKey) -> int:
    """Number of proxy transforms a successful decryption will request (no refusals)."""
    selection = pol.satisfying_leaf_selection(ct.policy, key.attributes)
    if selection is None:
        return 0
    return len(selection.attributes) * (key.depth + 1)
