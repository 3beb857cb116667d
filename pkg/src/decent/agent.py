"""User-level workflows: join, contacts, posting, commenting, reading, revocation.

An :class:`Agent` owns one :class:`UserAccount` and talks to the world through
an :class:`Environment`, which supplies a DHT client, proxy handles for key
chains, a clock, and a cost meter. ``LocalEnvironment`` runs everything in
process; the simulator provides a latency-charging one.
"""
from __future__ import annotations

import base64
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from . import objects as obj
from . import policy as pol
from .crypto import abe
from .crypto.abe import ContactKey, MasterKey, PolicyCiphertext, ProxyShareState, ProxyState
from .crypto.group import SYSTEM_RNG, Rng, get_group
from .crypto.primitives import signature_keypair
from .dht.overlay import DhtClient, NoReplicaResponded, Overlay
from .objects import ContainerObject, ObjectReference, OwnerKeys, SealedObject

DEFAULT_ATTRIBUTES = ("friend", "family", "coworker", "acquaintance")
ANY_CONTACT = "friend OR family OR coworker OR acquaintance"
ACCOUNT_FORMAT = "decent-account/1"


class AgentError(Exception):
    pass


class ObjectUnavailable(AgentError):
    """No replica returned an authentic copy of the object."""


class AccessDenied(AgentError):
    """The user's keys cannot open a reference (unsatisfied or revoked)."""


class WallUnreadable(AgentError):
    pass


class UnknownContact(AgentError, KeyError):
    pass


# -- environment ------------------------------------------------------------------

class Environment(Protocol):
    stats: Counter
    rng: Rng

    def dht(self, user: str) -> DhtClient: ...
    def proxies_for(self, key: ContactKey) -> list: ...
    def register_proxy(self, owner: str, proxy) -> None: ...
    def charge(self, op: str, units: int = 1) -> None: ...
    def now(self) -> float: ...


class LocalEnvironment:
    """Single-process world: one overlay, proxies called directly, no cost model."""

    def __init__(self, overlay: Overlay | None = None, rng: Rng = SYSTEM_RNG) -> None:
        self.overlay = overlay if overlay is not None else Overlay(rng=rng)
        if not len(self.overlay.live):
            self.overlay.add_node()
        self.rng = rng
        self.stats: Counter = Counter()
        self.proxies: dict[str, object] = {}
        self.homes: dict[str, int] = {}
        self._tick = 0.0

    def dht(self, user: str) -> DhtClient:
        node = self.homes.get(user)
        if node is None or node not in self.overlay.nodes:
            node = self.overlay.closest_live(user.encode().ljust(20, b"\0")[:20], 1)[0]
            self.homes[user] = node
        return self.overlay.client(node, self.stats)

    def proxies_for(self, key: ContactKey) -> list:
        try:
            return [self.proxies[owner] for owner, _ in key.hops]
        except KeyError as exc:
            raise abe.ProxyUnavailable(f"no proxy for {exc.args[0]!r}") from None

    def register_proxy(self, owner: str, proxy) -> None:
        self.proxies[owner] = proxy

    def charge(self, op: str, units: int = 1) -> None:
        self.stats[f"cost:{op}"] += units

    def now(self) -> float:
        self._tick += 1.0
        return self._tick


# -- account ------------------------------------------------------------------------

@dataclass
class Contact:
    name: str
    root_ref: ObjectReference | None = None
    key: ContactKey | None = None  # issued by them to us
    issued: set = field(default_factory=set)  # attribute names we issued to them


@dataclass
class UserAccount:
    name: str
    signing_key: bytes
    master: MasterKey
    attribute_ids: dict  # name -> AttributeId of our own authority
    proxy: ProxyState
    root_ref: ObjectReference | None = None
    root_id: bytes = b""
    profile_id: bytes = b""
    wall_id: bytes = b""
    contacts: dict = field(default_factory=dict)
    delegated_keys: list = field(default_factory=list)  # keys reaching us through a chain
    key_cache: dict = field(default_factory=dict)  # obj_id -> K, our own objects only
    sealed: dict = field(default_factory=dict)  # obj_id -> last SealedObject we wrote (updatable containers)
    proxy_shares: list = field(default_factory=list)

    @property
    def owner_keys(self) -> OwnerKeys:
        return OwnerKeys(self.signing_key, self.master)

    @property
    def spk(self) -> bytes:
        return self.owner_keys.spk

    def policy(self, text: str) -> pol.PolicyTree:
        return pol.parse_policy(text, self.attribute_ids)

    def attrs(self, names) -> list:
        try:
            return [self.attribute_ids[n] for n in names]
        except KeyError as exc:
            raise pol.UnknownAttributeError(exc.args[0]) from None

    def keys(self) -> list[ContactKey]:
        out = [c.key for c in self.contacts.values() if c.key is not None]
        return out + list(self.delegated_keys)

    # -- persistence ------------------------------------------------------------
    def to_json(self) -> dict:
        b64 = _b64
        return {
            "format": ACCOUNT_FORMAT,
            "name": self.name,
            "signing_key": b64(self.signing_key),
            "master": b64(self.master.to_bytes()),
            "attributes": {n: a.hex() for n, a in sorted(self.attribute_ids.items())},
            "proxy": b64(self.proxy.to_bytes()),
            "proxy_shares": [
                {"index": s.index, "threshold": s.threshold, "entries": _share_entries(s)} for s in self.proxy_shares
            ],
            "root_ref": b64(self.root_ref.to_bytes()) if self.root_ref else None,
            "root_id": self.root_id.hex(),
            "profile_id": self.profile_id.hex(),
            "wall_id": self.wall_id.hex(),
            "contacts": {
                name: {
                    "root_ref": b64(c.root_ref.to_bytes()) if c.root_ref else None,
                    "key": b64(c.key.to_bytes()) if c.key else None,
                    "issued": sorted(c.issued),
                }
                for name, c in sorted(self.contacts.items())
            },
            "delegated_keys": [b64(k.to_bytes()) for k in self.delegated_keys],
            "key_cache": {oid.hex(): b64(k) for oid, k in sorted(self.key_cache.items())},
            "sealed": {oid.hex(): b64(s.to_bytes()) for oid, s in sorted(self.sealed.items())},
        }

    @classmethod
    def from_json(cls, data: dict) -> "UserAccount":
        if data.get("format") != ACCOUNT_FORMAT:
            raise ValueError(f"unsupported account format {data.get('format')!r}")
        unb = base64.b64decode
        master = MasterKey.from_bytes(unb(data["master"]))
        proxy = ProxyState.from_bytes(unb(data["proxy"]))
        shares = []
        for s in data.get("proxy_shares", []):
            share = ProxyShareState(proxy.owner, master.group, s["index"], s["threshold"])
            for holder, attr, value in s["entries"]:
                share.entries[holder, bytes.fromhex(attr)] = int(value)
            shares.append(share)
        contacts = {}
        for name, c in data["contacts"].items():
            contacts[name] = Contact(
                name,
                ObjectReference.from_bytes(unb(c["root_ref"])) if c["root_ref"] else None,
                ContactKey.from_bytes(unb(c["key"])) if c["key"] else None,
                set(c["issued"]),
            )
        return cls(
            name=data["name"],
            signing_key=unb(data["signing_key"]),
            master=master,
            attribute_ids={n: bytes.fromhex(a) for n, a in data["attributes"].items()},
            proxy=proxy,
            root_ref=ObjectReference.from_bytes(unb(data["root_ref"])) if data["root_ref"] else None,
            root_id=bytes.fromhex(data["root_id"]),
            profile_id=bytes.fromhex(data["profile_id"]),
            wall_id=bytes.fromhex(data["wall_id"]),
            contacts=contacts,
            delegated_keys=[ContactKey.from_bytes(unb(k)) for k in data["delegated_keys"]],
            key_cache={bytes.fromhex(o): unb(k) for o, k in data["key_cache"].items()},
            sealed={bytes.fromhex(o): SealedObject.from_bytes(unb(s)) for o, s in data["sealed"].items()},
            proxy_shares=shares,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "UserAccount":
        return cls.from_json(json.loads(Path(path).read_text()))


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode()


def _share_entries(share: ProxyShareState) -> list:
    return [[h, a.hex(), str(v)] for (h, a), v in sorted(share.entries.items())]


# -- rendering ---------------------------------------------------------------------

@dataclass
class Item:
    kind: str  # "status", "post" or "comment"
    obj_id: bytes
    text: str
    timestamp: float
    author: str | None
    parent: bytes | None = None


@dataclass
class WallView:
    root_id: bytes
    items: list = field(default_factory=list)
    errors: list = field(default_factory=list)  # (obj_id, reason)

    def of_kind(self, kind: str) -> list[Item]:
        return [i for i in self.items if i.kind == kind]


@dataclass
class FeedEntry:
    contact: str
    item: Item | None
    reason: str | None = None


# -- agent ----------------------------------------------------------------------------

class Agent:
    def __init__(self, account: UserAccount, env: Environment) -> None:
        self.account = account
        self.env = env
        env.register_proxy(account.name, self._proxy_handle())

    @property
    def name(self) -> str:
        return self.account.name

    @property
    def dht(self) -> DhtClient:
        return self.env.dht(self.name)

    def _proxy_handle(self):
        acct = self.account
        if acct.proxy_shares:
            return abe.ThresholdProxy(acct.proxy_shares, acct.proxy_shares[0].threshold, acct.name)
        return acct.proxy

    # -- join ---------------------------------------------------------------------
    @classmethod
    def join(
        cls,
        name: str,
        env: Environment,
        *,
        attributes: Sequence[str] = DEFAULT_ATTRIBUTES,
        root_policy: str = ANY_CONTACT,
        wall_policy: str = ANY_CONTACT,
        wall_append_policy: str | None = ANY_CONTACT,
        profile: dict | None = None,
        group: str | None = None,
    ) -> "Agent":
        """Create keys plus profile, wall and root objects, and store all three."""
        rng = env.rng
        grp = get_group(group) if group else get_group()
        master, ids = abe.keygen_master(list(attributes), grp, rng, owner=name)
        signing_key, _ = signature_keypair(rng)
        acct = UserAccount(name, signing_key, master, ids, ProxyState(name, grp))
        agent = cls(acct, env)
        any_policy = acct.policy(wall_policy)
        prof = agent._create(obj.Profile(tuple(sorted((profile or {}).items()))), any_policy, None)
        wall = agent._create(
            obj.Wall(), any_policy, acct.policy(wall_append_policy) if wall_append_policy else None
        )
        root = agent._create(obj.Root(prof.ref, wall.ref), acct.policy(root_policy), None)
        for created in (prof, wall, root):
            agent._put_new(created.record)
        acct.root_ref, acct.root_id = root.ref, root.sealed.obj_id
        acct.profile_id, acct.wall_id = prof.sealed.obj_id, wall.sealed.obj_id
        return agent

    # -- contacts ------------------------------------------------------------------
    def issue(self, peer: str, attr_names: Sequence[str]) -> ContactKey | None:
        """Issue (or re-issue) attribute keys to ``peer`` through our proxy."""
        acct = self.account
        contact = acct.contacts.setdefault(peer, Contact(peer))
        contact.issued |= set(attr_names)
        if not attr_names:
            return None
        key = abe.issue_key(acct.master, acct.proxy, peer, acct.attrs(attr_names), self.env.rng)
        self._sync_shares(peer, acct.attrs(attr_names))
        return key

    def accept(self, peer: str, root_ref: ObjectReference | None, key: ContactKey | None) -> None:
        """Record what ``peer`` handed us out of band."""
        contact = self.account.contacts.setdefault(peer, Contact(peer))
        if root_ref is not None:
            contact.root_ref = root_ref
        if key is not None:
            if contact.key is not None and contact.key.issuer == key.issuer:
                merged = dict(contact.key.exponents)
                merged.update(key.exponents)
                key = ContactKey(key.holder, key.issuer, key.group, merged, key.hops)
            contact.key = key

    def add_contact(self, peer: "Agent", attr_names: Sequence[str] = ()) -> None:
        """Issue ``attr_names`` to ``peer`` and exchange root references.

        Only our side issues keys; the peer decides separately what to issue back.
        """
        key = self.issue(peer.name, attr_names)
        peer.accept(self.name, self.account.root_ref, key)
        self.accept(peer.name, peer.account.root_ref, None)

    def revoke_contact(self, peer: str, attr_names: Sequence[str] | None = None) -> None:
        """Drop ``peer``'s proxy entries; no ciphertext is touched."""
        acct = self.account
        contact = acct.contacts.get(peer)
        names = list(attr_names) if attr_names is not None else sorted(contact.issued if contact else acct.attribute_ids)
        ids = acct.attrs(names)
        abe.revoke(acct.proxy, peer, ids)
        for share in acct.proxy_shares:
            abe.revoke(share, peer, ids)
        if contact is not None:
            contact.issued -= set(names)

    def delegate(self, issuer: str, attr_ids: Sequence[bytes], new_holder: "Agent") -> ContactKey:
        """Pass on attributes issued to us by ``issuer``, through our own proxy."""
        acct = self.account
        contact = acct.contacts.get(issuer)
        source = contact.key if contact and contact.key else None
        if source is None:
            source = next((k for k in acct.delegated_keys if k.issuer == issuer), None)
        if source is None:
            raise UnknownContact(issuer)
        key = abe.delegate(source, acct.proxy, new_holder.name, attr_ids, self.env.rng)
        self._sync_shares(new_holder.name, attr_ids)
        new_holder.account.delegated_keys.append(key)
        return key

    def split_proxy(self, n: int, t: int) -> list[ProxyShareState]:
        acct = self.account
        acct.proxy_shares = abe.split_proxy(acct.proxy, n, t, self.env.rng)
        self.env.register_proxy(acct.name, self._proxy_handle())
        return acct.proxy_shares

    def _sync_shares(self, holder: str, ids: Sequence[bytes]) -> None:
        shares = self.account.proxy_shares
        if shares:
            for attr in ids:
                abe.install_share(shares, holder, attr, self.account.proxy.entries[holder, attr], self.env.rng)

    # -- writing ---------------------------------------------------------------------
    def _create(self, content, read_policy, append_policy, *, include_spk: bool = True) -> obj.CreatedObject:
        leaves = sum(len(pol.attributes(p)) for p in (read_policy, append_policy) if p is not None)
        self.env.charge("create")
        self.env.charge("policy_encrypt_leaf", leaves)
        created = obj.create_object(content, read_policy, append_policy, self.account.owner_keys, self.env.rng, include_spk=include_spk)
        self.account.key_cache[created.sealed.obj_id] = created.sym_key
        self.account.sealed[created.sealed.obj_id] = created.sealed
        return created

    def _put_new(self, rec) -> None:
        result = self.dht.put_new(rec)
        if not result.ok:
            raise AgentError(f"no replica accepted the new object: {result.refused or 'unreachable'}")

    def _put_update(self, rec) -> None:
        result = self.dht.put_update(rec)
        if not result.ok:
            raise AgentError(f"no replica accepted the update: {result.refused or 'unreachable'}")

    def _update_container(self, obj_id: bytes, new_content) -> SealedObject:
        acct = self.account
        old = acct.sealed[obj_id]
        sym_key = acct.key_cache[obj_id]
        previous = obj.open_with_key(old, sym_key, acct.spk)
        wask = obj.unseal_wask(old, acct.master)
        self.env.charge("update")
        sealed, auth_sig, _ = obj.update_object(old, previous, new_content, acct.owner_keys, wask, sym_key, self.env.rng)
        self._put_update(sealed.to_record(auth_sig))
        acct.sealed[obj_id] = sealed
        return sealed

    def post_status(self, text: str, read_policy: str | None = ANY_CONTACT, append_policy: str | None = ANY_CONTACT) -> ObjectReference:
        """Create a status and put it at the top of our wall.

        ``read_policy=None`` gives the status a bare reference that inherits
        the wall's read policy.
        """
        acct = self.account
        rp = acct.policy(read_policy) if read_policy is not None else None
        ap = acct.policy(append_policy) if append_policy is not None else None
        created = self._create(obj.Status(text, self.env.now()), rp, ap)
        self._put_new(created.record)
        wall = obj.open_with_key(acct.sealed[acct.wall_id], acct.key_cache[acct.wall_id], acct.spk)
        self._update_container(acct.wall_id, obj.Wall((created.ref,) + tuple(wall.content.items)))
        return created.ref

    def comment(
        self,
        parent_ref: ObjectReference,
        text: str,
        read_policy: str | None = ANY_CONTACT,
        *,
        parent: ContainerObject | None = None,
        inherited_spk: bytes | None = None,
    ) -> ObjectReference:
        """Comment on an object: new object, then an append entry at the parent.

        The parent's append key is unsealed before any DHT write, so an
        appender outside the append policy fails without side effects. When
        ``parent`` is not given it is fetched first.
        """
        parent_key = self.resolve(parent_ref)
        if parent is None:
            parent = self.fetch(parent_ref, sym_key=parent_key, inherited_spk=inherited_spk)
        apssk = self._unseal_append_key(parent)
        acct = self.account
        rp = acct.policy(read_policy) if read_policy is not None else None
        created = self._create(obj.Status(text, self.env.now()), rp, acct.policy(ANY_CONTACT))
        self._put_new(created.record)
        entry = obj.seal_append_entry(parent.obj_id, parent_key, apssk, created.ref, self.env.rng)
        self.env.charge("sign")
        result = self.dht.append(parent.obj_id, entry)
        if not result.ok:
            raise AgentError("no replica accepted the append")
        return created.ref

    def post_to_wall(self, owner_root: ObjectReference, text: str, read_policy: str | None = ANY_CONTACT) -> ObjectReference:
        """Post on someone's wall by appending to their wall object."""
        root = self.fetch(owner_root)
        wall_ref = root.content.wall
        return self.comment(wall_ref, text, read_policy, inherited_spk=owner_root.spk)

    def share(self, obj_id: bytes, read_policy: str) -> ObjectReference:
        """Put a fresh reference to one of our objects on our wall, under another read policy.

        The object is untouched; only the new reference carries the new policy.
        """
        acct = self.account
        sym_key = acct.key_cache.get(obj_id)
        if sym_key is None:
            raise AgentError("only objects this account wrote can be shared")
        tree = acct.policy(read_policy)
        self.env.charge("policy_encrypt_leaf", len(pol.attributes(tree)))
        ref = ObjectReference(obj_id, abe.encrypt(tree, sym_key, acct.master.public_params, self.env.rng), acct.spk)
        wall = obj.open_with_key(acct.sealed[acct.wall_id], acct.key_cache[acct.wall_id], acct.spk)
        self._update_container(acct.wall_id, obj.Wall((ref,) + tuple(wall.content.items)))
        return ref

    def _unseal_append_key(self, parent: ContainerObject) -> bytes:
        if parent.append_policy is None:
            raise AccessDenied("object does not accept appends")
        try:
            return self._open_capsule(parent.append_policy.sealed_apssk)
        except AccessDenied as exc:
            raise AccessDenied(f"append policy: {exc}") from None

    # -- reading ---------------------------------------------------------------------
    def resolve(self, ref: ObjectReference, inherited_key: bytes | None = None) -> bytes:
        """K for ``ref``: cache, bare capsule, or a policy decryption."""
        cached = self.account.key_cache.get(ref.obj_id)
        if cached is not None:
            return cached
        if isinstance(ref.capsule, bytes):
            return ref.capsule
        return self._open_capsule(ref.capsule)

    def _open_capsule(self, ct: PolicyCiphertext) -> bytes:
        acct = self.account
        needed = pol.attributes(ct.policy)
        if needed & acct.master.attributes:
            self.env.stats["policy_decrypts"] += 1
            self.env.charge("policy_decrypt_leaf", len(needed))
            try:
                return abe.decrypt_with_master(ct, acct.master)
            except abe.PolicyUnsatisfied as exc:
                raise AccessDenied(str(exc)) from None
        candidates = [k for k in acct.keys() if k.attributes & needed]
        if not candidates:
            raise AccessDenied("no key from this policy's authority")
        last: Exception | None = None
        for key in candidates:
            self.env.stats["policy_decrypts"] += 1
            sel = pol.satisfying_leaf_selection(ct.policy, key.attributes)
            self.env.charge("policy_decrypt_leaf", len(sel.leaves) if sel else 0)
            try:
                return abe.decrypt(ct, key, self.env.proxies_for(key), self.env.rng)
            except (abe.PolicyUnsatisfied, abe.ProxyRefused, abe.ProxyUnavailable, abe.DecryptionError) as exc:
                last = exc
        raise AccessDenied(f"{type(last).__name__}: {last}")

    def fetch(
        self,
        ref: ObjectReference,
        *,
        sym_key: bytes | None = None,
        inherited_spk: bytes | None = None,
    ) -> ContainerObject:
        """Freshest authentic copy of ``ref``'s object."""
        k = sym_key if sym_key is not None else self.resolve(ref)
        spk = ref.spk or inherited_spk
        for width in (None, self.dht.overlay.config.k):
            try:
                candidates = self.dht.get_fresh(ref.obj_id, width)
            except NoReplicaResponded:
                continue
            for rec in candidates:
                self.env.charge("open")
                try:
                    sealed = SealedObject.from_record(rec)
                    opened = obj.open_with_key(sealed, k, spk)
                except (obj.ObjectError, ValueError):
                    continue
                self.env.charge("verify_append", len(rec.appends))
                return opened
        raise ObjectUnavailable(ref.obj_id.hex())

    def author_of(self, spk: bytes | None) -> str | None:
        if spk is None:
            return None
        if spk == self.account.spk:
            return self.name
        for c in self.account.contacts.values():
            if c.root_ref is not None and c.root_ref.spk == spk:
                return c.name
        return None

    def _open_item(self, ref: ObjectReference, kind: str, view: WallView, inherited_spk: bytes | None, parent: bytes | None = None):
        try:
            container = self.fetch(ref, inherited_spk=inherited_spk)
        except (AccessDenied, ObjectUnavailable, abe.ProxyUnavailable) as exc:
            view.errors.append((ref.obj_id, f"{type(exc).__name__}: {exc}"))
            return None
        content = container.content
        if not isinstance(content, obj.Status):
            view.errors.append((ref.obj_id, f"unexpected content {type(content).__name__}"))
            return None
        view.items.append(
            Item(kind, ref.obj_id, content.text, content.timestamp, self.author_of(ref.spk or inherited_spk), parent)
        )
        return container

    def open_wall(self, root_ref: ObjectReference) -> tuple[ContainerObject, ContainerObject]:
        """Root and wall containers behind ``root_ref``."""
        try:
            root = self.fetch(root_ref)
            if not isinstance(root.content, obj.Root):
                raise WallUnreadable("reference does not lead to a root object")
            wall_ref = root.content.wall
            wall = self.fetch(wall_ref, inherited_spk=root_ref.spk)
        except (AccessDenied, ObjectUnavailable) as exc:
            raise WallUnreadable(f"{type(exc).__name__}: {exc}") from None
        if not isinstance(wall.content, obj.Wall):
            raise WallUnreadable("root does not point at a wall")
        return root, wall

    def view_wall(self, root_ref: ObjectReference | None = None) -> WallView:
        """Open every readable status, its comments, and every post on a wall.

        Unreadable items are reported in ``errors``; the rest still render.
        """
        root_ref = root_ref or self.account.root_ref
        root, wall = self.open_wall(root_ref)
        view = WallView(root.obj_id)
        owner_spk = root_ref.spk
        for ref in wall.content.items:
            status = self._open_item(ref, "status", view, owner_spk)
            if status is None:
                continue
            for cref in status.comments:
                self._open_item(cref, "comment", view, None, parent=ref.obj_id)
        for pref in reversed(wall.comments):
            self._open_item(pref, "post", view, None, parent=wall.obj_id)
        return view

    def view_newsfeed(self) -> list[FeedEntry]:
        """Latest status of each contact whose wall we can reach."""
        feed = []
        for name in sorted(self.account.contacts):
            contact = self.account.contacts[name]
            if contact.root_ref is None:
                feed.append(FeedEntry(name, None, "no root reference"))
                continue
            try:
                _, wall = self.open_wall(contact.root_ref)
            except WallUnreadable as exc:
                feed.append(FeedEntry(name, None, str(exc)))
                continue
            if not wall.content.items:
                feed.append(FeedEntry(name, None, "empty wall"))
                continue
            view = WallView(contact.root_ref.obj_id)
            self._open_item(wall.content.items[0], "status", view, contact.root_ref.spk)
            if view.items:
                feed.append(FeedEntry(name, view.items[0]))
            else:
                feed.append(FeedEntry(name, None, view.errors[0][1]))
        return feed

    # -- lifecycle ---------------------------------------------------------------
    def delete_object(self, obj_id: bytes) -> None:
        acct = self.account
        sealed = acct.sealed.get(obj_id)
        if sealed is None:
            raise AgentError("only objects this account wrote can be deleted")
        wask = obj.unseal_wask(sealed, acct.master)
        result = self.dht.delete(obj_id, obj.sign_delete(wask, obj_id, sealed.version))
        if not result.ok:
            raise AgentError("no replica accepted the delete")
        acct.sealed.pop(obj_id, None)
        acct.key_cache.pop(obj_id, None)
