"""Container objects, object references, and signed append entries.

An object is sealed under its own random key ``K``. Readers get ``K`` from a
reference, either policy-encrypted or bare when the reference inherits the
read policy of its container. The body is signed by the owner's long-term
write-policy key (verified with the SPK carried in the reference). Appends sit
outside the body so storage nodes can add them; each is sealed under the
parent's ``K`` and signed with the parent's append-policy key.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence, Union

from .crypto import abe
from .crypto.abe import ContactKey, MasterKey, PolicyCiphertext
from .crypto.group import SYSTEM_RNG, Rng
from .crypto.primitives import (
    AuthenticationError,
    new_sym_key,
    sign,
    signature_keypair,
    sym_open,
    sym_seal,
    verification_key,
    verify,
)
from .dht.storage import OBJECT_ID_LEN, StoredRecord, delete_auth_message, write_auth_message
from .policy import PolicyTree
from .wire import DecodeError, Reader, Writer


class ObjectError(Exception):
    pass


class ReferenceMismatch(ObjectError):
    pass


class BodyAuthenticationError(ObjectError):
    """The sealed body failed authenticated decryption (tampering or wrong key)."""


class ForgedContentError(ObjectError):
    """The body opened but its write-policy signature does not verify."""


class MissingWriteKey(ObjectError):
    pass


def new_object_id(rng: Rng = SYSTEM_RNG) -> bytes:
    return rng.token_bytes(OBJECT_ID_LEN)


# -- references ---------------------------------------------------------------------

_CAPSULE_BARE = 0
_CAPSULE_POLICY = 1


@dataclass(frozen=True)
class ObjectReference:
    obj_id: bytes
    capsule: Union[PolicyCiphertext, bytes]  # bytes: bare K (inherits container read policy)
    spk: bytes | None = None  # None: inherits container write policy

    @property
    def is_bare(self) -> bool:
        return isinstance(self.capsule, bytes)

    def write(self, w: Writer) -> Writer:
        w.raw(self.obj_id)
        if isinstance(self.capsule, bytes):
            w.u8(_CAPSULE_BARE).blob(self.capsule)
        else:
            w.u8(_CAPSULE_POLICY).blob(self.capsule.to_bytes())
        return w.opt_blob(self.spk)

    def to_bytes(self) -> bytes:
        return self.write(Writer()).getvalue()

    @classmethod
    def read(cls, r: Reader) -> "ObjectReference":
        obj_id = r.raw(OBJECT_ID_LEN)
        kind = r.u8()
        body = r.blob()
        if kind == _CAPSULE_BARE:
            capsule: Union[PolicyCiphertext, bytes] = body
        elif kind == _CAPSULE_POLICY:
            capsule = PolicyCiphertext.from_bytes(body)
        else:
            raise DecodeError(f"unknown capsule kind {kind}")
        return cls(obj_id, capsule, r.opt_blob())

    @classmethod
    def from_bytes(cls, data: bytes) -> "ObjectReference":
        r = Reader(data)
        ref = cls.read(r)
        r.done()
        return ref


# -- content --------------------------------------------------------------------------

class ContentType(IntEnum):
    STATUS = 1
    WALL = 2
    PROFILE = 3
    ROOT = 4
    BYTES = 5


@dataclass(frozen=True)
class Status:
    text: str
    timestamp: float = 0.0


@dataclass(frozen=True)
class Wall:
    items: tuple = ()  # ObjectReference, newest first


@dataclass(frozen=True)
class Profile:
    fields: tuple = ()  # (key, value) pairs

    def as_dict(self) -> dict[str, str]:
        return dict(self.fields)


@dataclass(frozen=True)
class Root:
    profile: ObjectReference
    wall: ObjectReference


@dataclass(frozen=True)
class Blob:
    data: bytes


Content = Union[Status, Wall, Profile, Root, Blob]


def encode_content(content: Content) -> bytes:
    w = Writer()
    if isinstance(content, Status):
        w.u8(ContentType.STATUS).text(content.text).raw(_f64(content.timestamp))
    elif isinstance(content, Wall):
        w.u8(ContentType.WALL).u32(len(content.items))
        for ref in content.items:
            ref.write(w)
    elif isinstance(content, Profile):
        w.u8(ContentType.PROFILE).u32(len(content.fields))
        for k, v in content.fields:
            w.text(k).text(v)
    elif isinstance(content, Root):
        w.u8(ContentType.ROOT)
        content.profile.write(w)
        content.wall.write(w)
    elif isinstance(content, Blob):
        w.u8(ContentType.BYTES).blob(content.data)
    else:
        raise TypeError(f"unsupported content {type(content).__name__}")
    return w.getvalue()


def _f64(x: float) -> bytes:
    return struct.pack(">d", x)


def read_content(r: Reader) -> Content:
    tag = r.u8()
    if tag == ContentType.STATUS:
        text = r.text()
        return Status(text, struct.unpack(">d", r.raw(8))[0])
    if tag == ContentType.WALL:
        return Wall(tuple(ObjectReference.read(r) for _ in range(r.u32())))
    if tag == ContentType.PROFILE:
        return Profile(tuple((r.text(), r.text()) for _ in range(r.u32())))
    if tag == ContentType.ROOT:
        return Root(ObjectReference.read(r), ObjectReference.read(r))
    if tag == ContentType.BYTES:
        return Blob(r.blob())
    raise DecodeError(f"unknown content type {tag}")


# -- objects --------------------------------------------------------------------------

@dataclass(frozen=True)
class AppendPolicy:
    apspk: bytes
    sealed_apssk: PolicyCiphertext

    def write(self, w: Writer) -> Writer:
        return w.blob(self.apspk).blob(self.sealed_apssk.to_bytes())

    @classmethod
    def read(cls, r: Reader) -> "AppendPolicy":
        return cls(r.blob(), PolicyCiphertext.from_bytes(r.blob()))


@dataclass(frozen=True)
class ContainerObject:
    obj_id: bytes
    version: int
    content: Content
    append_policy: AppendPolicy | None
    signature: bytes
    wapk: bytes
    comments: tuple = ()  # verified ObjectReferences from append entries, arrival order


@dataclass(frozen=True)
class SealedObject:
    obj_id: bytes
    version: int
    wapk: bytes
    sealed_body: bytes
    wask_capsule: bytes
    append_entries: tuple = ()

    def blob(self) -> bytes:
        return Writer().blob(self.sealed_body).blob(self.wask_capsule).getvalue()

    def to_record(self, auth_sig: bytes = b"") -> StoredRecord:
        return StoredRecord(self.obj_id, self.version, self.wapk, self.blob(), auth_sig, self.append_entries)

    @classmethod
    def from_record(cls, rec: StoredRecord) -> "SealedObject":
        r = Reader(rec.blob)
        body, wask = r.blob(), r.blob()
        r.done()
        return cls(rec.obj_id, rec.version, rec.wapk, body, wask, tuple(rec.appends))

    def digest(self) -> bytes:
        return self.to_record().digest()

    def to_bytes(self) -> bytes:
        return self.to_record().to_bytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "SealedObject":
        return cls.from_record(StoredRecord.from_bytes(data))


@dataclass(frozen=True)
class OwnerKeys:
    """The owner's long-term secrets: write-policy signing key and attribute authority."""

    signing_key: bytes
    master: MasterKey

    @property
    def spk(self) -> bytes:
        return verification_key(self.signing_key)


@dataclass(frozen=True)
class CreatedObject:
    sealed: SealedObject
    ref: ObjectReference
    wask_capsule: bytes
    sym_key: bytes
    wask: bytes
    container: ContainerObject
    auth_sig: bytes

    @property
    def record(self) -> StoredRecord:
        return self.sealed.to_record(self.auth_sig)


def body_signing_message(obj_id: bytes, version: int, content_bytes: bytes, append_policy: AppendPolicy | None) -> bytes:
    w = Writer().raw(b"decent/body").raw(obj_id).u64(version).blob(content_bytes)
    if append_policy is None:
        w.u8(0)
    else:
        append_policy.write(w.u8(1))
    return w.getvalue()


def _body_ad(obj_id: bytes, version: int, wapk: bytes) -> bytes:
    return Writer().raw(b"decent/object").raw(obj_id).u64(version).blob(wapk).getvalue()


def _append_ad(obj_id: bytes) -> bytes:
    return b"decent/append" + obj_id


def _append_sig_message(obj_id: bytes, ref_bytes: bytes) -> bytes:
    return b"decent/append-ref" + obj_id + ref_bytes


def _wask_ad(obj_id: bytes) -> bytes:
    return b"decent/wask" + obj_id


def _seal_body(
    obj_id: bytes,
    version: int,
    content: Content,
    append_policy: AppendPolicy | None,
    wapk: bytes,
    signing_key: bytes,
    sym_key: bytes,
    rng: Rng,
) -> tuple[bytes, bytes]:
    content_bytes = encode_content(content)
    signature = sign(signing_key, body_signing_message(obj_id, version, content_bytes, append_policy))
    w = Writer().u64(version).blob(content_bytes)
    if append_policy is None:
        w.u8(0)
    else:
        append_policy.write(w.u8(1))
    w.blob(signature)
    return sym_seal(sym_key, w.getvalue(), _body_ad(obj_id, version, wapk), rng), signature


def _make_append_policy(policy: PolicyTree | None, owner: OwnerKeys, rng: Rng) -> AppendPolicy | None:
    if policy is None:
        return None
    apssk, apspk = signature_keypair(rng)
    return AppendPolicy(apspk, abe.encrypt(policy, apssk, owner.master.public_params, rng))


def sign_write(wask: bytes, rec: StoredRecord) -> bytes:
    return sign(wask, write_auth_message(rec.obj_id, rec.version, rec.digest()))


def sign_delete(wask: bytes, obj_id: bytes, version: int) -> bytes:
    return sign(wask, delete_auth_message(obj_id, version))


def create_object(
    content: Content,
    read_policy: PolicyTree | None,
    append_policy: PolicyTree | None,
    owner: OwnerKeys,
    rng: Rng = SYSTEM_RNG,
    *,
    include_spk: bool = True,
    obj_id: bytes | None = None,
) -> CreatedObject:
    """Seal a fresh object and build its reference.

    ``read_policy=None`` yields a reference carrying a bare ``K`` (the
    container's read policy applies); ``include_spk=False`` omits the SPK.
    """
    obj_id = obj_id or new_object_id(rng)
    sym_key = new_sym_key(rng)
    wask, wapk = signature_keypair(rng)
    ap = _make_append_policy(append_policy, owner, rng)
    body, signature = _seal_body(obj_id, 1, content, ap, wapk, owner.signing_key, sym_key, rng)
    wask_capsule = sym_seal(owner.master.owner_seal_key(), wask, _wask_ad(obj_id), rng)
    sealed = SealedObject(obj_id, 1, wapk, body, wask_capsule)
    capsule = sym_key if read_policy is None else abe.encrypt(read_policy, sym_key, owner.master.public_params, rng)
    ref = ObjectReference(obj_id, capsule, owner.spk if include_spk else None)
    container = ContainerObject(obj_id, 1, content, ap, signature, wapk)
    auth_sig = sign_write(wask, sealed.to_record())
    return CreatedObject(sealed, ref, wask_capsule, sym_key, wask, container, auth_sig)


def unseal_wask(sealed: SealedObject, master: MasterKey) -> bytes:
    try:
        return sym_open(master.owner_seal_key(), sealed.wask_capsule, _wask_ad(sealed.obj_id))
    except AuthenticationError:
        raise MissingWriteKey("write key is not sealed to this owner") from None


def resolve_key(
    ref: ObjectReference,
    key: ContactKey | MasterKey | None = None,
    proxies: Sequence = (),
    rng: Rng = SYSTEM_RNG,
) -> bytes:
    """Get ``K`` out of a reference; policy capsules go through the proxy chain."""
    if isinstance(ref.capsule, bytes):
        return ref.capsule
    if isinstance(key, MasterKey):
        return abe.decrypt_with_master(ref.capsule, key)
    if key is None:
        raise abe.PolicyUnsatisfied("no key for a policy-encrypted reference")
    return abe.decrypt(ref.capsule, key, proxies, rng)


def open_object(
    sealed: SealedObject,
    ref: ObjectReference,
    key: ContactKey | MasterKey | None = None,
    proxies: Sequence = (),
    *,
    sym_key: bytes | None = None,
    inherited_spk: bytes | None = None,
    rng: Rng = SYSTEM_RNG,
) -> ContainerObject:
    if ref.obj_id != sealed.obj_id:
        raise ReferenceMismatch("reference points at a different object")
    k = sym_key if sym_key is not None else resolve_key(ref, key, proxies, rng)
    return open_with_key(sealed, k, ref.spk or inherited_spk)


def open_with_key(sealed: SealedObject, sym_key: bytes, spk: bytes | None) -> ContainerObject:
    if spk is None:
        raise ObjectError("no write-policy verification key for this object")
    try:
        plain = sym_open(sym_key, sealed.sealed_body, _body_ad(sealed.obj_id, sealed.version, sealed.wapk))
    except AuthenticationError:
        raise BodyAuthenticationError("sealed body failed authentication") from None
    try:
        r = Reader(plain)
        version = r.u64()
        content_bytes = r.blob()
        ap = AppendPolicy.read(r) if r.u8() == 1 else None
        signature = r.blob()
        r.done()
        content = read_content(Reader(content_bytes))
    except DecodeError as exc:
        raise ForgedContentError(f"malformed body: {exc}") from None
    if version != sealed.version:
        raise BodyAuthenticationError("plaintext version disagrees with sealed body")
    if not verify(spk, body_signing_message(sealed.obj_id, version, content_bytes, ap), signature):
        raise ForgedContentError("body signature does not verify under the reference's SPK")
    comments = read_append_entries(sealed, sym_key, ap)
    return ContainerObject(sealed.obj_id, version, content, ap, signature, sealed.wapk, comments)


def read_append_entries(sealed: SealedObject, sym_key: bytes, ap: AppendPolicy | None) -> tuple:
    """Return the references from entries that open and verify; drop the rest silently."""
    if ap is None:
        return ()
    out = []
    for entry in sealed.append_entries:
        try:
            r = Reader(sym_open(sym_key, entry, _append_ad(sealed.obj_id)))
            ref_bytes, sig = r.blob(), r.blob()
            r.done()
            if not verify(ap.apspk, _append_sig_message(sealed.obj_id, ref_bytes), sig):
                continue
            out.append(ObjectReference.from_bytes(ref_bytes))
        except (AuthenticationError, DecodeError, ValueError):
            continue
    return tuple(out)


def unseal_append_key(
    parent: ContainerObject,
    key: ContactKey | MasterKey | None,
    proxies: Sequence = (),
    rng: Rng = SYSTEM_RNG,
) -> bytes:
    if parent.append_policy is None:
        raise abe.PolicyUnsatisfied("object does not accept appends")
    ct = parent.append_policy.sealed_apssk
    if isinstance(key, MasterKey):
        return abe.decrypt_with_master(ct, key)
    if key is None:
        raise abe.PolicyUnsatisfied("no key for the append policy")
    return abe.decrypt(ct, key, proxies, rng)


def seal_append_entry(parent_id: bytes, parent_key: bytes, apssk: bytes, comment_ref: ObjectReference, rng: Rng = SYSTEM_RNG) -> bytes:
    ref_bytes = comment_ref.to_bytes()
    sig = sign(apssk, _append_sig_message(parent_id, ref_bytes))
    plain = Writer().blob(ref_bytes).blob(sig).getvalue()
    return sym_seal(parent_key, plain, _append_ad(parent_id), rng)


def build_append_entry(
    parent: ContainerObject,
    parent_key: bytes,
    comment_ref: ObjectReference,
    appender_key: ContactKey | MasterKey | None,
    proxies: Sequence = (),
    rng: Rng = SYSTEM_RNG,
) -> bytes:
    """Sign ``comment_ref`` with the parent's append key and seal it under the parent's K."""
    apssk = unseal_append_key(parent, appender_key, proxies, rng)
    return seal_append_entry(parent.obj_id, parent_key, apssk, comment_ref, rng)


def update_object(
    old: SealedObject,
    previous: ContainerObject,
    new_content: Content,
    owner: OwnerKeys,
    wask: bytes | None,
    sym_key: bytes,
    rng: Rng = SYSTEM_RNG,
    *,
    append_policy: PolicyTree | None = None,
) -> tuple[SealedObject, bytes, ContainerObject]:
    """Authorized overwrite: same id, K and WAPK, version + 1.

    The append key is kept so existing append entries stay valid; passing a new
    ``append_policy`` rotates it.
    """
    if not wask:
        raise MissingWriteKey("updating an object needs its write-authentication key")
    if previous.obj_id != old.obj_id:
        raise ReferenceMismatch("previous container is for another object")
    version = max(old.version, previous.version) + 1
    ap = previous.append_policy if append_policy is None else _make_append_policy(append_policy, owner, rng)
    body, signature = _seal_body(old.obj_id, version, new_content, ap, old.wapk, owner.signing_key, sym_key, rng)
    sealed = SealedObject(old.obj_id, version, old.wapk, body, old.wask_capsule, old.append_entries)
    auth_sig = sign_write(wask, sealed.to_record())
    container = ContainerObject(old.obj_id, version, new_content, ap, signature, old.wapk, previous.comments)
    return sealed, auth_sig, container


def object_digest(sealed: SealedObject) -> bytes:
    return hashlib.sha256(sealed.to_bytes()).digest()
