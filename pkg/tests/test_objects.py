import pytest

from decent import objects as obj
from decent import policy as pol
from decent.crypto import abe
from decent.crypto.group import SeededRng
from decent.crypto.primitives import signature_keypair
from decent.dht.storage import RecordStore, Refused


class Owner:
    def __init__(self, group, name="alice", seed="owner"):
        self.rng = SeededRng(seed)
        master, self.ids = abe.keygen_master(["friend", "family", "coworker"], group, self.rng, name)
        sk, _ = signature_keypair(self.rng)
        self.keys = obj.OwnerKeys(sk, master)
        self.proxy = abe.ProxyState(name, group)

    def policy(self, text):
        return pol.parse_policy(text, self.ids)

    def issue(self, holder, *names):
        return abe.issue_key(self.keys.master, self.proxy, holder, [self.ids[n] for n in names], self.rng)

    def create(self, content, read="friend", append="friend", **kw):
        rp = self.policy(read) if read else None
        ap = self.policy(append) if append else None
        return obj.create_object(content, rp, ap, self.keys, self.rng, **kw)


@pytest.fixture
def alice(toy):
    return Owner(toy)


def test_create_and_open(alice):
    c = alice.create(obj.Status("hi", 1.5))
    bob = alice.issue("bob", "friend")
    opened = obj.open_object(c.sealed, c.ref, bob, [alice.proxy], rng=alice.rng)
    assert opened == c.container
    assert opened.version == 1 and opened.content == obj.Status("hi", 1.5)
    assert obj.open_object(c.sealed, c.ref, alice.keys.master) == c.container


def test_empty_wall(alice):
    c = alice.create(obj.Wall())
    assert obj.open_with_key(c.sealed, c.sym_key, alice.keys.spk).content == obj.Wall()


def test_unique_ids_keys_and_wapks(alice):
    made = [alice.create(obj.Status("same"), read=None, append=None) for _ in range(1000)]
    for field in ("obj_id", "wapk"):
        assert len({getattr(c.sealed, field) for c in made}) == 1000
    assert len({c.sym_key for c in made}) == 1000
    assert alice.keys.spk not in {c.sealed.wapk for c in made}


def test_wrong_attributes(alice):
    c = alice.create(obj.Status("family only"), read="family")
    with pytest.raises(abe.PolicyUnsatisfied):
        obj.open_object(c.sealed, c.ref, alice.issue("bob", "coworker"), [alice.proxy], rng=alice.rng)


def test_reference_mismatch(alice):
    a, b = alice.create(obj.Status("a")), alice.create(obj.Status("b"))
    with pytest.raises(obj.ReferenceMismatch):
        obj.open_object(a.sealed, b.ref, alice.keys.master)


def test_tampered_body_fails_authentication(alice):
    c = alice.create(obj.Status("x"))
    body = bytearray(c.sealed.sealed_body)
    body[len(body) // 2] ^= 1
    bad = obj.SealedObject(c.sealed.obj_id, 1, c.sealed.wapk, bytes(body), c.sealed.wask_capsule)
    with pytest.raises(obj.BodyAuthenticationError):
        obj.open_with_key(bad, c.sym_key, alice.keys.spk)


def test_wrong_signer_is_forged_content(alice, toy):
    c = alice.create(obj.Status("x"))
    other = Owner(toy, "mallory", "mallory")
    with pytest.raises(obj.ForgedContentError):
        obj.open_with_key(c.sealed, c.sym_key, other.keys.spk)


def test_inherit_optimizations(alice):
    c = alice.create(obj.Status("bare"), read=None, include_spk=False)
    assert c.ref.is_bare and c.ref.spk is None
    assert obj.ObjectReference.from_bytes(c.ref.to_bytes()) == c.ref
    with pytest.raises(obj.ObjectError):
        obj.open_object(c.sealed, c.ref)
    assert obj.open_object(c.sealed, c.ref, inherited_spk=alice.keys.spk).content.text == "bare"


def test_serialization_round_trips(alice):
    c = alice.create(obj.Status("x"))
    assert obj.SealedObject.from_bytes(c.sealed.to_bytes()) == c.sealed
    assert obj.ObjectReference.from_bytes(c.ref.to_bytes()) == c.ref
    for content in [obj.Profile((("name", "Alice"),)), obj.Root(c.ref, c.ref), obj.Blob(b"\0\1"), obj.Wall((c.ref,))]:
        made = alice.create(content)
        assert obj.open_with_key(made.sealed, made.sym_key, alice.keys.spk).content == content


def test_update_keeps_identity(alice):
    c = alice.create(obj.Status("v1"))
    sealed, sig, container = obj.update_object(c.sealed, c.container, obj.Status("v2"), alice.keys, c.wask, c.sym_key)
    assert sealed.obj_id == c.sealed.obj_id and sealed.wapk == c.sealed.wapk and sealed.version == 2
    assert obj.open_with_key(sealed, c.sym_key, alice.keys.spk) == container
    store = RecordStore()
    store.put_new(c.record)
    store.put_update(sealed.to_record(sig))
    assert store.get(c.sealed.obj_id).version == 2
    with pytest.raises(obj.MissingWriteKey):
        obj.update_object(c.sealed, c.container, obj.Status("v3"), alice.keys, None, c.sym_key)


def test_wask_only_for_owner(alice, toy):
    c = alice.create(obj.Status("x"))
    assert obj.unseal_wask(c.sealed, alice.keys.master) == c.wask
    with pytest.raises(obj.MissingWriteKey):
        obj.unseal_wask(c.sealed, Owner(toy, "eve", "eve").keys.master)


def test_attacker_update_refused(alice, toy):
    c = alice.create(obj.Status("v1"))
    store = RecordStore()
    store.put_new(c.record)
    mallory_wask, _ = signature_keypair(SeededRng("m"))
    sealed, sig, _ = obj.update_object(c.sealed, c.container, obj.Status("evil"), alice.keys, mallory_wask, c.sym_key)
    with pytest.raises(Refused):
        store.put_update(sealed.to_record(sig))


def comment_entries(alice, parent, n, appender):
    refs = []
    entries = []
    apssk = obj.unseal_append_key(parent.container, appender, [alice.proxy], alice.rng)
    for i in range(n):
        child = alice.create(obj.Status(f"c{i}"))
        refs.append(child.ref)
        entries.append(obj.seal_append_entry(parent.sealed.obj_id, parent.sym_key, apssk, child.ref, alice.rng))
    return refs, entries


def test_append_filtering(alice):
    parent = alice.create(obj.Status("parent"), append="friend")
    bob = alice.issue("bob", "friend")
    good_refs, good = comment_entries(alice, parent, 5, bob)
    fake_sk, _ = signature_keypair(alice.rng)
    forged = [obj.seal_append_entry(parent.sealed.obj_id, parent.sym_key, fake_sk, good_refs[0], alice.rng)]
    forged.append(b"garbage")
    mixed = (forged[0], good[0], good[1], forged[1], good[2], good[3], good[4])
    sealed = obj.SealedObject(**{**parent.sealed.__dict__, "append_entries": mixed})
    opened = obj.open_with_key(sealed, parent.sym_key, alice.keys.spk)
    assert opened.comments == tuple(good_refs)


def test_append_needs_a_policy(alice):
    parent = alice.create(obj.Status("parent"), append="family")
    with pytest.raises(abe.PolicyUnsatisfied):
        obj.build_append_entry(parent.container, parent.sym_key, parent.ref, alice.issue("bob", "friend"), [alice.proxy], alice.rng)
    no_appends = alice.create(obj.Status("closed"), append=None)
    with pytest.raises(abe.PolicyUnsatisfied):
        obj.unseal_append_key(no_appends.container, alice.keys.master)


def test_comment_needs_both_policies(alice, toy):
    """A comment readable under P2 sits behind the parent's P1."""
    parent = alice.create(obj.Status("p"), read="friend", append="friend OR coworker")
    bob = Owner(toy, "bob", "bob")
    comment = bob.create(obj.Status("reply"), read="family")
    apssk = obj.unseal_append_key(parent.container, alice.issue("bob", "coworker"), [alice.proxy], alice.rng)
    entry = obj.seal_append_entry(parent.sealed.obj_id, parent.sym_key, apssk, comment.ref, alice.rng)
    sealed = obj.SealedObject(**{**parent.sealed.__dict__, "append_entries": (entry,)})
    carol_of_alice = alice.issue("carol", "friend")
    carol_of_bob = bob.issue("carol", "family")
    opened = obj.open_object(sealed, parent.ref, carol_of_alice, [alice.proxy], rng=alice.rng)
    (ref,) = opened.comments
    assert obj.open_object(comment.sealed, ref, carol_of_bob, [bob.proxy], rng=alice.rng).content.text == "reply"
    # dave reads P2 but not P1: the reference never reaches him
    dave_of_alice = alice.issue("dave", "family")
    with pytest.raises(abe.PolicyUnsatisfied):
        obj.open_object(sealed, parent.ref, dave_of_alice, [alice.proxy], rng=alice.rng)
    assert comment.ref.to_bytes() not in sealed.to_bytes()


def test_plaintext_fields_hold_no_long_term_keys(alice):
    made = [alice.create(obj.Status(str(i))) for i in range(20)]
    spk = alice.keys.spk
    for c in made:
        visible = c.sealed.obj_id + c.sealed.wapk + c.sealed.to_bytes()
        assert spk not in visible
    assert len({c.sealed.wapk for c in made}) == 20
