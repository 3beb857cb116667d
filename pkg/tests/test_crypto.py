import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decent import policy as pol
from decent.crypto import abe, shamir
from decent.crypto.group import GroupError, SeededRng, get_group, group_names
from decent.crypto.primitives import (
    AuthenticationError,
    new_sym_key,
    sign,
    signature_keypair,
    sym_open,
    sym_seal,
    verify,
)
from decent.policy import AND, OR, Leaf

from oracles import satisfies
from strategies import random_tree


def authority(group, names=("friend", "family", "coworker"), seed="auth", owner="alice"):
    rng = SeededRng(seed)
    master, ids = abe.keygen_master(list(names), group, rng, owner)
    return master, ids, abe.ProxyState(owner, group), rng


# -- groups and primitives ------------------------------------------------------------

@pytest.mark.parametrize("name", group_names())
def test_group_parameters(name):
    g = get_group(name)
    assert pow(g.g, g.q, g.p) == 1 and g.g != 1
    assert (g.p - 1) % g.q == 0
    x = g.random_scalar(SeededRng(1))
    assert g.decode_element(g.encode_element(g.base_exp(x))) == g.base_exp(x)


def test_group_rejects_non_members(toy):
    with pytest.raises(GroupError):
        toy.decode_element(toy.encode_element(toy.p - 1 if pow(toy.p - 1, toy.q, toy.p) != 1 else 0))
    with pytest.raises(GroupError):
        toy.check_element(0)


def test_seal_open(rng):
    k = new_sym_key(rng)
    ct = sym_seal(k, b"hello", b"ad", rng)
    assert sym_open(k, ct, b"ad") == b"hello"
    flipped = bytearray(ct)
    flipped[-1] ^= 1
    for key, c, ad in [(k, bytes(flipped), b"ad"), (k, ct, b"AD"), (new_sym_key(rng), ct, b"ad")]:
        with pytest.raises(AuthenticationError):
            sym_open(key, c, ad)


def test_signatures(rng):
    sk, vk = signature_keypair(rng)
    sig = sign(sk, b"message")
    assert verify(vk, b"message", sig)
    assert not verify(vk, b"messagf", sig)
    assert not verify(signature_keypair(rng)[1], b"message", sig)
    assert not verify(vk, b"message", b"\0" * 64)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**64), st.integers(1, 6), st.integers(0, 6), st.randoms(use_true_random=False))
def test_shamir_any_k_points(secret, k, extra, rnd):
    q = get_group("toy-256-64").q
    secret %= q
    n = k + extra
    shares = shamir.split(secret, k, n, q, SeededRng(rnd.random()))
    pts = rnd.sample(list(enumerate(shares, 1)), k)
    assert shamir.combine(pts, q) == secret


def test_shamir_too_few_points_wrong(toy):
    rng = SeededRng(3)
    wrong = 0
    for _ in range(50):
        s = toy.random_scalar(rng)
        shares = shamir.split(s, 3, 5, toy.q, rng)
        wrong += shamir.combine(list(enumerate(shares, 1))[:2], toy.q) != s
    assert wrong == 50


# -- keys ---------------------------------------------------------------------------

def test_keygen(toy):
    master, ids, _, _ = authority(toy)
    assert len(master.exponents) == 3 and set(ids) == {"friend", "family", "coworker"}
    empty, none = abe.keygen_master([], toy)
    assert empty.exponents == {} and none == {}
    with pytest.raises(ValueError):
        abe.keygen_master(["a", "a"], toy)


def test_attribute_ids_disjoint_across_calls(toy):
    seen = set()
    for _ in range(10_000 // 3 + 1):
        _, ids = abe.keygen_master(["friend", "family", "coworker"], toy)
        new = set(ids.values())
        assert not (new & seen)
        seen |= new


def test_issue_key_blinds(toy):
    master, ids, proxy, rng = authority(toy)
    key = abe.issue_key(master, proxy, "bob", [ids["friend"], ids["coworker"]], rng)
    assert len(key.exponents) == 2 and len(proxy.entries) == 2
    for attr, b in key.exponents.items():
        assert b != master.exponents[attr]
        assert b * proxy.entries["bob", attr] % toy.q == master.exponents[attr]
    assert key.depth == 0
    with pytest.raises(abe.UnknownAttribute):
        abe.issue_key(master, proxy, "bob", [b"z" * 16], rng)
    assert abe.issue_key(master, proxy, "eve", [], rng).exponents == {}


def test_key_serialization(toy):
    master, ids, proxy, rng = authority(toy)
    key = abe.issue_key(master, proxy, "bob", [ids["friend"]], rng)
    assert abe.ContactKey.from_bytes(key.to_bytes()) == key
    assert abe.ProxyState.from_bytes(proxy.to_bytes()) == proxy
    assert abe.MasterKey.from_bytes(master.to_bytes()) == master


# -- encryption --------------------------------------------------------------------

def test_paper_walkthrough(big):
    master, ids, proxy, rng = authority(big)
    p1 = pol.parse_policy("(friend AND coworker) OR family", ids)
    bob = abe.issue_key(master, proxy, "bob", [ids["friend"], ids["coworker"]], rng)
    k1 = new_sym_key(rng)
    ct = abe.encrypt(p1, k1, master.public_params, rng)
    assert abe.decrypt(ct, bob, [proxy], rng) == k1
    assert abe.decrypt_with_master(ct, master) == k1
    assert abe.PolicyCiphertext.from_bytes(ct.to_bytes()) == ct


def test_unsatisfied(toy):
    master, ids, proxy, rng = authority(toy)
    bob = abe.issue_key(master, proxy, "bob", [ids["friend"]], rng)
    ct = abe.encrypt(AND(Leaf(ids["friend"]), Leaf(ids["family"])), b"k" * 32, master.public_params, rng)
    with pytest.raises(abe.PolicyUnsatisfied):
        abe.decrypt(ct, bob, [proxy], rng)


def test_single_leaf_needs_one_proxy_round(toy):
    master, ids, proxy, rng = authority(toy)
    bob = abe.issue_key(master, proxy, "bob", [ids["friend"]], rng)
    ct = abe.encrypt(Leaf(ids["friend"]), b"k" * 32, master.public_params, rng)
    calls = []

    class Counting:
        def transform(self, holder, attr, element):
            calls.append(attr)
            return proxy.transform(holder, attr, element)

    assert abe.decrypt(ct, bob, [Counting()], rng) == b"k" * 32
    assert len(calls) == 1 == abe.proxy_rounds(ct, bob)


def test_or_either_leaf_same_key(toy):
    master, ids, proxy, rng = authority(toy)
    tree = OR(Leaf(ids["friend"]), Leaf(ids["family"]))
    ct = abe.encrypt(tree, b"K" * 32, master.public_params, rng)
    via_a = abe.decrypt(ct, abe.issue_key(master, proxy, "a", [ids["friend"]], rng), [proxy], rng)
    via_b = abe.decrypt(ct, abe.issue_key(master, proxy, "b", [ids["family"]], rng), [proxy], rng)
    assert via_a == via_b == b"K" * 32


def test_and_one_leaf_seed_cannot_open(toy):
    master, ids, proxy, rng = authority(toy)
    a, b = ids["friend"], ids["family"]
    tree = AND(Leaf(a), Leaf(b))
    ct = abe.encrypt(tree, b"K" * 32, master.public_params, rng)
    seed_a = toy.exp(ct.c0, master.exponents[a])
    # attacker knows leaf a's seed and guesses leaf b's share
    full = pol.satisfying_leaf_selection(tree, {a, b})
    for guess in range(20):
        with pytest.raises(abe.DecryptionError):
            abe.open_with_leaf_seeds(ct, toy, full, {0: seed_a, 1: toy.base_exp(guess + 1)})


def test_identity_passes_through_proxy(toy):
    master, ids, proxy, rng = authority(toy)
    abe.issue_key(master, proxy, "bob", [ids["friend"]], rng)
    assert abe.proxy_transform(proxy, "bob", ids["friend"], toy.identity) == toy.identity


def test_proxy_inputs_blinded(toy):
    master, ids, proxy, rng = authority(toy)
    bob = abe.issue_key(master, proxy, "bob", [ids["friend"]], rng)
    ct = abe.encrypt(Leaf(ids["friend"]), b"K" * 32, master.public_params, rng)
    seen = []

    class Spy:
        def transform(self, holder, attr, element):
            seen.append(element)
            return proxy.transform(holder, attr, element)

    for _ in range(10):
        abe.decrypt(ct, bob, [Spy()], rng)
    seed = toy.exp(ct.c0, master.exponents[ids["friend"]])
    assert len(set(seen)) == 10 and seed not in seen


def test_correctness_matches_oracle_default_group(big):
    """Smaller sample at full size; the 10k run uses the small test group."""
    master, ids, proxy, rng = authority(big, names=[f"a{i}" for i in range(5)])
    universe = list(ids.values())
    rnd = random.Random(11)
    keys = {}
    for _ in range(150):
        tree = random_tree(rnd, depth=3, universe=universe, max_leaves=6)
        held = frozenset(a for a in universe if rnd.random() < 0.5)
        if held not in keys:
            keys[held] = abe.issue_key(master, proxy, f"h{len(keys)}", sorted(held), rng)
        ct = abe.encrypt(tree, b"K" * 32, master.public_params, rng)
        try:
            ok = abe.decrypt(ct, keys[held], [proxy], rng) == b"K" * 32
        except abe.PolicyUnsatisfied:
            ok = False
        assert ok == satisfies(tree, held)


# -- revocation -------------------------------------------------------------------

def test_revoke_is_immediate_and_selective(toy):
    master, ids, proxy, rng = authority(toy)
    f, m = ids["friend"], ids["family"]
    bob = abe.issue_key(master, proxy, "bob", [f, m], rng)
    carol = abe.issue_key(master, proxy, "carol", [f], rng)
    old_f = abe.encrypt(Leaf(f), b"F" * 32, master.public_params, rng)
    old_m = abe.encrypt(Leaf(m), b"M" * 32, master.public_params, rng)
    either = abe.encrypt(OR(Leaf(f), Leaf(m)), b"E" * 32, master.public_params, rng)
    abe.revoke(proxy, "bob", [f])
    with pytest.raises(abe.RevokedError):
        abe.decrypt(old_f, bob, [proxy], rng)
    assert abe.decrypt(old_m, bob, [proxy], rng) == b"M" * 32
    assert abe.decrypt(either, bob, [proxy], rng) == b"E" * 32  # re-planned around the revoked leaf
    assert abe.decrypt(old_f, carol, [proxy], rng) == b"F" * 32
    assert ("bob", f) not in proxy.entries
    before = dict(proxy.entries)
    abe.revoke(proxy, "bob", [])
    abe.revoke(proxy, "nobody", [f])
    assert proxy.entries == before


def test_reissue_rotates_blinding(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    old = abe.issue_key(master, proxy, "bob", [f], rng)
    ct = abe.encrypt(Leaf(f), b"K" * 32, master.public_params, rng)
    new = abe.issue_key(master, proxy, "bob", [f], rng)
    assert abe.decrypt(ct, new, [proxy], rng) == b"K" * 32
    with pytest.raises(abe.DecryptionError):
        abe.decrypt(ct, old, [proxy], rng)


def test_revoke_then_reissue(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    old = abe.issue_key(master, proxy, "bob", [f], rng)
    ct = abe.encrypt(Leaf(f), b"K" * 32, master.public_params, rng)
    abe.revoke(proxy, "bob", [f])
    new = abe.issue_key(master, proxy, "bob", [f], rng)
    assert abe.decrypt(ct, new, [proxy], rng) == b"K" * 32
    with pytest.raises(abe.DecryptionError):
        abe.decrypt(ct, old, [proxy], rng)


# -- delegation ---------------------------------------------------------------------

def delegation_chain(group):
    master, ids, alice_proxy, rng = authority(group, names=["foaf", "friend"])
    bob_proxy = abe.ProxyState("bob", group)
    bob = abe.issue_key(master, alice_proxy, "bob", [ids["foaf"]], rng)
    carol = abe.delegate(bob, bob_proxy, "carol", [ids["foaf"]], rng)
    ct = abe.encrypt(Leaf(ids["foaf"]), b"K" * 32, master.public_params, rng)
    return ids, alice_proxy, bob_proxy, bob, carol, ct, rng


def test_delegation_needs_both_proxies(toy):
    ids, alice_proxy, bob_proxy, bob, carol, ct, rng = delegation_chain(toy)
    assert carol.depth == 1 and carol.hops == (("bob", "carol"), ("alice", "bob"))
    assert abe.decrypt(ct, carol, [bob_proxy, alice_proxy], rng) == b"K" * 32
    assert abe.proxy_rounds(ct, carol) == 2
    with pytest.raises(ValueError):
        abe.decrypt(ct, carol, [alice_proxy], rng)
    with pytest.raises(abe.DecryptionError):
        abe.decrypt(ct, carol, [bob_proxy], rng, strict=False)


def test_delegation_errors(toy):
    ids, alice_proxy, bob_proxy, bob, carol, ct, rng = delegation_chain(toy)
    with pytest.raises(abe.UnknownAttribute):
        abe.delegate(bob, bob_proxy, "dave", [ids["friend"]], rng)
    with pytest.raises(ValueError):
        abe.delegate(bob, alice_proxy, "dave", [ids["foaf"]], rng)


def test_bob_revokes_carol(toy):
    ids, alice_proxy, bob_proxy, bob, carol, ct, rng = delegation_chain(toy)
    abe.revoke(bob_proxy, "carol", [ids["foaf"]])
    with pytest.raises(abe.RevokedError):
        abe.decrypt(ct, carol, [bob_proxy, alice_proxy], rng)
    assert abe.decrypt(ct, bob, [alice_proxy], rng) == b"K" * 32


# -- threshold proxy ----------------------------------------------------------------

def test_threshold_matches_unsplit(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    abe.issue_key(master, proxy, "bob", [f], rng)
    shares = abe.split_proxy(proxy, 3, 2, rng)
    for _ in range(20):
        e = toy.base_exp(toy.random_scalar(rng))
        want = proxy.transform("bob", f, e)
        for pair in itertools.combinations(shares, 2):
            assert abe.ThresholdProxy(pair, 2).transform("bob", f, e) == want
        for s in shares:
            assert abe.ThresholdProxy([s], 1).transform("bob", f, e) != want


def test_threshold_one_of_one_is_unsplit(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    abe.issue_key(master, proxy, "bob", [f], rng)
    (share,) = abe.split_proxy(proxy, 1, 1, rng)
    e = toy.base_exp(5)
    assert abe.ThresholdProxy([share], 1).transform("bob", f, e) == proxy.transform("bob", f, e)
    with pytest.raises(ValueError):
        abe.split_proxy(proxy, 2, 3, rng)


def test_threshold_revocation_on_shares(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    bob = abe.issue_key(master, proxy, "bob", [f], rng)
    shares = abe.split_proxy(proxy, 3, 2, rng)
    ct = abe.encrypt(Leaf(f), b"K" * 32, master.public_params, rng)
    tp = abe.ThresholdProxy(shares, 2)
    assert abe.decrypt(ct, bob, [tp], rng) == b"K" * 32
    for s in shares:
        abe.revoke(s, "bob", [f])
    with pytest.raises(abe.RevokedError):
        abe.decrypt(ct, bob, [tp], rng)


def test_proxy_message_pair(toy):
    master, ids, proxy, rng = authority(toy)
    f = ids["friend"]
    abe.issue_key(master, proxy, "bob", [f], rng)
    e = toy.base_exp(99)
    req = abe.ProxyRequest("bob", f, toy.encode_element(e))
    assert abe.ProxyRequest.from_bytes(req.to_bytes()) == req
    out = abe.decode_proxy_response(abe.serve_proxy_request(proxy, req.to_bytes()))
    assert toy.decode_element(out) == proxy.transform("bob", f, e)
    refused = abe.ProxyRequest("mallory", f, toy.encode_element(e))
    assert abe.decode_proxy_response(abe.serve_proxy_request(proxy, refused.to_bytes())) is None
