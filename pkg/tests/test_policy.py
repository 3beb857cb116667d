import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decent import policy as pol
from decent.policy import AND, OR, Leaf, Threshold
from decent.wire import DecodeError

from oracles import min_leaf_count, satisfies
from strategies import ATTRS, IDS, NAMES, held_sets, random_tree, trees

F, M, C, A = (bytes([c]) * 16 for c in b"fmca")
NAMES3 = {"friend": F, "family": M, "coworker": C, "acquaintance": A}


def test_parse_paper_forms():
    assert pol.parse_policy("(friend AND coworker) OR family", NAMES3) == Threshold(
        1, (Threshold(2, (Leaf(F), Leaf(C))), Leaf(M))
    )
    assert pol.parse_policy("2 of {friend, family, coworker}", NAMES3) == Threshold(2, (Leaf(F), Leaf(M), Leaf(C)))
    assert pol.parse_policy("friend", NAMES3) == Leaf(F)


def test_and_binds_tighter_than_or():
    assert pol.parse_policy("friend OR family AND coworker", NAMES3) == OR(Leaf(F), AND(Leaf(M), Leaf(C)))


def test_keywords_case_insensitive_and_nested_threshold_members():
    tree = pol.parse_policy("2 OF {friend and family, coworker, acquaintance}", NAMES3)
    assert tree == Threshold(2, (AND(Leaf(F), Leaf(M)), Leaf(C), Leaf(A)))


@pytest.mark.parametrize(
    "text, error",
    [
        ("3 of {friend, family}", pol.ThresholdError),
        ("0 of {friend}", pol.ThresholdError),
        ("friend AND", pol.PolicySyntaxError),
        ("(friend OR family", pol.PolicySyntaxError),
        ("friend family", pol.PolicySyntaxError),
        ("NOT friend", pol.PolicySyntaxError),
        ("", pol.PolicySyntaxError),
        ("enemy", pol.UnknownAttributeError),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error):
        pol.parse_policy(text, NAMES3)


def test_syntax_error_reports_position():
    with pytest.raises(pol.PolicySyntaxError) as exc:
        pol.parse_policy("friend AND )", NAMES3)
    assert exc.value.position == 11


def test_depth_and_fanout_limits():
    with pytest.raises(pol.PolicyError):
        pol.parse_policy("(" * 20 + "friend" + ")" * 20 + " AND family", NAMES3, max_depth=1)
    with pytest.raises(pol.PolicyError):
        pol.parse_policy(" OR ".join(["friend"] * 70), NAMES3)


def test_evaluate_examples():
    p = pol.parse_policy("(friend AND coworker) OR family", NAMES3)
    assert pol.evaluate(p, {M})
    assert not pol.evaluate(p, {F})
    q = pol.parse_policy("2 of {friend, family, coworker}", NAMES3)
    assert pol.evaluate(q, {F, C})


def test_two_of_three_truth_table():
    q = pol.parse_policy("2 of {friend, family, coworker}", NAMES3)
    universe = [F, M, C]
    for r in range(4):
        for held in itertools.combinations(universe, r):
            assert pol.evaluate(q, set(held)) == (len(held) >= 2)


def test_selection_examples():
    assert len(pol.satisfying_leaf_selection(OR(Leaf(F), Leaf(M)), {F, M})) == 1
    sel = pol.satisfying_leaf_selection(Threshold(2, (Leaf(F), Leaf(M), Leaf(C))), {F, M, C})
    assert len(sel) == 2
    assert sel.nodes[()][0] == 2 and len(sel.nodes[()][1]) == 2
    assert pol.satisfying_leaf_selection(AND(Leaf(F), Leaf(M)), {F}) is None


def test_selection_duplicate_leaves_get_distinct_positions():
    tree = OR(AND(Leaf(F), Leaf(M)), Leaf(F))
    sel = pol.satisfying_leaf_selection(tree, {F})
    assert [j for _, j, _ in sel.leaves] == [2]


def test_evaluate_matches_oracle_on_10k_pairs():
    rnd = random.Random(7)
    for _ in range(10_000):
        tree = random_tree(rnd, depth=5, max_leaves=20)
        held = {a for a in ATTRS if rnd.random() < 0.5}
        assert pol.evaluate(tree, held) == satisfies(tree, held)


@settings(max_examples=300, deadline=None)
@given(trees(), held_sets)
def test_selection_exists_iff_satisfied(tree, held):
    sel = pol.satisfying_leaf_selection(tree, held)
    assert (sel is not None) == pol.evaluate(tree, held)
    if sel is not None:
        assert sel.attributes <= held


@settings(max_examples=300, deadline=None)
@given(trees(max_depth=4), held_sets)
def test_selection_is_minimal(tree, held):
    if len(list(pol.iter_leaves(tree))) > 10:
        return
    sel = pol.satisfying_leaf_selection(tree, held)
    best = min_leaf_count(tree, held)
    assert (sel is None) == (best is None)
    if sel is not None:
        assert len(sel) == best


@settings(max_examples=300, deadline=None)
@given(trees(), held_sets, held_sets)
def test_monotone(tree, held, extra):
    if pol.evaluate(tree, held):
        assert pol.evaluate(tree, held | extra)


@settings(max_examples=300, deadline=None)
@given(trees())
def test_binary_round_trip(tree):
    assert pol.from_bytes(pol.to_bytes(tree)) == tree


@settings(max_examples=300, deadline=None)
@given(trees())
def test_text_round_trip(tree):
    assert pol.parse_policy(pol.to_text(tree, NAMES), IDS) == tree


def test_binary_layout():
    tree = Threshold(2, (Leaf(F), Leaf(M)))
    assert pol.to_bytes(tree) == b"\x01\x02\x02" + b"\x00" + F + b"\x00" + M


@pytest.mark.parametrize(
    "blob",
    [
        b"",
        b"\x02",
        b"\x00" + b"x" * 15,
        b"\x01\x03\x02\x00" + F + b"\x00" + M,
        b"\x01\x01\x01\x00" + F + b"junk",
    ],
)
def test_decode_rejects_malformed(blob):
    with pytest.raises(DecodeError):
        pol.from_bytes(blob)


def test_attribute_ids_fresh():
    seen = {pol.new_attribute_id() for _ in range(10_000)}
    assert len(seen) == 10_000
