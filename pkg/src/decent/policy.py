"""Attribute-based access policies: parsing, canonical encoding, evaluation.

Policies are monotone threshold trees over opaque attribute identifiers.
AND is ``Threshold(n, ...)``, OR is ``Threshold(1, ...)``.

Text syntax::

    expr   := term ('OR' term)*
    term   := factor ('AND' factor)*
    factor := IDENT | '(' expr ')' | INT 'of' '{' expr (',' expr)* '}'

Attribute names are resolved through a caller-supplied name -> id map, so the
same text means different things for different key authorities.
"""
from __future__ import annotations

import re
import secrets
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from .wire import DecodeError, Reader, encode_varint

ATTRIBUTE_ID_LEN = 16
MAX_DEPTH = 16
MAX_FANOUT = 64

AttributeId = bytes
Path = tuple  # child indices from the root, e.g. (0, 2)


def new_attribute_id() -> AttributeId:
    return secrets.token_bytes(ATTRIBUTE_ID_LEN)


class PolicyError(ValueError):
    pass


class PolicySyntaxError(PolicyError):
    def __init__(self, position: int, expected: str, found: str) -> None:
        super().__init__(f"at {position}: expected {expected}, found {found!r}")
        self.position = position
        self.expected = expected
        self.found = found


class UnknownAttributeError(PolicyError):
    def __init__(self, name: str, position: int | None = None) -> None:
        where = f" at {position}" if position is not None else ""
        super().__init__(f"unknown attribute {name!r}{where}")
        self.name = name
        self.position = position


class ThresholdError(PolicyError):
    pass


@dataclass(frozen=True)
class Leaf:
    attr: AttributeId

    def __post_init__(self) -> None:
        if len(self.attr) != ATTRIBUTE_ID_LEN:
            raise PolicyError(f"attribute id must be {ATTRIBUTE_ID_LEN} bytes")


@dataclass(frozen=True)
class Threshold:
    k: int
    children: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "children", tuple(self.children))
        n = len(self.children)
        if n < 1:
            raise ThresholdError("threshold node needs at least one child")
        if not 1 <= self.k <= n:
            raise ThresholdError(f"threshold {self.k} out of range for {n} members")


PolicyTree = Union[Leaf, Threshold]


def AND(*children: PolicyTree) -> Threshold:
    return Threshold(len(children), children)


def OR(*children: PolicyTree) -> Threshold:
    return Threshold(1, children)


def check_limits(tree: PolicyTree, max_depth: int = MAX_DEPTH, max_fanout: int = MAX_FANOUT) -> None:
    def walk(node: PolicyTree, depth: int) -> None:
        if depth > max_depth:
            raise PolicyError(f"policy deeper than {max_depth}")
        if isinstance(node, Threshold):
            if len(node.children) > max_fanout:
                raise PolicyError(f"fan-out {len(node.children)} exceeds {max_fanout}")
            for child in node.children:
                walk(child, depth + 1)

    walk(tree, 1)


def iter_leaves(tree: PolicyTree) -> Iterator[tuple[Path, Leaf]]:
    """Yield ``(path, leaf)`` in depth-first preorder."""
    stack: list[tuple[Path, PolicyTree]] = [((), tree)]
    while stack:
        path, node = stack.pop()
        if isinstance(node, Leaf):
            yield path, node
        else:
            for i in reversed(range(len(node.children))):
                stack.append((path + (i,), node.children[i]))


def attributes(tree: PolicyTree) -> set[AttributeId]:
    return {leaf.attr for _, leaf in iter_leaves(tree)}


def depth(tree: PolicyTree) -> int:
    if isinstance(tree, Leaf):
        return 1
    return 1 + max(depth(c) for c in tree.children)


def node_at(tree: PolicyTree, path: Path) -> PolicyTree:
    node = tree
    for i in path:
        node = node.children[i]
    return node


# -- text syntax ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<int>\d+)(?![A-Za-z_])|(?P<ident>[A-Za-z_][A-Za-z0-9_\-]*)|(?P<punct>[(){},]))"
)
_KEYWORDS = {"AND", "OR", "OF", "NOT"}


@dataclass
class _Token:
    kind: str  # "int" | "ident" | "kw" | "punct" | "eof"
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            tokens.append(_Token("eof", "", pos))
            return tokens
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolicySyntaxError(pos, "identifier, integer or punctuation", text[pos])
        kind = m.lastgroup
        value = m.group(kind)
        start = m.start(kind)
        if kind == "ident" and value.upper() in _KEYWORDS:
            kind, value = "kw", value.upper()
        tokens.append(_Token(kind, value, start))
        pos = m.end()


class _Parser:
    def __init__(self, text: str, names: Mapping[str, AttributeId]) -> None:
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.tok
        if tok.kind != kind or (value is not None and tok.value != value):
            raise PolicySyntaxError(tok.pos, value or kind, tok.value or "end of input")
        self.i += 1
        return tok

    def parse(self) -> PolicyTree:
        tree = self.expr()
        self.expect("eof")
        return tree

    def expr(self) -> PolicyTree:
        terms = [self.term()]
        while self.tok.kind == "kw" and self.tok.value == "OR":
            self.i += 1
            terms.append(self.term())
        return terms[0] if len(terms) == 1 else Threshold(1, terms)

    def term(self) -> PolicyTree:
        factors = [self.factor()]
        while self.tok.kind == "kw" and self.tok.value == "AND":
            self.i += 1
            factors.append(self.factor())
        return factors[0] if len(factors) == 1 else Threshold(len(factors), factors)

    def factor(self) -> PolicyTree:
        tok = self.tok
        if tok.kind == "ident":
            self.i += 1
            try:
                return Leaf(self.names[tok.value])
            except KeyError:
                raise UnknownAttributeError(tok.value, tok.pos) from None
        if tok.kind == "punct" and tok.value == "(":
            self.i += 1
            inner = self.expr()
            self.expect("punct", ")")
            return inner
        if tok.kind == "int":
            self.i += 1
            k = int(tok.value)
            self.expect("kw", "OF")
            self.expect("punct", "{")
            members = [self.expr()]
            while self.tok.kind == "punct" and self.tok.value == ",":
                self.i += 1
                members.append(self.expr())
            self.expect("punct", "}")
            if k < 1 or k > len(members):
                raise ThresholdError(
                    f"at {tok.pos}: threshold {k} exceeds member count {len(members)}"
                    if k > len(members) else f"at {tok.pos}: threshold must be positive"
                )
            return Threshold(k, members)
        if tok.kind == "kw" and tok.value == "NOT":
            raise PolicySyntaxError(tok.pos, "monotone expression (NOT is unsupported)", tok.value)
        raise PolicySyntaxError(tok.pos, "attribute, '(' or threshold clause", tok.value or "end of input")


def parse_policy(
    text: str,
    names: Mapping[str, AttributeId],
    max_depth: int = MAX_DEPTH,
    max_fanout: int = MAX_FANOUT,
) -> PolicyTree:
    """Parse policy text into a tree, resolving names through ``names``.

    >>> ids = {"friend": b"f" * 16, "family": b"m" * 16}
    >>> parse_policy("friend OR family", ids) == OR(Leaf(b"f" * 16), Leaf(b"m" * 16))
    True
    """
    tree = _Parser(text, names).parse()
    check_limits(tree, max_depth, max_fanout)
    return tree


def to_text(tree: PolicyTree, names: Mapping[AttributeId, str]) -> str:
    """Render a tree so that ``parse_policy`` rebuilds it structurally."""
    if isinstance(tree, Leaf):
        try:
            return names[tree.attr]
        except KeyError:
            raise UnknownAttributeError(tree.attr.hex()) from None
    parts = [to_text(c, names) for c in tree.children]
    n = len(parts)
    if n >= 2 and tree.k == n:
        return "(" + " AND ".join(parts) + ")"
    if n >= 2 and tree.k == 1:
        return "(" + " OR ".join(parts) + ")"
    return f"{tree.k} of {{" + ", ".join(parts) + "}"


# -- binary encoding --------------------------------------------------------------

_TAG_LEAF = 0
_TAG_THRESHOLD = 1


def to_bytes(tree: PolicyTree) -> bytes:
    out = bytearray()

    def walk(node: PolicyTree) -> None:
        if isinstance(node, Leaf):
            out.append(_TAG_LEAF)
            out.extend(node.attr)
        else:
            out.append(_TAG_THRESHOLD)
            out.extend(encode_varint(node.k))
            out.extend(encode_varint(len(node.children)))
            for c in node.children:
                walk(c)

    walk(tree)
    return bytes(out)


def read_tree(reader: Reader, max_depth: int = MAX_DEPTH, max_fanout: int = MAX_FANOUT) -> PolicyTree:
    def walk(d: int) -> PolicyTree:
        if d > max_depth:
            raise DecodeError("policy too deep")
        tag = reader.u8()
        if tag == _TAG_LEAF:
            return Leaf(reader.raw(ATTRIBUTE_ID_LEN))
        if tag != _TAG_THRESHOLD:
            raise DecodeError(f"unknown policy node tag {tag}")
        k = reader.varint()
        n = reader.varint()
        if n > max_fanout:
            raise DecodeError("policy fan-out too large")
        children = [walk(d + 1) for _ in range(n)]
        try:
            return Threshold(k, children)
        except ThresholdError as exc:
            raise DecodeError(str(exc)) from exc

    return walk(1)


def from_bytes(data: bytes) -> PolicyTree:
    reader = Reader(data)
    tree = read_tree(reader)
    reader.done()
    return tree


# -- evaluation -------------------------------------------------------------------

def evaluate(policy: PolicyTree, held: set[AttributeId] | frozenset[AttributeId]) -> bool:
    if isinstance(policy, Leaf):
        return policy.attr in held
    satisfied = 0
    for child in policy.children:
        if evaluate(child, held):
            satisfied += 1
            if satisfied >= policy.k:
                return True
    return False


@dataclass(frozen=True)
class Selection:
    """A minimal set of held leaves that satisfies a policy.

    ``leaves`` holds ``(path, preorder_index, attribute)`` for every chosen
    leaf. ``nodes`` maps each threshold node on a chosen path to
    ``(k, chosen child indices)``; those indices (plus one) are the Shamir
    x-coordinates used to interpolate the node's secret.
    """

    leaves: tuple
    nodes: Mapping[Path, tuple] = field(default_factory=dict)

    @property
    def attributes(self) -> set[AttributeId]:
        return {attr for _, _, attr in self.leaves}

    def __len__(self) -> int:
        return len(self.leaves)


def leaf_index_map(tree: PolicyTree) -> dict[Path, int]:
    return {path: i for i, (path, _) in enumerate(iter_leaves(tree))}


def satisfying_leaf_selection(policy: PolicyTree, held: set[AttributeId] | frozenset[AttributeId]) -> Selection | None:
    """Pick the fewest held leaves that satisfy ``policy``; ``None`` if impossible."""
    inf = float("inf")

    # cost[path] = min leaves needed under that node; children's leaves are disjoint,
    # so taking the k cheapest satisfiable children is optimal.
    def plan(node: PolicyTree, path: Path) -> tuple[float, list]:
        if isinstance(node, Leaf):
            if node.attr in held:
                return 1, [(path, node.attr)]
            return inf, []
        options = []
        for i, child in enumerate(node.children):
            cost, chosen = plan(child, path + (i,))
            if cost != inf:
                options.append((cost, i, chosen))
        if len(options) < node.k:
            return inf, []
        options.sort(key=lambda o: (o[0], o[1]))
        picked = sorted(options[: node.k], key=lambda o: o[1])
        chosen = [(path, (node.k, tuple(o[1] for o in picked)))]
        for _, _, sub in picked:
            chosen.extend(sub)
        return sum(o[0] for o in picked), chosen

    cost, chosen = plan(policy, ())
    if cost == inf:
        return None
    index = leaf_index_map(policy)
    leaves = []
    nodes = {}
    for path, info in chosen:
        if isinstance(info, bytes):
            leaves.append((path, index[path], info))
        else:
            nodes[path] = info
    leaves.sort(key=lambda item: item[1])
    return Selection(tuple(leaves), nodes)
