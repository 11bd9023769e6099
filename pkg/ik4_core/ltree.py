"""Finite trees labelled in a poset: embeddings, ~ and isomorphism, strict and nice forms, dreariness"""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional, Protocol, Sequence, Tuple

from .errors import InvariantViolation, PosetMismatchError, TreeError, TreeSyntaxError

logger = logging.getLogger(__name__)

NLT_EXPONENT_LIMIT = 1 << 24


class Poset(Protocol):
    def leq(self, a: Any, b: Any) -> bool: ...

    def lt(self, a: Any, b: Any) -> bool: ...

    def encode(self, a: Any) -> bytes: ...

    def labels(self) -> List[Any]: ...

    def card(self) -> int: ...

    def parse_label(self, text: str) -> Any: ...


@dataclass(frozen=True)
class ChainPoset:
    """The linear order 0 < 1 < ... < n-1."""

    n: int

    def _check(self, a: Any) -> None:
        if not isinstance(a, int) or not 0 <= a < self.n:
            raise PosetMismatchError(f"{a!r} is not a label of the {self.n}-chain")

    def leq(self, a: int, b: int) -> bool:
        self._check(a)
        self._check(b)
        return a <= b

    def lt(self, a: int, b: int) -> bool:
        return self.leq(a, b) and a != b

    def encode(self, a: int) -> bytes:
        self._check(a)
        return str(a).encode("ascii")

    def labels(self) -> List[int]:
        return list(range(self.n))

    def card(self) -> int:
        return self.n

    def parse_label(self, text: str) -> int:
        a = int(text)
        self._check(a)
        return a


class LabelledTree:
    """(N, E, lambda): a rooted tree on integer node ids with monotone labels."""

    def __init__(self, poset: Poset, root: int, parent: Mapping[int, int], labels: Mapping[int, Any]):
        self.poset = poset
        self.root = root
        self.parent: Dict[int, int] = dict(parent)
        self.labels: Dict[int, Any] = dict(labels)
        self._children: Dict[int, List[int]] = {n: [] for n in self.labels}
        self._validate()
        self._code_cache: Dict[int, bytes] = {}

    def _validate(self) -> None:
        if self.root not in self.labels:
            raise TreeError(f"root {self.root} has no label")
        if self.root in self.parent:
            raise TreeError("the root cannot have a parent")
        for node in self.labels:
            if node == self.root:
                continue
            if node not in self.parent:
                raise TreeError(f"node {node} has no parent")
            p = self.parent[node]
            if p not in self.labels:
                raise TreeError(f"node {node} has unknown parent {p}")
            self._children[p].append(node)
        extra = set(self.parent) - set(self.labels)
        if extra:
            raise TreeError(f"parent entries for unknown nodes {sorted(extra)}")
        for kids in self._children.values():
            kids.sort()
        reached = self._preorder()
        if len(reached) != len(self.labels):
            raise TreeError("parent map has a cycle or a detached component")
        for node, p in self.parent.items():
            if not self.poset.leq(self.labels[p], self.labels[node]):
                raise TreeError(f"labels decrease along the edge {p} -> {node}")

    def _preorder(self) -> List[int]:
        order = []
        stack = [self.root]
        seen = set()
        while stack:
            n = stack.pop()
            if n in seen:
                break
            seen.add(n)
            order.append(n)
            stack.extend(reversed(self._children[n]))
        return order

    # -- construction helpers --

    @classmethod
    def single(cls, poset: Poset, label: Any, node: int = 0) -> "LabelledTree":
        return cls(poset, node, {}, {node: label})

    @classmethod
    def chain(cls, poset: Poset, labels: Sequence[Any]) -> "LabelledTree":
        return cls(poset, 0, {i: i - 1 for i in range(1, len(labels))}, dict(enumerate(labels)))

    @classmethod
    def from_nested(cls, poset: Poset, nested: Tuple[Any, Sequence]) -> "LabelledTree":
        """Build from ``(label, [child, ...])``; ids are assigned in preorder from 0."""
        parent: Dict[int, int] = {}
        labels: Dict[int, Any] = {}

        def visit(item, up: Optional[int]) -> None:
            label, kids = item
            node = len(labels)
            labels[node] = label
            if up is not None:
                parent[node] = up
            for kid in kids:
                visit(kid, node)

        visit(nested, None)
        return cls(poset, 0, parent, labels)

    # -- structure --

    @property
    def nodes(self) -> List[int]:
        return sorted(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def children(self, node: int) -> List[int]:
        return self._children[node]

    def preorder(self) -> List[int]:
        return self._preorder()

    def depth(self, node: int) -> int:
        d = 0
        while node != self.root:
            node = self.parent[node]
            d += 1
        return d

    def height(self) -> int:
        return max(self.depth(n) for n in self.labels)

    def is_ancestor_or_self(self, a: int, b: int) -> bool:
        """a E* b."""
        while True:
            if a == b:
                return True
            if b == self.root:
                return False
            b = self.parent[b]

    def subtree(self, node: int) -> List[int]:
        out = []
        stack = [node]
        while stack:
            n = stack.pop()
            out.append(n)
            stack.extend(self._children[n])
        return sorted(out)

    def descendants_or_self(self, node: int) -> List[int]:
        return self.subtree(node)

    def edges(self) -> List[Tuple[int, int]]:
        return sorted((p, n) for n, p in self.parent.items())

    def is_strict(self) -> bool:
        return all(self.poset.lt(self.labels[p], self.labels[n]) for n, p in self.parent.items())

    def is_nice(self) -> bool:
        for node in self.labels:
            codes = [self.code(c) for c in self._children[node]]
            if len(codes) != len(set(codes)):
                return False
        return True

    def code(self, node: Optional[int] = None) -> bytes:
        """AHU code of the subtree at node: label bytes and the sorted child codes, parenthesized."""
        if node is None:
            node = self.root
        hit = self._code_cache.get(node)
        if hit is not None:
            return hit
        kids = sorted(self.code(c) for c in self._children[node])
        out = b"(" + self.poset.encode(self.labels[node]) + b"".join(kids) + b")"
        self._code_cache[node] = out
        return out

    def to_nested(self, node: Optional[int] = None) -> Tuple[Any, List]:
        if node is None:
            node = self.root
        return (self.labels[node], [self.to_nested(c) for c in self._children[node]])

    def without(self, removed: Iterable[int], reparent: Optional[Mapping[int, int]] = None) -> "LabelledTree":
        removed = set(removed)
        reparent = dict(reparent or {})
        parent = {}
        for n, p in self.parent.items():
            if n in removed:
                continue
            parent[n] = reparent.get(n, p)
        labels = {n: l for n, l in self.labels.items() if n not in removed}
        return LabelledTree(self.poset, self.root, parent, labels)

    def __repr__(self) -> str:
        return f"LabelledTree({render_tree(self)})"


def _same_poset(s: LabelledTree, t: LabelledTree) -> None:
    if s.poset != t.poset:
        raise PosetMismatchError("trees are labelled in different posets")


@dataclass(frozen=True)
class Embedding:
    """Node map from a source tree into a target tree."""

    mapping: Dict[int, int] = field(default_factory=dict)

    def __call__(self, node: int) -> int:
        return self.mapping[node]

    def problems(self, source: LabelledTree, target: LabelledTree) -> List[str]:
        found = []
        for n in source.labels:
            if n not in self.mapping:
                found.append(f"node {n} is unmapped")
            elif self.mapping[n] not in target.labels:
                found.append(f"node {n} maps to unknown node {self.mapping[n]}")
            elif source.labels[n] != target.labels[self.mapping[n]]:
                found.append(f"node {n} changes label")
        if found:
            return found
        for p, n in source.edges():
            if not target.is_ancestor_or_self(self.mapping[p], self.mapping[n]):
                found.append(f"edge {p} -> {n} is not sent to a descendant-or-self pair")
        return found

    def verify(self, source: LabelledTree, target: LabelledTree) -> bool:
        return not self.problems(source, target)

    def then(self, other: "Embedding") -> "Embedding":
        """Composition: first self, then other."""
        return Embedding({n: other.mapping[m] for n, m in self.mapping.items()})


def identity_embedding(tree: LabelledTree) -> Embedding:
    return Embedding({n: n for n in tree.labels})


def embeds_into(s: LabelledTree, t: LabelledTree) -> Optional[Embedding]:
    """Find an embedding of s into t, or None.

    ``fits(i, x)``: node i can go to x with i's subtree sent below x. It holds
    iff the labels agree and every child of i fits somewhere in x's subtree.
    """
    _same_poset(s, t)
    memo: Dict[Tuple[int, int], bool] = {}
    below = {x: t.descendants_or_self(x) for x in t.labels}

    def fits(i: int, x: int) -> bool:
        key = (i, x)
        hit = memo.get(key)
        if hit is not None:
            return hit
        ok = s.labels[i] == t.labels[x] and all(
            any(fits(c, y) for y in below[x]) for c in s.children(i))
        memo[key] = ok
        return ok

    start = next((x for x in t.nodes if fits(s.root, x)), None)
    if start is None:
        return None
    mapping = {s.root: start}
    for i in s.preorder():
        x = mapping[i]
        for c in s.children(i):
            mapping[c] = next(y for y in below[x] if fits(c, y))
    return Embedding(mapping)


@dataclass(frozen=True)
class SimResult:
    equivalent: bool
    forward: Optional[Embedding] = None
    backward: Optional[Embedding] = None

    def __bool__(self) -> bool:
        return self.equivalent


def equivalent_sim(s: LabelledTree, t: LabelledTree) -> SimResult:
    forward = embeds_into(s, t)
    if forward is None:
        return SimResult(False)
    backward = embeds_into(t, s)
    if backward is None:
        return SimResult(False)
    return SimResult(True, forward, backward)


def canonical_code(tree: LabelledTree) -> bytes:
    return tree.code()


def isomorphic(s: LabelledTree, t: LabelledTree) -> bool:
    _same_poset(s, t)
    return s.code() == t.code()


@dataclass(frozen=True)
class Reduction:
    """A reduced tree plus the two embeddings witnessing that it is ~ to the input."""

    tree: LabelledTree
    forward: Embedding
    backward: Embedding
    steps: int


def _checked(original: LabelledTree, result: Reduction, what: str) -> Reduction:
    problems = result.forward.problems(original, result.tree) + result.backward.problems(result.tree, original)
    if problems:
        raise InvariantViolation(f"{what} produced bad witnesses: {'; '.join(problems)}")
    return result


def _find_duplicate(tree: LabelledTree) -> Optional[Tuple[int, int]]:
    for i in tree.nodes:
        for j in tree.children(i):
            if tree.labels[i] == tree.labels[j]:
                return i, j
    return None


def strictify(tree: LabelledTree) -> Reduction:
    """Contract every edge whose endpoints carry the same label."""
    forward = {n: n for n in tree.labels}
    current = tree
    steps = 0
    while True:
        dup = _find_duplicate(current)
        if dup is None:
            break
        i, j = dup
        before = len(current)
        current = current.without([j], {c: i for c in current.children(j)})
        if len(current) >= before:
            raise InvariantViolation("duplicate contraction did not shrink the tree")
        for n, m in forward.items():
            if m == j:
                forward[n] = i
        steps += 1
    result = Reduction(current, Embedding(forward), identity_embedding(current), steps)
    return _checked(tree, result, "strictify")


def _subtree_iso(tree: LabelledTree, a: int, b: int) -> Dict[int, int]:
    """Isomorphism from the subtree at a onto the subtree at b (codes must match)."""
    out = {a: b}
    kids_a = sorted(tree.children(a), key=tree.code)
    kids_b = sorted(tree.children(b), key=tree.code)
    for x, y in zip(kids_a, kids_b):
        out.update(_subtree_iso(tree, x, y))
    return out


def _find_triplicate(tree: LabelledTree) -> Optional[Tuple[int, int, int]]:
    for k in tree.nodes:
        kids = tree.children(k)
        for i, j in itertools.combinations(kids, 2):
            if tree.code(i) == tree.code(j):
                return k, i, j
    return None


def nicify(tree: LabelledTree) -> Reduction:
    """Drop a child subtree whenever a sibling subtree is isomorphic to it."""
    if not tree.is_strict():
        raise TreeError("nicify needs a strict tree")
    forward = {n: n for n in tree.labels}
    current = tree
    steps = 0
    while True:
        trip = _find_triplicate(current)
        if trip is None:
            break
        _, i, j = trip
        iso = _subtree_iso(current, j, i)
        before = len(current)
        current = current.without(current.subtree(j))
        if len(current) >= before:
            raise InvariantViolation("triplicate deletion did not shrink the tree")
        for n, m in forward.items():
            if m in iso:
                forward[n] = iso[m]
        steps += 1
    result = Reduction(current, Embedding(forward), identity_embedding(current), steps)
    return _checked(tree, result, "nicify")


def normalize(tree: LabelledTree) -> LabelledTree:
    """Strict then nice representative of the ~-class of tree."""
    return nicify(strictify(tree).tree).tree


def nlt_bound(h: int, card_p: int, exponent_limit: int = NLT_EXPONENT_LIMIT) -> int:
    """nlt(0) = Card(P), nlt(h) = Card(P) * 2**nlt(h-1); exact big integers."""
    if h < 0 or card_p < 0:
        raise ValueError("height and cardinality must be non-negative")
    value = card_p
    for _ in range(h):
        if value > exponent_limit:
            raise OverflowError(f"2**{value} exceeds the exponent limit {exponent_limit}")
        value = card_p * (1 << value)
    return value


def enumerate_nice_trees(poset: Poset, max_height: int) -> Iterator[LabelledTree]:
    """One representative per isomorphism class of nice trees of height <= max_height."""
    labels = poset.labels()
    # level[label]: (code, nested form) of nice trees rooted at label, height <= current bound
    level: Dict[Any, List[Tuple[bytes, Tuple]]] = {}
    for label in labels:
        level[label] = [(b"(" + poset.encode(label) + b")", (label, []))]
    for _ in range(max_height):
        nxt: Dict[Any, List[Tuple[bytes, Tuple]]] = {}
        for label in labels:
            pool: List[Tuple[bytes, Tuple]] = []
            for other in labels:
                if poset.lt(label, other):
                    pool.extend(level[other])
            pool.sort(key=lambda item: item[0])
            forms = []
            for r in range(len(pool) + 1):
                for combo in itertools.combinations(pool, r):
                    code = b"(" + poset.encode(label) + b"".join(sorted(c for c, _ in combo)) + b")"
                    forms.append((code, (label, [n for _, n in combo])))
            forms.sort(key=lambda item: item[0])
            nxt[label] = forms
        level = nxt
    seen = set()
    for label in labels:
        for code, nested in level[label]:
            if code in seen:
                continue
            seen.add(code)
            yield LabelledTree.from_nested(poset, nested)


def count_nice_trees(poset: Poset, max_height: int) -> int:
    return sum(1 for _ in enumerate_nice_trees(poset, max_height))


def is_dreary(family: Sequence[LabelledTree]) -> Optional[int]:
    """Least m in 1..n-1 with family[m] ~ family[n] (1-based, n = len(family))."""
    n = len(family)
    if n == 0:
        return None
    last = family[n - 1]
    for m in range(1, n):
        if equivalent_sim(family[m - 1], last):
            return m
    return None


def classify(trees: Sequence[LabelledTree]) -> List[List[int]]:
    """Partition tree indices into ~-classes, classes ordered by first member."""
    classes: List[List[int]] = []
    for idx, tree in enumerate(trees):
        for cls in classes:
            if equivalent_sim(trees[cls[0]], tree):
                cls.append(idx)
                break
        else:
            classes.append([idx])
    return classes


# -- text format -----------------------------------------------------------

_TREE_TOKEN = re.compile(r"\s*(\(|\)|\{[^}]*\}|-?\d+)")


def parse_tree(text: str, poset: Poset) -> LabelledTree:
    """Read ``(label child child ...)``; node ids follow preorder from 0."""
    tokens = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TREE_TOKEN.match(text, pos)
        if m is None:
            raise TreeSyntaxError(f"unexpected text {text[pos:pos + 10].strip()!r} at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    i = 0

    def item():
        nonlocal i
        if i >= len(tokens) or tokens[i] != "(":
            raise TreeSyntaxError("expected '('")
        i += 1
        if i >= len(tokens) or tokens[i] in ("(", ")"):
            raise TreeSyntaxError("expected a label after '('")
        try:
            label = poset.parse_label(tokens[i])
        except ValueError as e:
            raise TreeSyntaxError(str(e)) from None
        i += 1
        kids = []
        while i < len(tokens) and tokens[i] == "(":
            kids.append(item())
        if i >= len(tokens) or tokens[i] != ")":
            raise TreeSyntaxError("expected ')'")
        i += 1
        return (label, kids)

    nested = item()
    if i != len(tokens):
        raise TreeSyntaxError("trailing text after the tree")
    try:
        return LabelledTree.from_nested(poset, nested)
    except TreeError as e:
        raise TreeSyntaxError(str(e)) from None


def render_tree(tree: LabelledTree, node: Optional[int] = None) -> str:
    if node is None:
        node = tree.root
    parts = [str(tree.labels[node])] + [render_tree(tree, c) for c in tree.children(node)]
    return "(" + " ".join(parts) + ")"
