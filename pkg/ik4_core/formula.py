"""Formulas of the modal language, their concrete syntax, closure sets and the label poset.

Formulas are interned: two structurally equal formulas are the same object,
so identity comparison and identity hashing are structural. Every formula
built through the factories below (or the parser) goes through the intern
table, including formulas rebuilt after unpickling in worker processes.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import FormulaSyntaxError, WidthMismatchError


class Op(Enum):
    ATOM = "atom"
    TOP = "T"
    BOT = "F"
    IMPLIES = "->"
    AND = "&"
    OR = "|"
    BOX = "[]"
    DIA = "<>"


BINARY = (Op.IMPLIES, Op.AND, Op.OR)
MODAL = (Op.BOX, Op.DIA)

_intern_lock = threading.Lock()
_intern_table: Dict[tuple, "Formula"] = {}


class Formula:
    """A node of the abstract syntax. Build with the module factories, never directly."""

    __slots__ = ("op", "name", "lhs", "rhs", "__weakref__")

    op: Op
    name: Optional[str]
    lhs: Optional["Formula"]
    rhs: Optional["Formula"]

    def __new__(cls, op: Op, name: Optional[str] = None,
                lhs: Optional["Formula"] = None, rhs: Optional["Formula"] = None) -> "Formula":
        key = (op, name, lhs, rhs)
        node = _intern_table.get(key)
        if node is not None:
            return node
        with _intern_lock:
            node = _intern_table.get(key)
            if node is None:
                node = object.__new__(cls)
                object.__setattr__(node, "op", op)
                object.__setattr__(node, "name", name)
                object.__setattr__(node, "lhs", lhs)
                object.__setattr__(node, "rhs", rhs)
                _intern_table[key] = node
        return node

    def __setattr__(self, key, value):
        raise AttributeError("Formula is immutable")

    def __reduce__(self):
        return (Formula, (self.op, self.name, self.lhs, self.rhs))

    def __copy__(self) -> "Formula":
        return self

    def __deepcopy__(self, memo) -> "Formula":
        return self

    @property
    def body(self) -> "Formula":
        """Operand of a box or diamond."""
        if self.op not in MODAL:
            raise AttributeError(f"{self.op.name} formula has no body")
        return self.lhs

    @property
    def is_negation(self) -> bool:
        return self.op is Op.IMPLIES and self.rhs is BOT

    def children(self) -> Tuple["Formula", ...]:
        if self.op in BINARY:
            return (self.lhs, self.rhs)
        if self.op in MODAL:
            return (self.lhs,)
        return ()

    def __repr__(self) -> str:
        return f"Formula({render(self)!r})"

    def __str__(self) -> str:
        return render(self)


def atom(name: str) -> Formula:
    if not _ATOM_RE.fullmatch(name):
        raise FormulaSyntaxError(f"invalid atom name {name!r}", 0)
    return Formula(Op.ATOM, name)


def implies(lhs: Formula, rhs: Formula) -> Formula:
    return Formula(Op.IMPLIES, None, lhs, rhs)


def conj(lhs: Formula, rhs: Formula) -> Formula:
    return Formula(Op.AND, None, lhs, rhs)


def disj(lhs: Formula, rhs: Formula) -> Formula:
    return Formula(Op.OR, None, lhs, rhs)


def box(body: Formula) -> Formula:
    return Formula(Op.BOX, None, body)


def dia(body: Formula) -> Formula:
    return Formula(Op.DIA, None, body)


TOP = Formula(Op.TOP)
BOT = Formula(Op.BOT)


def neg(f: Formula) -> Formula:
    """``~f`` is notation for ``f -> F``."""
    return implies(f, BOT)


def make(op: Op, *children: Formula) -> Formula:
    """Rebuild a non-atomic node from its operator and children."""
    if op in BINARY:
        return Formula(op, None, children[0], children[1])
    if op in MODAL:
        return Formula(op, None, children[0])
    if op is Op.TOP:
        return TOP
    if op is Op.BOT:
        return BOT
    raise ValueError(f"cannot rebuild {op.name} from children")


# -- concrete syntax -------------------------------------------------------

_ATOM_RE = re.compile(r"[a-z][a-z0-9_]*")
_TOKEN_RE = re.compile(r"\s*(?:(->)|(\[\])|(<>)|([a-z][a-z0-9_]*)|([TF])|([~&|()]))")


def tokenize(text: str) -> List[Tuple[str, str, int]]:
    """Split text into (kind, value, position) tokens; kind is 'atom', 'const' or 'sym'."""
    tokens: List[Tuple[str, str, int]] = []
    pos = 0
    end = len(text.rstrip())
    while pos < end:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            start = pos
            while start < len(text) and text[start].isspace():
                start += 1
            raise FormulaSyntaxError(f"unexpected character {text[start]!r}", start)
        start = m.start(m.lastindex)
        if m.group(4):
            tokens.append(("atom", m.group(4), start))
        elif m.group(5):
            tokens.append(("const", m.group(5), start))
        else:
            tokens.append(("sym", m.group(m.lastindex), start))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self) -> Optional[Tuple[str, str, int]]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def accept(self, sym: str) -> bool:
        tok = self.peek()
        if tok is not None and tok[0] == "sym" and tok[1] == sym:
            self.i += 1
            return True
        return False

    def position(self) -> int:
        tok = self.peek()
        return tok[2] if tok is not None else len(self.text)

    def parse(self) -> Formula:
        f = self.implication()
        if self.peek() is not None:
            raise FormulaSyntaxError(f"unexpected token {self.peek()[1]!r}", self.position())
        return f

    def implication(self) -> Formula:
        lhs = self.disjunction()
        if self.accept("->"):
            return implies(lhs, self.implication())
        return lhs

    def disjunction(self) -> Formula:
        f = self.conjunction()
        while self.accept("|"):
            f = disj(f, self.conjunction())
        return f

    def conjunction(self) -> Formula:
        f = self.prefix()
        while self.accept("&"):
            f = conj(f, self.prefix())
        return f

    def prefix(self) -> Formula:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("unexpected end of input", len(self.text))
        kind, value, pos = tok
        self.i += 1
        if kind == "atom":
            return Formula(Op.ATOM, value)
        if kind == "const":
            return TOP if value == "T" else BOT
        if value == "~":
            return neg(self.prefix())
        if value == "[]":
            return box(self.prefix())
        if value == "<>":
            return dia(self.prefix())
        if value == "(":
            f = self.implication()
            if not self.accept(")"):
                raise FormulaSyntaxError("expected ')'", self.position())
            return f
        raise FormulaSyntaxError(f"unexpected token {value!r}", pos)


def parse(text: str) -> Formula:
    """Parse the ASCII concrete syntax; raises FormulaSyntaxError with a position."""
    return _Parser(text).parse()


_PRECEDENCE = {Op.IMPLIES: 1, Op.OR: 2, Op.AND: 3, Op.BOX: 4, Op.DIA: 4}


def _precedence(f: Formula) -> int:
    if f.is_negation:
        return 4
    return _PRECEDENCE.get(f.op, 5)


def _wrap(f: Formula, minimum: int) -> str:
    text = render(f)
    return f"({text})" if _precedence(f) < minimum else text


def render(f: Formula) -> str:
    """Print with the fewest parentheses that parse back to the same formula."""
    op = f.op
    if op is Op.ATOM:
        return f.name
    if op is Op.TOP:
        return "T"
    if op is Op.BOT:
        return "F"
    if f.is_negation:
        return "~" + _wrap(f.lhs, 4)
    if op in MODAL:
        return op.value + _wrap(f.lhs, 4)
    if op is Op.IMPLIES:
        return f"{_wrap(f.lhs, 2)} -> {_wrap(f.rhs, 1)}"
    level = _PRECEDENCE[op]
    return f"{_wrap(f.lhs, level)} {op.value} {_wrap(f.rhs, level + 1)}"


# -- measures --------------------------------------------------------------

def length(f: Formula) -> int:
    """Symbol count of the fully parenthesized word: binary connectives add '(', the operator and ')'."""
    if f.op in BINARY:
        return length(f.lhs) + length(f.rhs) + 3
    if f.op in MODAL:
        return 1 + length(f.lhs)
    return 1


def depth(f: Formula) -> int:
    kids = f.children()
    return 1 + max(depth(k) for k in kids) if kids else 0


def atoms(f: Formula) -> List[str]:
    """Sorted names of the atoms occurring in f."""
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if g.op is Op.ATOM:
            seen.add(g.name)
        stack.extend(g.children())
    return sorted(seen)


def atoms_of(formulas: Iterable[Formula]) -> List[str]:
    names = set()
    for f in formulas:
        names.update(atoms(f))
    return sorted(names)


# -- closure sets ----------------------------------------------------------

class ClosureSet:
    """The least closed set containing ``seed``, in breadth-first discovery order.

    Position 0 is the seed. Sets of members are handled as int bitmasks
    over positions.
    """

    def __init__(self, seed: Formula):
        members: List[Formula] = []
        index: Dict[Formula, int] = {}
        queue = [seed]
        while queue:
            nxt = []
            for f in queue:
                if f in index:
                    continue
                index[f] = len(members)
                members.append(f)
                nxt.extend(f.children())
            queue = nxt
        self.seed = seed
        self.members: Tuple[Formula, ...] = tuple(members)
        self.index: Dict[Formula, int] = index

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.members)

    def __contains__(self, f: object) -> bool:
        return f in self.index

    def __getitem__(self, i: int) -> Formula:
        return self.members[i]

    @property
    def width(self) -> int:
        return len(self.members)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.members)) - 1

    def position(self, f: Formula) -> int:
        try:
            return self.index[f]
        except KeyError:
            raise KeyError(f"{render(f)} is not in the closure of {render(self.seed)}") from None

    def mask_of(self, formulas: Iterable[Formula]) -> int:
        mask = 0
        for f in formulas:
            mask |= 1 << self.position(f)
        return mask

    def formulas_of(self, mask: int) -> List[Formula]:
        return [f for i, f in enumerate(self.members) if mask >> i & 1]

    def of_kind(self, op: Op) -> List[Formula]:
        return [f for f in self.members if f.op is op]

    def atoms(self) -> List[str]:
        return sorted(f.name for f in self.members if f.op is Op.ATOM)

    def __repr__(self) -> str:
        return f"ClosureSet({render(self.seed)!r}, size={len(self)})"


def closure(f: Formula) -> ClosureSet:
    return ClosureSet(f)


# -- labels ----------------------------------------------------------------

@dataclass(frozen=True)
class Label:
    """A member of P_A: the sentinel root (``mask is None``) or a set of closure positions."""

    width: int
    mask: Optional[int] = None

    @property
    def is_root(self) -> bool:
        return self.mask is None

    def positions(self) -> List[int]:
        if self.mask is None:
            return []
        return [i for i in range(self.width) if self.mask >> i & 1]

    def __str__(self) -> str:
        if self.mask is None:
            return "-1"
        return "{" + ",".join(str(i) for i in self.positions()) + "}"

    def __lt__(self, other: "Label") -> bool:
        return _order_key(self) < _order_key(other)


def _order_key(label: Label) -> Tuple[int, int]:
    return (-1, 0) if label.mask is None else (0, label.mask)


class LabelPoset:
    """P_A ordered by inclusion with the sentinel at the bottom."""

    def __init__(self, closure: ClosureSet):
        self.closure = closure
        self.width = closure.width

    @property
    def root(self) -> Label:
        return Label(self.width)

    def label(self, mask: int) -> Label:
        if mask < 0 or mask >> self.width:
            raise WidthMismatchError(f"mask {mask:#x} does not fit {self.width} closure positions")
        return Label(self.width, mask)

    def label_of(self, formulas: Iterable[Formula]) -> Label:
        return Label(self.width, self.closure.mask_of(formulas))

    def _check(self, a: Label) -> None:
        if not isinstance(a, Label) or a.width != self.width:
            raise WidthMismatchError(f"label {a} does not match poset width {self.width}")

    def leq(self, a: Label, b: Label) -> bool:
        self._check(a)
        self._check(b)
        if a.mask is None:
            return True
        if b.mask is None:
            return False
        return a.mask & ~b.mask == 0

    def lt(self, a: Label, b: Label) -> bool:
        return self.leq(a, b) and not self.leq(b, a)

    def card(self) -> int:
        return 1 + (1 << self.width)

    def labels(self) -> List[Label]:
        """Sentinel first, then every subset in ascending mask order."""
        return [self.root] + [Label(self.width, m) for m in range(1 << self.width)]

    def encode(self, a: Label) -> bytes:
        self._check(a)
        return str(a).encode("ascii")

    def parse_label(self, text: str) -> Label:
        text = text.strip()
        if text == "-1":
            return self.root
        if not (text.startswith("{") and text.endswith("}")):
            raise ValueError(f"bad label {text!r}")
        inner = text[1:-1].strip()
        mask = 0
        for part in filter(None, (p.strip() for p in inner.split(","))):
            i = int(part)
            if not 0 <= i < self.width:
                raise WidthMismatchError(f"closure position {i} out of range 0..{self.width - 1}")
            mask |= 1 << i
        return Label(self.width, mask)

    def describe(self, a: Label) -> str:
        """Label with the formulas spelled out, for human reports."""
        if a.mask is None:
            return "-1"
        return "{" + ", ".join(render(f) for f in self.closure.formulas_of(a.mask)) + "}"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, LabelPoset) and other.closure.members == self.closure.members

    def __hash__(self) -> int:
        return hash(("LabelPoset", self.closure.seed))


def label_leq(poset: LabelPoset, a: Label, b: Label) -> bool:
    return poset.leq(a, b)


def label_lt(poset: LabelPoset, a: Label, b: Label) -> bool:
    return poset.lt(a, b)


def subformulas(f: Formula) -> Sequence[Formula]:
    return closure(f).members
