"""Finite birelational frames and models, satisfaction and the model file format"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import FormulaSyntaxError, ModelFileError, ValuationError, WorldRangeError
from .formula import Formula, Op, atom, atoms, render

logger = logging.getLogger(__name__)


class ClosureMode(Enum):
    TRANSITIVE = "transitive"
    REFLEXIVE_TRANSITIVE = "reflexive-transitive"


class FrameCondition(Enum):
    TRANSITIVE = "transitive"
    UPWARD = "upward"
    DOWNWARD = "downward"
    FORWARD = "forward"


class SemanticsVariant(Enum):
    BD = "BD"
    FS = "FS"
    P = "P"
    W = "W"


def as_relation(rel, size: Optional[int] = None) -> np.ndarray:
    """Square boolean matrix from an array-like or from an iterable of pairs."""
    if isinstance(rel, np.ndarray):
        out = rel.astype(bool, copy=True)
    elif size is not None:
        out = np.zeros((size, size), dtype=bool)
        for i, j in rel:
            out[i, j] = True
    else:
        out = np.array(rel, dtype=bool)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ValueError(f"relation must be a square matrix, got shape {out.shape}")
    return out


def relation_closure(rel, mode: ClosureMode = ClosureMode.TRANSITIVE) -> np.ndarray:
    """R+ (or R* with ``REFLEXIVE_TRANSITIVE``) by Warshall's algorithm."""
    out = as_relation(rel)
    for k in range(out.shape[0]):
        out |= np.outer(out[:, k], out[k, :])
    if mode is ClosureMode.REFLEXIVE_TRANSITIVE:
        np.fill_diagonal(out, True)
    return out


def compose(r: np.ndarray, s: np.ndarray) -> np.ndarray:
    """x (R o S) z iff some y has x R y and y S z."""
    return (r.astype(np.uint8) @ s.astype(np.uint8)) > 0


def converse(r: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(r.T)


def pairs(rel: np.ndarray) -> List[Tuple[int, int]]:
    return [(int(i), int(j)) for i, j in np.argwhere(rel)]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=bool)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Frame:
    """(W, <=, R) over worlds 0..size-1; ``leq`` is stored reflexively-transitively closed."""

    size: int
    leq: np.ndarray
    rel: np.ndarray

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("a frame needs at least one world")
        leq = as_relation(self.leq)
        rel = as_relation(self.rel)
        if leq.shape != (self.size, self.size) or rel.shape != (self.size, self.size):
            raise ValueError(f"relations must be {self.size}x{self.size}")
        if not leq.diagonal().all():
            raise ValueError("<= is not reflexive")
        if (compose(leq, leq) & ~leq).any():
            raise ValueError("<= is not transitive")
        object.__setattr__(self, "leq", _frozen(leq))
        object.__setattr__(self, "rel", _frozen(rel))

    @classmethod
    def from_generators(cls, size: int, le: Iterable[Tuple[int, int]] = (),
                        r: Iterable[Tuple[int, int]] = ()) -> "Frame":
        gen = as_relation(list(le), size)
        return cls(size, relation_closure(gen, ClosureMode.REFLEXIVE_TRANSITIVE), as_relation(list(r), size))

    def key(self) -> Tuple[int, Tuple[bool, ...], Tuple[bool, ...]]:
        """Size first, then the row-major bits of <= and R: the enumeration order."""
        return (self.size, tuple(bool(x) for x in self.leq.flat), tuple(bool(x) for x in self.rel.flat))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Frame) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __repr__(self) -> str:
        return f"Frame(size={self.size}, le={pairs(self.leq)}, r={pairs(self.rel)})"

    @property
    def geq(self) -> np.ndarray:
        return converse(self.leq)

    @property
    def lt(self) -> np.ndarray:
        """Strict part: s < t iff s <= t and not t <= s."""
        return self.leq & ~self.leq.T

    def check_world(self, w: int) -> None:
        if not 0 <= w < self.size:
            raise WorldRangeError(f"world {w} out of range 0..{self.size - 1}")

    def successors(self, w: int) -> List[int]:
        return [int(t) for t in np.flatnonzero(self.rel[w])]

    def is_upset(self, worlds: Iterable[int]) -> bool:
        vec = np.zeros(self.size, dtype=bool)
        vec[list(worlds)] = True
        return not (self.leq[vec] & ~vec).any()


@dataclass(frozen=True)
class ConditionCheck:
    """Outcome of a frame-condition check; ``witness`` is the least failing (s, t, u)."""

    condition: FrameCondition
    holds: bool
    witness: Optional[Tuple[int, int, int]] = None

    def __bool__(self) -> bool:
        return self.holds


def _failures(frame: Frame, cond: FrameCondition) -> np.ndarray:
    leq, r = frame.leq, frame.rel
    if cond is FrameCondition.TRANSITIVE:
        # s R t, t R u, not s R u
        return r[:, :, None] & r[None, :, :] & ~r[:, None, :]
    if cond is FrameCondition.UPWARD:
        # s R t, u <= t, no v with v <= s and v R u
        ok = compose(converse(leq), r)
        return r[:, :, None] & leq.T[None, :, :] & ~ok[:, None, :]
    if cond is FrameCondition.DOWNWARD:
        # s <= t, t R u, no v with s R v and v <= u
        ok = compose(r, leq)
        return leq[:, :, None] & r[None, :, :] & ~ok[:, None, :]
    # t <= s, t R u, no v with s R v and u <= v
    ok = compose(r, converse(leq))
    return leq.T[:, :, None] & r[None, :, :] & ~ok[:, None, :]


def check_frame_condition(frame: Frame, cond: FrameCondition) -> ConditionCheck:
    bad = np.argwhere(_failures(frame, cond))
    if len(bad) == 0:
        return ConditionCheck(cond, True)
    s, t, u = (int(x) for x in bad[0])
    return ConditionCheck(cond, False, (s, t, u))


def frame_satisfies(frame: Frame, conditions: Iterable[FrameCondition]) -> bool:
    return all(not _failures(frame, c).any() for c in conditions)


IK4_CONDITIONS = (FrameCondition.TRANSITIVE, FrameCondition.DOWNWARD, FrameCondition.FORWARD)


class Valuation(Mapping[str, frozenset]):
    """Atom name -> set of worlds; atoms not listed are false everywhere."""

    def __init__(self, assignment: Optional[Mapping[str, Iterable[int]]] = None):
        self._assignment: Dict[str, frozenset] = {
            name: frozenset(int(w) for w in worlds) for name, worlds in (assignment or {}).items()
        }

    def __getitem__(self, name: str) -> frozenset:
        return self._assignment[name]

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._assignment))

    def __len__(self) -> int:
        return len(self._assignment)

    def worlds(self, name: str) -> frozenset:
        return self._assignment.get(name, frozenset())

    def restrict(self, names: Iterable[str]) -> "Valuation":
        return Valuation({n: self.worlds(n) for n in names})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Valuation):
            return NotImplemented
        return {k: v for k, v in self._assignment.items() if v} == \
            {k: v for k, v in other._assignment.items() if v}

    def __hash__(self) -> int:
        return hash(frozenset((k, v) for k, v in self._assignment.items() if v))

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {sorted(v)}" for k, v in sorted(self._assignment.items()))
        return f"Valuation({{{body}}})"


@dataclass(frozen=True)
class Model:
    frame: Frame
    valuation: Valuation = field(default_factory=Valuation)

    def __post_init__(self):
        for name in self.valuation:
            worlds = self.valuation[name]
            bad = [w for w in worlds if not 0 <= w < self.frame.size]
            if bad:
                raise ValuationError(f"V({name}) mentions worlds {sorted(bad)} outside 0..{self.frame.size - 1}")
            if not self.frame.is_upset(worlds):
                raise ValuationError(f"V({name}) = {sorted(worlds)} is not <=-closed")

    @property
    def size(self) -> int:
        return self.frame.size


def _atom_vector(model: Model, name: str) -> np.ndarray:
    vec = np.zeros(model.size, dtype=bool)
    worlds = model.valuation.worlds(name)
    if worlds:
        vec[list(worlds)] = True
    return vec


def _all_successors(rel: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """s |-> every rel-successor of s is in vec."""
    return ~np.any(rel & ~vec[None, :], axis=1)


def _some_successor(rel: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return np.any(rel & vec[None, :], axis=1)


def extension(model: Model, f: Formula, variant: SemanticsVariant = SemanticsVariant.BD,
              cache: Optional[Dict[Formula, np.ndarray]] = None) -> np.ndarray:
    """Truth set of f as a boolean vector over worlds."""
    if cache is None:
        cache = {}
    hit = cache.get(f)
    if hit is not None:
        return hit
    leq, r = model.frame.leq, model.frame.rel
    op = f.op
    if op is Op.ATOM:
        out = _atom_vector(model, f.name)
    elif op is Op.TOP:
        out = np.ones(model.size, dtype=bool)
    elif op is Op.BOT:
        out = np.zeros(model.size, dtype=bool)
    elif op is Op.AND:
        out = extension(model, f.lhs, variant, cache) & extension(model, f.rhs, variant, cache)
    elif op is Op.OR:
        out = extension(model, f.lhs, variant, cache) | extension(model, f.rhs, variant, cache)
    elif op is Op.IMPLIES:
        a = extension(model, f.lhs, variant, cache)
        b = extension(model, f.rhs, variant, cache)
        out = _all_successors(leq, ~a | b)
    elif op is Op.BOX:
        body = extension(model, f.lhs, variant, cache)
        out = _all_successors(r, body)
        if variant is not SemanticsVariant.BD:
            out = _all_successors(leq, out)
    else:
        body = extension(model, f.lhs, variant, cache)
        out = _some_successor(r, body)
        if variant is SemanticsVariant.P:
            out = _some_successor(leq.T, out)
        elif variant is SemanticsVariant.W:
            out = _all_successors(leq, out)
    out.setflags(write=False)
    cache[f] = out
    return out


def forces(model: Model, world: int, f: Formula, variant: SemanticsVariant = SemanticsVariant.BD) -> bool:
    model.frame.check_world(world)
    return bool(extension(model, f, variant)[world])


def true_in_model(model: Model, f: Formula, variant: SemanticsVariant = SemanticsVariant.BD) -> bool:
    return bool(extension(model, f, variant).all())


def upsets(frame: Frame) -> List[frozenset]:
    """All <=-closed subsets of W, ascending by bitmask."""
    out = []
    for mask in range(1 << frame.size):
        worlds = [w for w in range(frame.size) if mask >> w & 1]
        if frame.is_upset(worlds):
            out.append(frozenset(worlds))
    return out


@dataclass(frozen=True)
class FrameValidity:
    valid: bool
    valuation: Optional[Valuation] = None
    world: Optional[int] = None

    def __bool__(self) -> bool:
        return self.valid


def valid_in_frame(frame: Frame, f: Formula, variant: SemanticsVariant = SemanticsVariant.BD) -> FrameValidity:
    """Validity over every valuation of the atoms of f.

    Satisfaction of f depends only on the atoms occurring in f, so the
    other atoms can stay empty.
    """
    names = atoms(f)
    choices = upsets(frame)
    for combo in itertools.product(choices, repeat=len(names)):
        model = Model(frame, Valuation(dict(zip(names, combo))))
        truth = extension(model, f, variant)
        if not truth.all():
            return FrameValidity(False, model.valuation, int(np.flatnonzero(~truth)[0]))
    return FrameValidity(True)


@dataclass(frozen=True)
class HeredityViolation:
    formula: Formula
    lower: int
    upper: int

    def __str__(self) -> str:
        return f"{render(self.formula)}: {self.lower} <= {self.upper}, forced at {self.lower} only"


def check_heredity(model: Model, pool: Iterable[Formula]) -> List[HeredityViolation]:
    violations = []
    cache: Dict[Formula, np.ndarray] = {}
    leq = model.frame.leq
    for f in pool:
        truth = extension(model, f, SemanticsVariant.BD, cache)
        for s, t in np.argwhere(leq & truth[:, None] & ~truth[None, :]):
            violations.append(HeredityViolation(f, int(s), int(t)))
    return violations


# -- model file format -----------------------------------------------------

def _ints(parts: Sequence[str], lineno: int) -> List[int]:
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ModelFileError(f"expected integers, got {' '.join(parts)!r}", lineno) from None


def load_model(text: str) -> Model:
    """Parse ``worlds N`` / ``le i j`` / ``r i j`` / ``val p i ...`` lines; '#' starts a comment."""
    size: Optional[int] = None
    le: List[Tuple[int, int]] = []
    r: List[Tuple[int, int]] = []
    vals: Dict[str, List[int]] = {}
    val_lines: Dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "worlds":
            if size is not None:
                raise ModelFileError("duplicate 'worlds' line", lineno)
            nums = _ints(rest, lineno)
            if len(nums) != 1 or nums[0] < 1:
                raise ModelFileError("'worlds' takes one positive integer", lineno)
            size = nums[0]
            continue
        if size is None:
            raise ModelFileError(f"'{head}' before the 'worlds' line", lineno)
        if head in ("le", "r"):
            nums = _ints(rest, lineno)
            if len(nums) != 2:
                raise ModelFileError(f"'{head}' takes two worlds", lineno)
            for w in nums:
                if not 0 <= w < size:
                    raise ModelFileError(f"world {w} out of range 0..{size - 1}", lineno)
            (le if head == "le" else r).append((nums[0], nums[1]))
        elif head == "val":
            if not rest:
                raise ModelFileError("'val' needs an atom name", lineno)
            name, nums = rest[0], _ints(rest[1:], lineno)
            try:
                atom(name)
            except FormulaSyntaxError:
                raise ModelFileError(f"invalid atom name {name!r}", lineno) from None
            for w in nums:
                if not 0 <= w < size:
                    raise ModelFileError(f"world {w} out of range 0..{size - 1}", lineno)
            vals.setdefault(name, []).extend(nums)
            val_lines.setdefault(name, lineno)
        else:
            raise ModelFileError(f"unknown directive {head!r}", lineno)
    if size is None:
        raise ModelFileError("missing 'worlds' line")
    frame = Frame.from_generators(size, le, r)
    for name, worlds in vals.items():
        if not frame.is_upset(worlds):
            raise ModelFileError(f"V({name}) = {sorted(set(worlds))} is not <=-closed", val_lines[name])
    return Model(frame, Valuation(vals))


def dump_model(model: Model, names: Optional[Iterable[str]] = None) -> str:
    """Inverse of load_model: every non-reflexive <= pair, every R pair, one val line per atom."""
    frame = model.frame
    lines = [f"worlds {frame.size}"]
    lines += [f"le {i} {j}" for i, j in pairs(frame.leq) if i != j]
    lines += [f"r {i} {j}" for i, j in pairs(frame.rel)]
    for name in (sorted(names) if names is not None else list(model.valuation)):
        worlds = sorted(model.valuation.worlds(name))
        lines.append(" ".join(["val", name] + [str(w) for w in worlds]))
    return "\n".join(lines) + "\n"
