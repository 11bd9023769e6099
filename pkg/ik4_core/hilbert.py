"""Axiom schemata, a Hilbert-style proof checker and an intuitionistic propositional prover"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from .errors import FormulaSyntaxError, ProofFileError
from .formula import (
    BINARY,
    BOT,
    MODAL,
    TOP,
    Formula,
    Op,
    atom,
    atoms_of,
    box,
    dia,
    implies,
    make,
    parse,
    render,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schema:
    """An axiom pattern; its atoms are metavariables."""

    name: str
    pattern: Formula
    modal: bool = True

    def __str__(self) -> str:
        return f"{self.name}: {render(self.pattern)}"


def _schema(name: str, text: str, modal: bool = True) -> Schema:
    return Schema(name, parse(text), modal)


MODAL_SCHEMATA: Tuple[Schema, ...] = (
    _schema("CBOX", "[]p & []q -> [](p & q)"),
    _schema("CDIA", "<>(p | q) -> <>p | <>q"),
    _schema("NBOX", "[]T"),
    _schema("NDIA", "~<>F"),
    _schema("4BOX", "[]p -> [][]p"),
    _schema("4DIA", "<><>p -> <>p"),
    _schema("AD", "[](p | q) -> <>p | []q"),
    _schema("AF", "<>(p -> q) -> ([]p -> <>q)"),
)

# a Hilbert basis for IPL; IPL steps are discharged by the prover, so these
# only save writing an IPL citation for the most common shapes
IPL_SCHEMATA: Tuple[Schema, ...] = (
    _schema("K", "p -> q -> p", False),
    _schema("S", "(p -> q -> r) -> (p -> q) -> p -> r", False),
    _schema("AND_E1", "p & q -> p", False),
    _schema("AND_E2", "p & q -> q", False),
    _schema("AND_I", "p -> q -> p & q", False),
    _schema("OR_I1", "p -> p | q", False),
    _schema("OR_I2", "q -> p | q", False),
    _schema("OR_E", "(p -> r) -> (q -> r) -> p | q -> r", False),
    _schema("EFQ", "F -> p", False),
    _schema("TOP", "T", False),
)

SCHEMATA: Dict[str, Schema] = {s.name: s for s in MODAL_SCHEMATA + IPL_SCHEMATA}


def get_schema(name: str) -> Schema:
    try:
        return SCHEMATA[name.upper()]
    except KeyError:
        raise KeyError(f"unknown axiom schema {name!r}") from None


Substitution = Dict[str, Formula]


def substitute(f: Formula, sigma: Mapping[str, Formula]) -> Formula:
    """Replace every atom named in sigma, simultaneously."""
    if f.op is Op.ATOM:
        return sigma.get(f.name, f)
    kids = f.children()
    if not kids:
        return f
    return make(f.op, *(substitute(k, sigma) for k in kids))


def _match(pattern: Formula, f: Formula, sigma: Substitution) -> bool:
    if pattern.op is Op.ATOM:
        bound = sigma.get(pattern.name)
        if bound is None:
            sigma[pattern.name] = f
            return True
        return bound is f
    if pattern.op is not f.op:
        return False
    return all(_match(p, g, sigma) for p, g in zip(pattern.children(), f.children()))


def match_schema(schema: Schema, f: Formula) -> Optional[Substitution]:
    sigma: Substitution = {}
    return sigma if _match(schema.pattern, f, sigma) else None


# -- freezing and the IPL prover -------------------------------------------

def _fresh_names(taken: Iterable[str]) -> Iterable[str]:
    taken = set(taken)
    n = 0
    while True:
        name = f"m{n}"
        n += 1
        if name not in taken:
            yield name


def freeze(formulas: Sequence[Formula]) -> Tuple[List[Formula], Dict[Formula, Formula]]:
    """Replace maximal box/diamond subformulas by fresh atoms, shared across all formulas."""
    names = _fresh_names(atoms_of(formulas))
    table: Dict[Formula, Formula] = {}

    def walk(f: Formula) -> Formula:
        if f.op in MODAL:
            hit = table.get(f)
            if hit is None:
                hit = table[f] = atom(next(names))
            return hit
        kids = f.children()
        if not kids:
            return f
        return make(f.op, *(walk(k) for k in kids))

    return [walk(f) for f in formulas], table


def _opaque(f: Formula) -> bool:
    return f.op is Op.ATOM or f.op in MODAL


class _Prover:
    """Contraction-free backward search (G4ip): invertible rules first, then the choices."""

    def __init__(self):
        self.memo: Dict[Tuple[FrozenSet[Formula], Formula], bool] = {}

    def prove(self, gamma: FrozenSet[Formula], goal: Formula) -> bool:
        key = (gamma, goal)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.memo[key] = False
        result = self._prove(gamma, goal)
        self.memo[key] = result
        return result

    def _prove(self, gamma: FrozenSet[Formula], goal: Formula) -> bool:
        if BOT in gamma or goal is TOP or goal in gamma:
            return True
        # invertible left rules
        for f in gamma:
            rest = gamma - {f}
            if f is TOP:
                return self.prove(rest, goal)
            if f.op is Op.AND:
                return self.prove(rest | {f.lhs, f.rhs}, goal)
            if f.op is Op.OR:
                return self.prove(rest | {f.lhs}, goal) and self.prove(rest | {f.rhs}, goal)
            if f.op is Op.IMPLIES:
                a, c = f.lhs, f.rhs
                if a is TOP:
                    return self.prove(rest | {c}, goal)
                if a is BOT:
                    return self.prove(rest, goal)
                if _opaque(a) and a in rest:
                    return self.prove(rest | {c}, goal)
                if a.op is Op.AND:
                    return self.prove(rest | {implies(a.lhs, implies(a.rhs, c))}, goal)
                if a.op is Op.OR:
                    return self.prove(rest | {implies(a.lhs, c), implies(a.rhs, c)}, goal)
        # invertible right rules
        if goal.op is Op.AND:
            return self.prove(gamma, goal.lhs) and self.prove(gamma, goal.rhs)
        if goal.op is Op.IMPLIES:
            return self.prove(gamma | {goal.lhs}, goal.rhs)
        # choices
        if goal.op is Op.OR:
            if self.prove(gamma, goal.lhs) or self.prove(gamma, goal.rhs):
                return True
        for f in gamma:
            if f.op is Op.IMPLIES and f.lhs.op is Op.IMPLIES:
                (b, d), c = (f.lhs.lhs, f.lhs.rhs), f.rhs
                rest = gamma - {f}
                if self.prove(rest | {implies(d, c)}, implies(b, d)) and self.prove(rest | {c}, goal):
                    return True
        return False


def ipl_valid(f: Formula) -> bool:
    """Intuitionistic propositional validity; box and diamond subformulas count as atoms."""
    return _Prover().prove(frozenset(), f)


def ipl_entails(premises: Sequence[Formula], goal: Formula) -> bool:
    frozen, _ = freeze(list(premises) + [goal])
    return _Prover().prove(frozenset(frozen[:-1]), frozen[-1])


# -- proofs ----------------------------------------------------------------

@dataclass(frozen=True)
class AxiomInstance:
    schema: str
    substitution: Optional[Tuple[Tuple[str, Formula], ...]] = None


@dataclass(frozen=True)
class ModusPonens:
    minor: int
    major: int


@dataclass(frozen=True)
class RuleBox:
    premise: int


@dataclass(frozen=True)
class RuleDia:
    premise: int


@dataclass(frozen=True)
class Subst:
    premise: int
    substitution: Tuple[Tuple[str, Formula], ...]


@dataclass(frozen=True)
class IPLStep:
    cited: Tuple[int, ...] = ()


@dataclass(frozen=True)
class Hypothesis:
    pass


Justification = Union[AxiomInstance, ModusPonens, RuleBox, RuleDia, Subst, IPLStep, Hypothesis]


def cited_lines(j: Justification) -> Tuple[int, ...]:
    if isinstance(j, ModusPonens):
        return (j.minor, j.major)
    if isinstance(j, (RuleBox, RuleDia, Subst)):
        return (j.premise,)
    if isinstance(j, IPLStep):
        return j.cited
    return ()


@dataclass(frozen=True)
class ProofLine:
    number: int
    formula: Formula
    justification: Justification


@dataclass(frozen=True)
class Proof:
    lines: Tuple[ProofLine, ...]

    def __len__(self) -> int:
        return len(self.lines)

    def prefix(self, n: int) -> "Proof":
        return Proof(self.lines[:n])

    def replace(self, number: int, formula: Formula) -> "Proof":
        lines = list(self.lines)
        old = lines[number - 1]
        lines[number - 1] = ProofLine(old.number, formula, old.justification)
        return Proof(tuple(lines))

    @property
    def conclusion(self) -> Optional[Formula]:
        return self.lines[-1].formula if self.lines else None


@dataclass(frozen=True)
class ProofReport:
    ok: bool
    first_bad_line: Optional[int] = None
    reason: Optional[str] = None
    uses_hypotheses: bool = False
    checked: int = 0

    def __bool__(self) -> bool:
        return self.ok


def _rule_shape(premise: Formula, current: Formula, op: Op) -> bool:
    if premise.op is not Op.IMPLIES or current.op is not Op.IMPLIES:
        return False
    wrap = box if op is Op.BOX else dia
    return current.lhs is wrap(premise.lhs) and current.rhs is wrap(premise.rhs)


def _check_line(line: ProofLine, formulas: Dict[int, Formula], dependent: Dict[int, bool]) -> Optional[str]:
    j = line.justification
    f = line.formula
    if isinstance(j, Hypothesis):
        return None
    if isinstance(j, AxiomInstance):
        schema = get_schema(j.schema)
        if j.substitution is not None:
            if substitute(schema.pattern, dict(j.substitution)) is not f:
                return f"not the {schema.name} instance given by the substitution"
            return None
        if match_schema(schema, f) is None:
            return f"not an instance of {schema.name}"
        return None
    if isinstance(j, ModusPonens):
        if formulas[j.major] is not implies(formulas[j.minor], f):
            return f"line {j.major} is not line {j.minor} -> this line"
        return None
    if isinstance(j, RuleBox):
        if not _rule_shape(formulas[j.premise], f, Op.BOX):
            return f"not []A -> []B for line {j.premise} = A -> B"
        return None
    if isinstance(j, RuleDia):
        if not _rule_shape(formulas[j.premise], f, Op.DIA):
            return f"not <>A -> <>B for line {j.premise} = A -> B"
        return None
    if isinstance(j, Subst):
        if dependent[j.premise]:
            return f"substitution into line {j.premise}, which depends on a hypothesis"
        if substitute(formulas[j.premise], dict(j.substitution)) is not f:
            return f"not a substitution instance of line {j.premise}"
        return None
    if not ipl_entails([formulas[c] for c in j.cited], f):
        cited = ",".join(str(c) for c in j.cited) or "nothing"
        return f"does not follow intuitionistically from {cited}"
    return None


def check_proof(proof: Proof) -> ProofReport:
    """Check each line in order; stops at the first line whose justification fails."""
    formulas: Dict[int, Formula] = {}
    dependent: Dict[int, bool] = {}
    numbers = {line.number for line in proof.lines}
    for line in proof.lines:
        for c in cited_lines(line.justification):
            if c not in numbers:
                raise ProofFileError(f"cites line {c}, which does not exist", line.number)
        late = [c for c in cited_lines(line.justification) if c >= line.number]
        if late:
            return ProofReport(False, line.number, f"cites line {late[0]}, which does not precede it",
                               any(dependent.values()), len(formulas))
        try:
            reason = _check_line(line, formulas, dependent)
        except KeyError as e:
            reason = str(e.args[0]) if e.args else "unknown reference"
        if reason is not None:
            logger.info(f"proof line {line.number} rejected: {reason}")
            return ProofReport(False, line.number, reason, any(dependent.values()), len(formulas))
        formulas[line.number] = line.formula
        dependent[line.number] = isinstance(line.justification, Hypothesis) or any(
            dependent[c] for c in cited_lines(line.justification))
    return ProofReport(True, None, None, any(dependent.values()), len(formulas))


# -- proof file format -----------------------------------------------------

_LINE_RE = re.compile(r"^\s*(\d+)\s*\.\s*(.*?)\s*;\s*(.*?)\s*$")


def _substitution(text: str, lineno: int) -> Tuple[Tuple[str, Formula], ...]:
    pairs = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        name, eq, body = part.partition("=")
        if not eq:
            raise ProofFileError(f"expected name=formula in substitution, got {part!r}", lineno)
        try:
            pairs.append((atom(name.strip()).name, parse(body)))
        except FormulaSyntaxError as e:
            raise ProofFileError(f"bad formula in substitution: {e}", lineno) from None
    return tuple(pairs)


def _numbers(text: str, lineno: int) -> Tuple[int, ...]:
    try:
        return tuple(int(p) for p in re.split(r"[\s,]+", text.strip()) if p)
    except ValueError:
        raise ProofFileError(f"expected line numbers, got {text!r}", lineno) from None


def _justification(text: str, lineno: int) -> Justification:
    head, _, rest = text.strip().partition(" ")
    head = head.upper()
    rest = rest.strip()
    if head == "HYP":
        return Hypothesis()
    if head == "AX":
        m = re.fullmatch(r"(\S+)(?:\s*\[\s*sub\s+(.*)\])?", rest)
        if m is None:
            raise ProofFileError(f"bad axiom justification {text!r}", lineno)
        try:
            get_schema(m.group(1))
        except KeyError as e:
            raise ProofFileError(str(e.args[0]), lineno) from None
        sub = _substitution(m.group(2), lineno) if m.group(2) is not None else None
        return AxiomInstance(m.group(1).upper(), sub)
    if head == "MP":
        nums = _numbers(rest, lineno)
        if len(nums) != 2:
            raise ProofFileError("MP cites exactly two lines", lineno)
        return ModusPonens(*nums)
    if head in ("RBOX", "RDIA"):
        nums = _numbers(rest, lineno)
        if len(nums) != 1:
            raise ProofFileError(f"{head} cites exactly one line", lineno)
        return RuleBox(nums[0]) if head == "RBOX" else RuleDia(nums[0])
    if head == "SUBST":
        first, _, sub = rest.partition(" ")
        nums = _numbers(first, lineno)
        if len(nums) != 1:
            raise ProofFileError("SUBST cites exactly one line", lineno)
        return Subst(nums[0], _substitution(sub, lineno))
    if head == "IPL":
        return IPLStep(_numbers(rest, lineno))
    raise ProofFileError(f"unknown justification {head!r}", lineno)


def parse_proof(text: str) -> Proof:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("#"):
            continue
        m = _LINE_RE.match(raw)
        if m is None:
            raise ProofFileError("expected 'n. <formula> ; <justification>'", lineno)
        number = int(m.group(1))
        if number != len(lines) + 1:
            raise ProofFileError(f"line number {number} out of sequence, expected {len(lines) + 1}", lineno)
        try:
            formula = parse(m.group(2))
        except FormulaSyntaxError as e:
            raise ProofFileError(str(e), lineno) from None
        lines.append(ProofLine(number, formula, _justification(m.group(3), lineno)))
    if not lines:
        raise ProofFileError("empty proof")
    return Proof(tuple(lines))


def _render_sub(sub: Sequence[Tuple[str, Formula]]) -> str:
    return ",".join(f"{name}={render(f)}" for name, f in sub)


def render_justification(j: Justification) -> str:
    if isinstance(j, Hypothesis):
        return "HYP"
    if isinstance(j, AxiomInstance):
        return f"AX {j.schema}" + (f" [sub {_render_sub(j.substitution)}]" if j.substitution else "")
    if isinstance(j, ModusPonens):
        return f"MP {j.minor} {j.major}"
    if isinstance(j, RuleBox):
        return f"RBOX {j.premise}"
    if isinstance(j, RuleDia):
        return f"RDIA {j.premise}"
    if isinstance(j, Subst):
        return f"SUBST {j.premise} {_render_sub(j.substitution)}"
    return "IPL" + (" " + ",".join(str(c) for c in j.cited) if j.cited else "")


def render_proof(proof: Proof) -> str:
    return "".join(f"{line.number}. {render(line.formula)} ; {render_justification(line.justification)}\n"
                   for line in proof.lines)
