"""World oracles: the existence queries of the saturation procedure, answered by a finite model"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Protocol, Sequence

import numpy as np

from .errors import InvariantViolation, OracleContractError
from .formula import ClosureSet, Formula, Label, LabelPoset, Op, closure, render
from .semantics import (
    IK4_CONDITIONS,
    Model,
    SemanticsVariant,
    check_frame_condition,
    check_heredity,
    extension,
)

logger = logging.getLogger(__name__)


class WitnessKind(Enum):
    BOX_REFUTER = "box-refuter"
    DIA_SUPPORTER = "dia-supporter"
    DOWNWARD = "dc"
    FORWARD = "fc"


class WorldOracle(Protocol):
    closure: ClosureSet
    poset: LabelPoset

    def worlds(self) -> Sequence[int]: ...

    def forces(self, s: int, f: Formula) -> bool: ...

    def trace(self, s: int) -> Label: ...

    def leq(self, s: int, t: int) -> bool: ...

    def related(self, s: int, t: int) -> bool: ...

    def maximal_extension(self, s: int, f: Formula) -> Optional[int]: ...

    def successor_witness(self, s: int, kind: WitnessKind, arg) -> Optional[int]: ...


@dataclass(frozen=True)
class BowtieViolation:
    source: int
    target: int
    formula: Formula

    def __str__(self) -> str:
        return f"{self.source} R {self.target} breaks the accessibility condition on {render(self.formula)}"


class FiniteModelOracle:
    """A finite transitive, downward and forward confluent model standing in for the canonical one.

    Truth of every member of the closure is computed once at construction;
    traces are bitmasks over closure positions.
    """

    def __init__(self, model: Model, closure: ClosureSet):
        for cond in IK4_CONDITIONS:
            check = check_frame_condition(model.frame, cond)
            if not check:
                raise OracleContractError(
                    f"oracle model is not {cond.value}: witness {check.witness}")
        violations = check_heredity(model, closure.members)
        if violations:
            raise OracleContractError(f"oracle model breaks heredity: {violations[0]}")
        self.model = model
        self.closure = closure
        self.poset = LabelPoset(closure)
        self.size = model.size
        cache: Dict[Formula, np.ndarray] = {}
        self._truth = {f: extension(model, f, SemanticsVariant.BD, cache) for f in closure.members}
        self._traces = []
        for s in range(self.size):
            mask = 0
            for i, f in enumerate(closure.members):
                if self._truth[f][s]:
                    mask |= 1 << i
            self._traces.append(mask)
        self._leq = model.frame.leq
        self._lt = model.frame.lt
        self._rel = model.frame.rel
        logger.debug(f"oracle over {self.size} worlds, closure of size {len(closure)}")

    def worlds(self) -> range:
        return range(self.size)

    def _world(self, s: int) -> int:
        self.model.frame.check_world(s)
        return s

    def _column(self, f: Formula) -> np.ndarray:
        try:
            return self._truth[f]
        except KeyError:
            raise OracleContractError(f"{render(f)} is outside the closure set") from None

    def forces(self, s: int, f: Formula) -> bool:
        return bool(self._column(f)[self._world(s)])

    def trace_mask(self, s: int) -> int:
        return self._traces[self._world(s)]

    def trace(self, s: int) -> Label:
        return self.poset.label(self.trace_mask(s))

    def leq(self, s: int, t: int) -> bool:
        return bool(self._leq[s, t])

    def lt(self, s: int, t: int) -> bool:
        return bool(self._lt[s, t])

    def related(self, s: int, t: int) -> bool:
        return bool(self._rel[s, t])

    def is_maximal(self, s: int, f: Formula) -> bool:
        """Every strict <=-successor of s forces f."""
        col = self._column(f)
        return not bool((self._lt[self._world(s)] & ~col).any())

    def degree(self, s: int) -> int:
        return sum(1 for f in self.closure.members if not self.forces(s, f) and not self.is_maximal(s, f))

    def maximal_extension(self, s: int, f: Formula) -> Optional[int]:
        """A <-maximal world among the strict successors of s refuting f, least id first."""
        col = self._column(f)
        candidates = np.flatnonzero(self._lt[self._world(s)] & ~col)
        for t in candidates:
            if not (self._lt[t] & ~col).any():
                return int(t)
        if len(candidates):
            raise InvariantViolation(f"no maximal refuter of {render(f)} above world {s}")
        return None

    def successor_witness(self, s: int, kind: WitnessKind, arg) -> Optional[int]:
        """Least R-successor of s answering the query, or None when none exists.

        ``arg`` is a formula B for the modal kinds and a world u for the
        confluence kinds. Confluence queries require their triggering
        configuration: s <= t R u (dc) or t <= s with t R u (fc).
        """
        s = self._world(s)
        succ = self._rel[s]
        if kind is WitnessKind.BOX_REFUTER:
            hits = succ & ~self._column(arg)
        elif kind is WitnessKind.DIA_SUPPORTER:
            hits = succ & self._column(arg)
        elif kind is WitnessKind.DOWNWARD:
            u = self._world(arg)
            if not (self._leq[s] & self._rel[:, u]).any():
                raise OracleContractError(f"no t with {s} <= t and t R {u}: not a downward confluence query")
            hits = succ & self._leq[:, u]
        else:
            u = self._world(arg)
            if not (self._leq[:, s] & self._rel[:, u]).any():
                raise OracleContractError(f"no t with t <= {s} and t R {u}: not a forward confluence query")
            hits = succ & self._leq[u]
        found = np.flatnonzero(hits)
        if len(found):
            return int(found[0])
        if kind in (WitnessKind.DOWNWARD, WitnessKind.FORWARD):
            raise InvariantViolation(f"{kind.value} witness missing for world {s} and {arg}")
        return None

    def bowtie_violations(self) -> List[BowtieViolation]:
        """Pairs s R t whose traces break: box B at s gives B at t, B at t gives dia B at s."""
        found = []
        boxes = self.closure.of_kind(Op.BOX)
        dias = self.closure.of_kind(Op.DIA)
        for s, t in np.argwhere(self._rel):
            s, t = int(s), int(t)
            for f in boxes:
                if self.forces(s, f) and not self.forces(t, f.body):
                    found.append(BowtieViolation(s, t, f))
            for f in dias:
                if self.forces(t, f.body) and not self.forces(s, f):
                    found.append(BowtieViolation(s, t, f))
        return found

    def refuting_worlds(self, f: Formula) -> List[int]:
        return [int(s) for s in np.flatnonzero(~self._column(f))]


def oracle_for(model: Model, seed: Formula) -> FiniteModelOracle:
    return FiniteModelOracle(model, closure(seed))
