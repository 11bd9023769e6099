"""Clips: tips related by << and |>, their defects and repairs, saturation and the loop-back model.

A tip (i, s, alpha, X) pairs a node id with an oracle world, a rank alpha
(|>-depth) and a height X (<<-depth). Saturation repairs defects rank by
rank until the family of slices 1..alpha turns dreary, then closes the
last slice back onto an earlier one to obtain a finite model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import BudgetExceeded, InvariantViolation, OracleContractError
from .formula import Formula, Label, Op, render
from .ltree import LabelledTree, equivalent_sim, is_dreary
from .oracle import FiniteModelOracle, WitnessKind
from .semantics import (
    IK4_CONDITIONS,
    ClosureMode,
    Frame,
    Model,
    Valuation,
    as_relation,
    check_frame_condition,
    extension,
    relation_closure,
)

logger = logging.getLogger(__name__)

SENTINEL = -1
DEFAULT_REPAIR_BUDGET = 100_000


@dataclass(frozen=True)
class Tip:
    id: int
    world: int
    rank: int
    height: int

    def __str__(self) -> str:
        return f"({self.id},{self.world},{self.rank},{self.height})"


class Clip:
    """Mutable saturation state (T, <<, |>) over a world oracle."""

    def __init__(self, oracle: FiniteModelOracle):
        self.oracle = oracle
        self.tips: Dict[int, Tip] = {}
        self.lt: Set[Tuple[int, int]] = set()
        self.tri: Set[Tuple[int, int]] = set()
        self.fresh = 0
        self._lt_succ: Dict[int, List[int]] = {}
        self._lt_pred: Dict[int, List[int]] = {}
        self._tri_succ: Dict[int, List[int]] = {}
        self._tri_pred: Dict[int, List[int]] = {}

    def copy(self) -> "Clip":
        other = Clip(self.oracle)
        other.tips = dict(self.tips)
        other.lt = set(self.lt)
        other.tri = set(self.tri)
        other.fresh = self.fresh
        for name in ("_lt_succ", "_lt_pred", "_tri_succ", "_tri_pred"):
            setattr(other, name, {k: list(v) for k, v in getattr(self, name).items()})
        return other

    def add_tip(self, world: int, rank: int, height: int) -> Tip:
        tip = Tip(self.fresh, world, rank, height)
        self.fresh += 1
        self.tips[tip.id] = tip
        for index in (self._lt_succ, self._lt_pred, self._tri_succ, self._tri_pred):
            index[tip.id] = []
        return tip

    def add_lt(self, a: int, b: int) -> None:
        if (a, b) not in self.lt:
            self.lt.add((a, b))
            self._lt_succ[a].append(b)
            self._lt_pred[b].append(a)

    def add_tri(self, a: int, b: int) -> None:
        if (a, b) not in self.tri:
            self.tri.add((a, b))
            self._tri_succ[a].append(b)
            self._tri_pred[b].append(a)

    def lt_successors(self, i: int) -> List[int]:
        return sorted(self._lt_succ[i])

    def lt_predecessors(self, i: int) -> List[int]:
        return sorted(self._lt_pred[i])

    def tri_successors(self, i: int) -> List[int]:
        return sorted(self._tri_succ[i])

    def tri_predecessors(self, i: int) -> List[int]:
        return sorted(self._tri_pred[i])

    def ids(self) -> List[int]:
        return sorted(self.tips)

    def of_rank(self, rank: int) -> List[Tip]:
        return [self.tips[i] for i in self.ids() if self.tips[i].rank == rank]

    def max_height(self, rank: Optional[int] = None) -> int:
        heights = [t.height for t in self.tips.values() if rank is None or t.rank == rank]
        return max(heights) if heights else -1

    def max_rank(self) -> int:
        return max(t.rank for t in self.tips.values())

    def rank_sizes(self) -> Dict[int, int]:
        sizes: Dict[int, int] = {}
        for t in self.tips.values():
            sizes[t.rank] = sizes.get(t.rank, 0) + 1
        return dict(sorted(sizes.items()))

    def __len__(self) -> int:
        return len(self.tips)

    def __repr__(self) -> str:
        return f"Clip(tips={len(self.tips)}, <<={len(self.lt)}, |>={len(self.tri)})"


def initial_clip(oracle: FiniteModelOracle, s0: int) -> Clip:
    oracle.model.frame.check_world(s0)
    clip = Clip(oracle)
    clip.add_tip(s0, 0, 0)
    return clip


# -- coherence and regularity ----------------------------------------------

@dataclass(frozen=True)
class ClipViolation:
    clause: str
    tips: Tuple[int, ...]

    def __str__(self) -> str:
        return f"{self.clause}: tips {', '.join(str(t) for t in self.tips)}"


@dataclass(frozen=True)
class ClipReport:
    coherent: bool
    regular: bool
    violations: List[ClipViolation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.coherent and self.regular


def _coherence_violations(clip: Clip) -> List[ClipViolation]:
    found = []
    oracle = clip.oracle
    for tid, tip in clip.tips.items():
        if tip.id != tid:
            found.append(ClipViolation("tip ids are unique", (tid, tip.id)))
    for a, b in sorted(clip.lt):
        s, t = clip.tips[a], clip.tips[b]
        if a == b:
            found.append(ClipViolation("<< joins distinct tips", (a, b)))
        if not oracle.leq(s.world, t.world):
            found.append(ClipViolation("<< goes up in the oracle order", (a, b)))
        if t.rank != s.rank:
            found.append(ClipViolation("<< keeps the rank", (a, b)))
        if t.height != s.height + 1:
            found.append(ClipViolation("<< raises the height by one", (a, b)))
    for a, b in sorted(clip.tri):
        s, t = clip.tips[a], clip.tips[b]
        if a == b:
            found.append(ClipViolation("|> joins distinct tips", (a, b)))
        if not oracle.related(s.world, t.world):
            found.append(ClipViolation("|> follows the oracle relation", (a, b)))
        if t.rank != s.rank + 1:
            found.append(ClipViolation("|> raises the rank by one", (a, b)))
        if t.height != s.height:
            found.append(ClipViolation("|> keeps the height", (a, b)))
    return found


def _regularity_violations(clip: Clip) -> List[ClipViolation]:
    found = []
    for k in clip.ids():
        preds = clip.lt_predecessors(k)
        if len(preds) > 1:
            found.append(ClipViolation("at most one <<-predecessor", (k, *preds)))
        preds = clip.tri_predecessors(k)
        if len(preds) > 1:
            found.append(ClipViolation("at most one |>-predecessor", (k, *preds)))
    for i, j in sorted(clip.tri):
        for k in clip.lt_predecessors(j):
            if not any((l, k) in clip.tri for l in clip.lt_predecessors(i)):
                found.append(ClipViolation("zig: i |> j and k << j need l << i with l |> k", (i, j, k)))
    return found


def clip_frame(clip: Clip) -> Tuple[List[int], Frame]:
    """(T, <<*, |>+) as a frame; world n of the frame is the n-th tip id."""
    ids = clip.ids()
    pos = {tid: n for n, tid in enumerate(ids)}
    size = len(ids)
    lt = as_relation([(pos[a], pos[b]) for a, b in clip.lt], size)
    tri = as_relation([(pos[a], pos[b]) for a, b in clip.tri], size)
    frame = Frame(size, relation_closure(lt, ClosureMode.REFLEXIVE_TRANSITIVE), relation_closure(tri))
    return ids, frame


def _homomorphism_violations(clip: Clip) -> List[ClipViolation]:
    found = []
    ids, frame = clip_frame(clip)
    oracle = clip.oracle
    for a, b in np.argwhere(frame.leq):
        i, j = ids[a], ids[b]
        if not oracle.leq(clip.tips[i].world, clip.tips[j].world):
            found.append(ClipViolation("<<* maps into the oracle order", (i, j)))
    for a, b in np.argwhere(frame.rel):
        i, j = ids[a], ids[b]
        if not oracle.related(clip.tips[i].world, clip.tips[j].world):
            found.append(ClipViolation("|>+ maps into the oracle relation", (i, j)))
    return found


def validate(clip: Clip) -> ClipReport:
    """Check every coherence and regularity clause plus the homomorphism into the oracle."""
    coherence = _coherence_violations(clip)
    coherence += _homomorphism_violations(clip)
    regularity = _regularity_violations(clip)
    coherent = not coherence
    return ClipReport(coherent, coherent and not regularity, coherence + regularity)


# -- slices ----------------------------------------------------------------

def slice_tree(clip: Clip, rank: int) -> LabelledTree:
    """The rank-alpha slice: sentinel -1 over the <<-forest of rank-alpha tips, labelled by traces."""
    poset = clip.oracle.poset
    labels: Dict[int, Label] = {SENTINEL: poset.root}
    parent: Dict[int, int] = {}
    for tip in clip.of_rank(rank):
        labels[tip.id] = clip.oracle.trace(tip.world)
        preds = [p for p in clip.lt_predecessors(tip.id) if clip.tips[p].rank == rank]
        if len(preds) > 1:
            raise InvariantViolation(f"slice of an irregular clip: tip {tip.id} has several <<-predecessors")
        parent[tip.id] = preds[0] if preds else SENTINEL
    return LabelledTree(poset, SENTINEL, parent, labels)


# -- defects ---------------------------------------------------------------

class DefectKind(Enum):
    MAXIMALITY = "maximality"
    BOX = "box"
    DIA = "dia"
    DOWNWARD = "dc"
    FORWARD = "fc"


class ProcedureKind(Enum):
    MAXIMALITY = "maximality"
    ACCESSIBILITY = "accessibility"
    DOWNWARD = "dc"
    FORWARD = "fc"

    @property
    def defect_kinds(self) -> Tuple[DefectKind, ...]:
        return _FAMILY[self]


_FAMILY = {
    ProcedureKind.MAXIMALITY: (DefectKind.MAXIMALITY,),
    ProcedureKind.ACCESSIBILITY: (DefectKind.BOX, DefectKind.DIA),
    ProcedureKind.DOWNWARD: (DefectKind.DOWNWARD,),
    ProcedureKind.FORWARD: (DefectKind.FORWARD,),
}

PROCEDURE_ORDER = (ProcedureKind.MAXIMALITY, ProcedureKind.ACCESSIBILITY,
                   ProcedureKind.DOWNWARD, ProcedureKind.FORWARD)


@dataclass(frozen=True)
class Defect:
    """``tips`` holds one id (maximality, box, dia) or the triple (i, j, k) (dc, fc).

    For maximality ``formula`` is the implication B -> C; for box and dia it
    is the modal formula itself.
    """

    kind: DefectKind
    tips: Tuple[int, ...]
    rank: int
    height: int
    formula: Optional[Formula] = None

    def __str__(self) -> str:
        what = f" {render(self.formula)}" if self.formula is not None else ""
        return f"{self.kind.value}{what} at tips {self.tips} (rank {self.rank}, height {self.height})"


def _maximality_holds(clip: Clip, i: int, f: Formula) -> bool:
    oracle = clip.oracle
    s = clip.tips[i].world
    if oracle.forces(s, f) or oracle.is_maximal(s, f):
        return False
    return all(oracle.forces(clip.tips[j].world, f) for j in clip.lt_successors(i))


def _box_holds(clip: Clip, i: int, f: Formula) -> bool:
    oracle = clip.oracle
    if oracle.forces(clip.tips[i].world, f):
        return False
    return all(oracle.forces(clip.tips[j].world, f.body) for j in clip.tri_successors(i))


def _dia_holds(clip: Clip, i: int, f: Formula) -> bool:
    oracle = clip.oracle
    if not oracle.forces(clip.tips[i].world, f):
        return False
    return not any(oracle.forces(clip.tips[j].world, f.body) for j in clip.tri_successors(i))


def _downward_holds(clip: Clip, i: int, j: int, k: int) -> bool:
    if (i, j) not in clip.lt or (j, k) not in clip.tri:
        return False
    return not any((l, k) in clip.lt for l in clip.tri_successors(i))


def _forward_holds(clip: Clip, i: int, j: int, k: int) -> bool:
    if (j, i) not in clip.lt or (j, k) not in clip.tri:
        return False
    return not any((k, l) in clip.lt for l in clip.tri_successors(i))


def is_defect(clip: Clip, d: Defect) -> bool:
    """Does d still describe a defect of the (possibly since repaired) clip?"""
    if any(t not in clip.tips for t in d.tips):
        return False
    if d.kind is DefectKind.MAXIMALITY:
        return _maximality_holds(clip, d.tips[0], d.formula)
    if d.kind is DefectKind.BOX:
        return _box_holds(clip, d.tips[0], d.formula)
    if d.kind is DefectKind.DIA:
        return _dia_holds(clip, d.tips[0], d.formula)
    if d.kind is DefectKind.DOWNWARD:
        return _downward_holds(clip, *d.tips)
    return _forward_holds(clip, *d.tips)


def find_defects(clip: Clip, kind: DefectKind, rank: int, height: Optional[int] = None) -> List[Defect]:
    """All defects of one kind at a rank (and height), by tip id then closure position."""
    closure = clip.oracle.closure
    found: List[Defect] = []
    for tip in clip.of_rank(rank):
        if height is not None and tip.height != height:
            continue
        i = tip.id
        if kind is DefectKind.MAXIMALITY:
            for f in closure.of_kind(Op.IMPLIES):
                if _maximality_holds(clip, i, f):
                    found.append(Defect(kind, (i,), tip.rank, tip.height, f))
        elif kind is DefectKind.BOX:
            for f in closure.of_kind(Op.BOX):
                if _box_holds(clip, i, f):
                    found.append(Defect(kind, (i,), tip.rank, tip.height, f))
        elif kind is DefectKind.DIA:
            for f in closure.of_kind(Op.DIA):
                if _dia_holds(clip, i, f):
                    found.append(Defect(kind, (i,), tip.rank, tip.height, f))
        elif kind is DefectKind.DOWNWARD:
            for j in clip.lt_successors(i):
                for k in clip.tri_successors(j):
                    if _downward_holds(clip, i, j, k):
                        found.append(Defect(kind, (i, j, k), tip.rank, tip.height))
        else:
            for j in clip.lt_predecessors(i):
                for k in clip.tri_successors(j):
                    if _forward_holds(clip, i, j, k):
                        found.append(Defect(kind, (i, j, k), tip.rank, tip.height))
    return found


def find_family_defects(clip: Clip, family: ProcedureKind, rank: int,
                        height: Optional[int] = None) -> List[Defect]:
    found = []
    for kind in family.defect_kinds:
        found.extend(find_defects(clip, kind, rank, height))
    if len(family.defect_kinds) > 1:
        found.sort(key=lambda d: (d.tips, clip.oracle.closure.position(d.formula)))
    return found


def is_clean(clip: Clip, family: ProcedureKind, alpha: int) -> bool:
    """No defect of the family at any rank below alpha."""
    return not any(find_family_defects(clip, family, rank) for rank in range(alpha))


# -- repairs ---------------------------------------------------------------

@dataclass(frozen=True)
class TraceEvent:
    seq: int
    kind: DefectKind
    rank: int
    height: int
    sources: Tuple[int, ...]
    new_tip: Tip
    formula: Optional[str] = None

    def __str__(self) -> str:
        what = f" {self.formula}" if self.formula else ""
        return (f"#{self.seq} {self.kind.value}{what} rank {self.rank} height {self.height} "
                f"from {list(self.sources)} -> tip {self.new_tip}")


def _apply_repair(clip: Clip, d: Defect) -> Tip:
    oracle = clip.oracle
    first = clip.tips[d.tips[0]]
    s = first.world
    if d.kind is DefectKind.MAXIMALITY:
        t = oracle.maximal_extension(s, d.formula)
        if t is None:
            raise OracleContractError(f"no maximal extension for {d}")
        new = clip.add_tip(t, first.rank, first.height + 1)
        clip.add_lt(first.id, new.id)
        return new
    if d.kind in (DefectKind.BOX, DefectKind.DIA):
        kind = WitnessKind.BOX_REFUTER if d.kind is DefectKind.BOX else WitnessKind.DIA_SUPPORTER
        t = oracle.successor_witness(s, kind, d.formula.body)
        if t is None:
            raise OracleContractError(f"no accessible witness for {d}")
        new = clip.add_tip(t, first.rank + 1, first.height)
        clip.add_tri(first.id, new.id)
        return new
    k = clip.tips[d.tips[2]]
    if d.kind is DefectKind.DOWNWARD:
        v = oracle.successor_witness(s, WitnessKind.DOWNWARD, k.world)
        new = clip.add_tip(v, first.rank + 1, first.height)
        clip.add_tri(first.id, new.id)
        clip.add_lt(new.id, k.id)
        return new
    v = oracle.successor_witness(s, WitnessKind.FORWARD, k.world)
    new = clip.add_tip(v, first.rank + 1, first.height)
    clip.add_tri(first.id, new.id)
    clip.add_lt(k.id, new.id)
    return new


def repair_defect(clip: Clip, d: Defect) -> Clip:
    """Copy of the clip with d repaired: one fresh tip and the prescribed edges."""
    if not is_defect(clip, d):
        raise OracleContractError(f"not a current defect: {d}")
    out = clip.copy()
    _apply_repair(out, d)
    return out


# cleanness offsets (maximality, accessibility, dc, fc) before and after each procedure at rank alpha
_STAGING = {
    ProcedureKind.MAXIMALITY: ((0, 0, 0, 0), (1, 0, 0, 0)),
    ProcedureKind.ACCESSIBILITY: ((1, 0, 0, 0), (1, 1, 0, 0)),
    ProcedureKind.DOWNWARD: ((1, 1, 0, 0), (1, 1, 1, 0)),
    ProcedureKind.FORWARD: ((1, 1, 1, 0), (1, 1, 1, 1)),
}


def _check_cleanness(clip: Clip, alpha: int, offsets: Sequence[int], when: str, proc: ProcedureKind) -> None:
    for family, extra in zip(PROCEDURE_ORDER, offsets):
        if not is_clean(clip, family, alpha + extra):
            raise InvariantViolation(
                f"{when} the {proc.value} procedure at rank {alpha}: "
                f"not {alpha + extra}-clean for {family.value}")


class Saturator:
    """Runs repair procedures on one clip, counting repairs and recording a trace."""

    def __init__(self, clip: Clip, budget: int = DEFAULT_REPAIR_BUDGET,
                 check_each_step: bool = False, record_trace: bool = True):
        self.clip = clip
        self.budget = budget
        # first repair at or past 90% of the budget
        self.warn_at = -(-budget * 9 // 10)
        self.check_each_step = check_each_step
        self.record_trace = record_trace
        self.repairs = 0
        self.skipped = 0
        self.trace: List[TraceEvent] = []

    def repair(self, d: Defect) -> Tip:
        if self.repairs >= self.budget:
            raise BudgetExceeded(f"repair budget of {self.budget} exhausted")
        new = _apply_repair(self.clip, d)
        self.repairs += 1
        if self.repairs == self.warn_at:
            logger.warning(f"{self.repairs} repairs used of a budget of {self.budget}")
        if self.record_trace:
            self.trace.append(TraceEvent(self.repairs, d.kind, d.rank, d.height, d.tips, new,
                                         render(d.formula) if d.formula is not None else None))
        logger.debug(f"repaired {d} with tip {new}")
        if self.check_each_step:
            report = validate(self.clip)
            if not report:
                raise InvariantViolation(f"repair of {d} broke the clip: {report.violations[0]}")
            slice_tree(self.clip, new.rank)
        return new

    def _batch(self, proc: ProcedureKind, alpha: int, height: int) -> None:
        for d in find_family_defects(self.clip, proc, alpha, height):
            if is_defect(self.clip, d):
                self.repair(d)
            else:
                self.skipped += 1
                logger.debug(f"skipping {d}: already repaired within its batch")

    def _remaining(self, proc: ProcedureKind, alpha: int) -> bool:
        return bool(find_family_defects(self.clip, proc, alpha))

    def run(self, proc: ProcedureKind, alpha: int, check_staging: bool = False) -> Clip:
        clip = self.clip
        if check_staging:
            _check_cleanness(clip, alpha, _STAGING[proc][0], "before", proc)
        start_height = clip.max_height()
        closure_size = len(clip.oracle.closure)
        if proc is ProcedureKind.DOWNWARD:
            height = clip.max_height(alpha)
            while self._remaining(proc, alpha):
                if height < 0:
                    raise InvariantViolation(f"dc defects of rank {alpha} remain below height 0")
                self._batch(proc, alpha, height)
                height -= 1
        else:
            ceiling = start_height + closure_size + 1
            height = 0
            while self._remaining(proc, alpha):
                if height > ceiling:
                    raise InvariantViolation(
                        f"{proc.value} procedure at rank {alpha} passed height {ceiling}")
                self._batch(proc, alpha, height)
                height += 1
        if check_staging:
            _check_cleanness(clip, alpha, _STAGING[proc][1], "after", proc)
            limit = start_height + (closure_size if proc is ProcedureKind.MAXIMALITY else 0)
            if clip.max_height() > limit:
                raise InvariantViolation(
                    f"{proc.value} procedure at rank {alpha} raised the height to {clip.max_height()} > {limit}")
        return clip


def run_repair_procedure(clip: Clip, kind: ProcedureKind, alpha: int, check_staging: bool = False,
                         budget: int = DEFAULT_REPAIR_BUDGET) -> Clip:
    """Run one procedure at rank alpha on a copy of the clip."""
    return Saturator(clip.copy(), budget=budget).run(kind, alpha, check_staging)


# -- saturation ------------------------------------------------------------

@dataclass
class SaturationResult:
    clip: Clip
    s0: int
    alpha_f: int
    beta_f: int
    loop_embedding: Dict[int, int]
    slices: Dict[int, LabelledTree]
    repairs: int = 0
    trace: List[TraceEvent] = field(default_factory=list)

    @property
    def oracle(self) -> FiniteModelOracle:
        return self.clip.oracle


def saturate(oracle: FiniteModelOracle, s0: int, budget: int = DEFAULT_REPAIR_BUDGET,
             check_each_step: bool = False, record_trace: bool = True) -> SaturationResult:
    """Repair rank by rank until the slice family 1..alpha is dreary."""
    runner = Saturator(initial_clip(oracle, s0), budget, check_each_step, record_trace)
    clip = runner.clip
    slices: Dict[int, LabelledTree] = {}
    alpha = 0
    while True:
        runner.run(ProcedureKind.MAXIMALITY, alpha, check_staging=check_each_step)
        # rank-alpha tips and their << edges are final once maximality at alpha is done
        if alpha >= 1:
            slices[alpha] = slice_tree(clip, alpha)
        family = [slices[beta] for beta in range(1, alpha + 1)]
        m = is_dreary(family)
        if m is not None:
            break
        for proc in PROCEDURE_ORDER[1:]:
            runner.run(proc, alpha, check_staging=check_each_step)
        logger.info(f"rank {alpha} saturated: {len(clip)} tips after {runner.repairs} repairs")
        alpha += 1
    sim = equivalent_sim(slices[alpha], slices[m])
    if not sim:
        raise InvariantViolation(f"slices {m} and {alpha} were reported dreary but are not ~")
    logger.info(f"halted at alpha_f={alpha}, beta_f={m} with {len(clip)} tips")
    return SaturationResult(clip, s0, alpha, m, dict(sim.forward.mapping), slices,
                            runner.repairs, runner.trace)


# -- the saturated model ---------------------------------------------------

@dataclass
class SaturatedModel:
    model: Model
    tip_ids: List[int]
    loopback: List[Tuple[int, int]]

    def world_of(self, tip_id: int) -> int:
        return self.tip_ids.index(tip_id)


def loopback_edges(result: SaturationResult) -> List[Tuple[int, int]]:
    """|>': (i, l) with i of rank alpha_f, l of rank beta_f + 1 and f(i) |> l."""
    clip = result.clip
    edges = []
    for tip in clip.of_rank(result.alpha_f):
        image = result.loop_embedding.get(tip.id)
        if image is None or image == SENTINEL:
            raise InvariantViolation(f"loop-back embedding sends tip {tip.id} to {image}")
        for l in clip.tri_successors(image):
            if clip.tips[l].rank == result.beta_f + 1:
                edges.append((tip.id, l))
    return sorted(edges)


def saturated_frame(result: SaturationResult,
                    loopback: Optional[Iterable[Tuple[int, int]]] = None) -> Tuple[List[int], Frame]:
    clip = result.clip
    ids = clip.ids()
    pos = {tid: n for n, tid in enumerate(ids)}
    size = len(ids)
    if loopback is None:
        loopback = loopback_edges(result)
    lt = as_relation([(pos[a], pos[b]) for a, b in clip.lt], size)
    edges = [(pos[a], pos[b]) for a, b in clip.tri] + [(pos[a], pos[b]) for a, b in loopback]
    rel = relation_closure(as_relation(edges, size))
    return ids, Frame(size, relation_closure(lt, ClosureMode.REFLEXIVE_TRANSITIVE), rel)


def build_saturated_model(result: SaturationResult,
                          loopback: Optional[Sequence[Tuple[int, int]]] = None,
                          check: bool = True) -> SaturatedModel:
    """W' = tips, <=' = <<*, R' = (|> u |>')+, V'(p) = tips whose world is in V(p)."""
    if loopback is None:
        loopback = loopback_edges(result)
    ids, frame = saturated_frame(result, loopback)
    oracle = result.oracle
    clip = result.clip
    names = oracle.closure.atoms()
    assignment = {
        name: [n for n, tid in enumerate(ids) if clip.tips[tid].world in oracle.model.valuation.worlds(name)]
        for name in names
    }
    if check:
        for cond in IK4_CONDITIONS:
            outcome = check_frame_condition(frame, cond)
            if not outcome:
                raise InvariantViolation(f"saturated frame is not {cond.value}: witness {outcome.witness}")
        for name, worlds in assignment.items():
            if not frame.is_upset(worlds):
                raise InvariantViolation(f"saturated valuation of {name} is not <='-closed")
    model = Model(frame, Valuation(assignment))
    return SaturatedModel(model, ids, list(loopback))


@dataclass(frozen=True)
class TruthMismatch:
    tip: int
    formula: Formula
    in_model: bool
    in_oracle: bool

    def __str__(self) -> str:
        return (f"tip {self.tip}: {render(self.formula)} is {self.in_model} in the saturated model, "
                f"{self.in_oracle} at its oracle world")


def check_truth_lemma(result: SaturationResult, model: Model) -> List[TruthMismatch]:
    """Compare satisfaction at each tip with the oracle at the tip's world for every closure member."""
    clip = result.clip
    oracle = result.oracle
    ids = clip.ids()
    cache: Dict[Formula, np.ndarray] = {}
    mismatches = []
    for f in oracle.closure.members:
        truth = extension(model, f, cache=cache)
        for n, tid in enumerate(ids):
            expected = oracle.forces(clip.tips[tid].world, f)
            if bool(truth[n]) != expected:
                mismatches.append(TruthMismatch(tid, f, bool(truth[n]), expected))
    return mismatches
