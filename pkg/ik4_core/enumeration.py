"""Exhaustive generation of small frames and models, and bounded countermodel search"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import InvariantViolation, UsageError
from .formula import Formula, atoms, render
from .semantics import (
    IK4_CONDITIONS,
    ClosureMode,
    Frame,
    FrameCondition,
    Model,
    SemanticsVariant,
    Valuation,
    extension,
    forces,
    frame_satisfies,
    relation_closure,
    upsets,
)

logger = logging.getLogger(__name__)

Bits = Tuple[bool, ...]


@dataclass(frozen=True)
class FrameFilter:
    require: FrozenSet[FrameCondition] = frozenset()

    @classmethod
    def of(cls, *conditions: Union[FrameCondition, str]) -> "FrameFilter":
        return cls(frozenset(FrameCondition(c) if isinstance(c, str) else c for c in conditions))

    @classmethod
    def ik4(cls) -> "FrameFilter":
        return cls(frozenset(IK4_CONDITIONS))

    def accepts(self, frame: Frame) -> bool:
        return frame_satisfies(frame, self.require)

    def __str__(self) -> str:
        return ",".join(sorted(c.value for c in self.require)) or "none"


def _bits(rel: np.ndarray) -> Bits:
    return tuple(bool(x) for x in rel.flat)


@lru_cache(maxsize=None)
def enumerate_preorders(n: int) -> Tuple[Bits, ...]:
    """Every preorder on n worlds as row-major bits, sorted, each listed once."""
    off_diagonal = [(i, j) for i in range(n) for j in range(n) if i != j]
    seen = set()
    for choice in itertools.product((False, True), repeat=len(off_diagonal)):
        gen = np.zeros((n, n), dtype=bool)
        for (i, j), on in zip(off_diagonal, choice):
            gen[i, j] = on
        seen.add(_bits(relation_closure(gen, ClosureMode.REFLEXIVE_TRANSITIVE)))
    return tuple(sorted(seen))


def _rows(bits: Bits, n: int) -> List[int]:
    return [sum(1 << j for j in range(n) if bits[i * n + j]) for i in range(n)]


def _is_transitive(rows: Sequence[int]) -> bool:
    for row in rows:
        succ = row
        while succ:
            j = (succ & -succ).bit_length() - 1
            succ &= succ - 1
            if rows[j] & ~row:
                return False
    return True


@lru_cache(maxsize=None)
def _relations(n: int, transitive_only: bool) -> Tuple[Bits, ...]:
    out = []
    for bits in itertools.product((False, True), repeat=n * n):
        if transitive_only and not _is_transitive(_rows(bits, n)):
            continue
        out.append(bits)
    logger.debug(f"{len(out)} candidate relations on {n} worlds (transitive_only={transitive_only})")
    return tuple(out)


def enumerate_frames(n: int, frame_filter: FrameFilter = FrameFilter()) -> Iterator[Frame]:
    """Frames on exactly n worlds passing the filter, ordered by (<= bits, R bits)."""
    if n < 1:
        raise UsageError("frames need at least one world")
    others = frame_filter.require - {FrameCondition.TRANSITIVE}
    relations = _relations(n, FrameCondition.TRANSITIVE in frame_filter.require)
    for leq_bits in enumerate_preorders(n):
        leq = np.array(leq_bits, dtype=bool).reshape(n, n)
        for rel_bits in relations:
            frame = Frame(n, leq, np.array(rel_bits, dtype=bool).reshape(n, n))
            if others and not frame_satisfies(frame, others):
                continue
            yield frame


def enumerate_valuations(frame: Frame, names: Sequence[str]) -> Iterator[Valuation]:
    """Each atom ranges independently over the <=-closed subsets of W."""
    choices = upsets(frame)
    for combo in itertools.product(choices, repeat=len(names)):
        yield Valuation(dict(zip(names, combo)))


def enumerate_models(n: int, names: Sequence[str], frame_filter: FrameFilter = FrameFilter()) -> Iterator[Model]:
    for frame in enumerate_frames(n, frame_filter):
        for valuation in enumerate_valuations(frame, names):
            yield Model(frame, valuation)


@dataclass(frozen=True)
class Countermodel:
    formula: Formula
    model: Model
    world: int

    @property
    def size(self) -> int:
        return self.model.size


@dataclass(frozen=True)
class ExhaustedBound:
    formula: Formula
    bound: int


SearchOutcome = Union[Countermodel, ExhaustedBound]


def refute_on_frame(frame: Frame, f: Formula,
                    variant: SemanticsVariant = SemanticsVariant.BD) -> Optional[Tuple[Valuation, int]]:
    """First valuation (and least world) refuting f on the frame, if any."""
    for valuation in enumerate_valuations(frame, atoms(f)):
        truth = extension(Model(frame, valuation), f, variant)
        if not truth.all():
            return valuation, int(np.flatnonzero(~truth)[0])
    return None


def _refute_task(args: Tuple[Frame, Formula]) -> Optional[Tuple[Valuation, int]]:
    return refute_on_frame(*args)


def _scan(frames: List[Frame], f: Formula, workers: int) -> Optional[Tuple[Frame, Valuation, int]]:
    if workers <= 1 or len(frames) < 2 * workers:
        for frame in frames:
            hit = refute_on_frame(frame, f)
            if hit is not None:
                return (frame, *hit)
        return None
    chunk = max(1, len(frames) // (workers * 8))
    executor = ProcessPoolExecutor(max_workers=workers)
    try:
        # map yields in submission order, so the first hit is the least frame
        for frame, hit in zip(frames, executor.map(_refute_task, ((fr, f) for fr in frames), chunksize=chunk)):
            if hit is not None:
                return (frame, *hit)
        return None
    finally:
        executor.shutdown(wait=True, cancel_futures=True)


def countermodel_search(f: Formula, bound: int, frame_filter: Optional[FrameFilter] = None,
                        workers: int = 1) -> SearchOutcome:
    """Scan frame sizes 1..bound for a world refuting f (BD semantics)."""
    if bound < 1:
        raise UsageError("bound must be at least 1")
    if frame_filter is None:
        frame_filter = FrameFilter.ik4()
    for n in range(1, bound + 1):
        frames = list(enumerate_frames(n, frame_filter))
        logger.info(f"size {n}: scanning {len(frames)} frames for a countermodel to {render(f)}")
        hit = _scan(frames, f, workers)
        if hit is None:
            continue
        frame, valuation, world = hit
        model = Model(frame, valuation)
        if forces(model, world, f) or not frame_filter.accepts(frame):
            raise InvariantViolation(f"search returned a bogus countermodel for {render(f)} at world {world}")
        logger.info(f"countermodel of size {n} found, refuted at world {world}")
        return Countermodel(f, model, world)
    return ExhaustedBound(f, bound)


def count_frames(n: int, frame_filter: FrameFilter = FrameFilter()) -> int:
    return sum(1 for _ in enumerate_frames(n, frame_filter))


def all_models(max_size: int, names: Iterable[str], frame_filter: FrameFilter) -> Iterator[Model]:
    names = list(names)
    for n in range(1, max_size + 1):
        yield from enumerate_models(n, names, frame_filter)
