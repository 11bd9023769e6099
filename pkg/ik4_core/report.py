"""Report records for every command result, rendered as prose lines or a single JSON record"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import singledispatch
from typing import Any, Dict, List, Optional

from .clip import (
    ClipReport,
    SaturatedModel,
    SaturationResult,
    TruthMismatch,
    build_saturated_model,
    check_truth_lemma,
    saturate,
    validate,
)
from .enumeration import Countermodel, ExhaustedBound
from .formula import Formula, atoms, closure, depth, length, render
from .hilbert import ProofReport
from .oracle import FiniteModelOracle
from .semantics import (
    IK4_CONDITIONS,
    FrameCondition,
    FrameValidity,
    Model,
    SemanticsVariant,
    check_frame_condition,
    dump_model,
    extension,
    pairs,
)

HUMAN = "human"
STRUCTURED = "structured"
MODES = (HUMAN, STRUCTURED)


@dataclass(frozen=True)
class ParsedFormula:
    formula: Formula


@dataclass(frozen=True)
class ModelSummary:
    model: Model


@dataclass(frozen=True)
class Evaluation:
    formula: Formula
    model: Model
    variant: SemanticsVariant
    true_at: List[int]


@dataclass(frozen=True)
class FrameVerdict:
    formula: Formula
    validity: FrameValidity


@dataclass
class DecideResult:
    """Outcome of a search plus, when requested, the saturation built from the countermodel."""

    outcome: Any
    saturation: Optional[SaturationResult] = None
    clip_report: Optional[ClipReport] = None
    saturated: Optional[SaturatedModel] = None
    mismatches: List[TruthMismatch] = field(default_factory=list)
    refuted_at: Optional[int] = None
    trace: List[str] = field(default_factory=list)


def saturation_bundle(outcome, model: Model, formula: Formula, s0: int, budget: int,
                      check_each_step: bool = False, trace: bool = False) -> DecideResult:
    """Saturate from world s0 of a model, validate the clip and check the truth lemma on the result."""
    oracle = FiniteModelOracle(model, closure(formula))
    result = saturate(oracle, s0, budget=budget, check_each_step=check_each_step)
    report = validate(result.clip)
    saturated = build_saturated_model(result)
    mismatches = check_truth_lemma(result, saturated.model)
    root = result.clip.of_rank(0)[0].id
    world = saturated.world_of(root)
    refuted = None if extension(saturated.model, formula)[world] else world
    events = [str(event) for event in result.trace] if trace else []
    return DecideResult(outcome, result, report, saturated, mismatches, refuted, events)


@singledispatch
def to_record(result) -> Dict[str, Any]:
    raise TypeError(f"no report format for {type(result).__name__}")


@to_record.register
def _(result: dict) -> Dict[str, Any]:
    return result


@to_record.register
def _(result: ParsedFormula) -> Dict[str, Any]:
    f = result.formula
    sigma = closure(f)
    return {
        "kind": "formula",
        "formula": render(f),
        "length": length(f),
        "depth": depth(f),
        "atoms": atoms(f),
        "closure_size": len(sigma),
        "closure": [render(g) for g in sigma],
    }


@to_record.register
def _(result: ModelSummary) -> Dict[str, Any]:
    frame = result.model.frame
    conditions = {}
    for cond in FrameCondition:
        check = check_frame_condition(frame, cond)
        conditions[cond.value] = {"holds": check.holds,
                                  "witness": list(check.witness) if check.witness is not None else None}
    return {
        "kind": "model",
        "worlds": frame.size,
        "le_pairs": len(pairs(frame.leq)),
        "r_pairs": len(pairs(frame.rel)),
        "conditions": conditions,
        "ik4": all(conditions[c.value]["holds"] for c in IK4_CONDITIONS),
    }


@to_record.register
def _(result: Evaluation) -> Dict[str, Any]:
    return {
        "kind": "eval",
        "formula": render(result.formula),
        "variant": result.variant.value,
        "true_at": result.true_at,
        "true_in_model": len(result.true_at) == result.model.size,
    }


@to_record.register
def _(result: FrameVerdict) -> Dict[str, Any]:
    v = result.validity
    record = {"kind": "frame-validity", "formula": render(result.formula), "valid": v.valid}
    if not v.valid:
        record["world"] = v.world
        record["valuation"] = {name: sorted(ws) for name, ws in v.valuation.items()}
    return record


@to_record.register
def _(result: Countermodel) -> Dict[str, Any]:
    return {
        "kind": "countermodel",
        "verdict": "COUNTERMODEL",
        "formula": render(result.formula),
        "size": result.size,
        "world": result.world,
        "model": dump_model(result.model),
    }


@to_record.register
def _(result: ExhaustedBound) -> Dict[str, Any]:
    return {
        "kind": "no-countermodel",
        "verdict": "NO-COUNTERMODEL",
        "formula": render(result.formula),
        "bound": result.bound,
    }


@to_record.register
def _(result: SaturationResult) -> Dict[str, Any]:
    clip = result.clip
    return {
        "kind": "saturation",
        "s0": result.s0,
        "alpha_f": result.alpha_f,
        "beta_f": result.beta_f,
        "tips": len(clip),
        "rank_sizes": {str(rank): n for rank, n in sorted(clip.rank_sizes().items())},
        "repairs": result.repairs,
        "loop_embedding": {str(k): v for k, v in sorted(result.loop_embedding.items())},
    }


@to_record.register
def _(result: ClipReport) -> Dict[str, Any]:
    return {
        "kind": "clip-validation",
        "coherent": result.coherent,
        "regular": result.regular,
        "violations": [{"clause": v.clause, "tips": list(v.tips)} for v in result.violations],
    }


@to_record.register
def _(result: SaturatedModel) -> Dict[str, Any]:
    return {
        "kind": "saturated-model",
        "worlds": result.model.size,
        "tip_ids": result.tip_ids,
        "loopback": [list(e) for e in result.loopback],
        "model": dump_model(result.model),
    }


@to_record.register
def _(result: ProofReport) -> Dict[str, Any]:
    return {
        "kind": "proof",
        "verdict": "OK" if result.ok else "REJECTED",
        "ok": result.ok,
        "first_bad_line": result.first_bad_line,
        "reason": result.reason,
        "uses_hypotheses": result.uses_hypotheses,
        "lines_checked": result.checked,
    }


@to_record.register
def _(result: DecideResult) -> Dict[str, Any]:
    record = dict(to_record(result.outcome))
    if result.saturation is not None:
        record["saturation"] = to_record(result.saturation)
        record["validation"] = to_record(result.clip_report)
        record["saturated_model"] = to_record(result.saturated)
        record["truth_lemma"] = [str(m) for m in result.mismatches]
        record["saturated_refutes"] = result.refuted_at is not None
    if result.trace:
        record["trace"] = result.trace
    return record


# -- rendering -------------------------------------------------------------

def _headline(record: Dict[str, Any]) -> str:
    kind = record.get("kind", "result")
    if kind == "countermodel":
        return f"COUNTERMODEL size={record['size']} world={record['world']}"
    if kind == "no-countermodel":
        return f"NO-COUNTERMODEL bound={record['bound']}"
    if kind == "proof":
        if record["ok"]:
            return "OK"
        return f"REJECTED at line {record['first_bad_line']}: {record['reason']}"
    if kind == "saturation":
        return f"SATURATED alpha_f={record['alpha_f']} beta_f={record['beta_f']} tips={record['tips']}"
    if kind == "clip-validation":
        return "CLIP OK" if not record["violations"] else f"CLIP INVALID ({len(record['violations'])} violations)"
    return kind.upper()


_SKIP = {"kind", "verdict"}


def _human_lines(record: Dict[str, Any], indent: str = "") -> List[str]:
    lines = [indent + _headline(record)]
    inner = indent + "  "
    for key, value in record.items():
        if key in _SKIP or (record.get("kind") == "proof" and key in ("ok", "first_bad_line", "reason")):
            continue
        if isinstance(value, dict) and "kind" in value:
            lines += _human_lines(value, inner)
        elif key == "violations":
            lines += [f"{inner}violation {v['clause']}: tips {', '.join(str(t) for t in v['tips'])}" for v in value]
        elif isinstance(value, str) and "\n" in value:
            lines.append(f"{inner}{key}:")
            lines += [inner + "  " + row for row in value.rstrip("\n").split("\n")]
        elif isinstance(value, list) and value and all(isinstance(x, str) for x in value):
            lines.append(f"{inner}{key}:")
            lines += [inner + "  " + x for x in value]
        else:
            lines.append(f"{inner}{key}: {json.dumps(value) if not isinstance(value, str) else value}")
    return lines


def format_report(result, mode: str = HUMAN) -> str:
    record = to_record(result)
    if mode == STRUCTURED:
        return json.dumps(record, sort_keys=True)
    return "\n".join(_human_lines(record))
