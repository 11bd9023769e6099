"""Command-line surface: argument parsing, dispatch to the library, exit codes"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Optional, Sequence, Tuple

from .clip import DEFAULT_REPAIR_BUDGET
from .enumeration import Countermodel, FrameFilter, countermodel_search
from .errors import IK4Error, InvariantViolation, ModelFileError, ProofFileError, UsageError
from .formula import LabelPoset, closure, parse, render
from .hilbert import check_proof, parse_proof
from .ltree import (
    NLT_EXPONENT_LIMIT,
    ChainPoset,
    canonical_code,
    count_nice_trees,
    embeds_into,
    equivalent_sim,
    nicify,
    nlt_bound,
    parse_tree,
    render_tree,
    strictify,
)
from .report import (
    HUMAN,
    STRUCTURED,
    DecideResult,
    Evaluation,
    FrameVerdict,
    ModelSummary,
    ParsedFormula,
    format_report,
    saturation_bundle,
)
from .semantics import FrameCondition, SemanticsVariant, dump_model, extension, load_model, valid_in_frame

logger = logging.getLogger(__name__)

EXIT_OK = 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ik4", description="Semantics, decision and proof checking for IK4")
    parser.add_argument("--json", action="store_true", help="print one structured JSON record")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a formula and show its closure")
    p.add_argument("formula")

    p = sub.add_parser("check-model", help="load a model file and check the frame conditions")
    p.add_argument("model")

    p = sub.add_parser("eval", help="worlds of a model forcing a formula")
    p.add_argument("formula")
    p.add_argument("--model", required=True)
    p.add_argument("--variant", default="BD", choices=[v.value for v in SemanticsVariant])

    p = sub.add_parser("valid", help="validity of a formula on the frame of a model file")
    p.add_argument("formula")
    p.add_argument("--model", required=True)

    p = sub.add_parser("decide", help="bounded countermodel search, optionally saturating the hit")
    p.add_argument("formula")
    p.add_argument("--bound", type=int, default=None)
    p.add_argument("--saturate", action="store_true")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--require", default=None,
                   help="comma-separated frame conditions (default: transitive,downward,forward)")
    p.add_argument("--emit", default=None, help="write the countermodel (or saturated model) to this file")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--check-each-step", action="store_true")

    p = sub.add_parser("saturate", help="saturate from a refuting world of a model file")
    p.add_argument("formula")
    p.add_argument("--model", required=True)
    p.add_argument("--world", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--check-each-step", action="store_true")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--emit", default=None, help="write the saturated model to this file")

    p = sub.add_parser("trees", help="labelled tree operations")
    p.add_argument("--chain", type=int, default=None, help="label with the n-element chain")
    p.add_argument("--formula", default=None, help="label with the closure poset of this formula")
    tsub = p.add_subparsers(dest="tree_command", required=True)
    for name in ("strictify", "nicify", "code"):
        t = tsub.add_parser(name)
        t.add_argument("tree")
    for name in ("embed", "sim"):
        t = tsub.add_parser(name)
        t.add_argument("source")
        t.add_argument("target")
    for name in ("count", "nlt"):
        t = tsub.add_parser(name)
        t.add_argument("--height", type=int, required=True)

    p = sub.add_parser("check-proof", help="check a Hilbert derivation file")
    p.add_argument("proof")
    return parser


def _read(path: str, error) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise error(f"cannot read {path}: {e.strerror}") from None


def _write(path: str, body: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(body)
    except OSError as e:
        raise UsageError(f"cannot write {path}: {e.strerror}") from None
    logger.info(f"wrote model to {path}")


def _model(path: str):
    return load_model(_read(path, ModelFileError))


def _poset(args):
    if args.chain is not None and args.formula is not None:
        raise UsageError("give at most one of --chain and --formula")
    if args.formula is not None:
        return LabelPoset(closure(parse(args.formula)))
    n = 2 if args.chain is None else args.chain
    if n < 1:
        raise UsageError("--chain needs at least one label")
    return ChainPoset(n)


def _conditions(text: Optional[str]) -> FrameFilter:
    if text is None:
        return FrameFilter.ik4()
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return FrameFilter.of(*names)
    except ValueError:
        known = ", ".join(c.value for c in FrameCondition)
        raise UsageError(f"unknown frame condition in {text!r}; known: {known}") from None


def _validate_decide(args, config) -> Tuple[int, int, int]:
    bound = args.bound if args.bound is not None else getattr(config, "DEFAULT_BOUND", 3)
    max_bound = getattr(config, "MAX_BOUND", 5)
    if not 1 <= bound <= max_bound:
        raise UsageError(f"--bound must be between 1 and {max_bound}")
    workers = args.workers if args.workers is not None else getattr(config, "SEARCH_WORKERS", 1)
    if workers < 1:
        raise UsageError("--workers must be at least 1")
    budget = args.budget if args.budget is not None else getattr(config, "REPAIR_BUDGET", DEFAULT_REPAIR_BUDGET)
    if budget < 1:
        raise UsageError("--budget must be at least 1")
    if args.saturate and args.require is not None and set(_conditions(args.require).require) != set(
            FrameFilter.ik4().require):
        raise UsageError("--saturate needs countermodels on transitive, downward and forward confluent frames")
    return bound, workers, budget


def _cmd_decide(args, config):
    bound, workers, budget = _validate_decide(args, config)
    formula = parse(args.formula)
    outcome = countermodel_search(formula, bound, _conditions(args.require), workers=workers)
    check_each_step = args.check_each_step or getattr(config, "CHECK_EACH_STEP", False)
    result = DecideResult(outcome)
    if args.saturate and isinstance(outcome, Countermodel):
        result = saturation_bundle(outcome, outcome.model, formula, outcome.world, budget, check_each_step)
    if args.emit is not None and isinstance(outcome, Countermodel):
        _write(args.emit, dump_model(result.saturated.model if result.saturated is not None else outcome.model))
    return result


def _cmd_saturate(args, config):
    formula = parse(args.formula)
    model = _model(args.model)
    budget = args.budget if args.budget is not None else getattr(config, "REPAIR_BUDGET", DEFAULT_REPAIR_BUDGET)
    if budget < 1:
        raise UsageError("--budget must be at least 1")
    truth = extension(model, formula)
    if args.world is None:
        refuting = [w for w in range(model.size) if not truth[w]]
        if not refuting:
            raise UsageError("no world of the model refutes the formula")
        s0 = refuting[0]
    else:
        model.frame.check_world(args.world)
        s0 = args.world
    check_each_step = args.check_each_step or getattr(config, "CHECK_EACH_STEP", False)
    outcome = {"kind": "saturate", "formula": render(formula), "s0": s0, "worlds": model.size}
    bundle = saturation_bundle(outcome, model, formula, s0, budget, check_each_step, trace=args.trace)
    if args.emit is not None:
        _write(args.emit, dump_model(bundle.saturated.model))
    return bundle


def _cmd_trees(args, config):
    poset = _poset(args)
    cmd = args.tree_command
    if cmd in ("strictify", "nicify"):
        tree = parse_tree(args.tree, poset)
        reduced = strictify(tree) if cmd == "strictify" else nicify(tree)
        return {"kind": cmd, "input_nodes": len(tree), "tree": render_tree(reduced.tree),
                "nodes": len(reduced.tree), "steps": reduced.steps}
    if cmd == "code":
        tree = parse_tree(args.tree, poset)
        return {"kind": "code", "code": canonical_code(tree).decode("utf-8"), "strict": tree.is_strict(),
                "nice": tree.is_nice(), "height": tree.height()}
    if cmd == "embed":
        s, t = parse_tree(args.source, poset), parse_tree(args.target, poset)
        e = embeds_into(s, t)
        return {"kind": "embed", "embeds": e is not None,
                "mapping": {str(k): v for k, v in sorted(e.mapping.items())} if e is not None else None}
    if cmd == "sim":
        s, t = parse_tree(args.source, poset), parse_tree(args.target, poset)
        return {"kind": "sim", "equivalent": bool(equivalent_sim(s, t))}
    if args.height < 0:
        raise UsageError("--height must be non-negative")
    if cmd == "count":
        return {"kind": "count", "height": args.height, "card": poset.card(),
                "nice_trees": count_nice_trees(poset, args.height)}
    limit = getattr(config, "NLT_EXPONENT_LIMIT", NLT_EXPONENT_LIMIT)
    try:
        bound = nlt_bound(args.height, poset.card(), limit)
    except OverflowError as e:
        raise UsageError(str(e)) from None
    return {"kind": "nlt", "height": args.height, "card": poset.card(), "bound": str(bound)}


def _cmd_check_proof(args, config):
    return check_proof(parse_proof(_read(args.proof, ProofFileError)))


def _cmd_parse(args, config):
    return ParsedFormula(parse(args.formula))


def _cmd_check_model(args, config):
    return ModelSummary(_model(args.model))


def _cmd_eval(args, config):
    formula = parse(args.formula)
    model = _model(args.model)
    variant = SemanticsVariant(args.variant)
    truth = extension(model, formula, variant)
    return Evaluation(formula, model, variant, [int(w) for w in range(model.size) if truth[w]])


def _cmd_valid(args, config):
    formula = parse(args.formula)
    return FrameVerdict(formula, valid_in_frame(_model(args.model).frame, formula))


COMMANDS = {
    "parse": _cmd_parse,
    "check-model": _cmd_check_model,
    "eval": _cmd_eval,
    "valid": _cmd_valid,
    "decide": _cmd_decide,
    "saturate": _cmd_saturate,
    "trees": _cmd_trees,
    "check-proof": _cmd_check_proof,
}


def _exit_code(result) -> int:
    if isinstance(result, DecideResult) and result.saturation is not None:
        if result.mismatches or not result.clip_report or result.refuted_at is None:
            return InvariantViolation.exit_code
    # rejected proof
    if getattr(result, "ok", True) is False:
        return 1
    return EXIT_OK


def execute(args: argparse.Namespace, config: Any = None) -> Tuple[int, str]:
    """Run one parsed command; returns the exit code and the text to print."""
    mode = STRUCTURED if args.json or getattr(config, "REPORT_MODE", HUMAN) == STRUCTURED else HUMAN
    try:
        result = COMMANDS[args.command](args, config)
        return _exit_code(result), format_report(result, mode)
    except IK4Error as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        return e.exit_code, f"error: {e}"


def main(argv: Optional[Sequence[str]] = None, config: Any = None) -> int:
    args = build_parser().parse_args(argv)
    level = args.log_level or getattr(config, "LOG_LEVEL", "INFO")
    logging.basicConfig(level=getattr(logging, str(level).upper(), logging.INFO), stream=sys.stderr)
    code, text = execute(args, config)
    print(text, file=sys.stderr if text.startswith("error:") else sys.stdout)
    return code
