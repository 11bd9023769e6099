"""
Tests for frames, frame conditions, the four satisfaction variants, heredity and the model file format.
"""

from pathlib import Path

import numpy as np
from hypothesis import given, settings, strategies as st
import pytest

from ik4_core.enumeration import FrameFilter, enumerate_frames, enumerate_valuations
from ik4_core.errors import ModelFileError, ValuationError, WorldRangeError
from ik4_core.formula import parse
from ik4_core.semantics import (
    ClosureMode,
    Frame,
    FrameCondition,
    Model,
    SemanticsVariant,
    Valuation,
    check_frame_condition,
    check_heredity,
    compose,
    converse,
    dump_model,
    extension,
    forces,
    load_model,
    pairs,
    relation_closure,
    true_in_model,
    upsets,
    valid_in_frame,
)
from tests.strategies import formula_pool, model

# pools for the exhaustive sweeps over small ik4 frames
POOL_SIZE = 60
POOL_DEPTH = 3
FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

ALL_VARIANTS = list(SemanticsVariant)


def ik4_models(max_size=3, names=('p', 'q')):
    for n in range(1, max_size + 1):
        for frame in enumerate_frames(n, FrameFilter.ik4()):
            for valuation in enumerate_valuations(frame, names):
                yield Model(frame, valuation)


def non_dc_frame():
    return Frame.from_generators(3, le=[(0, 1)], r=[(1, 2)])


def test_transitive_closure_examples():
    empty = np.zeros((3, 3), dtype=bool)
    assert not relation_closure(empty).any()
    chain = Frame.from_generators(3, r=[(0, 1), (1, 2)]).rel
    assert pairs(relation_closure(chain)) == [(0, 1), (0, 2), (1, 2)]
    one = np.array([[False, True], [False, False]])
    assert pairs(relation_closure(one, ClosureMode.REFLEXIVE_TRANSITIVE)) == [(0, 0), (0, 1), (1, 1)]


@settings(max_examples=100, deadline=None)
@given(bits=st.lists(st.booleans(), min_size=16, max_size=16))
def test_closure_is_idempotent_and_monotone(bits):
    """
    Property: R is contained in R+ which is contained in R*, and closing twice changes nothing.
    """
    rel = np.array(bits, dtype=bool).reshape(4, 4)
    plus = relation_closure(rel)
    star = relation_closure(rel, ClosureMode.REFLEXIVE_TRANSITIVE)
    assert not (rel & ~plus).any()
    assert not (plus & ~star).any()
    assert (relation_closure(plus) == plus).all()
    assert not (compose(plus, plus) & ~plus).any()


def test_compose_and_converse():
    r = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=bool)
    assert pairs(compose(r, r)) == [(0, 2)]
    assert pairs(converse(r)) == [(1, 0), (2, 1)]


def test_frame_rejects_non_preorder():
    with pytest.raises(ValueError):
        Frame(2, np.array([[True, True], [False, False]]), np.zeros((2, 2), dtype=bool))
    with pytest.raises(ValueError):
        Frame(0, np.zeros((0, 0), dtype=bool), np.zeros((0, 0), dtype=bool))


def test_frame_conditions_vacuous_on_one_world():
    frame = Frame.from_generators(1)
    for cond in FrameCondition:
        assert check_frame_condition(frame, cond)


def test_downward_failure_witness():
    check = check_frame_condition(non_dc_frame(), FrameCondition.DOWNWARD)
    assert not check
    assert check.witness == (0, 1, 2)


def test_forward_failure_witness():
    frame = Frame.from_generators(3, le=[(1, 0)], r=[(1, 2)])
    check = check_frame_condition(frame, FrameCondition.FORWARD)
    assert not check
    assert check.witness == (0, 1, 2)


def test_transitive_failure_witness():
    frame = Frame.from_generators(3, r=[(0, 1), (1, 2)])
    check = check_frame_condition(frame, FrameCondition.TRANSITIVE)
    assert check.witness == (0, 1, 2)


def test_single_world_without_successors():
    m = model(1)
    for variant in ALL_VARIANTS:
        assert forces(m, 0, parse('[]F'), variant)
        assert not forces(m, 0, parse('<>T'), variant)


def test_excluded_middle_fails_on_two_chain():
    m = model(2, le=[(0, 1)], p=[1])
    assert not forces(m, 0, parse('p | ~p'))
    assert forces(m, 1, parse('p | ~p'))
    assert not true_in_model(m, parse('p'))


def test_world_out_of_range():
    with pytest.raises(WorldRangeError):
        forces(model(1), 3, parse('p'))


def test_variant_diamond_clauses_differ_off_confluent_frames():
    # 1 <= 0 and 1 R 2: at 0 the P diamond looks down to 1, BD does not
    m = model(3, le=[(1, 0)], r=[(1, 2)], p=[2])
    assert not forces(m, 0, parse('<>p'), SemanticsVariant.BD)
    assert forces(m, 0, parse('<>p'), SemanticsVariant.P)


def test_normality_axioms_true_everywhere():
    for m in ik4_models(2, ('p',)):
        assert true_in_model(m, parse('[]T'))
        assert true_in_model(m, parse('~<>F'))


def test_valid_in_frame_examples():
    reflexive = Frame.from_generators(1, r=[(0, 0)])
    assert valid_in_frame(reflexive, parse('<>p -> p'))
    assert valid_in_frame(non_dc_frame(), parse('[]T'))


def test_derived_ad_formula_fails_on_non_dc_frame():
    outcome = valid_in_frame(non_dc_frame(), parse('[](p | q) -> (<>p -> []q) -> []q'))
    assert not outcome
    m = Model(non_dc_frame(), outcome.valuation)
    assert not forces(m, outcome.world, parse('[](p | q) -> (<>p -> []q) -> []q'))


def test_ad_axiom_is_valid_on_every_frame():
    # both modal clauses are local to one world, so the disjunction splits there
    for n in (1, 2):
        for frame in enumerate_frames(n):
            assert valid_in_frame(frame, parse('[](p | q) -> <>p | []q'))
    assert valid_in_frame(non_dc_frame(), parse('[](p | q) -> <>p | []q'))


def test_upsets_of_small_frames():
    chain = Frame.from_generators(2, le=[(0, 1)])
    assert upsets(chain) == [frozenset(), frozenset({1}), frozenset({0, 1})]
    assert len(upsets(Frame.from_generators(2))) == 4


def test_valuation_must_be_upward_closed():
    chain = Frame.from_generators(2, le=[(0, 1)])
    with pytest.raises(ValuationError):
        Model(chain, Valuation({'p': [0]}))
    with pytest.raises(ValuationError):
        Model(chain, Valuation({'p': [5]}))


def test_heredity_single_world_is_trivial():
    assert check_heredity(model(1, r=[(0, 0)], p=[0]), formula_pool(30, 3)) == []


def test_heredity_may_fail_off_confluent_frames():
    m = model(3, le=[(0, 1)], r=[(1, 2)], p=[2])
    assert not check_frame_condition(m.frame, FrameCondition.DOWNWARD)
    # []F holds at 0 but not at 1 because only 1 sees world 2
    assert check_heredity(m, [parse('<>p')]) == []
    violations = check_heredity(m, [parse('[]F')])
    assert [(v.lower, v.upper) for v in violations] == [(0, 1)]


@pytest.mark.slow
def test_heredity_holds_on_ik4_models():
    pool = formula_pool(POOL_SIZE, POOL_DEPTH)
    for m in ik4_models():
        assert check_heredity(m, pool) == [], dump_model(m)


@pytest.mark.slow
def test_variants_agree_on_ik4_models():
    pool = formula_pool(POOL_SIZE, POOL_DEPTH)
    for m in ik4_models():
        caches = {v: {} for v in ALL_VARIANTS}
        for f in pool:
            bd = extension(m, f, SemanticsVariant.BD, caches[SemanticsVariant.BD])
            for v in ALL_VARIANTS[1:]:
                assert (extension(m, f, v, caches[v]) == bd).all(), (v, str(f), dump_model(m))


MODEL_TEXT = """
# a two-world chain
worlds 2
le 0 1
r 0 1
r 1 1
val p 1
"""


def test_load_model():
    m = load_model(MODEL_TEXT)
    assert m.size == 2
    assert pairs(m.frame.leq) == [(0, 0), (0, 1), (1, 1)]
    assert pairs(m.frame.rel) == [(0, 1), (1, 1)]
    assert m.valuation.worlds('p') == frozenset({1})


def test_dump_model_round_trips():
    m = load_model(MODEL_TEXT)
    again = load_model(dump_model(m))
    assert again.frame == m.frame
    assert again.valuation == m.valuation


def test_fixture_model_loads():
    m = load_model((FIXTURES / "two-chain.model").read_text(encoding="utf-8"))
    for cond in (FrameCondition.TRANSITIVE, FrameCondition.DOWNWARD, FrameCondition.FORWARD):
        assert check_frame_condition(m.frame, cond)


@pytest.mark.parametrize('text,line', [
    ('worlds 2\nworlds 3\n', 2),
    ('le 0 1\nworlds 2\n', 1),
    ('worlds 2\nr 0 2\n', 2),
    ('worlds 2\nle 0 x\n', 2),
    ('worlds 2\nedge 0 1\n', 2),
    ('worlds 2\nle 0 1\nval p 0\n', 3),
    ('worlds 2\nval P 0\n', 2),
    ('worlds 2\nle 0 1\nval 1 1\n', 3),
    ('worlds 1\nval T 0\n', 2),
    ('worlds 0\n', 1),
])
def test_model_file_errors(text, line):
    with pytest.raises(ModelFileError) as info:
        load_model(text)
    assert info.value.line == line


def test_model_file_needs_worlds_line():
    with pytest.raises(ModelFileError):
        load_model('# nothing here\n')


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
