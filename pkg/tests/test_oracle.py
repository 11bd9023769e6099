"""
Tests for the finite-model world oracle.
"""

import pytest

from ik4_core.enumeration import FrameFilter, enumerate_models
from ik4_core.errors import OracleContractError, WorldRangeError
from ik4_core.formula import Op, closure, parse
from ik4_core.oracle import FiniteModelOracle, WitnessKind, oracle_for
from ik4_core.semantics import forces
from tests.strategies import formula_pool, model

# seeds whose closures drive the sweeps below
SEEDS = [parse(s) for s in ('[]p -> <>p', '<>(p -> q) -> []p -> <>q', '[](p | q) -> <>p | []q',
                            '<><>p -> <>p', '(p -> q) | ~[]q')]

TWO_CHAIN = model(2, le=[(0, 1)], r=[(0, 1), (1, 1)], p=[1])


def ik4_oracles(seed, max_size=2):
    for n in range(1, max_size + 1):
        for m in enumerate_models(n, ('p', 'q'), FrameFilter.ik4()):
            yield FiniteModelOracle(m, closure(seed))


def test_trace_of_single_world():
    oracle = oracle_for(model(1), parse('[]p -> <>p'))
    assert oracle.poset.describe(oracle.trace(0)) == '{[]p}'
    assert str(oracle.trace(0)) == '{1}'


def test_trace_of_atom():
    oracle = oracle_for(model(1, p=[0]), parse('p'))
    assert str(oracle.trace(0)) == '{0}'


def test_traces_are_monotone():
    for seed in SEEDS[:3]:
        for oracle in ik4_oracles(seed):
            for s in oracle.worlds():
                for t in oracle.worlds():
                    if oracle.leq(s, t):
                        assert oracle.poset.leq(oracle.trace(s), oracle.trace(t))


def test_oracle_rejects_non_ik4_models():
    with pytest.raises(OracleContractError):
        oracle_for(model(3, le=[(0, 1)], r=[(1, 2)]), parse('p'))
    with pytest.raises(OracleContractError):
        oracle_for(model(3, r=[(0, 1), (1, 2)]), parse('p'))


def test_queries_outside_the_closure_are_rejected():
    oracle = oracle_for(TWO_CHAIN, parse('p'))
    with pytest.raises(OracleContractError):
        oracle.forces(0, parse('q'))
    with pytest.raises(OracleContractError):
        oracle.maximal_extension(0, parse('[]p'))
    with pytest.raises(WorldRangeError):
        oracle.trace(2)


def test_maximal_extension_examples():
    chain = model(2, le=[(0, 1)])
    oracle = oracle_for(chain, parse('p'))
    assert oracle.maximal_extension(0, parse('p')) == 1
    assert oracle.maximal_extension(1, parse('p')) is None
    single = oracle_for(model(1, r=[(0, 0)]), parse('[]p -> <>p'))
    for f in single.closure:
        assert single.maximal_extension(0, f) is None


def test_maximal_extension_of_implication():
    oracle = oracle_for(model(2, le=[(0, 1)], p=[1]), parse('p -> q'))
    t = oracle.maximal_extension(0, parse('p -> q'))
    assert t == 1
    assert oracle.forces(t, parse('p'))
    assert not oracle.forces(t, parse('q'))


def test_maximal_extension_is_maximal():
    for seed in SEEDS:
        for oracle in ik4_oracles(seed):
            for s in oracle.worlds():
                for f in oracle.closure:
                    t = oracle.maximal_extension(s, f)
                    if t is None:
                        assert oracle.is_maximal(s, f)
                        continue
                    assert oracle.lt(s, t) and not oracle.forces(t, f)
                    assert oracle.is_maximal(t, f)


def test_degree():
    oracle = oracle_for(model(2, le=[(0, 1)]), parse('p'))
    assert oracle.degree(0) == 1
    assert oracle.degree(1) == 0


def test_modal_witnesses():
    empty = oracle_for(model(1), parse('[]p -> <>p'))
    for f in empty.closure:
        assert empty.successor_witness(0, WitnessKind.BOX_REFUTER, f) is None
    seen = oracle_for(model(2, r=[(0, 1)], p=[1]), parse('<>p'))
    assert seen.successor_witness(0, WitnessKind.DIA_SUPPORTER, parse('p')) == 1
    assert seen.successor_witness(1, WitnessKind.DIA_SUPPORTER, parse('p')) is None
    unseen = oracle_for(model(2, r=[(0, 1)]), parse('[]p'))
    assert unseen.successor_witness(0, WitnessKind.BOX_REFUTER, parse('p')) == 1


def test_confluence_witnesses():
    oracle = oracle_for(TWO_CHAIN, parse('p'))
    assert oracle.successor_witness(0, WitnessKind.DOWNWARD, 1) == 1
    assert oracle.successor_witness(1, WitnessKind.FORWARD, 1) == 1
    with pytest.raises(OracleContractError):
        oracle.successor_witness(1, WitnessKind.DOWNWARD, 0)


def test_witnesses_respect_trace_accessibility():
    for seed in SEEDS:
        for oracle in ik4_oracles(seed):
            boxes = oracle.closure.of_kind(Op.BOX)
            dias = oracle.closure.of_kind(Op.DIA)
            for s in oracle.worlds():
                for f in boxes:
                    t = oracle.successor_witness(s, WitnessKind.BOX_REFUTER, f.body)
                    assert (t is None) == oracle.forces(s, f)
                for f in dias:
                    t = oracle.successor_witness(s, WitnessKind.DIA_SUPPORTER, f.body)
                    assert (t is not None) == oracle.forces(s, f)
            assert oracle.bowtie_violations() == []


def test_refuting_worlds_agree_with_forcing():
    pool = formula_pool(40, 3)
    for m in enumerate_models(2, ('p', 'q'), FrameFilter.ik4()):
        for seed in pool[:10]:
            oracle = oracle_for(m, seed)
            assert oracle.refuting_worlds(seed) == [s for s in range(m.size) if not forces(m, s, seed)]


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
