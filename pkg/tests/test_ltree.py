"""
Tests for labelled trees: embeddings, the ~ and isomorphism relations, strict and nice reductions,
nice-tree counting and dreary families.
"""

import itertools
import random

import pytest

from ik4_core.errors import InvariantViolation, PosetMismatchError, TreeError, TreeSyntaxError
from ik4_core.formula import LabelPoset, atom, closure, conj
from ik4_core.ltree import (
    ChainPoset,
    Embedding,
    LabelledTree,
    canonical_code,
    classify,
    count_nice_trees,
    embeds_into,
    enumerate_nice_trees,
    equivalent_sim,
    is_dreary,
    isomorphic,
    nicify,
    nlt_bound,
    normalize,
    parse_tree,
    render_tree,
    strictify,
)
from tests.strategies import all_trees, sample_trees

p, q = atom('p'), atom('q')

# width 1: labels -1 < {} < {0}
P1 = LabelPoset(closure(p))
ROOT = P1.root
EMPTY = P1.label(0)
SET_P = P1.label_of([p])

# width 3 over p & q, for two incomparable labels
PQ = LabelPoset(closure(conj(p, q)))
PQ_P = PQ.label_of([p])
PQ_Q = PQ.label_of([q])

# width 2 over p & p, i.e. closure {p & p, p}
P2 = LabelPoset(closure(conj(p, p)))

STREAMS = 100


def node(poset, label):
    return LabelledTree.single(poset, label)


def test_tree_validation():
    with pytest.raises(TreeError):
        LabelledTree(P1, 0, {1: 0}, {0: SET_P, 1: ROOT})
    with pytest.raises(TreeError):
        LabelledTree(P1, 0, {1: 2}, {0: ROOT, 1: ROOT})
    with pytest.raises(TreeError):
        LabelledTree(P1, 0, {1: 2, 2: 1}, {0: ROOT, 1: ROOT, 2: ROOT})
    with pytest.raises(TreeError):
        LabelledTree(P1, 0, {0: 0}, {0: ROOT})


def test_tree_structure():
    t = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, [(SET_P, [])]), (SET_P, [])]))
    assert len(t) == 4
    assert t.children(0) == [1, 3]
    assert t.height() == 2
    assert t.is_strict()
    assert t.is_ancestor_or_self(0, 2)
    assert not t.is_ancestor_or_self(3, 2)
    assert t.subtree(1) == [1, 2]


def test_strictify_single_node_is_unchanged():
    t = node(P1, SET_P)
    reduced = strictify(t)
    assert reduced.steps == 0
    assert isomorphic(reduced.tree, t)


def test_strictify_contracts_duplicate_chain():
    reduced = strictify(LabelledTree.chain(P1, [SET_P, SET_P]))
    assert len(reduced.tree) == 1
    assert reduced.tree.labels[reduced.tree.root] == SET_P
    assert reduced.forward.verify(LabelledTree.chain(P1, [SET_P, SET_P]), reduced.tree)


def test_strictify_three_chain():
    reduced = strictify(LabelledTree.chain(P1, [ROOT, SET_P, SET_P]))
    assert isomorphic(reduced.tree, LabelledTree.chain(P1, [ROOT, SET_P]))
    assert reduced.steps == 1


def test_strictify_redirects_children():
    t = LabelledTree.from_nested(P1, (ROOT, [(ROOT, [(EMPTY, []), (SET_P, [])])]))
    reduced = strictify(t)
    assert reduced.tree.is_strict()
    assert isomorphic(reduced.tree, LabelledTree.from_nested(P1, (ROOT, [(EMPTY, []), (SET_P, [])])))


def test_canonical_codes():
    assert canonical_code(node(P1, SET_P)) == canonical_code(node(P1, SET_P))
    a = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, []), (SET_P, [])]))
    b = LabelledTree.from_nested(P1, (ROOT, [(SET_P, []), (EMPTY, [])]))
    assert canonical_code(a) == canonical_code(b)
    assert canonical_code(node(PQ, PQ_P)) != canonical_code(node(PQ, PQ_Q))


def test_nicify_leaves_nice_trees_alone():
    t = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, []), (SET_P, [])]))
    reduced = nicify(t)
    assert reduced.steps == 0
    assert isomorphic(reduced.tree, t)


def test_nicify_drops_isomorphic_sibling():
    t = LabelledTree.from_nested(P1, (ROOT, [(SET_P, []), (SET_P, [])]))
    reduced = nicify(t)
    assert isomorphic(reduced.tree, LabelledTree.chain(P1, [ROOT, SET_P]))
    assert reduced.steps == 1


def test_nicify_keeps_distinct_siblings():
    t = LabelledTree.from_nested(PQ, (PQ.root, [(PQ_P, []), (PQ_P, []), (PQ_Q, [])]))
    reduced = nicify(t)
    assert isomorphic(reduced.tree, LabelledTree.from_nested(PQ, (PQ.root, [(PQ_P, []), (PQ_Q, [])])))


def test_nicify_requires_strict_input():
    with pytest.raises(TreeError):
        nicify(LabelledTree.chain(P1, [SET_P, SET_P]))


def test_embedding_examples():
    big = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, [(SET_P, [])])]))
    hit = embeds_into(node(P1, SET_P), big)
    assert hit is not None and hit.mapping == {0: 2}
    collapse = embeds_into(LabelledTree.chain(P1, [SET_P, SET_P]), node(P1, SET_P))
    assert collapse.mapping == {0: 0, 1: 0}
    assert embeds_into(node(PQ, PQ_P), node(PQ, PQ_Q)) is None


def test_embedding_skips_levels():
    # edges may be sent to descendant pairs, not only to edges
    source = LabelledTree.chain(P1, [ROOT, SET_P])
    target = LabelledTree.chain(P1, [ROOT, EMPTY, SET_P])
    hit = embeds_into(source, target)
    assert hit.mapping == {0: 0, 1: 2}
    assert embeds_into(target, source) is None


def test_embedding_problems_are_reported():
    source = LabelledTree.chain(P1, [ROOT, SET_P])
    target = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, []), (SET_P, [])]))
    assert Embedding({0: 0, 1: 2}).verify(source, target)
    assert Embedding({0: 0}).problems(source, target) == ['node 1 is unmapped']
    assert Embedding({0: 0, 1: 1}).problems(source, target) == ['node 1 changes label']


def test_poset_mismatch():
    with pytest.raises(PosetMismatchError):
        embeds_into(node(P1, ROOT), node(PQ, PQ.root))


def test_equivalence_examples():
    t = LabelledTree.from_nested(P1, (ROOT, [(EMPTY, []), (SET_P, [])]))
    assert equivalent_sim(t, t)
    sim = equivalent_sim(LabelledTree.chain(P1, [SET_P, SET_P]), node(P1, SET_P))
    assert sim.equivalent
    assert sim.forward.verify(LabelledTree.chain(P1, [SET_P, SET_P]), node(P1, SET_P))
    assert not equivalent_sim(node(PQ, PQ_P), node(PQ, PQ_Q))


def test_sim_is_coarser_than_isomorphism():
    a = LabelledTree.from_nested(P1, (ROOT, [(SET_P, []), (SET_P, [])]))
    b = LabelledTree.chain(P1, [ROOT, SET_P])
    assert equivalent_sim(a, b)
    assert not isomorphic(a, b)


def test_sim_is_an_equivalence_on_small_trees():
    trees = list(all_trees(P1, 3))
    for s in trees:
        assert equivalent_sim(s, s)
    related = {(i, j) for i, j in itertools.product(range(len(trees)), repeat=2)
               if equivalent_sim(trees[i], trees[j])}
    for i, j in related:
        assert (j, i) in related
    for (i, j), (j2, k) in itertools.product(related, repeat=2):
        if j == j2:
            assert (i, k) in related


def check_reductions(tree):
    strict = strictify(tree)
    assert strict.tree.is_strict()
    assert len(strict.tree) <= len(tree)
    assert strict.forward.verify(tree, strict.tree)
    assert strict.backward.verify(strict.tree, tree)
    assert strict.tree.height() < tree.poset.card()
    nice = nicify(strict.tree)
    assert nice.tree.is_strict() and nice.tree.is_nice()
    assert len(nice.tree) <= len(strict.tree)
    assert nice.forward.verify(strict.tree, nice.tree)
    assert nice.backward.verify(nice.tree, strict.tree)
    assert equivalent_sim(tree, nice.tree)


@pytest.mark.parametrize('poset,max_nodes', [(P1, 5), (P2, 4)], ids=['width1', 'width2'])
def test_reduction_laws_on_all_small_trees(poset, max_nodes):
    for tree in all_trees(poset, max_nodes):
        check_reductions(tree)


@pytest.mark.slow
def test_reduction_laws_on_all_five_node_width2_trees():
    for tree in all_trees(P2, 5):
        check_reductions(tree)


def test_isomorphism_implies_sim():
    trees = list(all_trees(P2, 3))
    for s, t in itertools.combinations(trees, 2):
        if isomorphic(s, t):
            assert equivalent_sim(s, t)


def test_nlt_bound_examples():
    assert nlt_bound(0, 1) == 1
    assert nlt_bound(1, 1) == 2
    assert nlt_bound(1, 3) == 24
    assert nlt_bound(2, 1) == 4
    with pytest.raises(OverflowError):
        nlt_bound(3, 3)


def test_nice_tree_counts_small_posets():
    assert count_nice_trees(ChainPoset(1), 0) == 1
    assert count_nice_trees(ChainPoset(1), 4) == 1
    assert count_nice_trees(ChainPoset(2), 1) == 3
    # the chain -1 < {} < {0}: 1 + 2 + 8 trees
    assert count_nice_trees(P1, 2) == 11
    assert count_nice_trees(P1, 5) == 11


@pytest.mark.parametrize('poset,heights', [(P1, range(3)), (P2, range(2)), (ChainPoset(3), range(3))],
                         ids=['width1', 'width2', 'chain3'])
def test_nice_tree_counts_below_nlt(poset, heights):
    for h in heights:
        trees = list(enumerate_nice_trees(poset, h))
        assert len(trees) <= nlt_bound(h, poset.card())
        codes = [canonical_code(t) for t in trees]
        assert len(set(codes)) == len(codes)
        for t in trees:
            assert t.is_strict() and t.is_nice()
            assert t.height() <= h


def test_single_label_poset_has_one_nice_tree_but_nlt_overcounts():
    assert count_nice_trees(ChainPoset(1), 1) == 1
    assert nlt_bound(1, 1) == 2


def test_is_dreary_examples():
    assert is_dreary([]) is None
    assert is_dreary([node(P1, ROOT), node(P1, ROOT)]) == 1
    assert is_dreary([node(PQ, PQ_P), node(PQ, PQ_Q)]) is None
    family = [node(P1, ROOT), node(P1, SET_P), LabelledTree.chain(P1, [SET_P, SET_P])]
    assert is_dreary(family) == 2


def assert_streams_turn_dreary(draw, bound, seed=11):
    rng = random.Random(seed)
    for _ in range(STREAMS):
        stream = [draw(rng) for _ in range(bound)]
        assert any(is_dreary(stream[:n]) is not None for n in range(2, bound + 1))


def test_dreary_prefix_within_class_count():
    classes = classify(list(enumerate_nice_trees(P1, P1.card())))
    assert_streams_turn_dreary(
        lambda rng: sample_trees(P1, rng.randint(1, 5), 1, seed=rng.randrange(1 << 30))[0],
        len(classes) + 1)


def pool_classes(poset, max_nodes):
    """All trees up to max_nodes and the number of ~-classes among them, via their nice representatives."""
    pool = list(all_trees(poset, max_nodes))
    reps = {}
    for tree in pool:
        rep = normalize(tree)
        reps.setdefault(canonical_code(rep), rep)
    return pool, len(classify(list(reps.values())))


@pytest.mark.parametrize('poset', [P1, P2], ids=['width1', 'width2'])
def test_dreary_prefix_within_pool_class_count(poset):
    pool, count = pool_classes(poset, 4)
    assert 1 < count <= len(pool)
    assert_streams_turn_dreary(lambda rng: rng.choice(pool), count + 1)


def test_normalize_is_nice_representative():
    t = LabelledTree.from_nested(P1, (ROOT, [(ROOT, [(SET_P, [])]), (SET_P, [(SET_P, [])])]))
    rep = normalize(t)
    assert rep.is_nice() and rep.is_strict()
    assert isomorphic(rep, LabelledTree.chain(P1, [ROOT, SET_P]))


def test_tree_text_round_trip():
    t = parse_tree('(-1 ({} ({0})) ({0}))', P1)
    assert render_tree(t) == '(-1 ({} ({0})) ({0}))'
    assert parse_tree(render_tree(t), P1).code() == t.code()
    chain = parse_tree('(0 (1 (2)))', ChainPoset(3))
    assert chain.height() == 2


@pytest.mark.parametrize('text', ['', '(-1', '-1)', '(-1))', '({0} (-1))', '({5})', '(x)'])
def test_tree_syntax_errors(text):
    with pytest.raises(TreeSyntaxError):
        parse_tree(text, P1)


def test_reduction_rejects_bad_witness(monkeypatch):
    import ik4_core.ltree as ltree

    monkeypatch.setattr(ltree, 'identity_embedding', lambda tree: Embedding({}))
    with pytest.raises(InvariantViolation):
        strictify(LabelledTree.chain(P1, [SET_P, SET_P]))


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
