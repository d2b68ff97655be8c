import itertools
from math import comb

import numpy as np
import pytest

from sdfstab.generators import (BracketWord, GeneratorId, TupleBudget, basis_up_to,
                                enumerate_id_tuples, enumerate_tuples, generator_ids,
                                instantiate_generator, lambda_word_set, summand_count)
from sdfstab.polynomial import PolyField, PolyScalar

from conftest import random_field

x1, x2 = PolyScalar.variables(2)
ZERO = PolyScalar.zero(2)
G = PolyField([ZERO, PolyScalar.constant(2, 1.0)])

# word lists as printed in the defining text, lowercased
LISTED = {
    (2, 1): ["[f,g]"],
    (3, 1): ["[[f,g],f]"],
    (3, 2): ["[[f,g],g]"],
    (4, 1): ["[[[f,g],f],f]"],
    (4, 2): ["[[[f,g],f],g]", "[[[f,g],g],f]"],
    (4, 3): ["[[[f,g],g],g]"],
    (5, 1): ["[[[[f,g],f],f],f]"],
    (5, 2): ["[[[[f,g],f],f],g]", "[[[[f,g],f],g],f]", "[[[[f,g],g],f],f]"],
}


def words(kappa, j):
    return [str(w).lower() for w in lambda_word_set(GeneratorId(kappa, j))]


@pytest.mark.parametrize("gid", sorted(LISTED))
def test_listed_generators(gid):
    assert words(*gid) == LISTED[gid]


def test_lambda_5_3_and_5_4_follow_definition():
    assert words(5, 3) == ["[[[[f,g],f],g],g]", "[[[[f,g],g],f],g]", "[[[[f,g],g],g],f]"]
    assert words(5, 4) == ["[[[[f,g],g],g],g]"]


def test_order_one_generator():
    assert [str(w) for w in lambda_word_set(GeneratorId(1, 0))] == ["F"]


@pytest.mark.parametrize("kappa,j", [(1, 1), (2, 0), (3, 3), (0, 0), (2, 2)])
def test_invalid_ids(kappa, j):
    with pytest.raises(ValueError):
        GeneratorId(kappa, j)


def test_summand_count_law():
    for kappa in range(2, 7):
        for j in range(1, kappa):
            ws = lambda_word_set(GeneratorId(kappa, j))
            assert len(ws) == comb(kappa - 2, j - 1) == summand_count(kappa, j)
            assert all(w.order == kappa and w.order_g == j for w in ws)
            assert len(set(ws)) == len(ws)


def test_instantiate_examples():
    f2 = PolyField([x1 * x2, ZERO])
    assert instantiate_generator((2, 1), f2, G).field == PolyField([-x1, ZERO])
    f3 = PolyField([-x1 * x2 ** 2, ZERO])
    assert instantiate_generator((3, 2), f3, G).field == PolyField([-2 * x1, ZERO])
    assert instantiate_generator((1, 0), f3, G).field == f3


def test_instantiate_is_sum_of_words(rng):
    f, g = random_field(rng, 2), random_field(rng, 2)
    for gid in generator_ids(5):
        gen = instantiate_generator(gid, f, g)
        for p in rng.uniform(-1, 1, size=(5, 2)):
            total = sum(np.asarray(w.evaluate(f, g)(p)) for w in gen.words)
            np.testing.assert_allclose(gen.field(p), total, rtol=1e-12, atol=1e-12)


def test_basis_up_to():
    f = PolyField([x1 * x2, ZERO])
    ids = lambda n: [b.id for b in basis_up_to(n, f, G)]  # noqa: E731
    assert ids(1) == [GeneratorId(1, 0)]
    assert ids(2) == [GeneratorId(1, 0), GeneratorId(2, 1)]
    assert ids(3) == [GeneratorId(1, 0), GeneratorId(2, 1), GeneratorId(3, 1), GeneratorId(3, 2)]


def L(k, j):
    return GeneratorId(k, j)


def test_tuple_examples():
    assert set(enumerate_id_tuples(TupleBudget.order_at_most(2))) == {
        (L(1, 0),), (L(2, 1),), (L(1, 0), L(1, 0))}
    assert set(enumerate_id_tuples(TupleBudget.exact(3, 1))) == {
        (L(3, 1),), (L(1, 0), L(2, 1)), (L(2, 1), L(1, 0))}
    assert enumerate_id_tuples(TupleBudget.order_at_most(1)) == ((L(1, 0),),)


def test_budget_validation():
    with pytest.raises(ValueError):
        TupleBudget.order_at_most(0)
    with pytest.raises(ValueError):
        TupleBudget.exact(3, -1)


def _compositions(total):
    if total == 0:
        yield ()
        return
    for first in range(1, total + 1):
        for rest in _compositions(total - first):
            yield (first,) + rest


def _brute(predicate, max_order):
    """All id sequences with total order <= max_order, built from ordered kappa compositions."""
    by_kappa = {}
    for gid in generator_ids(max_order):
        by_kappa.setdefault(gid.kappa, []).append(gid)
    out = set()
    for total in range(1, max_order + 1):
        for comp in _compositions(total):
            for t in itertools.product(*(by_kappa[c] for c in comp)):
                if predicate(t):
                    out.add(t)
    return out


@pytest.mark.parametrize("N", range(1, 6))
def test_tuple_counts_match_brute_force(N):
    order = lambda t: sum(i.kappa for i in t)  # noqa: E731
    gord = lambda t: sum(i.j for i in t)  # noqa: E731
    assert set(enumerate_id_tuples(TupleBudget.order_at_most(N))) == _brute(lambda t: order(t) <= N, N)
    for q in range(0, N + 1):
        assert set(enumerate_id_tuples(TupleBudget.exact(N + 1, q))) == \
            _brute(lambda t: order(t) == N + 1 and gord(t) == q, N + 1)
    assert set(enumerate_id_tuples(TupleBudget.g_at_most(N + 1, N - 1))) == \
        _brute(lambda t: order(t) == N + 1 and gord(t) <= N - 1, N + 1)


def test_enumerate_tuples_instantiates():
    f = PolyField([x1 * x2, ZERO])
    tups = enumerate_tuples(TupleBudget.order_at_most(2), f, G)
    assert [tuple(s.id for s in t) for t in tups] == list(enumerate_id_tuples(TupleBudget.order_at_most(2)))


def test_bracket_word_validation():
    with pytest.raises(ValueError):
        BracketWord("H")
    w = BracketWord.leaf("F").bracket(BracketWord.leaf("G"))
    assert (w.order, w.order_g, str(w)) == (2, 1, "[F,G]")
