"""Bracket generators over {f, g} and tuple enumeration under order budgets.

The generator of order ``kappa`` and g-order ``j`` is the sum, over all
compositions ``r_1 + ... + r_j = kappa - j - 1`` with nonnegative parts, of
the nested bracket that starts from ``[f, g]``, brackets ``r_j`` times with
``f`` on the right, then once with ``g``, then ``r_{j-1}`` times with ``f``,
and so on, finishing with ``r_1`` brackets with ``f``.  The order-one
generator is ``f`` itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Union

from .polynomial import DimensionMismatch, PolyField, lie_bracket

Tree = Union[str, tuple]


@dataclass(frozen=True)
class BracketWord:
    """Binary bracket tree with leaves ``"F"`` and ``"G"``.

    A leaf is the string itself; an internal node is a ``(left, right)`` pair
    standing for ``[left, right]``.
    """

    tree: Tree

    def __post_init__(self):
        _validate_tree(self.tree)

    @classmethod
    def leaf(cls, symbol: str) -> BracketWord:
        return cls(symbol)

    def bracket(self, other: BracketWord) -> BracketWord:
        return BracketWord((self.tree, other.tree))

    @property
    def order(self) -> int:
        return _count(self.tree, None)

    @property
    def order_g(self) -> int:
        return _count(self.tree, "G")

    def evaluate(self, f: PolyField, g: PolyField) -> PolyField:
        return _eval_tree(self.tree, f, g)

    def __str__(self) -> str:
        return _render(self.tree)


def _validate_tree(t) -> None:
    if isinstance(t, str):
        if t not in ("F", "G"):
            raise ValueError(f"leaf must be 'F' or 'G', got {t!r}")
        return
    if not (isinstance(t, tuple) and len(t) == 2):
        raise ValueError(f"malformed bracket tree node {t!r}")
    _validate_tree(t[0])
    _validate_tree(t[1])


def _count(t, symbol) -> int:
    if isinstance(t, str):
        return 1 if symbol is None or t == symbol else 0
    return _count(t[0], symbol) + _count(t[1], symbol)


def _render(t) -> str:
    if isinstance(t, str):
        return t
    return f"[{_render(t[0])},{_render(t[1])}]"


def _eval_tree(t, f: PolyField, g: PolyField) -> PolyField:
    if t == "F":
        return f
    if t == "G":
        return g
    return lie_bracket(_eval_tree(t[0], f, g), _eval_tree(t[1], f, g))


@dataclass(frozen=True, order=True)
class GeneratorId:
    kappa: int
    j: int

    def __post_init__(self):
        valid = (self.kappa == 1 and self.j == 0) or (
            self.kappa >= 2 and 1 <= self.j <= self.kappa - 1)
        if not valid:
            raise ValueError(f"invalid generator index (kappa={self.kappa}, j={self.j})")

    def __str__(self) -> str:
        return f"lambda_{self.kappa}_{self.j}"


@dataclass(frozen=True)
class GeneratorSum:
    id: GeneratorId
    words: tuple[BracketWord, ...]
    field: PolyField

    @property
    def order(self) -> int:
        return self.id.kappa

    @property
    def order_g(self) -> int:
        return self.id.j


def _compositions(total: int, parts: int):
    """Weak compositions of ``total`` into ``parts`` parts, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _word_set(kappa: int, j: int) -> tuple[BracketWord, ...]:
    gid = GeneratorId(kappa, j)
    if gid.kappa == 1:
        return (BracketWord("F"),)
    words = []
    for r in _compositions(kappa - j - 1, j):
        # r = (r_1, ..., r_j); the innermost f-run is r_j, the outermost r_1
        tree: Tree = ("F", "G")
        for p in range(j - 1, -1, -1):
            for _ in range(r[p]):
                tree = (tree, "F")
            if p > 0:
                tree = (tree, "G")
        words.append(BracketWord(tree))
    return tuple(words)


def lambda_word_set(gid: GeneratorId | tuple[int, int]) -> list[BracketWord]:
    """Summand words of a generator, one per composition, in lexicographic order of ``r``."""
    if not isinstance(gid, GeneratorId):
        gid = GeneratorId(*gid)
    return list(_word_set(gid.kappa, gid.j))


@lru_cache(maxsize=4096)
def _instantiate(kappa: int, j: int, f: PolyField, g: PolyField) -> GeneratorSum:
    gid = GeneratorId(kappa, j)
    words = _word_set(kappa, j)
    field = PolyField.zero(f.dimension)
    for w in words:
        field = field + w.evaluate(f, g)
    return GeneratorSum(gid, words, field)


def instantiate_generator(gid: GeneratorId | tuple[int, int], f: PolyField, g: PolyField) -> GeneratorSum:
    if not isinstance(gid, GeneratorId):
        gid = GeneratorId(*gid)
    if f.dimension != g.dimension:
        raise DimensionMismatch(f"f has dimension {f.dimension}, g has {g.dimension}")
    return _instantiate(gid.kappa, gid.j, f, g)


def generator_ids(max_order: int) -> list[GeneratorId]:
    """Valid ids with ``kappa <= max_order`` ordered by ``(kappa, j)``."""
    if max_order < 1:
        raise ValueError(f"max_order must be >= 1, got {max_order}")
    ids = [GeneratorId(1, 0)]
    for kappa in range(2, max_order + 1):
        ids.extend(GeneratorId(kappa, j) for j in range(1, kappa))
    return ids


def basis_up_to(max_order: int, f: PolyField, g: PolyField) -> list[GeneratorSum]:
    return [instantiate_generator(gid, f, g) for gid in generator_ids(max_order)]


def summand_count(kappa: int, j: int) -> int:
    """Number of words in a generator: ``C(kappa-2, j-1)`` for ``kappa >= 2``."""
    if kappa == 1:
        return 1
    return comb(kappa - 2, j - 1)


@dataclass(frozen=True)
class TupleBudget:
    """Constraint on a tuple of generators ``(D_1, ..., D_k)``.

    ``kind`` is one of

    * ``"order_at_most"``: total order ``<= order``;
    * ``"exact"``: total order ``== order`` and total g-order ``== g``;
    * ``"g_at_most"``: total order ``== order`` and total g-order ``<= g``.
    """

    kind: str
    order: int
    g: int | None = None

    def __post_init__(self):
        if self.kind not in ("order_at_most", "exact", "g_at_most"):
            raise ValueError(f"unknown budget kind {self.kind!r}")
        if self.order < 1:
            raise ValueError(f"budget order must be >= 1, got {self.order}")
        if self.kind != "order_at_most" and (self.g is None or self.g < 0):
            raise ValueError(f"budget {self.kind!r} needs a nonnegative g-order")

    @classmethod
    def order_at_most(cls, n: int) -> TupleBudget:
        return cls("order_at_most", n)

    @classmethod
    def exact(cls, order: int, g: int) -> TupleBudget:
        return cls("exact", order, g)

    @classmethod
    def g_at_most(cls, order: int, g: int) -> TupleBudget:
        return cls("g_at_most", order, g)

    def admits(self, ids: tuple[GeneratorId, ...]) -> bool:
        total = sum(i.kappa for i in ids)
        total_g = sum(i.j for i in ids)
        if self.kind == "order_at_most":
            return 1 <= total <= self.order
        if total != self.order:
            return False
        if self.kind == "exact":
            return total_g == self.g
        return total_g <= self.g

    def __str__(self) -> str:
        if self.kind == "order_at_most":
            return f"order<={self.order}"
        op = "=" if self.kind == "exact" else "<="
        return f"order={self.order},order_g{op}{self.g}"


@lru_cache(maxsize=None)
def enumerate_id_tuples(budget: TupleBudget) -> tuple[tuple[GeneratorId, ...], ...]:
    """All ordered id tuples satisfying ``budget``, by total order then lexicographically."""
    ids = generator_ids(budget.order)
    found = []

    def extend(prefix: tuple, remaining: int):
        if prefix and budget.admits(prefix):
            found.append(prefix)
        for gid in ids:
            if gid.kappa <= remaining:
                extend(prefix + (gid,), remaining - gid.kappa)

    extend((), budget.order)
    found.sort(key=lambda t: (sum(i.kappa for i in t), len(t), t))
    return tuple(found)


def enumerate_tuples(budget: TupleBudget, f: PolyField, g: PolyField) -> list[tuple[GeneratorSum, ...]]:
    return [tuple(instantiate_generator(gid, f, g) for gid in t)
            for t in enumerate_id_tuples(budget)]
