"""Single-input affine system ``x' = f(x) + u g(x)`` with a Lyapunov candidate ``V``."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .generators import GeneratorId, instantiate_generator
from .polynomial import (DimensionMismatch, PolyField, PolyScalar, apply_to_scalar,
                         compile_tuple_function)


class System:
    """Dynamics ``f``, input field ``g`` and Lyapunov candidate ``V``.

    The constructor enforces the symbolic necessary conditions: ``f(0) = 0``,
    ``V(0) = 0`` and no linear terms in ``V``.  Derived polynomials (generator
    fields, nested derivatives of ``V``) are computed once and memoised; the
    caches only ever grow by inserting a value for a fresh key, so concurrent
    readers see either nothing or the final value.
    """

    def __init__(self, f: PolyField, g: PolyField, V: PolyScalar,
                 name: str = "", theta: PolyScalar | None = None):
        n = f.dimension
        if g.dimension != n or V.dimension != n:
            raise DimensionMismatch(
                f"f, g, V have dimensions {f.dimension}, {g.dimension}, {V.dimension}")
        if any(c.constant_term != 0.0 for c in f.components):
            raise ValueError("f(0) must vanish: some component of f has a constant term")
        if V.constant_term != 0.0:
            raise ValueError("V(0) must vanish")
        if V.linear_part():
            raise ValueError("V has linear terms, so it cannot be positive definite")
        if theta is not None and theta.dimension != n:
            raise DimensionMismatch(f"theta has dimension {theta.dimension}, expected {n}")
        self.f = f
        self.g = g
        self.V = V
        self.name = name
        self.theta = theta
        self._tuple_polys: dict[tuple, PolyScalar] = {}
        self._word_polys: dict[str, PolyScalar] = {"": V}
        self._rhs = None

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return (f"System{label}(f={self.f!r}, g={self.g!r}, V={self.V.to_expr()!r})")

    @property
    def dimension(self) -> int:
        return self.f.dimension

    def structurally_equal(self, other: System) -> bool:
        return self.f == other.f and self.g == other.g and self.V == other.V

    # derived polynomials ---------------------------------------------------

    def generator(self, gid: GeneratorId | tuple[int, int]):
        return instantiate_generator(gid, self.f, self.g)

    def tuple_poly(self, ids: Sequence[GeneratorId]) -> PolyScalar:
        """``(D_1 D_2 ... D_k V)`` for generator ids ``D_p``; ``D_k`` acts first."""
        ids = tuple(i if isinstance(i, GeneratorId) else GeneratorId(*i) for i in ids)
        cached = self._tuple_polys.get(ids)
        if cached is not None:
            return cached
        if not ids:
            poly = self.V
        else:
            inner = self.tuple_poly(ids[1:])
            poly = apply_to_scalar(self.generator(ids[0]).field, inner)
        self._tuple_polys.setdefault(ids, poly)
        return self._tuple_polys[ids]

    def word_poly(self, word: str) -> PolyScalar:
        """``(w_1 (w_2 (... w_n V)))`` for a word over ``{"f", "g"}``."""
        cached = self._word_polys.get(word)
        if cached is not None:
            return cached
        head = word[0]
        if head == "f":
            field = self.f
        elif head == "g":
            field = self.g
        else:
            raise ValueError(f"word letters must be 'f' or 'g', got {head!r}")
        poly = apply_to_scalar(field, self.word_poly(word[1:]))
        self._word_polys.setdefault(word, poly)
        return self._word_polys[word]

    def words(self, length: int):
        return ("".join(w) for w in itertools.product("fg", repeat=length))

    @property
    def fV(self) -> PolyScalar:
        return self.word_poly("f")

    @property
    def gV(self) -> PolyScalar:
        return self.word_poly("g")

    def f_power_V(self, k: int) -> PolyScalar:
        return self.word_poly("f" * k)

    # numerics --------------------------------------------------------------

    def rhs(self):
        """Compiled ``(x, u) -> f(x) + u g(x)`` returning a tuple."""
        if self._rhs is None:
            self._rhs = compile_tuple_function(self.f.components, self.g.components)
        return self._rhs

    def positivity_check(self, region, grid: int = 21) -> tuple[bool, np.ndarray | None]:
        """Sampled check that ``V > 0`` away from the origin on a box.

        Diagnostic only; returns ``(ok, first_bad_point)``.
        """
        axes = [np.linspace(lo, hi, grid) for lo, hi in region]
        for p in itertools.product(*axes):
            if any(p) and not self.V(p) > 0.0:
                return False, np.array(p)
        return True, None
