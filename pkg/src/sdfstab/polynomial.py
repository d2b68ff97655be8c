"""Exact calculus on multivariate polynomial scalar and vector fields.

A :class:`PolyScalar` is a finite map from exponent multi-indices to real
coefficients; a :class:`PolyField` is a list of such scalars, one per
coordinate.  Differentiation is symbolic, so directional derivatives and Lie
brackets of any order are exact up to floating-point coefficient round-off.

Conventions follow ``XY := (DY) X``: applying a field ``X`` to a scalar ``V``
gives ``XV = grad(V) . X`` and the bracket is ``[X, Y] = (DY) X - (DX) Y``.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping, Sequence

import numpy as np

#: coefficients below this magnitude are dropped after every operation
PRUNE_TOL = 1e-12


class DimensionMismatch(ValueError):
    pass


def _grlex_key(exps: tuple[int, ...]) -> tuple:
    return (sum(exps), exps)


class PolyScalar:
    """Polynomial ``R^n -> R`` in canonical (pruned, graded-lex ordered) form.

    Parameters
    ----------
    dimension : int
        Number of variables.
    terms : mapping
        ``{(e_1, ..., e_n): coefficient}``.

    Instances are immutable and hashable.
    """

    __slots__ = ("_dim", "_terms", "_hash", "_fn", "_derivs")

    def __init__(self, dimension: int, terms: Mapping[tuple[int, ...], float] | None = None):
        if dimension < 1:
            raise ValueError(f"dimension must be positive, got {dimension}")
        clean: dict[tuple[int, ...], float] = {}
        for exps, c in (terms or {}).items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != dimension:
                raise DimensionMismatch(
                    f"multi-index {exps} has length {len(exps)}, expected {dimension}")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            c = float(c)
            if abs(c) >= PRUNE_TOL:
                clean[exps] = clean.get(exps, 0.0) + c
        self._dim = dimension
        self._terms = {k: clean[k] for k in sorted(clean, key=_grlex_key)
                       if abs(clean[k]) >= PRUNE_TOL}
        self._hash = None
        self._fn = None
        self._derivs: dict[int, PolyScalar] = {}

    # construction helpers -------------------------------------------------

    @classmethod
    def zero(cls, dimension: int) -> PolyScalar:
        return cls(dimension)

    @classmethod
    def constant(cls, dimension: int, value: float) -> PolyScalar:
        return cls(dimension, {(0,) * dimension: value})

    @classmethod
    def variable(cls, dimension: int, index: int) -> PolyScalar:
        """The coordinate function ``x_{index+1}`` (``index`` is 0-based)."""
        if not 0 <= index < dimension:
            raise IndexError(f"variable index {index} out of range for dimension {dimension}")
        exps = [0] * dimension
        exps[index] = 1
        return cls(dimension, {tuple(exps): 1.0})

    @classmethod
    def variables(cls, dimension: int) -> list[PolyScalar]:
        return [cls.variable(dimension, i) for i in range(dimension)]

    # basic properties -----------------------------------------------------

    @property
    def dimension(self) -> int:
        return self._dim

    @property
    def terms(self) -> dict[tuple[int, ...], float]:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    @property
    def degree(self) -> int:
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    @property
    def constant_term(self) -> float:
        return self._terms.get((0,) * self._dim, 0.0)

    def linear_part(self) -> dict[int, float]:
        out = {}
        for exps, c in self._terms.items():
            if sum(exps) == 1:
                out[exps.index(1)] = c
        return out

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, float)):
            other = PolyScalar.constant(self._dim, other)
        if not isinstance(other, PolyScalar):
            return NotImplemented
        return self._dim == other._dim and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._dim, tuple(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        return f"PolyScalar({self._dim}, {self.to_expr()!r})"

    # arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> PolyScalar:
        if isinstance(other, PolyScalar):
            if other._dim != self._dim:
                raise DimensionMismatch(f"dimensions {self._dim} and {other._dim} differ")
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return PolyScalar.constant(self._dim, float(other))
        return NotImplemented

    def __add__(self, other) -> PolyScalar:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0.0) + c
        return PolyScalar(self._dim, out)

    __radd__ = __add__

    def __neg__(self) -> PolyScalar:
        return PolyScalar(self._dim, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other) -> PolyScalar:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> PolyScalar:
        return (-self) + other

    def __mul__(self, other) -> PolyScalar:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        # fsum rounds each coefficient once, so a * b == b * a bit for bit
        parts: dict[tuple[int, ...], list[float]] = {}
        for ka, ca in self._terms.items():
            for kb, cb in other._terms.items():
                parts.setdefault(tuple(a + b for a, b in zip(ka, kb)), []).append(ca * cb)
        return PolyScalar(self._dim, {k: math.fsum(v) for k, v in parts.items()})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> PolyScalar:
        if not isinstance(n, (int, np.integer)) or n < 0:
            raise ValueError(f"polynomial power must be a nonnegative integer, got {n!r}")
        result = PolyScalar.constant(self._dim, 1.0)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c: float) -> PolyScalar:
        return PolyScalar(self._dim, {k: c * v for k, v in self._terms.items()})

    # calculus -------------------------------------------------------------

    def derivative(self, index: int) -> PolyScalar:
        """Partial derivative with respect to ``x_{index+1}``."""
        cached = self._derivs.get(index)
        if cached is not None:
            return cached
        if not 0 <= index < self._dim:
            raise IndexError(f"variable index {index} out of range")
        out = {}
        for exps, c in self._terms.items():
            e = exps[index]
            if e:
                k = list(exps)
                k[index] = e - 1
                out[tuple(k)] = c * e
        d = PolyScalar(self._dim, out)
        self._derivs[index] = d
        return d

    def gradient(self) -> list[PolyScalar]:
        return [self.derivative(i) for i in range(self._dim)]

    def substitute(self, index: int, value: float) -> PolyScalar:
        """Fix ``x_{index+1} = value``; the dimension is kept."""
        out: dict[tuple[int, ...], float] = {}
        for exps, c in self._terms.items():
            k = list(exps)
            e = k[index]
            k[index] = 0
            k = tuple(k)
            out[k] = out.get(k, 0.0) + c * value ** e
        return PolyScalar(self._dim, out)

    # evaluation -----------------------------------------------------------

    def source(self, names: Sequence[str] | None = None) -> str:
        """Python expression evaluating the polynomial in the given variable names."""
        if names is None:
            names = [f"x{i}" for i in range(self._dim)]
        parts = []
        for exps, c in self._terms.items():
            factors = [repr(c)]
            for name, e in zip(names, exps):
                if e == 1:
                    factors.append(name)
                elif e > 1:
                    factors.append(f"{name}**{e}")
            parts.append("*".join(factors))
        return " + ".join(parts) if parts else "0.0"

    def _compile(self):
        names = [f"x{i}" for i in range(self._dim)]
        src = f"def _ev({', '.join(names)}):\n    return {self.source(names)}\n"
        scope: dict = {}
        exec(src, scope)
        return scope["_ev"]

    def __call__(self, x: Sequence[float]) -> float:
        """Evaluate at ``x``; ``x`` may also be a sequence of equally shaped arrays."""
        if len(x) != self._dim:
            raise DimensionMismatch(f"point has {len(x)} coordinates, expected {self._dim}")
        if self._fn is None:
            self._fn = self._compile()
        return self._fn(*x)

    # printing -------------------------------------------------------------

    def to_expr(self, names: Sequence[str] | None = None) -> str:
        """Render in the ``+ - * ^`` grammar understood by :mod:`sdfstab.parser`."""
        if names is None:
            names = [f"x{i + 1}" for i in range(self._dim)]
        if not self._terms:
            return "0"
        out = []
        for n, (exps, c) in enumerate(self._terms.items()):
            factors = [names[i] if e == 1 else f"{names[i]}^{e}"
                       for i, e in enumerate(exps) if e]
            mag = abs(c)
            if factors and mag == 1.0:
                body = "*".join(factors)
            else:
                body = "*".join([repr(mag)] + factors)
            if n == 0:
                out.append(("-" if c < 0 else "") + body)
            else:
                out.append((" - " if c < 0 else " + ") + body)
        return "".join(out)


class PolyField:
    """Polynomial vector field ``R^n -> R^n``."""

    __slots__ = ("_components", "_hash", "_fn", "_jac")

    def __init__(self, components: Iterable[PolyScalar | float]):
        comps = list(components)
        if not comps:
            raise ValueError("a vector field needs at least one component")
        dim = next((c.dimension for c in comps if isinstance(c, PolyScalar)), len(comps))
        fixed = []
        for c in comps:
            if not isinstance(c, PolyScalar):
                c = PolyScalar.constant(dim, float(c))
            if c.dimension != dim:
                raise DimensionMismatch(f"component of dimension {c.dimension}, expected {dim}")
            fixed.append(c)
        if len(fixed) != dim:
            raise DimensionMismatch(f"{len(fixed)} components for a field on R^{dim}")
        self._components = tuple(fixed)
        self._hash = None
        self._fn = None
        self._jac = None

    @classmethod
    def zero(cls, dimension: int) -> PolyField:
        return cls([PolyScalar.zero(dimension)] * dimension)

    @classmethod
    def linear(cls, matrix) -> PolyField:
        """The field ``x -> A x``."""
        a = np.asarray(matrix, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n):
            raise DimensionMismatch(f"matrix must be square, got shape {a.shape}")
        xs = PolyScalar.variables(n)
        comps = []
        for i in range(n):
            comps.append(sum((a[i, j] * xs[j] for j in range(n)), PolyScalar.zero(n)))
        return cls(comps)

    @property
    def dimension(self) -> int:
        return len(self._components)

    @property
    def components(self) -> tuple[PolyScalar, ...]:
        return self._components

    def __getitem__(self, i: int) -> PolyScalar:
        return self._components[i]

    def __iter__(self):
        return iter(self._components)

    def __len__(self) -> int:
        return len(self._components)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self._components)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PolyField):
            return NotImplemented
        return self._components == other._components

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self._components)
        return self._hash

    def __repr__(self) -> str:
        return "PolyField([" + ", ".join(c.to_expr() for c in self._components) + "])"

    def _check(self, other: PolyField) -> None:
        if other.dimension != self.dimension:
            raise DimensionMismatch(f"fields of dimension {self.dimension} and {other.dimension}")

    def __add__(self, other: PolyField) -> PolyField:
        self._check(other)
        return PolyField([a + b for a, b in zip(self._components, other._components)])

    def __sub__(self, other: PolyField) -> PolyField:
        self._check(other)
        return PolyField([a - b for a, b in zip(self._components, other._components)])

    def __neg__(self) -> PolyField:
        return PolyField([-a for a in self._components])

    def scale(self, c: float) -> PolyField:
        return PolyField([a.scale(c) for a in self._components])

    def __mul__(self, c) -> PolyField:
        if isinstance(c, PolyScalar):
            return PolyField([c * a for a in self._components])
        return self.scale(float(c))

    __rmul__ = __mul__

    def jacobian(self) -> list[list[PolyScalar]]:
        """``J[i][j] = d X_i / d x_j``."""
        if self._jac is None:
            self._jac = [[c.derivative(j) for j in range(self.dimension)]
                         for c in self._components]
        return self._jac

    def compiled(self):
        """Plain-Python callable ``x -> tuple`` (fast path for integrators)."""
        if self._fn is None:
            self._fn = compile_tuple_function(self._components)
        return self._fn

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        return eval_field(self, x)


def compile_tuple_function(components: Sequence[PolyScalar],
                           extra: Sequence[PolyScalar] | None = None):
    """``x -> tuple(c(x))``, or ``(x, u) -> tuple(c(x) + u e(x))`` when ``extra`` is given."""
    dim = components[0].dimension
    names = [f"x{i}" for i in range(dim)]
    unpack = f"    {', '.join(names)}, = x\n"
    if extra is None:
        items = [c.source(names) for c in components]
        head = "def _ev(x):\n"
    else:
        items = []
        for c, e in zip(components, extra):
            item = c.source(names)
            if not e.is_zero():
                item = f"({item}) + u * ({e.source(names)})"
            items.append(item)
        head = "def _ev(x, u):\n"
    src = head + unpack + f"    return ({', '.join(items)},)\n"
    scope: dict = {}
    exec(src, scope)
    return scope["_ev"]


def eval_field(X: PolyField, x: Sequence[float]) -> np.ndarray:
    if len(x) != X.dimension:
        raise DimensionMismatch(f"point has {len(x)} coordinates, field dimension is {X.dimension}")
    return np.array([c(x) for c in X.components], dtype=float)


def apply_to_scalar(X: PolyField, V: PolyScalar) -> PolyScalar:
    """The scalar polynomial ``XV = grad(V) . X``."""
    if X.dimension != V.dimension:
        raise DimensionMismatch(f"field dimension {X.dimension} vs scalar dimension {V.dimension}")
    out = PolyScalar.zero(V.dimension)
    for i, comp in enumerate(X.components):
        if comp.is_zero():
            continue
        dv = V.derivative(i)
        if dv.is_zero():
            continue
        out = out + comp * dv
    return out


def apply_to_field(X: PolyField, Y: PolyField) -> PolyField:
    """``XY := (DY) X`` for a vector field ``Y``."""
    if X.dimension != Y.dimension:
        raise DimensionMismatch(f"fields of dimension {X.dimension} and {Y.dimension}")
    return PolyField([apply_to_scalar(X, comp) for comp in Y.components])


def lie_bracket(X: PolyField, Y: PolyField) -> PolyField:
    """``[X, Y] = (DY) X - (DX) Y``."""
    return apply_to_field(X, Y) - apply_to_field(Y, X)


def iterated_poly(ws: Sequence[PolyField], V: PolyScalar) -> PolyScalar:
    """``ws[0](ws[1](... ws[-1] V))`` as a polynomial."""
    out = V
    for w in reversed(ws):
        out = apply_to_scalar(w, out)
    return out


def iterated_apply(ws: Sequence[PolyField], V: PolyScalar, x: Sequence[float]) -> float:
    """Value at ``x`` of the nested directional derivative; the last field acts first."""
    if len(x) != V.dimension:
        raise DimensionMismatch(f"point has {len(x)} coordinates, expected {V.dimension}")
    return float(iterated_poly(ws, V)(x))
