"""Cascade family ``x' = a(x) + y b(x) + y^2 c(x) + y^3 d(x)``, ``y' = u`` and its benchmark instances.

Here ``x`` lives in ``R^n``, ``y`` is scalar, ``g = (0, ..., 0, 1)`` and the
Lyapunov candidate is ``V(x, y) = W(x) + y^2``.  The drift coefficients
``a, beta, gamma, delta`` are vector fields on ``R^n`` (scalars when ``n = 1``).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .certificate import ToleranceMap
from .generators import GeneratorId
from .polynomial import (DimensionMismatch, PolyField, PolyScalar, apply_to_scalar,
                         lie_bracket)
from .system import System

FieldLike = Union[PolyField, PolyScalar, float, int]


def _as_field(v: FieldLike, n: int, name: str) -> PolyField:
    if isinstance(v, PolyField):
        field_ = v
    elif isinstance(v, PolyScalar):
        if n != 1:
            raise DimensionMismatch(f"{name} must be a vector field on R^{n}, got a scalar")
        field_ = PolyField([v])
    else:
        field_ = PolyField([PolyScalar.constant(n, float(v))] * n)
    if field_.dimension != n:
        raise DimensionMismatch(f"{name} has dimension {field_.dimension}, expected {n}")
    return field_


@dataclass(frozen=True)
class CaseFamilySpec:
    n: int
    a: PolyField
    beta: PolyField
    gamma: PolyField
    delta: PolyField
    W: PolyScalar
    name: str = field(default="", compare=False)

    def __post_init__(self):
        for attr in ("a", "beta", "gamma", "delta"):
            object.__setattr__(self, attr, _as_field(getattr(self, attr), self.n, attr))
        if self.W.dimension != self.n:
            raise DimensionMismatch(f"W has dimension {self.W.dimension}, expected {self.n}")
        if any(c.constant_term != 0.0 for c in self.a.components):
            raise ValueError("a(0) must vanish")
        if self.W.constant_term != 0.0 or self.W.linear_part():
            raise ValueError("W must vanish at 0 and have no linear terms")

    def lie(self, X: PolyField) -> PolyScalar:
        """``XW`` on ``R^n``."""
        return apply_to_scalar(X, self.W)


def _lift(p: PolyScalar, dim: int) -> PolyScalar:
    pad = (0,) * (dim - p.dimension)
    return PolyScalar(dim, {k + pad: c for k, c in p.terms.items()})


def build_case_system(spec: CaseFamilySpec) -> System:
    n = spec.n
    dim = n + 1
    y = PolyScalar.variable(dim, n)
    comps = []
    for i in range(n):
        comps.append(_lift(spec.a[i], dim) + y * _lift(spec.beta[i], dim)
                     + y ** 2 * _lift(spec.gamma[i], dim) + y ** 3 * _lift(spec.delta[i], dim))
    comps.append(PolyScalar.zero(dim))
    f = PolyField(comps)
    g = PolyField([PolyScalar.zero(dim)] * n + [PolyScalar.constant(dim, 1.0)])
    V = _lift(spec.W, dim) + y ** 2
    return System(f, g, V, name=spec.name)


@dataclass(frozen=True)
class ESetValues:
    aW: float
    betaW: float
    gammaW: float
    deltaW: float
    a_gamma_a_W: float
    a_delta_W: float


def e_set_values(spec: CaseFamilySpec, x) -> ESetValues:
    a, c, d = spec.a, spec.gamma, spec.delta
    return ESetValues(
        float(spec.lie(a)(x)),
        float(spec.lie(spec.beta)(x)),
        float(spec.lie(c)(x)),
        float(spec.lie(d)(x)),
        float(spec.lie(lie_bracket(lie_bracket(a, c), a))(x)),
        float(spec.lie(lie_bracket(a, d))(x)),
    )


def classify_E(spec: CaseFamilySpec, x, tol: ToleranceMap = ToleranceMap()) -> str | None:
    """First of ``"E1"`` ... ``"E5"`` whose defining conditions hold at ``x``; ``None`` otherwise."""
    x = tuple(float(v) for v in np.atleast_1d(x))
    if len(x) != spec.n:
        raise DimensionMismatch(f"point has {len(x)} coordinates, expected {spec.n}")
    if not any(x):
        raise ValueError("the E-sets exclude the origin")
    v = e_set_values(spec, x)
    s = max(abs(float(spec.W(x))), abs(v.aW), abs(v.betaW), abs(v.gammaW), abs(v.deltaW))
    zero = lambda t: tol.is_zero(t, s)  # noqa: E731
    neg = lambda t: tol.is_negative(t, s)  # noqa: E731
    if neg(v.aW):
        return "E1"
    if not tol.is_positive(v.aW, s) and not zero(v.betaW):
        return "E2"
    if zero(v.aW) and zero(v.betaW) and neg(v.gammaW):
        return "E3"
    if zero(v.aW) and zero(v.betaW) and zero(v.gammaW) and not zero(v.deltaW):
        return "E4"
    if (zero(v.aW) and zero(v.betaW) and zero(v.gammaW) and zero(v.deltaW)
            and zero(v.a_gamma_a_W) and not zero(v.a_delta_W)):
        return "E5"
    return None


@dataclass
class CaseClaimsReport:
    points: int
    max_mismatch: dict[str, float]

    def passed(self, threshold: float = 1e-9) -> dict[str, bool]:
        return {k: v <= threshold for k, v in self.max_mismatch.items()}


#: (generator id, coefficient, closed form in the case parameters) for each identity at y = 0
def _claims(spec: CaseFamilySpec):
    return {
        "lambda_2_1": (GeneratorId(2, 1), -1.0, spec.lie(spec.beta)),
        "lambda_3_2": (GeneratorId(3, 2), 2.0, spec.lie(spec.gamma)),
        "lambda_4_3": (GeneratorId(4, 3), -6.0, spec.lie(spec.delta)),
        "lambda_5_3": (GeneratorId(5, 3), 6.0, spec.lie(lie_bracket(spec.a, spec.delta))),
    }


def verify_case_claims(spec: CaseFamilySpec, region, grid: int = 41) -> CaseClaimsReport:
    """Compare generator derivatives of ``V`` with their closed forms at grid points ``(x, 0)``."""
    if len(region) != spec.n:
        raise DimensionMismatch(f"region has {len(region)} axes, expected {spec.n}")
    sys_ = build_case_system(spec)
    claims = _claims(spec)
    worst = {k: 0.0 for k in claims}
    axes = [np.linspace(lo, hi, grid) for lo, hi in region]
    count = 0
    for p in itertools.product(*axes):
        point = tuple(p) + (0.0,)
        for name, (gid, coeff, closed) in claims.items():
            lhs = float(sys_.tuple_poly((gid,))(point))
            rhs = coeff * float(closed(p))
            worst[name] = max(worst[name], abs(lhs - rhs))
        count += 1
    return CaseClaimsReport(count, worst)


def _x(n: int = 1) -> list[PolyScalar]:
    return PolyScalar.variables(n)


def _registry() -> dict[str, CaseFamilySpec]:
    (x,) = _x(1)
    zero1 = PolyScalar.zero(1)
    x1, x2 = _x(2)
    zero2 = PolyField.zero(2)
    return {
        "case1": CaseFamilySpec(1, -(x ** 3), zero1, zero1, zero1, x ** 2, name="case1"),
        "case2i": CaseFamilySpec(1, zero1, x, zero1, zero1, x ** 2, name="case2i"),
        "case3": CaseFamilySpec(1, zero1, zero1, -x, zero1, x ** 2, name="case3"),
        "case4": CaseFamilySpec(1, zero1, zero1, zero1, x, x ** 2, name="case4"),
        # rotation drift keeps aW = 0 identically; delta = (x2, 0) gives [a, delta] W = 2(x1^2 - x2^2)
        "case5": CaseFamilySpec(2, PolyField([-x2, x1]), zero2, zero2, PolyField([x2, PolyScalar.zero(2)]),
                                x1 ** 2 + x2 ** 2, name="case5"),
    }


REGISTRY_NAMES = ("case1", "case2i", "case3", "case4", "case5")


def case_spec(name: str) -> CaseFamilySpec:
    reg = _registry()
    if name not in reg:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(REGISTRY_NAMES)}")
    return reg[name]


def benchmark_system(name: str) -> System:
    return build_case_system(case_spec(name))
