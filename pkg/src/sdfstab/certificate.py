"""Point-wise classification of a system against the Lie-algebraic stabilizability hypotheses.

At a point ``x != 0`` either ``gV(x) != 0`` (the smooth feedback applies), or
``fV(x) < 0`` (drift alone decreases ``V``), or there is an integer ``N`` such
that every nested derivative ``(D_1 ... D_k V)(x)`` with generators of total
order ``<= N`` vanishes and one of the properties P1, P2(i), P2(ii), P2(iii)
holds at order ``N + 1``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .generators import GeneratorId, TupleBudget, enumerate_id_tuples
from .polynomial import DimensionMismatch, PolyScalar
from .records import dump_record, format_value
from .system import System

__all__ = [
    "Branch", "ToleranceMap", "Certificate", "VanishingResult", "BoundednessWitness",
    "System", "classify_point", "check_vanishing", "check_bounded_growth",
]


class Branch(str, enum.Enum):
    GV_NONZERO = "GvNonzero"
    DRIFT_NEGATIVE = "DriftNegative"
    P1 = "P1"
    P2I = "P2i"
    P2II = "P2ii"
    P2III = "P2iii"
    UNCLASSIFIED = "Unclassified"

    def __str__(self) -> str:
        return self.value

    @property
    def is_bracket(self) -> bool:
        return self in (Branch.P1, Branch.P2I, Branch.P2II, Branch.P2III)


@dataclass(frozen=True)
class ToleranceMap:
    """Zero and strict-sign thresholds, relative to ``max(1, scale)``."""

    zero_tol: float = 1e-9
    strict_tol: float = 1e-9

    def __post_init__(self):
        if not (self.zero_tol > 0 and self.strict_tol > 0):
            raise ValueError("tolerances must be positive")

    def is_zero(self, v: float, scale: float = 0.0) -> bool:
        return abs(v) <= self.zero_tol * max(1.0, scale)

    def is_negative(self, v: float, scale: float = 0.0) -> bool:
        return v < -self.strict_tol * max(1.0, scale)

    def is_positive(self, v: float, scale: float = 0.0) -> bool:
        return v > self.strict_tol * max(1.0, scale)


@dataclass
class Certificate:
    branch: Branch
    point: tuple[float, ...]
    N: int | None = None
    j: int | None = None
    diagnostics: dict[str, float] = field(default_factory=dict)
    #: ``True`` when the order-``N+1`` mixed terms of g-order ``<= N-1`` vanish too,
    #: so arbitrarily small bracket inputs work; ``None`` off the bracket branches
    small_control: bool | None = None

    def to_record(self) -> str:
        items = [("point", list(self.point)), ("branch", self.branch.value),
                 ("N", self.N), ("j", self.j)]
        if self.small_control is not None:
            items.append(("small_control", self.small_control))
        items.extend(self.diagnostics.items())
        return dump_record(items, title="certificate")

    def __str__(self) -> str:
        extra = "".join(f" {k}={v}" for k, v in (("N", self.N), ("j", self.j)) if v is not None)
        return f"{self.branch.value}{extra}"


@dataclass
class VanishingResult:
    ok: bool
    budget: TupleBudget
    max_abs: float
    witness: tuple[GeneratorId, ...] | None
    witness_value: float
    count: int

    def __bool__(self) -> bool:
        return self.ok


def _point(sys: System, x) -> tuple[float, ...]:
    x = tuple(float(v) for v in x)
    if len(x) != sys.dimension:
        raise DimensionMismatch(f"point has {len(x)} coordinates, system dimension is {sys.dimension}")
    return x


def check_vanishing(sys: System, x, mode: TupleBudget,
                    tol: ToleranceMap = ToleranceMap()) -> VanishingResult:
    """Whether ``(D_1 ... D_k V)(x)`` vanishes for every generator tuple admitted by ``mode``."""
    x = _point(sys, x)
    tuples = enumerate_id_tuples(mode)
    vals = [float(sys.tuple_poly(t)(x)) for t in tuples]
    scale = max([abs(float(sys.V(x)))] + [abs(v) for v in vals])
    witness, witness_value, max_abs = None, 0.0, 0.0
    for t, v in zip(tuples, vals):
        if abs(v) > max_abs:
            witness, witness_value, max_abs = t, v, abs(v)
    ok = all(tol.is_zero(v, scale) for v in vals)
    return VanishingResult(ok, mode, max_abs, None if ok else witness, witness_value, len(tuples))


def _scale(sys: System, x, *values: float) -> float:
    return max([abs(float(sys.V(x)))] + [abs(v) for v in values])


def classify_point(sys: System, x, tol: ToleranceMap = ToleranceMap(),
                   n_max: int = 6) -> Certificate:
    """Name the first hypothesis that holds at ``x``.

    Order of tests: ``gV != 0``; ``fV < 0``; then for ``N = 1, 2, ...`` with
    all total-order-``<= N`` terms vanishing: P1, P2(i) with the smallest
    admissible odd ``j``, P2(ii), P2(iii).  ``N`` is the smallest order that
    closes a branch.  Falls through to ``Unclassified`` (not an error).
    """
    x = _point(sys, x)
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if not any(x):
        raise ValueError("the origin is excluded: classification is defined for x != 0 only")

    diag: dict[str, float] = {}
    gv = float(sys.gV(x))
    fv = float(sys.fV(x))
    diag["gV"] = gv
    if not tol.is_zero(gv, _scale(sys, x, gv, fv)):
        return Certificate(Branch.GV_NONZERO, x, diagnostics=diag)
    diag["fV"] = fv
    if tol.is_negative(fv, _scale(sys, x, fv)):
        return Certificate(Branch.DRIFT_NEGATIVE, x, diagnostics=diag)

    for N in range(1, n_max + 1):
        vanish = check_vanishing(sys, x, TupleBudget.order_at_most(N), tol)
        if not vanish:
            # vanishing up to order N fails, hence also for every larger N
            diag[f"vanish_max_N{N}"] = vanish.max_abs
            break
        cert = _close_branch(sys, x, N, tol)
        if cert is not None:
            out = {"gV": gv, "fV": fv, "vanish_max": vanish.max_abs}
            out.update(cert.diagnostics)
            cert.diagnostics = out
            return cert
    return Certificate(Branch.UNCLASSIFIED, x, diagnostics=diag)


def _lambda_value(sys: System, kappa: int, j: int, x) -> float:
    return float(sys.tuple_poly((GeneratorId(kappa, j),))(x))


def _q_checks(sys: System, x, N: int, qs, tol: ToleranceMap, diag: dict) -> bool:
    for q in qs:
        res = check_vanishing(sys, x, TupleBudget.exact(N + 1, q), tol)
        diag[f"q{q}_max"] = res.max_abs
        if not res:
            return False
    return True


def _small_control(sys: System, x, N: int, tol: ToleranceMap) -> bool:
    if N == 1:
        return True
    return bool(check_vanishing(sys, x, TupleBudget.g_at_most(N + 1, N - 1), tol))


def _close_branch(sys: System, x, N: int, tol: ToleranceMap) -> Certificate | None:
    fN1 = float(sys.f_power_V(N + 1)(x))
    key = f"f^{N + 1}V"
    if tol.is_negative(fN1, _scale(sys, x, fN1)):
        return Certificate(Branch.P1, x, N=N, diagnostics={key: fN1}, small_control=True)
    if tol.is_positive(fN1, _scale(sys, x, fN1)):
        return None

    # P2(i): smallest odd j <= N with lambda_{N+1,j} V != 0 and, for j > 2,
    # vanishing at every even g-order q < j
    for j in range(1, N + 1, 2):
        lam = _lambda_value(sys, N + 1, j, x)
        if tol.is_zero(lam, _scale(sys, x, lam)):
            continue
        diag = {key: fN1, f"lambda_{N + 1}_{j}V": lam}
        if _q_checks(sys, x, N, range(2, j, 2), tol, diag):
            return Certificate(Branch.P2I, x, N=N, j=j, diagnostics=diag,
                               small_control=True)

    # P2(ii): N odd > 2, odd j <= N-2, vanishing at every even q with j < q < N
    if N % 2 == 1 and N > 2:
        for j in range(1, N - 1, 2):
            lam = _lambda_value(sys, N + 1, j, x)
            if tol.is_zero(lam, _scale(sys, x, lam)):
                continue
            diag = {key: fN1, f"lambda_{N + 1}_{j}V": lam}
            if _q_checks(sys, x, N, range(j + 1, N, 2), tol, diag):
                return Certificate(Branch.P2II, x, N=N, j=j, diagnostics=diag,
                                   small_control=False)

    # P2(iii): N even, lambda_{N+1,N} V < 0
    if N % 2 == 0:
        lam = _lambda_value(sys, N + 1, N, x)
        if tol.is_negative(lam, _scale(sys, x, lam)):
            return Certificate(Branch.P2III, x, N=N, diagnostics={key: fN1, f"lambda_{N + 1}_{N}V": lam},
                               small_control=_small_control(sys, x, N, tol))
    return None


@dataclass
class BoundednessWitness:
    theta: PolyScalar
    xi: Callable[[float], float]
    verified: bool
    counterexample: np.ndarray | None
    max_excess: float
    points_checked: int

    def to_record(self) -> str:
        return dump_record({
            "verified": self.verified,
            "counterexample": None if self.counterexample is None else list(self.counterexample),
            "max_excess": self.max_excess,
            "points": self.points_checked,
        }, title="bounded growth")


def polynomial_xi(coefficients: Sequence[float]) -> Callable[[float], float]:
    """``s -> sum_k c_k s^k``."""
    coeffs = [float(c) for c in coefficients]

    def xi(s: float) -> float:
        return sum(c * s ** k for k, c in enumerate(coeffs))

    xi.coefficients = tuple(coeffs)
    return xi


def _grid(region, grid: int):
    region = [(float(lo), float(hi)) for lo, hi in region]
    if grid < 1 or any(hi < lo for lo, hi in region) or not region:
        raise ValueError(f"invalid region {region} / grid {grid}")
    return itertools.product(*[np.linspace(lo, hi, grid) for lo, hi in region])


def check_bounded_growth(sys: System, theta: PolyScalar | None, xi, region,
                         grid: int = 21, tol: float = 1e-12) -> BoundednessWitness:
    """Sample ``|fV + theta| <= xi(|w|) |gV|`` on a uniform grid over ``region``.

    ``xi`` is a callable on ``[0, inf)`` or a coefficient list in ``|w|``.
    ``theta`` and ``xi`` must be nonnegative on the grid.
    """
    if len(region) != sys.dimension:
        raise DimensionMismatch(f"region has {len(region)} axes, system dimension is {sys.dimension}")
    if theta is None:
        theta = PolyScalar.zero(sys.dimension)
    if not callable(xi):
        xi = polynomial_xi(xi)
    counter, excess, count = None, -np.inf, 0
    for p in _grid(region, grid):
        th = float(theta(p))
        r = float(np.linalg.norm(p))
        bound = float(xi(r))
        if th < -tol or bound < -tol:
            raise ValueError(f"theta and xi must be nonnegative; at {p} theta={th}, xi={bound}")
        lhs = abs(float(sys.fV(p)) + th)
        rhs = bound * abs(float(sys.gV(p)))
        gap = lhs - rhs
        excess = max(excess, gap)
        if gap > tol * max(1.0, lhs, rhs) and counter is None:
            counter = np.array(p)
        count += 1
    return BoundednessWitness(theta, xi, counter is None, counter, float(excess), count)


def format_certificate_line(cert: Certificate) -> str:
    """One-line summary for terminal output."""
    parts = [str(cert)] + [f"{k}={format_value(v)}" for k, v in cert.diagnostics.items()]
    return " ".join(parts)
