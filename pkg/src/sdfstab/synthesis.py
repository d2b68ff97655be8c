"""Controllers at a single sample state.

Two constructions are provided: the smooth feedback used where ``gV != 0``
(or where the drift alone decreases ``V``), and the two-phase schedule used
at the remaining points, which holds ``u2 = -rho u1`` for time ``t`` and then
``u1`` for time ``rho t``.  The schedule is found by searching ``(rho, u1)``
for a pair whose composed flow has ``m^(n)(0) = 0`` for ``n <= N`` and
``m^(N+1)(0) < 0``, where ``m(t) = V((X_{rho t} o Y_t)(x))``,
``X = f + u1 g`` and ``Y = f + u2 g``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .certificate import Branch, Certificate, ToleranceMap
from .generators import GeneratorId
from .integrator import IntegratorConfig, PiecewiseConstant, integrate
from .polynomial import PolyScalar
from .records import dump_record
from .system import System

MAX_DERIVATIVE_ORDER = 8


class NotApplicable(ValueError):
    """The smooth feedback is undefined here; use the bracket schedule."""


class WrongBranch(ValueError):
    """Bracket synthesis was requested for a certificate outside P1/P2i/P2ii/P2iii."""


class SearchExhausted(RuntimeError):
    def __init__(self, message: str, best_margin: float, best_pair: BracketPair | None = None):
        super().__init__(f"{message} (best m^(N+1)(0) found: {best_margin:.6g})")
        self.best_margin = best_margin
        self.best_pair = best_pair


class NoDecrease(RuntimeError):
    def __init__(self, message: str, best_margin: float):
        super().__init__(message)
        self.best_margin = best_margin


@dataclass(frozen=True)
class BracketPair:
    rho: float
    u1: float
    u2: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        rho, u1 = float(self.rho), float(self.u1)
        if not 0.0 < rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {rho}")
        u2 = -rho * u1
        if self.u2 is not None and float(self.u2) != u2:
            raise ValueError(f"u2 must equal -rho*u1 = {u2}, got {self.u2}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "u1", u1)
        object.__setattr__(self, "u2", u2 + 0.0)


@dataclass(frozen=True)
class ControlSchedule:
    """``first_value`` on ``[0, switch_time]``, ``second_value`` on ``(switch_time, end_time]``."""

    switch_time: float
    first_value: float
    second_value: float
    end_time: float

    def __post_init__(self):
        if not 0.0 < self.switch_time < self.end_time:
            raise ValueError("need 0 < switch_time < end_time")

    def __call__(self, s: float) -> float:
        return self.first_value if s <= self.switch_time else self.second_value

    def segments(self) -> list[tuple[float, float, float]]:
        return [(0.0, self.switch_time, self.first_value),
                (self.switch_time, self.end_time, self.second_value)]

    def to_piecewise(self, t0: float = 0.0, hold_until: float | None = None,
                     hold_value: float = 0.0) -> PiecewiseConstant:
        """The schedule shifted to start at ``t0``, optionally followed by a hold."""
        breaks = [t0 + self.switch_time]
        values = [self.first_value, self.second_value]
        if hold_until is not None and hold_until > t0 + self.end_time:
            breaks.append(t0 + self.end_time)
            values.append(hold_value)
        return PiecewiseConstant(breaks, values)


@dataclass
class SynthesisOutcome:
    kind: str  # "SmoothFeedback" or "Schedule"
    epsilon: float
    decrease_margin: float
    intersample_peak: float
    u_value: float | None = None
    schedule: ControlSchedule | None = None
    pair: BracketPair | None = None

    def to_record(self, context: Sequence[tuple[str, object]] = ()) -> str:
        items = list(context) + [("kind", self.kind), ("epsilon", self.epsilon)]
        if self.u_value is not None:
            items.append(("u", self.u_value))
        if self.pair is not None:
            items += [("rho", self.pair.rho), ("u1", self.pair.u1), ("u2", self.pair.u2)]
        if self.schedule is not None:
            items.append(("switch_time", self.schedule.switch_time))
        items += [("decrease_margin", self.decrease_margin),
                  ("intersample_peak", self.intersample_peak)]
        return dump_record(items, title="synthesis")


def _ladder(lo_exp: int, hi_exp: int, ratio: float, ascending: bool) -> list[float]:
    exps = range(lo_exp, hi_exp + 1) if ascending else range(hi_exp, lo_exp - 1, -1)
    return [ratio ** e for e in exps]


@dataclass(frozen=True)
class SearchPolicy:
    """Grid for the ``(rho, u1)`` search.

    ``direction="auto"`` starts at magnitude 1 and walks outward: toward
    ``ratio^small_exp`` first for P1/P2i (small inputs suffice there), toward
    ``ratio^large_exp`` first for P2ii/P2iii, then through the other half.
    ``direction="descending"`` always walks down from ``u_max`` (which must
    then be set); the closed loop uses it to keep inputs inside an
    interval-dependent budget.
    """

    rhos: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)
    ratio: float = 2.0
    small_exp: int = -20
    large_exp: int = 20
    u_max: float | None = None
    direction: str = "auto"
    max_order: int = MAX_DERIVATIVE_ORDER

    def __post_init__(self):
        if self.direction not in ("auto", "descending"):
            raise ValueError(f"unknown search direction {self.direction!r}")
        if self.direction == "descending" and self.u_max is None:
            raise ValueError("descending search needs u_max")
        if self.ratio <= 1.0 or any(not 0.0 < r <= 1.0 for r in self.rhos):
            raise ValueError("ratio must exceed 1 and every rho must lie in (0, 1]")

    def magnitudes(self, branch: Branch) -> list[float]:
        floor = self.ratio ** self.small_exp
        if self.direction == "descending":
            out, m = [], float(self.u_max)
            while m >= floor:
                out.append(m)
                m /= self.ratio
            return out
        small = _ladder(self.small_exp, 0, self.ratio, ascending=False)
        large = _ladder(1, self.large_exp, self.ratio, ascending=True)
        if branch in (Branch.P1, Branch.P2I):
            mags = small + large
        else:
            mags = [1.0] + large + small[1:]
        if self.u_max is not None:
            mags = [m for m in mags if m <= self.u_max]
        return mags


class MDerivatives:
    """Word values at ``x``, reused for every ``(rho, u1)`` and order ``n``.

    ``m^(n)(0) = sum_k C(n,k) rho^k (Y^{n-k} X^k V)(x)``.  Expanding
    ``X = f + u1 g`` and ``Y = f - rho u1 g`` letter by letter, each word
    ``w`` over ``{f, g}`` contributes ``(wV)(x)`` times ``u2^a u1^b`` with
    ``a`` (``b``) the number of ``g`` letters among the first ``n - k``
    (last ``k``) positions.
    """

    def __init__(self, sys: System, x, max_order: int = MAX_DERIVATIVE_ORDER):
        self.sys = sys
        self.x = tuple(float(v) for v in x)
        self.max_order = max_order
        self._tables: dict[int, dict[tuple[int, int, int], float]] = {}

    def _table(self, n: int) -> dict[tuple[int, int, int], float]:
        """``(k, a, b) -> sum of (wV)(x)`` over words with those ``g`` counts."""
        tab = self._tables.get(n)
        if tab is None:
            tab = {}
            for w in self.sys.words(n):
                val = float(self.sys.word_poly(w)(self.x))
                if val == 0.0:
                    continue
                for k in range(n + 1):
                    key = (k, w.count("g", 0, n - k), w.count("g", n - k))
                    tab[key] = tab.get(key, 0.0) + val
            self._tables[n] = tab
        return tab

    def value(self, n: int, pair: BracketPair) -> float:
        if n < 1:
            raise ValueError(f"derivative order must be >= 1, got {n}")
        if n > self.max_order:
            raise ValueError(f"derivative order {n} exceeds the configured maximum {self.max_order}")
        rho, u1, u2 = pair.rho, pair.u1, pair.u2
        total = 0.0
        for (k, a, b), val in self._table(n).items():
            total += math.comb(n, k) * rho ** k * val * u2 ** a * u1 ** b
        return total


def m_derivative(sys: System, x, pair: BracketPair, n: int,
                 max_order: int = MAX_DERIVATIVE_ORDER) -> float:
    """``d^n/dt^n V((X_{rho t} o Y_t)(x))`` at ``t = 0``, exact for polynomial data."""
    return MDerivatives(sys, x, max_order).value(n, pair)


def sontag_value(fv: float, gv: float, theta: float = 0.0) -> float:
    return -((fv + theta) / gv ** 2 + 1.0) * gv


def sontag_feedback(sys: System, theta: PolyScalar | None, x,
                    tol: ToleranceMap = ToleranceMap()) -> float:
    """Smooth feedback ``u = -((fV + theta)/(gV)^2 + 1) gV``, or ``0`` where ``gV = 0`` and ``fV < 0``."""
    fv = float(sys.fV(x))
    gv = float(sys.gV(x))
    th = 0.0 if theta is None else float(theta(x))
    scale = max(abs(float(sys.V(x))), abs(fv), abs(gv))
    if not tol.is_zero(gv, scale):
        return sontag_value(fv, gv, th)
    if tol.is_negative(fv, scale):
        return 0.0
    raise NotApplicable(f"gV={gv:.6g} vanishes and fV={fv:.6g} is not negative at {tuple(x)}")


def _sign_order(sys: System, x, cert: Certificate) -> tuple[float, ...]:
    N = cert.N
    if N % 2 == 0:
        return (1.0, -1.0)
    lam = float(sys.tuple_poly((GeneratorId(N + 1, N),))(x))
    if lam > 0.0:
        return (-1.0, 1.0)
    return (1.0, -1.0)


def candidate_pairs(sys: System, x, cert: Certificate, search: SearchPolicy = SearchPolicy(),
                    tol: ToleranceMap = ToleranceMap()) -> Iterator[tuple[BracketPair, float]]:
    """Every grid pair meeting the derivative conditions, in search order, with its ``m^(N+1)(0)``."""
    if not cert.branch.is_bracket:
        raise WrongBranch(f"bracket synthesis needs a P1/P2 certificate, got {cert.branch}")
    N = cert.N
    if N + 1 > search.max_order:
        raise ValueError(f"N+1={N + 1} exceeds the derivative order limit {search.max_order}")
    md = MDerivatives(sys, x, search.max_order)
    v0 = abs(float(sys.V(x)))
    mags = search.magnitudes(cert.branch)
    if cert.branch is Branch.P1:
        mags = [0.0] + mags
    signs = _sign_order(sys, x, cert)
    for rho in search.rhos:
        for mag in mags:
            for s in (signs if mag else (1.0,)):
                pair = BracketPair(rho, s * mag)
                lower = [md.value(n, pair) for n in range(1, N + 1)]
                top = md.value(N + 1, pair)
                scale = max([v0, abs(top)] + [abs(v) for v in lower])
                if all(tol.is_zero(v, scale) for v in lower) and tol.is_negative(top, scale):
                    yield pair, top


def synthesize_pair(sys: System, x, cert: Certificate, search: SearchPolicy = SearchPolicy(),
                    tol: ToleranceMap = ToleranceMap()) -> BracketPair:
    """First ``(rho, u1)`` on the search grid with ``m^(n)(0) = 0`` (``n <= N``) and ``m^(N+1)(0) < 0``."""
    for pair, _ in candidate_pairs(sys, x, cert, search, tol):
        return pair
    # report the best top-order value over the grid for diagnosis
    md = MDerivatives(sys, x, search.max_order)
    best, best_pair = math.inf, None
    for rho, mag in itertools.product(search.rhos, search.magnitudes(cert.branch)):
        for s in (1.0, -1.0):
            p = BracketPair(rho, s * mag)
            v = md.value(cert.N + 1, p)
            if v < best:
                best, best_pair = v, p
    raise SearchExhausted(f"no (rho, u1) pair on the grid certifies decrease at {tuple(x)}",
                          best, best_pair)


def build_schedule(pair: BracketPair, epsilon: float) -> ControlSchedule:
    """Hold ``u2`` on ``[0, eps/(1+rho)]`` and ``u1`` until ``eps``."""
    if not epsilon > 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return ControlSchedule(epsilon / (1.0 + pair.rho), pair.u2, pair.u1, float(epsilon))


def probe_schedule(sys: System, x, control, span: tuple[float, float], integ: IntegratorConfig,
                   probes: int = 32, extra: tuple[float, ...] = ()):
    """Integrate and return ``(trajectory, V at the end, max V over the recorded points)``."""
    t0, t1 = span
    grid = [t0 + (t1 - t0) * k / probes for k in range(1, probes)] + list(extra)
    traj = integrate(sys, control, x, span, integ, record=grid)
    vals = traj.V(sys)
    return traj, float(vals[-1]), float(np.max(vals))


def select_epsilon(sys: System, x, pair: BracketPair, sigma: float,
                   integ: IntegratorConfig = IntegratorConfig(), halvings: int = 30,
                   probes: int = 32) -> SynthesisOutcome:
    """Largest ``eps = sigma 2^-k`` whose schedule decreases ``V`` and keeps ``V <= 2 V(x)``."""
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    v0 = float(sys.V(x))
    best = -math.inf
    for k in range(halvings + 1):
        eps = sigma / 2.0 ** k
        sched = build_schedule(pair, eps)
        _, v_end, v_max = probe_schedule(sys, x, sched.to_piecewise(), (0.0, eps), integ, probes)
        best = max(best, v0 - v_end)
        if v_end < v0 and v_max <= 2.0 * v0:
            return SynthesisOutcome("Schedule", eps, v0 - v_end, v_max / v0,
                                    schedule=sched, pair=pair)
    raise NoDecrease(f"no eps in [sigma 2^-{halvings}, sigma] decreases V at {tuple(x)}", best)
