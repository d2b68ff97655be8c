"""Numerical integration of ``x' = f(x) + u(t) g(x)`` under piecewise-constant inputs.

Integration always restarts at every input discontinuity, so no step ever
straddles a switch.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .system import System


class BlowUp(RuntimeError):
    """The state left the ball of radius ``max_norm`` (finite escape or divergence)."""

    def __init__(self, t: float, state):
        self.t = t
        self.state = tuple(state)
        super().__init__(f"state norm exceeded the blow-up bound at t={t:.6g}: {self.state}")


class StepUnderflow(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"rk4"`` (fixed step ``step``) or ``"rk45"`` (adaptive, ``rtol``/``atol``)."""

    method: str = "rk4"
    step: float = 0.01
    rtol: float = 1e-10
    atol: float = 1e-12
    max_norm: float = 1e6

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.step > 0 and self.rtol > 0 and self.atol > 0 and self.max_norm > 0):
            raise ValueError("step, tolerances and max_norm must be positive")


class PiecewiseConstant:
    """Right-continuous step function: ``values[k]`` on ``(breaks[k-1], breaks[k]]``.

    ``values`` has one more entry than ``breaks``; ``values[0]`` applies up to
    and including ``breaks[0]``, the last value after the last break.  This
    matches a schedule that holds ``u2`` on ``[0, t]`` and ``u1`` on ``(t, e]``.
    """

    def __init__(self, breaks: Sequence[float], values: Sequence[float]):
        if len(values) != len(breaks) + 1:
            raise ValueError("need exactly one more value than break points")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("break points must be strictly increasing")
        self.breaks = tuple(float(b) for b in breaks)
        self.values = tuple(float(v) for v in values)

    @classmethod
    def constant(cls, value: float) -> PiecewiseConstant:
        return cls((), (value,))

    def __call__(self, t: float) -> float:
        return self.values[bisect.bisect_left(self.breaks, t)]

    def breaks_in(self, t0: float, t1: float) -> list[float]:
        return [b for b in self.breaks if t0 < b < t1]

    def sup_abs(self) -> float:
        return max(abs(v) for v in self.values)


@dataclass
class Trajectory:
    """Sampled solution.

    ``controls[k]`` is the input applied on ``(times[k], times[k+1]]``; the last
    entry repeats the final input.  ``sample_times`` are the partition times at
    which the feedback was recomputed (empty for open-loop runs).
    """

    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    sample_times: tuple[float, ...] = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.controls = np.asarray(self.controls, dtype=float)
        if not (len(self.times) == len(self.states) == len(self.controls)):
            raise ValueError("times, states and controls must have equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("trajectory times must be nondecreasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def V(self, sys: System) -> np.ndarray:
        return np.asarray(sys.V(self.states.T), dtype=float)

    def state_at(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.times, t))
        if k >= len(self.times) or self.times[k] != t:
            raise KeyError(f"time {t} is not a recorded point")
        return self.states[k]


def _rk4(rhs, x, u, a, b, h_max, max_norm):
    m = max(1, math.ceil((b - a) / h_max - 1e-9))
    h = (b - a) / m
    hh = 0.5 * h
    h6 = h / 6.0
    for _ in range(m):
        k1 = rhs(x, u)
        k2 = rhs(tuple(xi + hh * ki for xi, ki in zip(x, k1)), u)
        k3 = rhs(tuple(xi + hh * ki for xi, ki in zip(x, k2)), u)
        k4 = rhs(tuple(xi + h * ki for xi, ki in zip(x, k3)), u)
        x = tuple(xi + h6 * (p + 2.0 * q + 2.0 * r + s)
                  for xi, p, q, r, s in zip(x, k1, k2, k3, k4))
        if not all(abs(xi) <= max_norm for xi in x):
            raise BlowUp(b, x)
    return x


def _rk45(rhs, x, u, a, b, cfg):
    def fun(t, z):
        return rhs(tuple(z), u)

    def escape(t, z):
        return cfg.max_norm - float(np.max(np.abs(z)))

    escape.terminal = True
    sol = solve_ivp(fun, (a, b), x, method="RK45", rtol=cfg.rtol, atol=cfg.atol,
                    events=escape)
    if sol.status == 1:
        raise BlowUp(float(sol.t[-1]), sol.y[:, -1])
    if sol.status != 0:
        raise StepUnderflow(f"adaptive integration failed on [{a}, {b}]: {sol.message}")
    out = tuple(float(v) for v in sol.y[:, -1])
    if not all(abs(v) <= cfg.max_norm for v in out):
        raise BlowUp(b, out)
    return out


def integrate(sys: System, control, x0, span: tuple[float, float],
              cfg: IntegratorConfig = IntegratorConfig(),
              record: Sequence[float] | int | None = None) -> Trajectory:
    """Integrate from ``x0`` over ``span`` under a piecewise-constant input.

    Parameters
    ----------
    control : float or PiecewiseConstant
        Input as a function of absolute time.
    record : int or sequence of float, optional
        Extra times at which to store the state.  An integer ``k`` means ``k``
        equal sub-intervals of ``span``.  Input switch times and the span
        endpoints are always recorded.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError(f"empty integration span [{t0}, {t1}]")
    if not isinstance(control, PiecewiseConstant):
        control = PiecewiseConstant.constant(float(control))
    x = tuple(float(v) for v in x0)
    if len(x) != sys.dimension:
        raise ValueError(f"initial state has {len(x)} coordinates, system dimension is {sys.dimension}")

    grid = {t0, t1}
    grid.update(control.breaks_in(t0, t1))
    if isinstance(record, int):
        grid.update(t0 + (t1 - t0) * k / record for k in range(1, record))
    elif record is not None:
        grid.update(float(t) for t in record if t0 < t < t1)
    grid = sorted(grid)

    rhs = sys.rhs()
    times, states, controls = [t0], [x], []
    for a, b in zip(grid, grid[1:]):
        u = control(0.5 * (a + b))
        if cfg.method == "rk4":
            x = _rk4(rhs, x, u, a, b, cfg.step, cfg.max_norm)
        else:
            x = _rk45(rhs, x, u, a, b, cfg)
        controls.append(u)
        times.append(b)
        states.append(x)
    controls.append(controls[-1])
    return Trajectory(np.array(times), np.array(states), np.array(controls))
