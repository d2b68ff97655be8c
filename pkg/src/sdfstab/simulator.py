"""Sampled-data closed loop and the checks run on its trajectories.

At each partition time ``T_i`` the state is frozen, classified, and an
open-loop input is chosen for ``[T_i, T_{i+1}]``: the smooth feedback value
held constant, or a two-phase bracket schedule that runs for ``eps`` and then
holds zero for the rest of the interval.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .certificate import Branch, Certificate, ToleranceMap, classify_point
from .integrator import (BlowUp, IntegratorConfig, PiecewiseConstant, StepUnderflow, Trajectory,
                         integrate)
from .polynomial import PolyScalar
from .records import dump_record
from .synthesis import (NotApplicable, SearchPolicy, build_schedule, candidate_pairs,
                        sontag_feedback, sontag_value)
from .system import System

__all__ = [
    "Partition", "IntegratorConfig", "PiecewiseConstant", "Trajectory", "RunReport",
    "ClosedLoopPolicy", "ControllerFailure", "BlowUp", "StepUnderflow",
    "integrate", "run_closed_loop", "ring_states", "verify_report", "trajectory_to_csv", "trajectory_from_csv",
]


class ControllerFailure(RuntimeError):
    def __init__(self, cert: Certificate, t: float):
        self.certificate = cert
        self.t = t
        super().__init__(f"no controller applies at t={t:.6g}, state {cert.point}: {cert}")


@dataclass(frozen=True)
class Partition:
    times: tuple[float, ...]
    gap_bound: float

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        if len(ts) < 2 or ts[0] != 0.0:
            raise ValueError("a partition starts at 0 and has at least two times")
        gaps = np.diff(ts)
        if np.any(gaps <= 0):
            raise ValueError("partition times must be strictly increasing")
        if np.any(gaps > self.gap_bound * (1 + 1e-12)):
            raise ValueError(f"a gap exceeds the bound {self.gap_bound}")
        object.__setattr__(self, "times", ts)

    @classmethod
    def uniform(cls, delta: float, horizon: float) -> Partition:
        if not (delta > 0 and horizon > 0):
            raise ValueError("delta and horizon must be positive")
        n = max(1, round(horizon / delta))
        return cls(tuple(k * delta for k in range(n + 1)), delta)

    def intervals(self):
        return zip(self.times, self.times[1:])


@dataclass(frozen=True)
class ClosedLoopPolicy:
    """Knobs of the per-interval controller resolution.

    ``peak_factor`` caps bracket inputs at ``peak_factor * sqrt(V(x)) / delta``
    so the integrator state ``y`` driven by ``u`` cannot grow past roughly
    ``sqrt(V)`` within one interval.  ``tol`` is a switching band: inside it
    ``gV`` counts as zero.  A state left unclassified under ``tol`` is
    reclassified under ``fallback_tol`` before giving up.  ``halvings``
    bounds the ``eps`` search; ``max_pairs`` bounds how many certified pairs
    are tried.
    """

    tol: ToleranceMap = ToleranceMap(zero_tol=1e-6, strict_tol=1e-9)
    fallback_tol: ToleranceMap = ToleranceMap()
    n_max: int = 6
    probes: int = 32
    halvings: int = 30
    peak_factor: float = 1.8
    max_pairs: int = 8
    rhos: tuple[float, ...] = (1.0, 0.5, 0.25, 0.125)


@dataclass
class RunReport:
    sample_times: list[float]
    sample_V: list[float]
    decrease_ok: bool
    first_decrease_violation: int | None
    intersample_ok: bool
    first_intersample_violation: int | None
    max_intersample_ratio: float
    sup_control: float
    final_norm: float
    branches: dict[str, int] = field(default_factory=dict)
    in_region: bool | None = None

    @property
    def intervals(self) -> int:
        return max(0, len(self.sample_times) - 1)

    def to_record(self) -> str:
        items = [
            ("intervals", self.intervals),
            ("decrease_ok", self.decrease_ok),
            ("first_decrease_violation", self.first_decrease_violation),
            ("intersample_ok", self.intersample_ok),
            ("first_intersample_violation", self.first_intersample_violation),
            ("max_intersample_ratio", self.max_intersample_ratio),
            ("sup_control", self.sup_control),
            ("final_norm", self.final_norm),
        ]
        if self.in_region is not None:
            items.append(("in_region", self.in_region))
        items += [(f"branch_{k}", v) for k, v in sorted(self.branches.items())]
        return dump_record(items, title="run report")


def _attempt(sys, x, control, t0, t1, cfg, probes, extra):
    grid = [t0 + (t1 - t0) * k / probes for k in range(1, probes)] + list(extra)
    traj = integrate(sys, control, x, (t0, t1), cfg, record=grid)
    vals = traj.V(sys)
    return traj, float(vals[-1]), float(np.max(vals))


def _resolve_interval(sys: System, theta, x, t0: float, t1: float, cfg: IntegratorConfig,
                      policy: ClosedLoopPolicy):
    """Pick the input on ``[t0, t1]`` from the frozen state ``x``; returns ``(traj, branch)``."""
    delta = t1 - t0
    v0 = float(sys.V(x))
    tol = policy.tol
    cert = classify_point(sys, x, tol, policy.n_max)
    if cert.branch is Branch.UNCLASSIFIED:
        tol = policy.fallback_tol
        cert = classify_point(sys, x, tol, policy.n_max)
    smooth_u = None
    if cert.branch is Branch.UNCLASSIFIED:
        # tiny but nonzero gV: below every relative threshold, yet the smooth
        # feedback is still defined and decreases V to first order
        gv = float(sys.gV(x))
        if gv == 0.0:
            raise ControllerFailure(cert, t0)
        smooth_u = sontag_value(float(sys.fV(x)), gv, 0.0 if theta is None else float(theta(x)))
        cert = Certificate(Branch.GV_NONZERO, cert.point, diagnostics={"gV": gv})

    if cert.branch.is_bracket:
        u_cap = policy.peak_factor * math.sqrt(v0) / delta
        search = SearchPolicy(rhos=policy.rhos, u_max=u_cap, direction="descending")
        pairs = []
        try:
            for pair, _ in candidate_pairs(sys, x, cert, search, tol):
                pairs.append(pair)
                if len(pairs) >= policy.max_pairs:
                    break
        except ValueError:
            pairs = []
        if not pairs:
            raise ControllerFailure(cert, t0)

        def make(pair, eps):
            sched = build_schedule(pair, eps)
            return sched.to_piecewise(t0, hold_until=t1), (t0 + sched.switch_time, t0 + eps)

        candidates = pairs
    else:
        if smooth_u is not None:
            u = smooth_u
        else:
            try:
                u = sontag_feedback(sys, theta, x, tol)
            except NotApplicable:
                raise ControllerFailure(cert, t0) from None

        def make(u_, eps):
            if eps >= delta:
                return PiecewiseConstant.constant(u_), ()
            return PiecewiseConstant([t0 + eps], [u_, 0.0]), (t0 + eps,)

        candidates = [u]

    fallback = None
    for cand in candidates:
        for k in range(policy.halvings + 1):
            eps = delta / 2.0 ** k
            control, extra = make(cand, eps)
            try:
                traj, v_end, v_max = _attempt(sys, x, control, t0, t1, cfg, policy.probes, extra)
            except BlowUp:
                continue
            if v_end < v0 and v_max <= 2.0 * v0:
                return traj, cert.branch
            if fallback is None:
                fallback = traj
    if fallback is None:
        # every attempt diverged: rerun the first one so the BlowUp propagates
        control, extra = make(candidates[0], delta)
        _attempt(sys, x, control, t0, t1, cfg, policy.probes, extra)
    return fallback, cert.branch


def run_closed_loop(sys: System, theta: PolyScalar | None, partition: Partition, x0,
                    cfg: IntegratorConfig = IntegratorConfig(),
                    policy: ClosedLoopPolicy = ClosedLoopPolicy(),
                    stop: Callable[[float, np.ndarray], bool] | None = None
                    ) -> tuple[Trajectory, RunReport]:
    """Simulate the sampled-data loop over ``partition`` from ``x0``.

    ``stop(t, x)`` is evaluated at each partition time after the first and
    ends the run early when it returns true.
    """
    x = tuple(float(v) for v in x0)
    if len(x) != sys.dimension:
        raise ValueError(f"initial state has {len(x)} coordinates, system dimension is {sys.dimension}")
    times, states, controls = [0.0], [x], []
    samples = [0.0]
    branches: Counter = Counter()
    for t0, t1 in partition.intervals():
        if not any(x):
            piece = integrate(sys, 0.0, x, (t0, t1), cfg, record=policy.probes)
            branch = "Origin"
        else:
            piece, b = _resolve_interval(sys, theta, x, t0, t1, cfg, policy)
            branch = b.value
        branches[branch] += 1
        times.extend(piece.times[1:].tolist())
        states.extend(map(tuple, piece.states[1:]))
        controls.extend(piece.controls[:-1].tolist())
        x = tuple(float(v) for v in piece.states[-1])
        samples.append(t1)
        if stop is not None and stop(t1, np.array(x)):
            break
    controls.append(controls[-1] if controls else 0.0)
    traj = Trajectory(np.array(times), np.array(states), np.array(controls), tuple(samples))
    report = verify_report(traj, sys)
    report.branches = dict(branches)
    return traj, report


def verify_report(traj: Trajectory, sys: System, region: Sequence[tuple[float, float]] | None = None
                  ) -> RunReport:
    """Recompute the decrease, inter-sample and control-bound checks from a trajectory.

    ``traj.sample_times`` delimit the intervals; without them the whole
    trajectory is one interval.  Intervals starting at the origin are exempt
    from the strict-decrease check.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    samples = list(traj.sample_times) or [float(traj.times[0]), float(traj.times[-1])]
    vals = traj.V(sys)
    idx = [int(np.searchsorted(traj.times, t, side="left")) for t in samples]
    sample_V = [float(vals[k]) for k in idx]

    first_dec = first_inter = None
    max_ratio = 0.0
    for i in range(len(idx) - 1):
        a, b = idx[i], idx[i + 1]
        v0 = sample_V[i]
        at_origin = not np.any(traj.states[a])
        if first_dec is None and not at_origin and not sample_V[i + 1] < v0:
            first_dec = i
        peak = float(np.max(vals[a:b + 1]))
        if v0 > 0:
            max_ratio = max(max_ratio, peak / v0)
        if first_inter is None and peak > 2.0 * v0:
            first_inter = i

    in_region = None
    if region is not None:
        lo = np.array([r[0] for r in region])
        hi = np.array([r[1] for r in region])
        in_region = bool(np.all((traj.states >= lo) & (traj.states <= hi)))
    return RunReport(
        sample_times=[float(t) for t in samples],
        sample_V=sample_V,
        decrease_ok=first_dec is None,
        first_decrease_violation=first_dec,
        intersample_ok=first_inter is None,
        first_intersample_violation=first_inter,
        max_intersample_ratio=max_ratio,
        sup_control=float(np.max(np.abs(traj.controls))) if len(traj.controls) else 0.0,
        final_norm=float(np.linalg.norm(traj.final_state)),
        in_region=in_region,
    )


def trajectory_to_csv(traj: Trajectory, sys: System) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"x{i + 1}" for i in range(traj.dimension)] + ["u", "V"])
    vals = traj.V(sys)
    for t, s, u, v in zip(traj.times, traj.states, traj.controls, vals):
        w.writerow([repr(float(t))] + [repr(float(c)) for c in s] + [repr(float(u)), repr(float(v))])
    return buf.getvalue()


def trajectory_from_csv(text: str, sample_times: Sequence[float] = ()) -> Trajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0][0] != "t" or rows[0][-2:] != ["u", "V"]:
        raise ValueError("expected a header t,x1..xn,u,V")
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(rows[0]))
    return Trajectory(data[:, 0], data[:, 1:-2], data[:, -2], tuple(sample_times))


def ring_states(dimension: int, count: int = 25, radii: Sequence[float] = (0.5, 1.0, 2.0)
                ) -> list[tuple[float, ...]]:
    """``count`` initial states at angles ``2 pi k / count`` with radius ``radii[k % len(radii)]``.

    In three dimensions the points also tilt out of the first coordinate
    plane by a latitude cycling through ``0, +-pi/8, +-pi/4``.
    """
    if dimension not in (2, 3):
        raise ValueError("ring states are defined for dimension 2 or 3")
    out = []
    for k in range(count):
        r = radii[k % len(radii)]
        th = 2.0 * math.pi * k / count
        if dimension == 2:
            out.append((r * math.cos(th), r * math.sin(th)))
        else:
            phi = (0.0, math.pi / 8, -math.pi / 8, math.pi / 4, -math.pi / 4)[k % 5]
            out.append((r * math.cos(th) * math.cos(phi), r * math.sin(th) * math.cos(phi),
                        r * math.sin(phi)))
    return out
