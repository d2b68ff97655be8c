"""Command-line front end: ``sdfstab {classify,synthesize,simulate,verify,report}``.

Exit status: 0 success, 2 parse or configuration error, 3 controller
failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Sequence

import numpy as np

from .bench import REGISTRY_NAMES, benchmark_system
from .certificate import ToleranceMap, classify_point, format_certificate_line
from .integrator import BlowUp, IntegratorConfig, StepUnderflow, integrate
from .parser import ParseError, parse_system_spec
from .records import write_atomic
from .simulator import (ClosedLoopPolicy, ControllerFailure, Partition, RunReport,
                        run_closed_loop, trajectory_from_csv, trajectory_to_csv, verify_report)
from .synthesis import (NoDecrease, NotApplicable, SearchExhausted, SearchPolicy,
                        SynthesisOutcome, WrongBranch, select_epsilon, sontag_feedback,
                        synthesize_pair)
from .system import System

log = logging.getLogger("sdfstab")

EXIT_OK, EXIT_CONFIG, EXIT_CONTROLLER, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class MissingArtifact(ConfigError):
    pass


def load_system(ref: str) -> System:
    """Registry name or path to a system file."""
    if ref in REGISTRY_NAMES:
        return benchmark_system(ref)
    if not os.path.exists(ref):
        raise ConfigError(f"{ref!r} is neither a registry name ({', '.join(REGISTRY_NAMES)}) "
                          "nor an existing file")
    with open(ref) as fh:
        return parse_system_spec(fh.read(), name=os.path.basename(ref))


def parse_point(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot read point {text!r}; expected comma-separated numbers") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _tol(args) -> ToleranceMap:
    return ToleranceMap(args.zero_tol, args.strict_tol)


def _integrator(args) -> IntegratorConfig:
    return IntegratorConfig(method=args.method, step=args.step, rtol=args.rtol,
                            max_norm=args.max_norm)


def _check_dim(sys_: System, x, what: str) -> None:
    if len(x) != sys_.dimension:
        raise ConfigError(f"{what} {x} has {len(x)} coordinates, system dimension is {sys_.dimension}")


def cmd_classify(args) -> int:
    sys_ = load_system(args.system)
    chunks = []
    for p in args.point:
        x = parse_point(p)
        _check_dim(sys_, x, "point")
        if not any(x):
            raise ConfigError("the origin is excluded: certificates are defined for x != 0 only")
        cert = classify_point(sys_, x, _tol(args), args.n_max)
        log.info(format_certificate_line(cert))
        chunks.append(cert.to_record())
    _emit("\n".join(chunks), args.out)
    return EXIT_OK


def _smooth_outcome(sys_: System, x, u: float, sigma: float, integ: IntegratorConfig) -> SynthesisOutcome:
    traj = integrate(sys_, u, x, (0.0, sigma), integ, record=32)
    vals = traj.V(sys_)
    v0 = float(sys_.V(x))
    return SynthesisOutcome("SmoothFeedback", sigma, v0 - float(vals[-1]),
                            float(np.max(vals)) / v0, u_value=u)


def cmd_synthesize(args) -> int:
    sys_ = load_system(args.system)
    integ = _integrator(args)
    chunks = []
    for p in args.point:
        x = parse_point(p)
        _check_dim(sys_, x, "point")
        if not any(x):
            raise ConfigError("the origin is excluded: synthesis is defined for x != 0 only")
        cert = classify_point(sys_, x, _tol(args), args.n_max)
        if cert.branch.is_bracket:
            pair = synthesize_pair(sys_, x, cert, SearchPolicy(u_max=args.u_max), _tol(args))
            outcome = select_epsilon(sys_, x, pair, args.sigma, integ)
        elif cert.branch.value == "Unclassified":
            raise ControllerFailure(cert, 0.0)
        else:
            u = sontag_feedback(sys_, sys_.theta, x, _tol(args))
            outcome = _smooth_outcome(sys_, x, u, args.sigma, integ)
        chunks.append(outcome.to_record([("point", list(x)), ("branch", cert.branch.value)]))
    _emit("\n".join(chunks), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    sys_ = load_system(args.system)
    x0 = parse_point(args.x0)
    _check_dim(sys_, x0, "initial state")
    if not (args.dt > 0 and args.horizon > 0):
        raise ConfigError("--dt and --horizon must be positive")
    policy = ClosedLoopPolicy(tol=ToleranceMap(args.band, args.strict_tol), n_max=args.n_max)
    traj, report = run_closed_loop(sys_, sys_.theta, Partition.uniform(args.dt, args.horizon), x0,
                                   _integrator(args), policy)
    write_atomic(args.out, trajectory_to_csv(traj, sys_))
    record = report.to_record()
    if args.report:
        write_atomic(args.report, record)
    else:
        sys.stdout.write(record)
    return EXIT_OK


def _load_trajectory(path: str, dt: float):
    if not os.path.exists(path):
        raise MissingArtifact(f"trajectory file {path!r} does not exist")
    with open(path) as fh:
        text = fh.read()
    if not text.strip():
        raise MissingArtifact(f"trajectory file {path!r} is empty")
    traj = trajectory_from_csv(text)
    if len(traj) == 0:
        raise MissingArtifact(f"trajectory file {path!r} has no rows")
    if dt is not None:
        end = float(traj.times[-1])
        samples = Partition.uniform(dt, end).times if end > 0 else (0.0,)
        traj.sample_times = tuple(float(traj.times[np.argmin(np.abs(traj.times - t))]) for t in samples)
    return traj


def _region(text: str | None):
    if text is None:
        return None
    vals = parse_point(text)
    if len(vals) % 2:
        raise ConfigError("--region needs lo,hi pairs per axis")
    return [(vals[i], vals[i + 1]) for i in range(0, len(vals), 2)]


def cmd_verify(args) -> int:
    sys_ = load_system(args.system)
    traj = _load_trajectory(args.trajectory, args.dt)
    if traj.dimension != sys_.dimension:
        raise ConfigError(f"trajectory has {traj.dimension} state columns, system dimension is {sys_.dimension}")
    report = verify_report(traj, sys_, _region(args.region))
    _emit(report.to_record(), args.out)
    return EXIT_OK


def summarize(report: RunReport) -> str:
    n = report.intervals
    lines = []
    if report.decrease_ok:
        lines.append(f"decrease: OK ({n}/{n} intervals)")
    else:
        lines.append(f"decrease: FAILED (first violation at interval {report.first_decrease_violation})")
    if report.intersample_ok:
        lines.append(f"intersample: OK ({n}/{n} intervals, max V ratio {report.max_intersample_ratio:.4g})")
    else:
        lines.append("intersample: FAILED (first violation at interval "
                     f"{report.first_intersample_violation}, max V ratio {report.max_intersample_ratio:.4g})")
    lines.append(f"sup_control: {report.sup_control:.6g}")
    lines.append(f"final_norm: {report.final_norm:.6g}")
    if report.in_region is not None:
        lines.append(f"in_region: {'yes' if report.in_region else 'no'}")
    return "\n".join(lines) + "\n"


def emit_report(sys_: System, traj, plot_path: str | None = None, region=None) -> str:
    report = verify_report(traj, sys_, region)
    if plot_path:
        vals = traj.V(sys_)
        rows = "".join(f"{t!r} {v!r}\n" for t, v in zip(traj.times.tolist(), vals.tolist()))
        write_atomic(plot_path, "# t V\n" + rows)
    return summarize(report)


def cmd_report(args) -> int:
    sys_ = load_system(args.system)
    traj = _load_trajectory(args.trajectory, args.dt)
    _emit(emit_report(sys_, traj, args.plot, _region(args.region)), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sdfstab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log certificate summaries")
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, points=False):
        p.add_argument("--system", required=True,
                       help=f"registry name ({', '.join(REGISTRY_NAMES)}) or system file")
        if points:
            p.add_argument("--point", action="append", required=True,
                           help="comma-separated state; repeat for several points")
        p.add_argument("--zero-tol", type=float, default=1e-9)
        p.add_argument("--strict-tol", type=float, default=1e-9)
        p.add_argument("--n-max", type=int, default=6)
        p.add_argument("--out", help="output file (written atomically); default stdout")

    def numerics(p):
        p.add_argument("--method", choices=("rk4", "rk45"), default="rk4")
        p.add_argument("--step", type=float, default=0.01)
        p.add_argument("--rtol", type=float, default=1e-10)
        p.add_argument("--max-norm", type=float, default=1e6)

    p = sub.add_parser("classify", help="certificate records at points")
    common(p, points=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synthesize", help="controller records at points")
    common(p, points=True)
    numerics(p)
    p.add_argument("--sigma", type=float, default=0.1, help="largest admissible eps")
    p.add_argument("--u-max", type=float, default=None, help="cap on |u1|")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("simulate", help="closed-loop run to CSV")
    common(p)
    numerics(p)
    p.add_argument("--x0", required=True)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--horizon", type=float, default=10.0)
    p.add_argument("--band", type=float, default=1e-6, help="zero tolerance of the switching band")
    p.add_argument("--report", help="run report record file")
    p.set_defaults(func=cmd_simulate, out=None)
    p._option_string_actions["--out"].required = True

    for verb, func, helptext in (("verify", cmd_verify, "re-check a trajectory file"),
                                 ("report", cmd_report, "human-readable summary of a trajectory")):
        p = sub.add_parser(verb, help=helptext)
        common(p)
        p.add_argument("--trajectory", required=True)
        p.add_argument("--dt", type=float, default=None, help="sampling period of the run")
        p.add_argument("--region", help="box lo1,hi1,lo2,hi2,... for the in-region check; write --region=-1,1,-1,1")
        if verb == "report":
            p.add_argument("--plot", help="two-column (t, V) output file")
        p.set_defaults(func=func)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: parser: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, KeyError, ValueError, OSError) as exc:
        if isinstance(exc, (WrongBranch, NotApplicable)):
            print(f"error: control_synthesis: {exc}", file=sys.stderr)
            return EXIT_CONTROLLER
        print(f"error: config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ControllerFailure, SearchExhausted, NoDecrease) as exc:
        print(f"error: controller: {exc}", file=sys.stderr)
        return EXIT_CONTROLLER
    except (BlowUp, StepUnderflow, FloatingPointError, OverflowError) as exc:
        print(f"error: integrator: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
