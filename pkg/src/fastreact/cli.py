"""Command line: simulate, sweep, verify-barriers, assemble, compare.

Exit status: 0 when every check passes, 1 when a check or a numerical step
fails, 2 on configuration errors (bad flags, missing or invalid config,
refusing to overwrite outputs).
"""
from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import __version__
from .analysis import dominance_check, comparison_check, k_sweep
from .barriers import (ConstructionFailure, assemble_global_supersolution, cosh_barrier, ode_barrier,
                       traveling_supersolution)
from .barriers.scan import empirical_threshold
from .config import load_spec
from .diffusion import monotone_dt
from .errors import AssumptionError, ConfigurationError, DomainError, NumericalFailure
from .io import prepare_output, read_trajectory, versions, write_json, write_trajectory
from .simulator import run

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
BARRIERS = ("cosh", "ode", "traveling")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _intervals(text):
    """'a:b,c:d' -> [(a, b), (c, d)]"""
    out = []
    for part in text.split(","):
        try:
            a, b = (float(t) for t in part.split(":"))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected a:b intervals, got {part!r}") from None
        out.append((a, b))
    return out


def _spec(args, **forced):
    overrides = list(args.set or [])
    for key, value in forced.items():
        if value is not None:
            overrides.append(f"{key}={value!r}")
    return load_spec(args.config, overrides)


def _times(T, n):
    return np.linspace(0.0, T, max(int(n), 2))


def cmd_simulate(args):
    spec = _spec(args, **{"params.k": args.k})
    out = prepare_output(args.output, args.force, ("trajectory.csv", "meta.json"))
    traj = run(spec, _times(spec.T, args.snapshots))
    csv_path, _ = write_trajectory(traj, out, force=True)
    print(f"wrote {csv_path} ({len(traj.times)} snapshots, {traj.meta['steps']} steps, dt={traj.meta['dt']:.4g})")
    return EXIT_OK


def cmd_sweep(args):
    spec = _spec(args)
    names = ("convergence.csv", "convergence.json")
    out = prepare_output(args.output, args.force, names)
    if args.omega is not None:
        omega = args.omega
    else:
        # default: support nodes at depth >= half the reach
        rho = spec.geometry.signed_distance(*spec.grid.coords())
        omega = rho <= -0.5 * spec.geometry.reach(spec.grid.extents)
    report = k_sweep(spec, args.ks, omega, output_times=_times(spec.T, args.snapshots))
    report.to_csv(out / names[0])
    report.to_json(out / names[1])
    for row in report.rows:
        print("k={k:g} sup_u_err={sup_u_err:.6g} v_deficit={v_deficit:.6g} interface_disp={interface_disp:.4g}"
              .format(**row))
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _barrier_builder(args):
    if args.barrier == "cosh":
        return lambda k: cosh_barrier(args.a1, args.m, k)
    if args.barrier == "ode":
        return lambda k: ode_barrier(args.a2, args.b2, args.m, k)
    return lambda k: traveling_supersolution(args.s, args.a3, args.b3, args.c3, args.m3, args.m4, k)


def cmd_verify(args):
    lo, hi = np.log10(args.k_min), np.log10(args.k_max)
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi < lo:
        raise ConfigurationError("need 1 < k-min <= k-max")
    exponents = range(int(np.ceil(lo - 1e-9)), int(np.floor(hi + 1e-9)) + 1)
    build = _barrier_builder(args)
    out = prepare_output(args.output, args.force, ("thresholds.json",)) if args.output else None
    verdicts, reports, profiles = {}, {}, {}
    for e in exponents:
        k = 10.0 ** e
        prof = build(k)
        verdicts[k] = prof.passed
        reports[f"{k:g}"] = prof.summary()
        profiles[k] = prof
        print(f"k=1e{e}: {'PASS' if prof.passed else 'FAIL'}")
        if args.verbose:
            for line in prof.report.lines():
                print("    " + line)
    K = empirical_threshold(verdicts)
    print(f"threshold: {'none in range' if K is None else f'k = {K:g}'}")
    if out is not None:
        write_json(out / "thresholds.json", {"barrier": args.barrier, "threshold": K,
                                              "verdicts": {f"{k:g}": v for k, v in verdicts.items()},
                                              "reports": reports, "versions": versions()})
        if K is not None:
            profiles[K].to_csv(out / f"profile_k{K:g}.csv")
            profiles[K].to_json(out / f"profile_k{K:g}.json")
    return EXIT_OK if K is not None else EXIT_FAIL


def cmd_assemble(args):
    spec = _spec(args)
    names = ("assembly.json", "barrier.csv")
    out = prepare_output(args.output, args.force, names)
    dt = monotone_dt(spec.grid)
    times = _times(spec.T, args.snapshots)
    barrier = assemble_global_supersolution(spec, args.d, args.eps, k=args.k, dt=dt, output_times=times,
                                            extension=args.extension, b3_rule=args.b3_rule)
    for line in barrier.report.lines():
        print(line)
    fresh = run(spec.with_(k=barrier.k, solver={**spec.solver, "dt": dt}), times)
    dom = dominance_check(fresh, barrier)
    print(dom.line())
    write_json(out / names[0], {"k": barrier.k, "params": barrier.params, "report": barrier.report.to_dict(),
                                "dominance": dom.to_dict(), "spec": spec.to_dict(), "versions": versions()})
    coords = [c.ravel() for c in spec.grid.coords()]
    with (out / names[1]).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *["x", "y"][:spec.grid.dim], "U", "V", "index"])
        for i, t in enumerate(barrier.times):
            U, V, idx = barrier.U[i].ravel(), barrier.V[i].ravel(), barrier.index[i].ravel()
            for n in range(spec.grid.size):
                w.writerow(["%.17g" % t, *("%.17g" % c[n] for c in coords), "%.17g" % U[n], "%.17g" % V[n],
                            int(idx[n])])
    return EXIT_OK if barrier.passed and dom.passed else EXIT_FAIL


def cmd_compare(args):
    upper, lower = read_trajectory(args.upper), read_trajectory(args.lower)
    rep = comparison_check(upper, lower, args.tol)
    print(rep.line())
    return EXIT_OK if rep.passed else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="fastreact", description="Fast-reaction-limit simulations and barrier checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", required=True, help="TOML problem file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config entry, e.g. params.k=1e4 (repeatable)")
        sp.add_argument("-o", "--output", required=True, help="output directory")
        sp.add_argument("--force", action="store_true", help="overwrite existing outputs")
        sp.add_argument("--snapshots", type=int, default=11, help="number of equally spaced output times")

    sp = sub.add_parser("simulate", help="run one simulation and write trajectory.csv + meta.json")
    with_config(sp)
    sp.add_argument("--k", type=float, help="reaction rate (overrides params.k)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", help="k-sweep against the limit heat flow")
    with_config(sp)
    sp.add_argument("--ks", type=_floats, required=True, help="increasing k values, e.g. 1e2,1e3,1e4")
    sp.add_argument("--omega", type=_intervals, help="interior set for the v deficit, e.g. -0.9:-0.45,0.45:0.9")
    sp.set_defaults(func=cmd_sweep, snapshots=101)

    sp = sub.add_parser("verify-barriers", help="scan a barrier construction over powers of ten of k")
    sp.add_argument("--barrier", choices=BARRIERS, required=True)
    sp.add_argument("--k-min", type=float, default=1e1)
    sp.add_argument("--k-max", type=float, default=1e30)
    sp.add_argument("--a1", type=float, default=1.0)
    sp.add_argument("--m", type=float, default=2.0, help="reaction exponent for cosh/ode")
    sp.add_argument("--a2", type=float, default=0.5)
    sp.add_argument("--b2", type=float, default=1.0)
    sp.add_argument("--s", type=float, default=0.1)
    sp.add_argument("--a3", type=float, default=1.0)
    sp.add_argument("--b3", type=float, default=2.0)
    sp.add_argument("--c3", type=float, default=2.0)
    sp.add_argument("--m3", type=float, default=2.0)
    sp.add_argument("--m4", type=float, default=1.0)
    sp.add_argument("-o", "--output", help="optional output directory for the JSON report and threshold profile")
    sp.add_argument("--force", action="store_true")
    sp.add_argument("-v", "--verbose", action="store_true", help="print every inequality per k")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("assemble", help="global supersolution plus a dominance check against a fresh run")
    with_config(sp)
    sp.add_argument("--d", type=float, required=True, help="enlargement distance")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--k", type=float, help="reaction rate (default: empirical threshold of the traveling piece)")
    sp.add_argument("--extension", choices=("even", "zero"), default="even")
    sp.add_argument("--b3-rule", choices=("corrected", "literal"), default="corrected")
    sp.set_defaults(func=cmd_assemble)

    sp = sub.add_parser("compare", help="comparison check between two stored trajectories")
    sp.add_argument("upper", help="directory of the trajectory expected to have larger u and smaller v")
    sp.add_argument("lower")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigurationError, AssumptionError, DomainError, FileNotFoundError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConstructionFailure, NumericalFailure, FloatingPointError) as exc:
        path = _failure_report(args, exc)
        where = f" (report: {path})" if path else ""
        print(f"numerical failure: {exc}{where}", file=sys.stderr)
        return EXIT_FAIL


def _failure_report(args, exc):
    """Write failure.json into the output directory when there is one."""
    out = getattr(args, "output", None)
    if not out:
        return None
    report = getattr(exc, "report", None)
    data = {"command": args.command, "error": type(exc).__name__, "message": str(exc),
            "report": report.to_dict() if report is not None else None, "versions": versions()}
    path = prepare_output(out, force=True) / "failure.json"
    write_json(path, data)
    return path


if __name__ == "__main__":
    sys.exit(main())
