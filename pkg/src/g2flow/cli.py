"""Command-line front end: ``check``, ``run``, ``convergence`` and ``info``.

Exit codes: 0 ok, 1 failed check or constraint precondition, 2 usage error,
3 guard halt.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .checks import SUITES
from .integrate import convergence_study, evolve
from .scenario import Scenario, ScenarioError, build, load_scenario
from .snapshot import read_snapshot
from .snapshot_io import state_to_snapshot
from .torus_flow import GuardViolation

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2flow", description="SU(3)/G2 flow toolkit")
    p.add_argument("--threads", type=int, default=None,
                   help="BLAS/FFT thread count (falls back to G2FLOW_THREADS)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run an identity suite and print JSON lines")
    c.add_argument("suite", nargs="?", help=f"one of: {', '.join(SUITES)}")
    c.add_argument("--list", action="store_true", help="list the suites")

    r = sub.add_parser("run", help="evolve a scenario")
    r.add_argument("scenario", nargs="?")
    r.add_argument("--print-config", action="store_true", help="echo the parsed scenario and exit")
    r.add_argument("--output", help="output directory (overrides the scenario)")
    r.add_argument("--force", action="store_true", help="start even if initial constraints fail")

    v = sub.add_parser("convergence", help="observed order of a residual under refinement")
    v.add_argument("scenario")
    v.add_argument("--sweep", required=True, help="'dt=4e-3,2e-3,1e-3' or 'n=16,32,64'")
    v.add_argument("--metric", choices=("auto", "wave", "commutator", "torsion", "cross-check",
                                        "self", "flat"), default="auto")
    v.add_argument("--output", help="table file (default <output>/convergence.csv)")

    i = sub.add_parser("info", help="describe a snapshot file")
    i.add_argument("snapshot")
    return p


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("G2FLOW_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"G2FLOW_THREADS must be an integer, got {env!r}") from None
    return None


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        threads = _threads(args)
        handler = {"check": cmd_check, "run": cmd_run, "convergence": cmd_convergence, "info": cmd_info}
        if threads is not None:
            with threadpool_limits(limits=threads):
                return handler[args.command](args)
        return handler[args.command](args)
    except (UsageError, ScenarioError) as exc:
        print(f"g2flow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


# ---------------------------------------------------------------------------

def cmd_check(args) -> int:
    if args.list:
        print("\n".join(SUITES))
        return EXIT_OK
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r} (known: {', '.join(SUITES)})")
    records = SUITES[args.suite]()
    for rec in records:
        print(json.dumps({"suite": args.suite, **rec.as_json()}))
    return EXIT_OK if all(r.passed for r in records) else EXIT_FAIL


def _constraint_measure(system: str, row: dict) -> float:
    keys = {"torus": ("c_sym", "c_div"), "so3": ("c_torsion", "c_divS"),
            "su2": ("commSB",), "radial": ("res_eq5",)}[system]
    return max(row[k] for k in keys)


def _fmt(v) -> str:
    return repr(float(v))


def cmd_run(args) -> int:
    if args.scenario is None:
        if not args.print_config:
            raise UsageError("run needs a scenario file")
        print(Scenario().to_text(), end="")
        return EXIT_OK
    sc = load_scenario(args.scenario)
    if args.print_config:
        print(sc.to_text(), end="")
        return EXIT_OK
    outdir = Path(args.output or sc.output)
    outdir.mkdir(parents=True, exist_ok=True)
    st, rhs, diagnose, columns, post = build(sc)

    report = open(outdir / "report.jsonl", "w")
    report.write(json.dumps({"event": "start", "seed": sc.seed, "system": sc.system, "recipe": sc.recipe,
                             "dt": sc.dt, "t_final": sc.t_final}) + "\n")
    try:
        first = diagnose(st)
    except GuardViolation as exc:
        report.write(json.dumps({"event": "finish", "status": "guard", "message": str(exc), "seed": sc.seed}) + "\n")
        report.close()
        print(f"guard halt before the first step: {exc}", file=sys.stderr)
        return EXIT_GUARD
    c0 = _constraint_measure(sc.system, first)
    if c0 > sc.constraint_tol and not (sc.force or args.force):
        report.write(json.dumps({"event": "finish", "status": "constraints", "initial": c0, "seed": sc.seed}) + "\n")
        report.close()
        print(f"initial constraint residual {c0:.3e} exceeds {sc.constraint_tol:g}; use --force to run anyway",
              file=sys.stderr)
        return EXIT_FAIL

    with open(outdir / "diag.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)

        def on_sample(step, state):
            writer.writerow([_fmt(traj_rows[-1][c]) for c in columns])
            fh.flush()
            if sc.snapshot_every and step % sc.snapshot_every == 0:
                state_to_snapshot(outdir / f"snap_{step:06d}.g2f", state, sc.system, step, sc.seed)

        traj_rows: list = []

        def diag_and_keep(state):
            row = diagnose(state)
            traj_rows.append(row)
            return row

        traj = evolve(st, sc.t_final, sc.dt, rhs, diag_and_keep, sample_every=sc.sample_every,
                      guard=sc.guard, on_sample=on_sample, post_step=post, lapse=sc.lapse)
    last = traj.rows[-1] if traj.rows else {}
    if traj.final is not None:
        state_to_snapshot(outdir / f"snap_{traj.steps:06d}.g2f", traj.final, sc.system, traj.steps, sc.seed)
    summary = {"event": "finish", "status": traj.status, "steps": traj.steps, "seed": sc.seed,
               "message": traj.message, "final": {k: float(v) for k, v in last.items()}}
    report.write(json.dumps(summary) + "\n")
    report.close()
    shown = ", ".join(f"{k}={float(v):.3e}" for k, v in last.items() if k != "t")
    print(f"{sc.system}/{sc.recipe}: {traj.status} after {traj.steps} steps, t={traj.times[-1]:.6g}; {shown}")
    return EXIT_GUARD if traj.status == "guard" else EXIT_OK


# ---------------------------------------------------------------------------

def _parse_sweep(text: str):
    if "=" not in text:
        raise UsageError(f"sweep must look like 'dt=a,b,c' or 'n=a,b,c', got {text!r}")
    key, vals = text.split("=", 1)
    key = key.strip()
    if key not in ("dt", "n"):
        raise UsageError(f"can only sweep dt or n, got {key!r}")
    try:
        values = [float(v) if key == "dt" else int(v) for v in vals.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad sweep values in {text!r}") from None
    if len(values) < 3:
        raise UsageError(f"a convergence study needs at least 3 resolutions, got {len(values)}")
    return key, values


def _metric_for(sc: Scenario, key: str, metric: str) -> str:
    if metric != "auto":
        return metric
    if key == "dt":
        return {"torus": "wave", "su2": "self", "radial": "flat", "so3": "self"}[sc.system]
    return "commutator"


def measure(sc: Scenario, key: str, value, metric: str) -> float:
    """One error number for the scenario at a given dt or n."""
    from . import so3_flow, torus_flow
    from .checks import so3_commutator, torus_commutator
    from .integrate import rk4_step

    sc = sc.replace(**{key: value})
    st, rhs, diagnose, _, _ = build(sc)
    if metric == "wave":
        if sc.system != "torus":
            raise UsageError("the wave metric needs a torus scenario")
        s1 = rk4_step(st, rhs, sc.dt)
        s2 = rk4_step(s1, rhs, sc.dt)
        return float(np.max(np.abs(torus_flow.wave_residual((st, s1, s2), sc.dt))))
    if metric == "commutator":
        if sc.system == "torus":
            return torus_commutator(sc.n, sc.seed, True)
        return so3_commutator(sc.n, sc.seed, True)
    if metric == "torsion":
        row = diagnose(st)
        return max(v for k, v in row.items() if k.startswith("tor_"))
    if metric == "cross-check":
        if sc.system != "torus":
            raise UsageError("the cross-check metric needs a torus scenario")
        return max(torus_flow.cross_check_exterior(st).values())
    if metric == "flat":
        traj = evolve(st, sc.t_final, sc.dt, rhs, diagnose)
        return float(traj.rows[-1]["err_vs_flat"])
    # self-convergence: difference between dt and dt/2 at t_final
    a = evolve(st, sc.t_final, sc.dt, rhs).final
    b = evolve(st, sc.t_final, sc.dt / 2, rhs).final
    return max(float(np.max(np.abs(getattr(a, f) - getattr(b, f)))) for f in st.EVOLVING)


def cmd_convergence(args) -> int:
    sc = load_scenario(args.scenario)
    key, values = _parse_sweep(args.sweep)
    metric = _metric_for(sc, key, args.metric)
    nominal = 4.0 if metric == "self" else 2.0
    errors = [measure(sc, key, v, metric) for v in values]
    res = [v if key == "dt" else sc.L / v for v in values]
    result = convergence_study(errors, res, nominal=nominal)
    out = Path(args.output) if args.output else Path(sc.output) / "convergence.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([key, "resolution", "error"])
        for v, r, e in zip(values, res, errors):
            w.writerow([v, repr(r), repr(e)])
    print(json.dumps({"metric": metric, "sweep": key, "values": values, "errors": errors,
                      "slope": result.slope, "nominal": nominal, "summary": result.summary(),
                      "seed": sc.seed}))
    return EXIT_FAIL if result.flagged else EXIT_OK


def cmd_info(args) -> int:
    try:
        header, data = read_snapshot(args.snapshot)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    info = {"header": header, "shape": list(data.shape),
            "min": float(np.min(data)) if data.size else None,
            "max": float(np.max(data)) if data.size else None}
    print(json.dumps(info, indent=2))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
