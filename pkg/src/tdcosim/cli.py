"""Command-line entry points.

``run`` executes one scenario with a chosen interface model and interaction
scheme and can dump the monitored trajectories. ``bench`` runs the
comparison matrix and writes CSV/markdown tables. ``validate`` parses and
checks a scenario file without running it.

Exit codes: 0 success, 2 bad input (file format, invalid combination),
3 the run ended in divergence, 4 numerical failure inside a solver.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from . import cases
from .bench import (
    DEFAULT_BETAS,
    DEFAULT_IMS,
    DEFAULT_SCHEMES,
    emit_csv,
    emit_markdown,
    run_matrix,
)
from .caseio import load_scenario_file
from .errors import (
    CaseFormatError,
    CombinationError,
    GridMismatchError,
    TdCosimError,
)
from .interface import InterfaceModel
from .network import FaultSpec
from .orchestrator import CoSimulation, Scheme

log = logging.getLogger(__name__)

_BUILTINS = {
    "ieee9": lambda: cases.accuracy_scenario(),
    "ieee9-robust": lambda: cases.robustness_scenario(),
    "two-machine": lambda: cases.oracle_scenario(),
}


def _scenario_from_arg(name: str):
    if name in _BUILTINS:
        return _BUILTINS[name]()
    if os.path.exists(name):
        return load_scenario_file(name)
    raise CaseFormatError(
        f"{name!r} is neither a scenario file nor one of {sorted(_BUILTINS)}")


def _parse_id(value: str, prefix: str, enum):
    v = value.lower().removeprefix(prefix)
    try:
        return enum(int(v))
    except ValueError as exc:
        raise CaseFormatError(f"bad {prefix} identifier {value!r}") from exc


def _parse_fault(text: str) -> FaultSpec | None:
    if text.lower() == "none":
        return None
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise CaseFormatError(
            f"fault must be bus:t_on:duration[:y], got {text!r}")
    bus, t_on, dur = int(parts[0]), float(parts[1]), float(parts[2])
    y = float(parts[3]) if len(parts) == 4 else 1e6
    return FaultSpec(bus=bus, y=y, t_on=t_on, duration=dur)


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x != "")


def _ints(text: str) -> tuple:
    return tuple(int(x) for x in text.split(",") if x != "")


def _write_trajectory(result, path: str) -> None:
    # Column names follow the default test system (monitored transmission
    # bus 5, feeder bus 14 phase A, generator 1); the positions hold the
    # monitored quantities of whatever scenario actually ran.
    with open(path, "w") as fh:
        fh.write("t,v5_pos_mag,v14_a_mag,omega_g1,iters\n")
        for k in range(len(result.t)):
            it = int(result.iterations[k - 1]) if k > 0 else 0
            # repr of plain floats round-trips exactly and stays deterministic
            fh.write(
                f"{float(result.t[k])!r},{float(abs(result.v_t[k]))!r},"
                f"{float(abs(result.v_d[k]))!r},{float(result.omega[k])!r},{it}\n"
            )


def cmd_run(args) -> int:
    sc = _scenario_from_arg(args.case)
    overrides = {}
    if args.beta is not None:
        overrides["beta"] = args.beta
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.fault is not None:
        overrides["fault"] = _parse_fault(args.fault)
    if overrides:
        sc = replace(sc, **overrides)
    im = _parse_id(args.im, "im", InterfaceModel)
    scheme = _parse_id(args.scheme, "is", Scheme)
    result = CoSimulation(sc, im, scheme).run()
    if args.out:
        _write_trajectory(result, args.out)
        print(f"trajectory written to {args.out}")
    print(f"scenario {sc.name}: im={int(im)} is={int(scheme)} "
          f"status={result.status} steps={result.steps_completed} "
          f"mean_iters={result.mean_iterations:.3f}")
    if result.status != "completed":
        print(f"stopped at t={result.diverged_at}: {result.reason}")
        return 3
    return 0


def cmd_bench(args) -> int:
    if args.robust:
        scenario_for_beta = lambda b: replace(  # noqa: E731
            cases.robustness_scenario(beta=b), t_end=args.t_end)
    else:
        scenario_for_beta = lambda b: replace(  # noqa: E731
            cases.accuracy_scenario(beta=b), t_end=args.t_end)
    cells = run_matrix(
        scenario_for_beta,
        betas=_floats(args.betas),
        ims=_ints(args.ims),
        schemes=_ints(args.schemes),
        reps=args.reps,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    wrote = []
    if args.format in ("csv", "both"):
        path = os.path.join(args.out_dir, "bench.csv")
        with open(path, "w") as fh:
            fh.write(emit_csv(cells))
        wrote.append(path)
    if args.format in ("md", "both"):
        path = os.path.join(args.out_dir, "bench.md")
        with open(path, "w") as fh:
            fh.write(emit_markdown(cells))
        wrote.append(path)
    for p in wrote:
        print(f"wrote {p}")
    return 0


def cmd_validate(args) -> int:
    sc = load_scenario_file(args.case)
    n_feeder_buses = sum(len(f.bus_ids) for f in sc.feeders.values())
    print(f"{args.case}: ok ({sc.name}: {len(sc.tcase.bus_ids)} transmission "
          f"buses, {len(sc.feeders)} feeders, {n_feeder_buses} feeder buses, "
          f"{sc.n_steps} steps)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tdcosim",
        description="Transmission-distribution dynamic co-simulation",
    )
    ap.add_argument("-v", "--verbose", action="store_true")
    ap.add_argument("-q", "--quiet", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    p.add_argument("--case", default="ieee9",
                   help="scenario YAML path or builtin name (default ieee9)")
    p.add_argument("--im", default="3", help="interface model, 1..7 or imN")
    p.add_argument("--is", dest="scheme", default="6",
                   help="interaction scheme, 1..6 or isN")
    p.add_argument("--beta", type=float, default=None,
                   help="load unbalance factor override")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--fault", default=None,
                   help="bus:t_on:duration[:y], or 'none'")
    p.add_argument("--out", default=None, help="trajectory CSV path")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="run the comparison matrix")
    p.add_argument("--betas", default=",".join(str(b) for b in DEFAULT_BETAS))
    p.add_argument("--ims", default=",".join(str(i) for i in DEFAULT_IMS))
    p.add_argument("--schemes", default=",".join(str(s) for s in DEFAULT_SCHEMES))
    p.add_argument("--reps", type=int, default=1,
                   help="timing repetitions per cell (median reported)")
    p.add_argument("--t-end", type=float, default=15.0)
    p.add_argument("--robust", action="store_true",
                   help="use the aggressive-stall scenario")
    p.add_argument("--out-dir", default="bench_out")
    p.add_argument("--format", choices=("csv", "md", "both"), default="both")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("case", help="scenario YAML path")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else (
        logging.WARNING if args.quiet else logging.INFO)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (CaseFormatError, CombinationError, GridMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TdCosimError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
