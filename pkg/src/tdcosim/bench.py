"""Comparison harness: accuracy, robustness and efficiency of the
interface-model / interaction-scheme combinations on a common scenario.

Error metrics are taken against a designated reference combination (by
default the link interface under the iterated simultaneous scheme) run on
the identical scenario: maximum and average absolute error of the monitored
transmission bus voltage magnitude, the monitored feeder phase voltage
magnitude, and the monitored machine speed.

Output is deterministic apart from the wall-clock column: float cells are
written with ``repr`` so repeated runs produce byte-identical files once
``wall_s`` is stripped. Metrics of a run that ended early are computed over
the overlapping prefix and are prefixed with ``~`` in the CSV.
"""
from __future__ import annotations

import logging
import statistics
import time
from dataclasses import dataclass

import numpy as np

from .errors import CombinationError, GridMismatchError
from .interface import InterfaceModel
from .orchestrator import CoSimulation, Scenario, Scheme, TimeSeriesResult

__all__ = [
    "ErrorMetrics",
    "CellResult",
    "compute_metrics",
    "run_cell",
    "run_matrix",
    "emit_csv",
    "emit_markdown",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "beta", "im", "is", "max_dv5", "avg_dv5", "max_dv14a", "avg_dv14a",
    "max_dw_g1", "avg_dw_g1", "wall_s", "mean_iters", "status",
)

DEFAULT_BETAS = (0.0, 0.1, 0.2)
DEFAULT_IMS = (2, 3, 5, 6, 7)
DEFAULT_SCHEMES = (2, 3, 5, 6)
REFERENCE = (InterfaceModel.LINK, Scheme.PARALLEL_ITER)


@dataclass(frozen=True)
class ErrorMetrics:
    max_dv_t: float
    avg_dv_t: float
    max_dv_d: float
    avg_dv_d: float
    max_dw: float
    avg_dw: float
    flagged: bool = False  # candidate ended early; prefix metrics on output

    def as_tuple(self) -> tuple:
        return (self.max_dv_t, self.avg_dv_t, self.max_dv_d, self.avg_dv_d,
                self.max_dw, self.avg_dw)


@dataclass
class CellResult:
    beta: float
    im: InterfaceModel
    scheme: Scheme
    status: str  # "ok" | "reference" | "diverged" | "skipped"
    metrics: ErrorMetrics | None = None
    wall_s: float = float("nan")
    mean_iters: float = float("nan")
    reason: str = ""
    result: TimeSeriesResult | None = None


def compute_metrics(cand: TimeSeriesResult, ref: TimeSeriesResult) -> ErrorMetrics:
    """Trajectory error of ``cand`` against ``ref`` on the shared grid."""
    n = min(len(cand.t), len(ref.t))
    if n == 0:
        raise GridMismatchError("empty trajectory")
    if not np.array_equal(cand.t[:n], ref.t[:n]):
        raise GridMismatchError("time grids differ; runs are not comparable")
    flagged = cand.status != "completed" or len(cand.t) != len(ref.t)
    dv_t = np.abs(np.abs(cand.v_t[:n]) - np.abs(ref.v_t[:n]))
    dv_d = np.abs(np.abs(cand.v_d[:n]) - np.abs(ref.v_d[:n]))
    dw = np.abs(cand.omega[:n] - ref.omega[:n])
    return ErrorMetrics(
        max_dv_t=float(dv_t.max()), avg_dv_t=float(dv_t.mean()),
        max_dv_d=float(dv_d.max()), avg_dv_d=float(dv_d.mean()),
        max_dw=float(dw.max()), avg_dw=float(dw.mean()),
        flagged=flagged,
    )


def _timed_run(scenario: Scenario, im: InterfaceModel, scheme: Scheme,
               reps: int) -> tuple[TimeSeriesResult, float]:
    """Run once for the trajectory, more times for a median wall clock."""
    walls = []
    result = None
    for _ in range(max(1, reps)):
        sim = CoSimulation(scenario, im, scheme)
        t0 = time.perf_counter()
        out = sim.run()
        walls.append(time.perf_counter() - t0)
        if result is None:
            result = out
    return result, statistics.median(walls)


def run_cell(scenario: Scenario, im: InterfaceModel, scheme: Scheme,
             ref: TimeSeriesResult, reps: int = 1) -> CellResult:
    beta = scenario.beta
    try:
        result, wall = _timed_run(scenario, im, scheme, reps)
    except CombinationError as exc:
        return CellResult(beta, im, scheme, status="skipped", reason=str(exc))
    metrics = compute_metrics(result, ref)
    status = "ok" if result.status == "completed" else "diverged"
    return CellResult(beta, im, scheme, status=status, metrics=metrics,
                      wall_s=wall, mean_iters=result.mean_iterations,
                      reason=result.reason, result=result)


def run_matrix(scenario_for_beta, betas=DEFAULT_BETAS, ims=DEFAULT_IMS,
               schemes=DEFAULT_SCHEMES, reps: int = 1) -> list[CellResult]:
    """Run the full comparison.

    ``scenario_for_beta`` maps an unbalance factor to a :class:`Scenario`;
    each beta block is measured against its own reference run.
    """
    cells: list[CellResult] = []
    for beta in betas:
        scenario = scenario_for_beta(beta)
        ref_im, ref_scheme = REFERENCE
        ref_result, ref_wall = _timed_run(scenario, ref_im, ref_scheme, reps)
        if ref_result.status != "completed":
            raise GridMismatchError(
                f"reference run did not complete at beta={beta}: {ref_result.reason}"
            )
        for im_id in ims:
            for s_id in schemes:
                im, scheme = InterfaceModel(im_id), Scheme(s_id)
                if (im, scheme) == REFERENCE:
                    cells.append(CellResult(
                        beta, im, scheme, status="reference",
                        metrics=compute_metrics(ref_result, ref_result),
                        wall_s=ref_wall, mean_iters=ref_result.mean_iterations,
                        result=ref_result,
                    ))
                    continue
                cell = run_cell(scenario, im, scheme, ref_result, reps)
                cells.append(cell)
                log.info("beta=%g im=%d is=%d: %s", beta, im_id, s_id, cell.status)
    return cells


def _fmt(x: float, flagged: bool = False) -> str:
    s = repr(float(x))
    return f"~{s}" if flagged else s


def emit_csv(cells: list[CellResult]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for c in cells:
        if c.metrics is None:
            vals = [""] * 6
        else:
            vals = [_fmt(x, c.metrics.flagged) for x in c.metrics.as_tuple()]
        row = [
            _fmt(c.beta), str(int(c.im)), str(int(c.scheme)),
            *vals,
            "" if c.status == "skipped" else repr(float(c.wall_s)),
            "" if c.status == "skipped" else _fmt(c.mean_iters),
            c.status,
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def emit_markdown(cells: list[CellResult]) -> str:
    """Readable summary table; the reference rows show a dash for their own
    (identically zero) error columns."""
    head = ("| beta | im | is | max dV_t | avg dV_t | max dV_d | avg dV_d "
            "| max dw | avg dw | iters | status |")
    sep = "|" + "---|" * 11
    lines = [head, sep]
    for c in cells:
        if c.status == "reference":
            vals = ["-"] * 6
        elif c.metrics is None:
            vals = [""] * 6
        else:
            p = "~" if c.metrics.flagged else ""
            vals = [f"{p}{x:.3e}" for x in c.metrics.as_tuple()]
        it = "" if c.status == "skipped" else f"{c.mean_iters:.2f}"
        lines.append(
            f"| {c.beta:g} | {int(c.im)} | {int(c.scheme)} | "
            + " | ".join(vals) + f" | {it} | {c.status} |"
        )
    return "\n".join(lines) + "\n"
