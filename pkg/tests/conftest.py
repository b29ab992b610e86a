"""Shared fixtures.

The expensive co-simulation runs are session-scoped: the acceptance tests
slice many assertions out of the same trajectories, so each scenario is
simulated once per test session.
"""
from __future__ import annotations

import time

import pytest

from tdcosim.bench import _timed_run, run_cell, run_matrix
from tdcosim.cases import accuracy_scenario, oracle_scenario, robustness_scenario
from tdcosim.interface import InterfaceModel
from tdcosim.orchestrator import Scheme, run_cosimulation


@pytest.fixture(scope="session")
def oracle_run():
    """IM3 + IS6 on the combined-system scenario over the full 5 s."""
    t0 = time.perf_counter()
    result = run_cosimulation(oracle_scenario(t_end=5.0),
                              InterfaceModel.BAL_THEVENIN, Scheme.PARALLEL_ITER)
    return result, time.perf_counter() - t0


@pytest.fixture(scope="session")
def acc_matrix():
    """Accuracy comparison matrix at t_end = 2 s, keyed (beta, im, is)."""
    cells = run_matrix(lambda b: accuracy_scenario(beta=b, t_end=2.0),
                       betas=(0.0, 0.1, 0.2), ims=(2, 3, 5, 6, 7),
                       schemes=(2, 5, 6), reps=1)
    return {(c.beta, int(c.im), int(c.scheme)): c for c in cells}


@pytest.fixture(scope="session")
def collapse_pairs():
    """15 s balanced runs of IM2/IM5 and IM3/IM6 under IS5, with wall clocks."""
    sc = accuracy_scenario(beta=0.0, t_end=15.0)
    out = {}
    for im in (2, 5, 3, 6):
        t0 = time.perf_counter()
        result = run_cosimulation(sc, InterfaceModel(im), Scheme.SERIES_D_ITER)
        out[im] = (result, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="session")
def robustness_runs():
    """All seven interface models on the aggressive-stall scenario."""
    pairs = [(1, 2), (4, 2), (2, 2), (3, 2), (5, 2), (6, 2), (7, 6)]
    return {im: run_cosimulation(robustness_scenario(), InterfaceModel(im),
                                 Scheme(sch))
            for im, sch in pairs}


@pytest.fixture(scope="session")
def iterative_timing():
    """Median-of-5 wall clock and mean iterations for every iterative cell
    at beta = 0 (t_end = 2 s), keyed (im, is)."""
    sc = accuracy_scenario(beta=0.0, t_end=2.0)
    ref, ref_wall = _timed_run(sc, InterfaceModel.LINK, Scheme.PARALLEL_ITER,
                               reps=5)
    out = {(7, 6): (ref_wall, ref.mean_iterations)}
    for im in (2, 3, 5, 6):
        for sch in (5, 6):
            cell = run_cell(sc, InterfaceModel(im), Scheme(sch), ref, reps=5)
            out[(im, sch)] = (cell.wall_s, cell.mean_iters)
    return out
