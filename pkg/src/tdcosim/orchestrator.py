"""Coupled transmission-distribution time stepping.

One step of the co-simulation advances the transmission machines with a
modified-Euler (Heun) pair and, at the predictor state, runs the boundary
exchange prescribed by the interaction scheme:

* ``SERIES_T*``  -- transmission solves first, feeders consume its fresh
  boundary publication;
* ``SERIES_D*``  -- feeders solve first against the held publication, the
  transmission solve consumes their fresh draws;
* ``PARALLEL*``  -- both sides consume the held payloads and publish
  simultaneously. With the link interface model the simultaneous exchange
  is closed exactly by the joint two-port solve of both equivalents.

Schemes 1-3 perform that exchange exactly once; schemes 4-6 repeat it until
the published payloads stop changing (or a budget runs out). After the
corrector, each side runs one final output solve: the transmission side
consumes the draws it consumed in the last exchange iteration, and the
feeders consume the final transmission publication, so the recorded
distribution state is consistent with the corrected machine state. Those
final publications become the held payloads for the next step. The rule is
scheme-independent, so a single-iteration step of scheme 6 is bit-identical
to scheme 3, which the tests rely on.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .distribution import FeederSimulator, FeederSolution, HeadSource
from .errors import (
    CaseFormatError,
    FbsDivergenceError,
    LowVoltageError,
    NonConvergenceError,
    SolutionExplosionError,
)
from .interface import (
    EquivalentLoad,
    InterfaceModel,
    d_to_t,
    solve_link_current,
    t_to_d,
    validate_combination,
)
from .network import FaultSpec
from .phasor import balanced_phases, phase_to_sequence_vec
from .transmission import TransmissionCase, TransmissionSimulator
from .errors import InitializationError

__all__ = [
    "Scheme",
    "ConvergenceConfig",
    "MonitorSpec",
    "Scenario",
    "TimeSeriesResult",
    "CoSimulation",
    "run_cosimulation",
]

log = logging.getLogger(__name__)

_INIT_TOL = 1e-9
_INIT_MAX_ITER = 80
# |V| beyond any phasor-model meaning; same bound the sweep solver uses.
_EXPLOSION_LIMIT = 20.0


class Scheme(IntEnum):
    """Interaction schemes. 1-3 exchange once per step, 4-6 iterate."""

    SERIES_T_ONCE = 1
    SERIES_D_ONCE = 2
    PARALLEL_ONCE = 3
    SERIES_T_ITER = 4
    SERIES_D_ITER = 5
    PARALLEL_ITER = 6

    @property
    def iterative(self) -> bool:
        return self.value >= 4

    @property
    def pattern(self) -> str:
        return ("series_t", "series_d", "parallel")[(self.value - 1) % 3]


@dataclass(frozen=True)
class ConvergenceConfig:
    tol_v: float = 1e-6
    tol_i: float = 1e-6
    max_iter: int = 20
    on_nonconvergence: str = "continue"  # "continue" | "abort"


@dataclass(frozen=True)
class MonitorSpec:
    """What to record each step: a transmission bus voltage, one feeder bus
    phase voltage, and one machine speed."""

    t_bus: int
    d_bus: int
    d_phase: int = 0
    gen_bus: int | None = None


@dataclass(frozen=True)
class Scenario:
    name: str
    tcase: TransmissionCase
    feeders: dict  # boundary bus id -> FeederSpec
    monitor: MonitorSpec
    beta: float = 0.0
    fault: FaultSpec | None = None
    dt: float = 0.005
    t_end: float = 15.0
    convergence: ConvergenceConfig = ConvergenceConfig()
    fbs_tol: float = 1e-10
    max_sweeps: int = 200

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class TimeSeriesResult:
    """Sampled trajectories. Voltage/speed arrays have one sample per
    completed step plus the initial point; ``iterations`` and
    ``mismatch_trace`` have one entry per completed step."""

    t: np.ndarray
    v_t: np.ndarray
    v_d: np.ndarray
    omega: np.ndarray
    iterations: np.ndarray
    status: str = "completed"
    diverged_at: float | None = None
    reason: str = ""
    mismatch_trace: list = field(default_factory=list)
    nonconverged_steps: int = 0

    @property
    def steps_completed(self) -> int:
        return len(self.iterations)

    @property
    def mean_iterations(self) -> float:
        if len(self.iterations) == 0:
            return float("nan")
        return float(np.mean(self.iterations))


@dataclass
class _TPublish:
    """Per-boundary transmission publication."""

    v_seq: np.ndarray
    voc_seq: np.ndarray | None = None
    z_seq: np.ndarray | None = None

    def source_view(self, im: InterfaceModel) -> tuple[np.ndarray, np.ndarray | None]:
        if im.thevenin:
            return self.voc_seq, self.z_seq
        return self.v_seq, None


def _pub_delta(im: InterfaceModel, a: dict, b: dict) -> float:
    d = 0.0
    for bus in a:
        va, _ = a[bus].source_view(im)
        vb, _ = b[bus].source_view(im)
        d = max(d, float(np.abs(va - vb).max()))
    return d


def _draw_delta(a: dict, b: dict) -> float:
    d = 0.0
    for bus in a:
        d = max(d, float(np.abs(a[bus] - b[bus]).max()))
    return d


class CoSimulation:
    """One scenario run for a given interface model and interaction scheme."""

    def __init__(self, scenario: Scenario, im: InterfaceModel, scheme: Scheme):
        validate_combination(im, scheme.pattern, scheme.name)
        self.scenario = scenario
        self.im = im
        self.scheme = scheme
        self.t_sim = TransmissionSimulator(scenario.tcase, mode=im.t_mode)
        for bus in scenario.feeders:
            if bus not in scenario.tcase.boundary_buses:
                raise CaseFormatError(f"feeder head {bus} is not a boundary bus")
        self.feeders: dict[int, FeederSimulator] = {
            bus: FeederSimulator(spec, beta=scenario.beta,
                                 fbs_tol=scenario.fbs_tol,
                                 max_sweeps=scenario.max_sweeps)
            for bus, spec in scenario.feeders.items()
        }
        mon = scenario.monitor
        if mon.t_bus not in self.t_sim.idx:
            raise CaseFormatError(f"monitored bus {mon.t_bus} not in transmission case")
        self._mon_feeder = None
        for bus, spec in scenario.feeders.items():
            if mon.d_bus in spec.bus_ids:
                self._mon_feeder = bus
                break
        if self._mon_feeder is None:
            raise CaseFormatError(f"monitored bus {mon.d_bus} is on no feeder")
        self._gen_bus = mon.gen_bus if mon.gen_bus is not None \
            else scenario.tcase.generators[0].bus

        self.payload_t2d: dict[int, _TPublish] = {}
        self.payload_d2t: dict[int, np.ndarray] = {}
        self._d_sols: dict[int, FeederSolution] = {}
        self._initialized = False
        self._nonconv = 0

    # -- shared pieces -------------------------------------------------------

    def _publish(self, sol, draws: dict) -> dict:
        out = {}
        for bus in self.feeders:
            k = self.t_sim.idx[bus]
            v_seq = sol.seq_at(k)
            if self.im.thevenin:
                voc, z = self.t_sim.thevenin_seq(sol, bus, draws)
                out[bus] = _TPublish(v_seq=v_seq, voc_seq=voc, z_seq=z)
            else:
                out[bus] = _TPublish(v_seq=v_seq)
        return out

    def _solve_feeders(self, t2d: dict) -> tuple[dict, dict]:
        sols, draws = {}, {}
        for bus, fdr in self.feeders.items():
            v_seq, z_seq = t2d[bus].source_view(self.im)
            src = t_to_d(self.im, v_seq, z_seq)
            if self.im.uses_power_flow_feeder:
                sol = fdr.fbs_solve(src)
            else:
                sol = fdr.dyn_solve(src)
            sols[bus] = sol
            draws[bus] = d_to_t(self.im, fdr.extract_boundary(sol)).draws
        return sols, draws

    def _link_exchange(self, t2d: dict) -> tuple[dict, dict]:
        sols, draws = {}, {}
        for bus, fdr in self.feeders.items():
            voc_d, z_d = fdr.thevenin()
            i_link = solve_link_current(t2d[bus].voc_seq, t2d[bus].z_seq, voc_d, z_d)
            sols[bus] = fdr.apply_link_current(i_link)
            draws[bus] = 3.0 * phase_to_sequence_vec(i_link)
        return sols, draws

    def _check_physical(self, v_t: np.ndarray, d_sols: dict) -> None:
        """Reject a step whose final solution left the meaningful range.

        A non-contracting boundary coupling grows the exchange from step to
        step while every individual network solve still succeeds; without
        this check such a run would report completion on garbage samples.
        """
        worst = 0.0
        for v in [v_t] + [d_sols[bus].v for bus in self.feeders]:
            mags = np.abs(np.asarray(v))
            if not np.all(np.isfinite(mags)):
                raise SolutionExplosionError(math.nan, _EXPLOSION_LIMIT)
            worst = max(worst, float(mags.max()))
        if worst > _EXPLOSION_LIMIT:
            raise SolutionExplosionError(worst, _EXPLOSION_LIMIT)

    # -- initialization --------------------------------------------------------

    def initialize(self) -> None:
        eps_src_z = 1e-6 * np.eye(3, dtype=complex)
        draws = {bus: EquivalentLoad.zero().draws for bus in self.feeders}
        sols = {}
        for it in range(_INIT_MAX_ITER):
            v_t = self.t_sim.operating_point(draws)
            new_draws = {}
            for bus, fdr in self.feeders.items():
                v1 = v_t[self.t_sim.idx[bus]]
                src = HeadSource(e=balanced_phases(complex(v1)), z=eps_src_z)
                sol = fdr.fbs_solve(src)
                sols[bus] = sol
                new_draws[bus] = d_to_t(self.im, fdr.extract_boundary(sol)).draws
            delta = _draw_delta(new_draws, draws)
            draws = new_draws
            if delta < _INIT_TOL:
                break
        else:
            raise InitializationError(
                f"boundary exchange did not settle (last change {delta:.2e})"
            )
        self.t_sim.commit_init(draws)
        sol_t = self.t_sim.solve(draws)
        self.payload_t2d = self._publish(sol_t, draws)
        # Re-derive the feeder side through this interface model's own solve
        # path so the first step starts from a self-consistent payload pair
        # rather than from the ideal-source bootstrap above.
        if self.im.is_link:
            self._d_sols, self.payload_d2t = self._link_exchange(self.payload_t2d)
        else:
            self._d_sols, self.payload_d2t = self._solve_feeders(self.payload_t2d)
        self._sol_t = sol_t
        self._initialized = True
        log.debug("initialized after %d boundary exchanges", it + 1)

    # -- one step ---------------------------------------------------------------

    def step(self, t: float, events: tuple = ()) -> tuple[int, tuple]:
        """Advance one step from time ``t``. Returns (iterations, mismatches).

        Switching events scheduled at ``t`` take effect after the initial
        solve and prediction: the step integrates across the discontinuity
        (trapezoidal average of the pre-event and post-event derivatives),
        and all boundary exchanges of this step see the new network.
        """
        dt = self.scenario.dt
        cc = self.scenario.convergence
        im, pattern = self.im, self.scheme.pattern

        x0 = self.t_sim.get_state()
        sol0 = self.t_sim.solve(self.payload_d2t)
        self._sol0 = sol0
        f0 = self.t_sim.derivatives(sol0)
        self.t_sim.set_state((x0[0] + dt * f0[0], x0[1] + dt * f0[1]))
        for kind, fault in events:
            if kind == "on":
                self.t_sim.apply_fault(fault)
            else:
                self.t_sim.clear_fault(fault)

        cur_t2d = self.payload_t2d
        cur_d2t = self.payload_d2t
        max_iter = cc.max_iter if self.scheme.iterative else 1
        mismatches = []
        best = (math.inf, None)
        consumed_t = cur_d2t
        consumed_d = cur_t2d
        sol_t = sol0
        converged = not self.scheme.iterative
        for m in range(1, max_iter + 1):
            if pattern == "series_t":
                consumed_t = cur_d2t
                sol_t = self.t_sim.solve(consumed_t)
                new_t2d = self._publish(sol_t, consumed_t)
                consumed_d = new_t2d
                d_sols, new_d2t = self._solve_feeders(consumed_d)
            elif pattern == "series_d":
                consumed_d = cur_t2d
                d_sols, new_d2t = self._solve_feeders(consumed_d)
                consumed_t = new_d2t
                sol_t = self.t_sim.solve(consumed_t)
                new_t2d = self._publish(sol_t, consumed_t)
            else:
                consumed_t = cur_d2t
                sol_t = self.t_sim.solve(consumed_t)
                new_t2d = self._publish(sol_t, consumed_t)
                if im.is_link:
                    consumed_d = new_t2d
                    d_sols, new_d2t = self._link_exchange(consumed_d)
                else:
                    consumed_d = cur_t2d
                    d_sols, new_d2t = self._solve_feeders(consumed_d)
            dv = _pub_delta(im, new_t2d, cur_t2d)
            di = _draw_delta(new_d2t, cur_d2t)
            mis = max(dv, di)
            mismatches.append(mis)
            if mis < best[0]:
                best = (mis, consumed_t)
            cur_t2d, cur_d2t = new_t2d, new_d2t
            if self.scheme.iterative and dv < cc.tol_v and di < cc.tol_i:
                converged = True
                break
        iterations = len(mismatches)

        if not converged:
            if cc.on_nonconvergence == "abort":
                raise NonConvergenceError(t, mismatches[-1])
            self._nonconv += 1
            log.debug("t=%.4f: exchange not converged (best %.2e), continuing",
                      t, best[0])
            if best[1] is not consumed_t:
                consumed_t = best[1]
                sol_t = self.t_sim.solve(consumed_t)

        f1 = self.t_sim.derivatives(sol_t)
        self.t_sim.set_state((x0[0] + 0.5 * dt * (f0[0] + f1[0]),
                              x0[1] + 0.5 * dt * (f0[1] + f1[1])))

        sol_t_fin = self.t_sim.solve(consumed_t)
        pub_next = self._publish(sol_t_fin, consumed_t)
        if im.is_link:
            d_sols, d2t_next = self._link_exchange(pub_next)
        else:
            d_sols, d2t_next = self._solve_feeders(pub_next)
        self._check_physical(sol_t_fin.v1, d_sols)
        self.payload_t2d = pub_next
        self.payload_d2t = d2t_next
        self._d_sols = d_sols
        self._sol_t = sol_t_fin

        for bus, fdr in self.feeders.items():
            fdr.step_motors(dt, v=d_sols[bus].v)
        return iterations, tuple(mismatches)

    # -- full run ------------------------------------------------------------------

    def _monitor_v_t(self, sol) -> complex:
        return complex(sol.v1[self.t_sim.idx[self.scenario.monitor.t_bus]])

    def _sample_d(self) -> tuple[complex, float]:
        mon = self.scenario.monitor
        fdr = self.feeders[self._mon_feeder]
        v_d = fdr.voltage(self._d_sols[self._mon_feeder], mon.d_bus, mon.d_phase)
        return v_d, self.t_sim.omega_at(self._gen_bus)

    def run(self) -> TimeSeriesResult:
        """Run to ``t_end``.

        Sample k of ``v_t`` is the transmission network view entering step k
        (fresh payloads, before that step's switching events: the left limit
        at a switching instant); ``v_d`` and ``omega`` at sample k are the
        states produced by step k-1. A trailing network solve supplies the
        last ``v_t`` sample of a completed run.
        """
        sc = self.scenario
        t_samples = [0.0]
        if not self._initialized:
            self.initialize()
        v_t: list[complex] = []
        s = self._sample_d()
        v_d, omega = [s[0]], [s[1]]
        iters: list[int] = []
        traces: list[tuple] = []
        status, diverged_at, reason = "completed", None, ""

        fault = sc.fault
        k_on = int(round(fault.t_on / sc.dt)) if fault else -1
        k_off = int(round((fault.t_on + fault.duration) / sc.dt)) if fault else -1

        for k in range(sc.n_steps):
            t = k * sc.dt
            events = []
            if fault and k == k_on:
                events.append(("on", fault))
                log.debug("fault on at t=%.4f", t)
            if fault and k == k_off:
                events.append(("off", fault))
                log.debug("fault cleared at t=%.4f", t)
            try:
                n_it, mis = self.step(t, events=tuple(events))
            except (FbsDivergenceError, LowVoltageError, NonConvergenceError,
                    SolutionExplosionError) as exc:
                status = "diverged"
                diverged_at = t
                reason = f"{type(exc).__name__}: {exc}"
                v_t.append(self._monitor_v_t(self._sol0))
                log.info("run %s/%s diverged at t=%.4f: %s",
                         self.im.name, self.scheme.name, t, reason)
                break
            v_t.append(self._monitor_v_t(self._sol0))
            iters.append(n_it)
            traces.append(mis)
            t_samples.append(t + sc.dt)
            s = self._sample_d()
            v_d.append(s[0])
            omega.append(s[1])
        if status == "completed":
            v_t.append(self._monitor_v_t(self.t_sim.solve(self.payload_d2t)))

        return TimeSeriesResult(
            t=np.array(t_samples),
            v_t=np.array(v_t, dtype=complex),
            v_d=np.array(v_d, dtype=complex),
            omega=np.array(omega),
            iterations=np.array(iters, dtype=int),
            status=status,
            diverged_at=diverged_at,
            reason=reason,
            mismatch_trace=traces,
            nonconverged_steps=self._nonconv,
        )


def run_cosimulation(scenario: Scenario, im: InterfaceModel,
                     scheme: Scheme) -> TimeSeriesResult:
    return CoSimulation(scenario, im, scheme).run()
