"""Positive-sequence / three-sequence transmission dynamics.

Generators use the classical model: constant internal EMF magnitude behind
the transient reactance, swing dynamics

    d(delta)/dt = w_s (w - 1)
    d(w)/dt     = (p_m - p_e - D (w - 1)) / (2 H)

entering the network as Norton equivalents folded into the positive-sequence
admittance matrix. Static loads are folded in as constant impedances at
their initialization voltage. In three-sequence mode the negative- and
zero-sequence networks are purely algebraic: boundary current draws and
shunt faults are their only excitation.

Boundary current draws are expressed in the transmission per-unit system
(positive draw = current leaving the bus toward the distribution side).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CaseFormatError, InitializationError
from .network import BranchSpec, FaultSpec, NetworkMatrix, build_ybus

__all__ = [
    "GeneratorSpec",
    "TransmissionCase",
    "TransmissionSolution",
    "TransmissionSimulator",
    "POSITIVE_SEQ",
    "THREE_SEQ",
]

log = logging.getLogger(__name__)

POSITIVE_SEQ = "positive"
THREE_SEQ = "three_sequence"


def _positive_part(cur) -> complex:
    """Positive-sequence component of a scalar or (zero, pos, neg) draw."""
    if np.ndim(cur) == 0:
        return complex(cur)
    return complex(np.asarray(cur, dtype=complex)[1])


@dataclass(frozen=True)
class GeneratorSpec:
    """Classical machine. ``kind`` selects how the operating point is set:

    * ``"slack"`` -- angle reference, holds ``v_set``;
    * ``"pv"`` -- dispatches ``p_set`` at ``v_set``;
    * ``"emf"`` -- internal EMF given directly as ``e0`` (no regulation).

    ``x2``/``x0`` default to ``x_dp`` and ``0.5 x_dp``.
    """

    bus: int
    x_dp: float
    h: float
    d: float = 0.0
    kind: str = "pv"
    p_set: float = 0.0
    v_set: float = 1.0
    e0: complex = 0j
    x2: float | None = None
    x0: float | None = None

    @property
    def x2_eff(self) -> float:
        return self.x_dp if self.x2 is None else self.x2

    @property
    def x0_eff(self) -> float:
        return 0.5 * self.x_dp if self.x0 is None else self.x0


@dataclass(frozen=True)
class TransmissionCase:
    name: str
    bus_ids: tuple[int, ...]
    branches: tuple[BranchSpec, ...]  # i/j hold bus ids, mapped internally
    generators: tuple[GeneratorSpec, ...]
    boundary_buses: tuple[int, ...]
    static_loads: dict = field(default_factory=dict)  # bus id -> complex S
    freq_hz: float = 60.0
    line_x0_factor: float = 3.0


@dataclass
class TransmissionSolution:
    v1: np.ndarray
    v2: np.ndarray
    v0: np.ndarray

    def seq_at(self, idx: int) -> np.ndarray:
        return np.array([self.v0[idx], self.v1[idx], self.v2[idx]], dtype=complex)


class TransmissionSimulator:
    def __init__(self, case: TransmissionCase, mode: str = POSITIVE_SEQ):
        if mode not in (POSITIVE_SEQ, THREE_SEQ):
            raise CaseFormatError(f"unknown transmission mode {mode!r}")
        self.case = case
        self.mode = mode
        self.n = len(case.bus_ids)
        self.idx = {bus: k for k, bus in enumerate(case.bus_ids)}
        if len(self.idx) != self.n:
            raise CaseFormatError("duplicate bus ids in transmission case")
        for bus in case.boundary_buses:
            if bus not in self.idx:
                raise CaseFormatError(f"boundary bus {bus} not in case")
        self.w_s = 2.0 * math.pi * case.freq_hz

        self._branches_idx = tuple(
            BranchSpec(self.idx[br.i], self.idx[br.j], br.z, br.b) for br in case.branches
        )
        self.y_net = build_ybus(self.n, self._branches_idx)

        self.gens = case.generators
        self.gen_idx = np.array([self.idx[g.bus] for g in self.gens], dtype=int)
        self.ng = len(self.gens)
        self._xdp = np.array([g.x_dp for g in self.gens])
        self._h = np.array([g.h for g in self.gens])
        self._d = np.array([g.d for g in self.gens])

        # dynamic state
        self.delta = np.zeros(self.ng)
        self.omega = np.ones(self.ng)
        self.e_mag = np.ones(self.ng)
        self.p_m = np.zeros(self.ng)

        self.y1 = None  # dynamic positive-sequence matrix (gens + loads folded)
        self.y2 = None
        self.y0 = None
        self._fault_active: FaultSpec | None = None

        if all(g.kind == "emf" for g in self.gens):
            self._emf_mode = True
            self.e_mag = np.array([abs(g.e0) for g in self.gens])
            self.delta = np.array([np.angle(g.e0) for g in self.gens])
            self._build_dynamic(np.ones(self.n, dtype=complex))
        elif any(g.kind == "emf" for g in self.gens):
            raise CaseFormatError("mixing emf-mode and dispatched generators is unsupported")
        else:
            self._emf_mode = False
            if sum(1 for g in self.gens if g.kind == "slack") != 1:
                raise CaseFormatError("dispatched case needs exactly one slack generator")

    # -- matrices ------------------------------------------------------------

    def _build_dynamic(self, v_fold: np.ndarray) -> None:
        """Fold static loads (at voltages ``v_fold``) and machine Nortons."""
        case = self.case
        y1 = self.y_net.copy()
        load_shunts = []
        for bus, s in case.static_loads.items():
            k = self.idx[bus]
            y_load = np.conj(complex(s)) / abs(v_fold[k]) ** 2
            load_shunts.append((k, y_load))
            y1.add_shunt(k, y_load)
        for g, k in zip(self.gens, self.gen_idx):
            y1.add_shunt(k, 1.0 / (1j * g.x_dp))
        self.y1 = y1
        if self.mode == THREE_SEQ:
            y2 = self.y_net.copy()
            for k, y_load in load_shunts:
                y2.add_shunt(k, y_load)
            for g, k in zip(self.gens, self.gen_idx):
                y2.add_shunt(k, 1.0 / (1j * g.x2_eff))
            z0_branches = tuple(
                BranchSpec(br.i, br.j, br.z * case.line_x0_factor, br.b)
                for br in self._branches_idx
            )
            y0 = build_ybus(self.n, z0_branches)
            for g, k in zip(self.gens, self.gen_idx):
                y0.add_shunt(k, 1.0 / (1j * g.x0_eff))
            self.y2, self.y0 = y2, y0
        else:
            self.y2 = self.y0 = None

    # -- power flow ------------------------------------------------------------

    def power_flow(self, draws: dict | None = None, tol: float = 1e-10,
                   max_iter: int = 40) -> np.ndarray:
        """Newton power flow with constant-current boundary draws.

        ``draws`` maps bus id to a positive-sequence complex current drawn
        from the bus. Returns the complex bus voltage vector.
        """
        if self._emf_mode:
            raise CaseFormatError("power flow undefined for emf-mode cases")
        n = self.n
        y = self.y_net.to_csc().toarray()
        d_vec = np.zeros(n, dtype=complex)
        for bus, cur in (draws or {}).items():
            d_vec[self.idx[bus]] = _positive_part(cur)
        s_load = np.zeros(n, dtype=complex)
        for bus, s in self.case.static_loads.items():
            s_load[self.idx[bus]] += complex(s)

        slack = next(g for g in self.gens if g.kind == "slack")
        slack_i = self.idx[slack.bus]
        pv_is = [self.idx[g.bus] for g in self.gens if g.kind == "pv"]
        p_gen = np.zeros(n)
        for g in self.gens:
            if g.kind == "pv":
                p_gen[self.idx[g.bus]] = g.p_set
        vm = np.ones(n)
        va = np.zeros(n)
        vm[slack_i] = slack.v_set
        for g in self.gens:
            if g.kind == "pv":
                vm[self.idx[g.bus]] = g.v_set
        ang_is = [i for i in range(n) if i != slack_i]
        mag_is = [i for i in range(n) if i != slack_i and i not in pv_is]

        for it in range(max_iter):
            v = vm * np.exp(1j * va)
            i_bus = y @ v
            s_calc = v * np.conj(i_bus)
            s_spec = p_gen - s_load - v * np.conj(d_vec)
            mis = s_spec - s_calc
            f = np.concatenate([mis[ang_is].real, mis[mag_is].imag])
            if np.abs(f).max() < tol:
                return v
            # d(S_calc - S_spec)/dx; only the boundary-draw part of S_spec
            # depends on the voltage
            ds_da = 1j * np.diag(v) @ (np.conj(np.diag(i_bus)) - np.conj(y) @ np.conj(np.diag(v))) \
                + 1j * np.diag(v * np.conj(d_vec))
            ds_dm = np.diag(v / vm) @ np.conj(np.diag(i_bus)) \
                + np.diag(v) @ np.conj(y) @ np.conj(np.diag(v / vm)) \
                + np.diag(v * np.conj(d_vec) / vm)
            j11 = ds_da[np.ix_(ang_is, ang_is)].real
            j12 = ds_dm[np.ix_(ang_is, mag_is)].real
            j21 = ds_da[np.ix_(mag_is, ang_is)].imag
            j22 = ds_dm[np.ix_(mag_is, mag_is)].imag
            jac = np.block([[j11, j12], [j21, j22]])
            try:
                dx = np.linalg.solve(jac, f)
            except np.linalg.LinAlgError as exc:
                raise InitializationError(f"power flow Jacobian singular: {exc}") from exc
            na = len(ang_is)
            va[ang_is] += dx[:na]
            vm[mag_is] += dx[na:]
        raise InitializationError(
            f"power flow did not converge in {max_iter} iterations "
            f"(mismatch {np.abs(f).max():.3e})"
        )

    # -- operating point & initialization ---------------------------------------

    def operating_point(self, draws: dict | None = None) -> np.ndarray:
        """Bus voltages for the initialization exchange loop."""
        if self._emf_mode:
            return self.solve(self._seq_draws(draws)).v1
        return self.power_flow(draws)

    def commit_init(self, draws: dict | None = None) -> np.ndarray:
        """Fix the operating point: fold loads, set machine states and p_m."""
        if self._emf_mode:
            sol = self.solve(self._seq_draws(draws))
            self.p_m = self.electrical_power(sol)
            return sol.v1
        v = self.power_flow(draws)
        y = self.y_net.to_csc().toarray()
        s_net = v * np.conj(y @ v)
        d_vec = np.zeros(self.n, dtype=complex)
        for bus, cur in (draws or {}).items():
            d_vec[self.idx[bus]] = _positive_part(cur)
        s_load = np.zeros(self.n, dtype=complex)
        for bus, s in self.case.static_loads.items():
            s_load[self.idx[bus]] += complex(s)
        for gi, (g, k) in enumerate(zip(self.gens, self.gen_idx)):
            s_gen = s_net[k] + s_load[k] + v[k] * np.conj(d_vec[k])
            i_g = np.conj(s_gen / v[k])
            e = v[k] + 1j * g.x_dp * i_g
            self.e_mag[gi] = abs(e)
            self.delta[gi] = np.angle(e)
            self.p_m[gi] = (e * np.conj(i_g)).real
        self.omega = np.ones(self.ng)
        self._build_dynamic(v)
        sol = self.solve(self._seq_draws(draws))
        drift = float(np.abs(sol.v1 - v).max())
        if drift > 1e-6:
            raise InitializationError(
                f"dynamic network inconsistent with power flow (|dV| = {drift:.3e})"
            )
        return sol.v1

    def _seq_draws(self, draws: dict | None) -> dict:
        out = {}
        for bus, cur in (draws or {}).items():
            arr = np.zeros(3, dtype=complex)
            if np.ndim(cur) == 0:
                arr[1] = complex(cur)
            else:
                arr[:] = np.asarray(cur, dtype=complex)
            out[bus] = arr
        return out

    # -- dynamic solution ---------------------------------------------------------

    def emf(self) -> np.ndarray:
        return self.e_mag * np.exp(1j * self.delta)

    def solve(self, seq_draws: dict | None = None) -> TransmissionSolution:
        """Algebraic network solution at the current machine state.

        ``seq_draws`` maps bus id to a length-3 (zero, positive, negative)
        complex draw vector in transmission per-unit.
        """
        if self.y1 is None:
            raise InitializationError("dynamic matrices not built; run commit_init")
        i1 = np.zeros(self.n, dtype=complex)
        e = self.emf()
        for gi, (g, k) in enumerate(zip(self.gens, self.gen_idx)):
            i1[k] += e[gi] / (1j * g.x_dp)
        i2 = np.zeros(self.n, dtype=complex)
        i0 = np.zeros(self.n, dtype=complex)
        for bus, arr in (seq_draws or {}).items():
            k = self.idx[bus]
            i0[k] -= arr[0]
            i1[k] -= arr[1]
            i2[k] -= arr[2]
        v1 = self.y1.solve_vec(i1)
        if self.mode == THREE_SEQ:
            v2 = self.y2.solve_vec(i2)
            v0 = self.y0.solve_vec(i0)
        else:
            v2 = np.zeros(self.n, dtype=complex)
            v0 = np.zeros(self.n, dtype=complex)
        return TransmissionSolution(v1=v1, v2=v2, v0=v0)

    def electrical_power(self, sol: TransmissionSolution) -> np.ndarray:
        e = self.emf()
        v = sol.v1[self.gen_idx]
        i_g = (e - v) / (1j * self._xdp)
        return (e * np.conj(i_g)).real

    def derivatives(self, sol: TransmissionSolution) -> tuple[np.ndarray, np.ndarray]:
        p_e = self.electrical_power(sol)
        d_delta = self.w_s * (self.omega - 1.0)
        d_omega = (self.p_m - p_e - self._d * (self.omega - 1.0)) / (2.0 * self._h)
        return d_delta, d_omega

    def get_state(self) -> tuple[np.ndarray, np.ndarray]:
        return self.delta.copy(), self.omega.copy()

    def set_state(self, state: tuple[np.ndarray, np.ndarray]) -> None:
        self.delta = state[0].copy()
        self.omega = state[1].copy()

    def step_dynamics(self, dt: float, seq_draws: dict | None = None) -> TransmissionSolution:
        """Self-contained modified-Euler step with the boundary draw held fixed."""
        x0 = self.get_state()
        sol0 = self.solve(seq_draws)
        f0 = self.derivatives(sol0)
        self.set_state((x0[0] + dt * f0[0], x0[1] + dt * f0[1]))
        sol1 = self.solve(seq_draws)
        f1 = self.derivatives(sol1)
        self.set_state((x0[0] + 0.5 * dt * (f0[0] + f1[0]),
                        x0[1] + 0.5 * dt * (f0[1] + f1[1])))
        return self.solve(seq_draws)

    # -- boundary views ------------------------------------------------------------

    def thevenin_seq(self, sol: TransmissionSolution, bus: int,
                     seq_draws: dict | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Per-sequence open-circuit voltage and driving-point impedance at
        ``bus``, with the bus's own boundary draw superposed out. In
        positive-sequence mode the negative/zero entries repeat z1 and zero
        open-circuit voltage (balanced publication)."""
        k = self.idx[bus]
        draw = np.zeros(3, dtype=complex)
        if seq_draws and bus in seq_draws:
            draw[:] = seq_draws[bus]
        z1 = self.y1.impedance_column(k)[k]
        voc1 = sol.v1[k] + z1 * draw[1]
        if self.mode == THREE_SEQ:
            z2 = self.y2.impedance_column(k)[k]
            z0 = self.y0.impedance_column(k)[k]
            voc2 = sol.v2[k] + z2 * draw[2]
            voc0 = sol.v0[k] + z0 * draw[0]
        else:
            z2 = z0 = z1
            voc2 = voc0 = 0.0 + 0.0j
        return (np.array([voc0, voc1, voc2], dtype=complex),
                np.array([z0, z1, z2], dtype=complex))

    def omega_at(self, bus: int) -> float:
        for gi, g in enumerate(self.gens):
            if g.bus == bus:
                return float(self.omega[gi])
        raise KeyError(f"no generator at bus {bus}")

    # -- faults ---------------------------------------------------------------------

    def apply_fault(self, fault: FaultSpec) -> None:
        if fault.bus not in self.idx:
            raise CaseFormatError(f"fault bus {fault.bus} not in transmission case")
        spec = FaultSpec(self.idx[fault.bus], fault.y, fault.t_on, fault.duration)
        self.y1.apply_fault(spec)
        if self.mode == THREE_SEQ:
            self.y2.apply_fault(spec)
            self.y0.apply_fault(spec)
        self._fault_active = spec

    def clear_fault(self, fault: FaultSpec) -> None:
        spec = FaultSpec(self.idx[fault.bus], fault.y, fault.t_on, fault.duration)
        self.y1.clear_fault(spec)
        if self.mode == THREE_SEQ:
            self.y2.clear_fault(spec)
            self.y0.clear_fault(spec)
        self._fault_active = None
