"""Unbalanced radial distribution feeder simulation.

Two network solution paths over the same feeder model:

* :meth:`FeederSimulator.fbs_solve` -- forward-backward sweep power flow,
  warm-started from the previous solution. Used by the power-flow class of
  interface models. Raises :class:`FbsDivergenceError` instead of returning
  a bad solution; callers treat that as a terminal event.
* :meth:`FeederSimulator.dyn_solve` -- direct solution of the 3n x 3n
  complex admittance system with the head source folded in as a Norton
  equivalent and constant-power components linearized as Norton current
  sources at the last solved voltage.

Loads are composite: a constant-impedance part plus a single-phase A/C
motor part. A running motor draws constant power above ``v_floor`` and
degrades to a constant admittance below it (continuous at the floor, zero
current at zero voltage); once its phase voltage stays below ``v_stall``
for ``stall_delay`` seconds it latches into the stalled state and becomes
a constant impedance sized to draw ``stall_power_multiple`` times rated
power at nominal voltage. Stalling is absorbing.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CaseFormatError, FbsDivergenceError
from .network import NetworkMatrix
from .phasor import balanced_phases, phase_to_sequence_vec

__all__ = [
    "SegmentSpec",
    "LoadPoint",
    "MotorConfig",
    "FeederSpec",
    "HeadSource",
    "FeederSolution",
    "BoundaryExtract",
    "FeederSimulator",
    "split_unbalanced",
    "uniform_segment_matrix",
]

log = logging.getLogger(__name__)

_EXPLOSION_LIMIT = 20.0  # p.u.; any sweep iterate beyond this is divergence


@dataclass(frozen=True)
class SegmentSpec:
    """Series segment between local node indices (0 is the head)."""

    i: int
    j: int
    z: np.ndarray  # 3x3 complex


@dataclass(frozen=True)
class LoadPoint:
    """Composite load at a local node: total three-phase P at unity voltage,
    power factor, and the motor share of the total."""

    node: int
    p_total: float
    pf: float = 0.95
    motor_fraction: float = 0.25


@dataclass(frozen=True)
class MotorConfig:
    v_stall: float = 0.6
    stall_delay: float = 0.07
    stall_power_multiple: float = 3.0
    stall_pf: float = 0.5
    v_floor: float = 0.5


@dataclass(frozen=True)
class FeederSpec:
    """Radial three-phase feeder hung from one transmission bus."""

    head_bus: int
    bus_ids: tuple[int, ...]
    segments: tuple[SegmentSpec, ...]
    loads: tuple[LoadPoint, ...]
    motor: MotorConfig = MotorConfig()

    @property
    def n_nodes(self) -> int:
        return len(self.bus_ids) + 1

    def local_index(self, bus_id: int) -> int:
        return self.bus_ids.index(bus_id) + 1


@dataclass(frozen=True)
class HeadSource:
    """Three-phase source behind a 3x3 impedance at the feeder head."""

    e: np.ndarray  # (3,) complex
    z: np.ndarray  # (3,3) complex
    kind: str = "voltage"  # "voltage" | "thevenin"


@dataclass
class FeederSolution:
    v: np.ndarray  # (n_nodes, 3) complex phase voltages
    i_head: np.ndarray  # (3,) complex, positive into the feeder
    sweeps: int = 0

    @property
    def s_total(self) -> complex:
        return complex(np.sum(self.v[0] * np.conj(self.i_head)))


@dataclass(frozen=True)
class BoundaryExtract:
    v_head: np.ndarray
    i_head: np.ndarray
    v_seq: np.ndarray
    i_seq: np.ndarray
    s_total: complex


def split_unbalanced(total: float, beta: float) -> np.ndarray:
    """Per-phase split of a three-phase total: phase A keeps 1/3, phase B
    gets (1 - beta)/3, phase C the remainder.

    Phase C absorbs the rounding so that ``(pa + pb) + pc`` reproduces
    ``total`` bitwise for every ``beta <= 0.5`` (there ``pa + pb >=
    total / 2`` and the remainder subtraction is exact by the Sterbenz
    lemma). For larger skews no representable phase-C value may reproduce
    the total under round-to-even; the split then lands within one ulp.
    """
    if not 0.0 <= beta < 1.0:
        raise CaseFormatError(f"unbalance factor {beta} outside [0, 1)")
    pa = total / 3.0
    pb = (1.0 - beta) * total / 3.0
    s = pa + pb
    pc = total - s
    while s + pc < total:
        pc = math.nextafter(pc, math.inf)
    while s + pc > total:
        pc = math.nextafter(pc, -math.inf)
    return np.array([pa, pb, pc])


def uniform_segment_matrix(z_self: complex, z_mutual: complex) -> np.ndarray:
    z = np.full((3, 3), complex(z_mutual), dtype=complex)
    np.fill_diagonal(z, complex(z_self))
    return z


class FeederSimulator:
    """State-carrying simulator for one feeder."""

    def __init__(self, spec: FeederSpec, beta: float = 0.0,
                 fbs_tol: float = 1e-8, max_sweeps: int = 200):
        self.spec = spec
        self.beta = beta
        self.fbs_tol = fbs_tol
        self.max_sweeps = max_sweeps
        n = spec.n_nodes
        self.n = n

        self._build_topology()
        self._build_loads(beta)

        self.stalled = np.zeros((n, 3), dtype=bool)
        self.t_below = np.zeros((n, 3))
        self._revision = 0

        self._v_last = np.tile(balanced_phases(1.0 + 0.0j), (n, 1))
        self._v_lin = self._v_last.copy()

        self._y_pass: NetworkMatrix | None = None
        self._voc_vec: np.ndarray | None = None
        self._zcols: np.ndarray | None = None
        self._dyn_key = None
        self._dyn_net: NetworkMatrix | None = None

    # -- model assembly ----------------------------------------------------

    def _build_topology(self) -> None:
        spec = self.spec
        n = self.n
        if len(spec.segments) != n - 1:
            raise CaseFormatError(
                f"feeder at bus {spec.head_bus}: {len(spec.segments)} segments "
                f"for {n} nodes is not a tree"
            )
        parent = np.full(n, -1, dtype=int)
        seg_z = [None] * n
        adj: dict[int, list] = {k: [] for k in range(n)}
        for seg in spec.segments:
            adj[seg.i].append(seg)
            adj[seg.j].append(seg)
        order = [0]
        seen = {0}
        for node in order:
            for seg in adj[node]:
                other = seg.j if seg.i == node else seg.i
                if other in seen:
                    continue
                seen.add(other)
                parent[other] = node
                seg_z[other] = np.asarray(seg.z, dtype=complex)
                order.append(other)
        if len(order) != n:
            missing = sorted(set(range(n)) - seen)
            raise CaseFormatError(
                f"feeder at bus {spec.head_bus}: nodes {missing} unreachable from head"
            )
        self._parent = parent
        self._seg_z = seg_z
        self._order = order  # BFS order from the head
        self._y_seg = [None if z is None else np.linalg.inv(z) for z in seg_z]

    def _build_loads(self, beta: float) -> None:
        n = self.n
        self.s_z = np.zeros((n, 3), dtype=complex)   # constant-impedance rating
        self.s_m = np.zeros((n, 3), dtype=complex)   # motor rating
        for lp in self.spec.loads:
            q_total = lp.p_total * math.tan(math.acos(lp.pf))
            p_ph = split_unbalanced(lp.p_total, beta)
            q_ph = split_unbalanced(q_total, beta)
            s_ph = p_ph + 1j * q_ph
            self.s_m[lp.node] += lp.motor_fraction * s_ph
            self.s_z[lp.node] += (1.0 - lp.motor_fraction) * s_ph
        # drawn S at V=1 equals |V|^2 conj(y), hence y = conj(S)
        self.y_z = np.conj(self.s_z)
        mc = self.spec.motor
        tan_stall = math.tan(math.acos(mc.stall_pf))
        p_stall = mc.stall_power_multiple * self.s_m.real
        self.y_stall = np.conj(p_stall * (1.0 + 1j * tan_stall))
        self.has_motor = np.abs(self.s_m) > 0

    # -- load currents -----------------------------------------------------

    def _running_draw(self, v: np.ndarray, sel: np.ndarray) -> np.ndarray:
        """Running-motor current at the selected entries: constant power above
        ``v_floor``, blending linearly (constant admittance) into zero below
        it, continuous at the floor. The linear region keeps the solution map
        contractive when a fault drags the voltage toward zero."""
        mc = self.spec.motor
        vm = np.abs(v[sel])
        out = np.conj(self.s_m[sel]) * v[sel] / mc.v_floor ** 2
        high = vm >= mc.v_floor
        out[high] = np.conj(self.s_m[sel][high] / v[sel][high])
        return out

    def _motor_draw(self, v: np.ndarray) -> np.ndarray:
        """Current drawn by the motor part at voltages ``v`` (n,3)."""
        draw = np.zeros_like(v)
        run = self.has_motor & ~self.stalled
        if run.any():
            draw[run] = self._running_draw(v, run)
        st = self.has_motor & self.stalled
        draw[st] = self.y_stall[st] * v[st]
        return draw

    def _zload_draw(self, v: np.ndarray) -> np.ndarray:
        return self.y_z * v

    # -- forward-backward sweep ---------------------------------------------

    def fbs_solve(self, source: HeadSource, v_start: np.ndarray | None = None) -> FeederSolution:
        v = (self._v_last if v_start is None else v_start).copy()
        rev_order = self._order[::-1]
        trace = []
        for sweep in range(1, self.max_sweeps + 1):
            i_thr = self._zload_draw(v) + self._motor_draw(v)
            for node in rev_order:
                p = self._parent[node]
                if p >= 0:
                    i_thr[p] += i_thr[node]
            v_new = np.empty_like(v)
            v_new[0] = source.e - source.z @ i_thr[0]
            for node in self._order[1:]:
                v_new[node] = v_new[self._parent[node]] - self._seg_z[node] @ i_thr[node]
            delta = float(np.abs(v_new - v).max())
            trace.append(delta)
            v = v_new
            if not np.isfinite(delta) or np.abs(v).max() > _EXPLOSION_LIMIT:
                raise FbsDivergenceError(sweep, trace, "iterate explosion")
            if delta < self.fbs_tol:
                i_thr = self._zload_draw(v) + self._motor_draw(v)
                for node in rev_order:
                    p = self._parent[node]
                    if p >= 0:
                        i_thr[p] += i_thr[node]
                self._accept(v)
                return FeederSolution(v=v, i_head=i_thr[0].copy(), sweeps=sweep)
        raise FbsDivergenceError(self.max_sweeps, trace, "sweep budget exhausted")

    # -- admittance solution -------------------------------------------------

    def _passive(self) -> NetworkMatrix:
        """Segments plus all constant-impedance load parts (stall included)."""
        if self._y_pass is None:
            net = NetworkMatrix(3 * self.n)
            for node in self._order[1:]:
                yb = self._y_seg[node]
                p = self._parent[node]
                for r in range(3):
                    for c in range(3):
                        y = yb[r, c]
                        net.add_entry(3 * p + r, 3 * p + c, y)
                        net.add_entry(3 * node + r, 3 * node + c, y)
                        net.add_entry(3 * p + r, 3 * node + c, -y)
                        net.add_entry(3 * node + r, 3 * p + c, -y)
            for node in range(self.n):
                for ph in range(3):
                    y = self.y_z[node, ph]
                    if self.stalled[node, ph] and self.has_motor[node, ph]:
                        y += self.y_stall[node, ph]
                    if y != 0:
                        net.add_entry(3 * node + ph, 3 * node + ph, y)
            self._y_pass = net
        return self._y_pass

    def _norton_rhs(self) -> np.ndarray:
        """Injection vector of the linearized constant-power parts."""
        rhs = np.zeros(3 * self.n, dtype=complex)
        run = self.has_motor & ~self.stalled
        if run.any():
            draw = np.zeros((self.n, 3), dtype=complex)
            draw[run] = self._running_draw(self._v_lin, run)
            rhs -= draw.reshape(-1)
        return rhs

    def dyn_solve(self, source: HeadSource) -> FeederSolution:
        y_src = np.linalg.inv(np.asarray(source.z, dtype=complex))
        key = (self._revision, source.z.tobytes())
        if self._dyn_key != key:
            net = self._passive().copy()
            for r in range(3):
                for c in range(3):
                    net.add_entry(r, c, y_src[r, c])
            self._dyn_key = key
            self._dyn_net = net
        rhs = self._norton_rhs()
        rhs[0:3] += y_src @ np.asarray(source.e, dtype=complex)
        v = self._dyn_net.solve_vec(rhs).reshape(self.n, 3)
        i_head = y_src @ (np.asarray(source.e, dtype=complex) - v[0])
        self._accept(v)
        return FeederSolution(v=v, i_head=i_head)

    def dyn_solve_injection(self, i_head: np.ndarray) -> FeederSolution:
        """Solve with a specified head current (link-coupled operation)."""
        rhs = self._norton_rhs()
        rhs[0:3] += np.asarray(i_head, dtype=complex)
        v = self._passive().solve_vec(rhs).reshape(self.n, 3)
        self._accept(v)
        return FeederSolution(v=v, i_head=np.asarray(i_head, dtype=complex).copy())

    # -- Thevenin view --------------------------------------------------------

    def thevenin(self) -> tuple[np.ndarray, np.ndarray]:
        """Head-bus open-circuit voltage and 3x3 driving-point impedance.

        Constant-power parts enter the open-circuit voltage as their Norton
        currents at the current linearization point; the impedance is that of
        the passive network and is cached until the stall state changes.
        """
        net = self._passive()
        self._voc_vec = net.solve_vec(self._norton_rhs())
        if self._zcols is None:
            self._zcols = np.column_stack([net.impedance_column(ph) for ph in range(3)])
        v_oc = self._voc_vec[0:3].copy()
        z_th = self._zcols[0:3, :].copy()
        return v_oc, z_th

    def apply_link_current(self, i_head: np.ndarray) -> FeederSolution:
        """Superpose a head injection on the last :meth:`thevenin` solution."""
        if self._voc_vec is None or self._zcols is None:
            self.thevenin()
        v = (self._voc_vec + self._zcols @ np.asarray(i_head, dtype=complex)).reshape(self.n, 3)
        self._accept(v)
        return FeederSolution(v=v, i_head=np.asarray(i_head, dtype=complex).copy())

    # -- state ------------------------------------------------------------------

    def _accept(self, v: np.ndarray) -> None:
        self._v_last = v.copy()
        self._v_lin = v.copy()

    def reset_voltages(self, v_flat: complex = 1.0 + 0.0j) -> None:
        self._v_last = np.tile(balanced_phases(v_flat), (self.n, 1))
        self._v_lin = self._v_last.copy()

    def step_motors(self, dt: float, v: np.ndarray | None = None) -> bool:
        """Advance stall timers with the given (default: last) voltages.

        Returns True when any motor latched into the stalled state, which
        invalidates the cached admittance structures.
        """
        mc = self.spec.motor
        vv = self._v_last if v is None else v
        vm = np.abs(vv)
        run = self.has_motor & ~self.stalled
        below = run & (vm < mc.v_stall)
        self.t_below[below] += dt
        self.t_below[run & ~below] = 0.0
        latch = run & (self.t_below >= mc.stall_delay - 1e-12)
        if latch.any():
            self.stalled |= latch
            self._revision += 1
            self._y_pass = None
            self._zcols = None
            self._voc_vec = None
            self._dyn_key = None
            log.debug("feeder %s: %d motor phases stalled", self.spec.head_bus,
                      int(latch.sum()))
            return True
        return False

    # -- derived quantities --------------------------------------------------

    def extract_boundary(self, sol: FeederSolution) -> BoundaryExtract:
        v_head = sol.v[0].copy()
        i_head = sol.i_head.copy()
        return BoundaryExtract(
            v_head=v_head,
            i_head=i_head,
            v_seq=phase_to_sequence_vec(v_head),
            i_seq=phase_to_sequence_vec(i_head),
            s_total=complex(np.sum(v_head * np.conj(i_head))),
        )

    def voltage(self, sol: FeederSolution, bus_id: int, phase: int) -> complex:
        return complex(sol.v[self.spec.local_index(bus_id), phase])

    def power_balance_residual(self, sol: FeederSolution) -> float:
        """|head power - loads - losses| for a solved operating point."""
        v = sol.v
        drawn = v * np.conj(self._zload_draw(v) + self._motor_draw(v))
        p_loads = complex(drawn.sum())
        p_loss = 0.0 + 0.0j
        for node in self._order[1:]:
            dv = v[self._parent[node]] - v[node]
            i_seg = self._y_seg[node] @ dv
            p_loss += complex(np.sum(dv * np.conj(i_seg)))
        return abs(sol.s_total - p_loads - p_loss)
