"""Sparse complex nodal admittance matrices with cached LU factorization.

The matrix is held as a dictionary of complex entries plus a set of fault
overlays. The effective matrix is materialized to CSC and factorized with
SuperLU on demand; the factorization is reused until an entry, shunt, or
overlay changes. Clearing a fault removes its overlay and rebuilds the entry
from the base value, so apply-then-clear restores the matrix bit-exactly.

Sign conventions: nodal equation is ``Y V = I`` with currents flowing into
the network counted positive.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csc_matrix
from scipy.sparse.linalg import splu

from .errors import FaultStateError, IsolatedNodeError, SingularNetworkError
from .phasor import Phasor

__all__ = ["BranchSpec", "FaultSpec", "NetworkMatrix", "build_ybus"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BranchSpec:
    """Series branch i-j with total line-charging susceptance ``b`` split
    half to each terminal."""

    i: int
    j: int
    z: complex
    b: float = 0.0


@dataclass(frozen=True)
class FaultSpec:
    """Shunt fault: admittance ``y`` added at ``bus`` while active.

    ``t_on``/``duration`` are scheduling data for the orchestrator; the
    matrix layer only uses ``bus`` and ``y``.
    """

    bus: int
    y: complex = 1e6 + 0j
    t_on: float = 1.0
    duration: float = 0.07


class NetworkMatrix:
    """Mutable sparse complex admittance matrix of a fixed node count."""

    def __init__(self, n: int):
        if n <= 0:
            raise ValueError("node count must be positive")
        self.n = n
        self._base: dict[tuple[int, int], complex] = {}
        self._faults: dict[int, complex] = {}
        self._lu = None
        self._col_cache: dict[int, np.ndarray] = {}
        self.factorization_count = 0

    # -- construction ----------------------------------------------------

    def add_entry(self, i: int, j: int, y: complex) -> None:
        self._check_index(i)
        self._check_index(j)
        key = (i, j)
        self._base[key] = self._base.get(key, 0.0 + 0.0j) + complex(y)
        self._invalidate()

    def add_branch(self, branch: BranchSpec) -> None:
        i, j, z = branch.i, branch.j, complex(branch.z)
        if z == 0:
            raise ValueError(f"branch {i}-{j} has zero impedance")
        y = 1.0 / z
        half_b = 0.5j * branch.b
        self.add_entry(i, i, y + half_b)
        self.add_entry(j, j, y + half_b)
        self.add_entry(i, j, -y)
        self.add_entry(j, i, -y)

    def add_shunt(self, i: int, y: complex) -> None:
        self.add_entry(i, i, y)

    def copy(self) -> "NetworkMatrix":
        other = NetworkMatrix(self.n)
        other._base = dict(self._base)
        other._faults = dict(self._faults)
        return other

    # -- faults ----------------------------------------------------------

    def apply_fault(self, fault: FaultSpec) -> None:
        if fault.bus in self._faults:
            raise FaultStateError(f"fault already active at bus index {fault.bus}")
        self._check_index(fault.bus)
        self._faults[fault.bus] = complex(fault.y)
        self._invalidate()

    def clear_fault(self, fault: FaultSpec) -> None:
        if fault.bus not in self._faults:
            raise FaultStateError(f"no active fault at bus index {fault.bus}")
        del self._faults[fault.bus]
        self._invalidate()

    @property
    def active_faults(self) -> dict[int, complex]:
        return dict(self._faults)

    # -- assembly and solution -------------------------------------------

    def entries(self) -> dict[tuple[int, int], complex]:
        """Effective entries, base plus fault overlays."""
        eff = dict(self._base)
        for bus, y in self._faults.items():
            key = (bus, bus)
            eff[key] = eff.get(key, 0.0 + 0.0j) + y
        return eff

    def to_csc(self) -> csc_matrix:
        eff = self.entries()
        rows = np.fromiter((k[0] for k in eff), dtype=np.int64, count=len(eff))
        cols = np.fromiter((k[1] for k in eff), dtype=np.int64, count=len(eff))
        vals = np.fromiter((v for v in eff.values()), dtype=complex, count=len(eff))
        m = csc_matrix((vals, (rows, cols)), shape=(self.n, self.n))
        return m

    def _factorize(self):
        if self._lu is None:
            touched = np.zeros(self.n, dtype=bool)
            for (i, j), v in self._base.items():
                if v != 0:
                    touched[i] = True
                    touched[j] = True
            if not touched.all():
                raise IsolatedNodeError(int(np.flatnonzero(~touched)[0]))
            try:
                self._lu = splu(self.to_csc())
            except RuntimeError as exc:  # SuperLU reports exact singularity this way
                raise SingularNetworkError(self.n, str(exc)) from exc
            self.factorization_count += 1
        return self._lu

    def solve_vec(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``Y v = rhs`` for a complex injection vector."""
        lu = self._factorize()
        return lu.solve(np.asarray(rhs, dtype=complex))

    def solve(self, injections: dict[int, Phasor]) -> dict[int, Phasor]:
        """Typed wrapper around :meth:`solve_vec`."""
        rhs = np.zeros(self.n, dtype=complex)
        for node, inj in injections.items():
            self._check_index(node)
            rhs[node] = inj.to_complex() if isinstance(inj, Phasor) else complex(inj)
        v = self.solve_vec(rhs)
        return {k: Phasor.from_complex(complex(v[k])) for k in range(self.n)}

    def impedance_column(self, bus: int) -> np.ndarray:
        """Response of all node voltages to a unit current injection at ``bus``.

        Cached per factorization; entry ``[bus]`` is the driving-point
        (Thevenin) impedance.
        """
        self._check_index(bus)
        self._factorize()
        col = self._col_cache.get(bus)
        if col is None:
            e = np.zeros(self.n, dtype=complex)
            e[bus] = 1.0
            col = self._lu.solve(e)
            self._col_cache[bus] = col
        return col

    def thevenin_at(self, internal_injections: np.ndarray, bus: int) -> tuple[complex, complex]:
        """Open-circuit voltage and driving-point impedance at ``bus``.

        ``internal_injections`` must not contain the boundary injection at
        ``bus`` itself; superpose it separately if needed.
        """
        v = self.solve_vec(internal_injections)
        z = self.impedance_column(bus)[bus]
        return complex(v[bus]), complex(z)

    def residual(self, v: np.ndarray, rhs: np.ndarray) -> float:
        return float(np.abs(self.to_csc() @ v - rhs).max())

    # -- internals ---------------------------------------------------------

    def _invalidate(self) -> None:
        self._lu = None
        self._col_cache.clear()

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise IndexError(f"node index {i} outside 0..{self.n - 1}")


def build_ybus(n: int, branches, shunts=None) -> NetworkMatrix:
    """Assemble a network matrix from branch specs and optional shunts.

    ``shunts`` is an iterable of ``(node, admittance)`` pairs. Isolated
    nodes are rejected here rather than at first solve.
    """
    y = NetworkMatrix(n)
    for br in branches:
        y.add_branch(br)
    for node, adm in shunts or ():
        y.add_shunt(node, adm)
    touched = set()
    for (i, j), v in y._base.items():
        if v != 0:
            touched.add(i)
            touched.add(j)
    for node in range(n):
        if node not in touched:
            raise IsolatedNodeError(node)
    return y
