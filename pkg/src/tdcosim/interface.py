"""Boundary representations between the transmission and distribution grids.

Seven interface models are supported. They differ along three axes:

* balanced vs. three-phase: whether the distribution head source keeps only
  the positive-sequence boundary voltage or all three sequences;
* ideal vs. Thevenin: whether the head source is a stiff voltage source or
  carries the transmission driving-point impedance;
* the aggregation sent back: a lumped power-equivalent positive-sequence
  current, per-sequence currents, or (for the parallel link model) currents
  obtained from a joint two-port solve.

Per-unit seam: both grids share the system MVA base, and positive-sequence
voltages carry the same numerical value on both sides, but distribution
phase currents are normalized so that ``sum(v * conj(i))`` over the three
phases is the system-base power. The transmission current base is therefore
three times the distribution one: a transmission sequence current equals
three times the corresponding distribution sequence current, and a
transmission impedance ``z`` appears from the distribution side as ``3 z``.
All conversions live here and nowhere else; the exchanged payloads always
carry transmission-convention draws.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .distribution import BoundaryExtract, HeadSource
from .errors import CombinationError, LowVoltageError
from .phasor import (
    balanced_phases,
    sequence_impedance_to_phase_matrix,
    sequence_to_phase_vec,
)

__all__ = [
    "InterfaceModel",
    "EquivalentLoad",
    "SEQ_CURRENT_SCALE",
    "IDEAL_SOURCE_EPS",
    "LINK_REGULARIZATION",
    "validate_combination",
    "t_to_d",
    "d_to_t",
    "solve_link_current",
]

log = logging.getLogger(__name__)

# Ratio between a balanced distribution phase current and the transmission
# positive-sequence current it corresponds to (per-phase vs. three-phase
# power base at equal voltage magnitude).
SEQ_CURRENT_SCALE = 3.0

# Series impedance of the nominally ideal head source. Exactly zero would be
# fine for the feeder solvers, but a tiny resistance keeps the source
# distinguishable from a hard Dirichlet condition and matches how such
# sources behave inside admittance formulations.
IDEAL_SOURCE_EPS = 1e-6

# Regularization added to the link impedance of the parallel model so the
# two-port solve stays well posed even if both equivalents are near-ideal.
LINK_REGULARIZATION = 1e-7j

# Voltage floor below which the lumped power-equivalent current is undefined.
D_TO_T_VOLTAGE_FLOOR = 1e-6


class InterfaceModel(IntEnum):
    """The seven boundary representations."""

    BAL_V_PF = 1          # balanced ideal source, head solved by power-flow sweeps
    BAL_V = 2             # balanced ideal source, dynamic head solve
    BAL_THEVENIN = 3      # balanced Thevenin source
    PHASE_V_PF = 4        # three-phase ideal source, power-flow sweeps
    PHASE_V = 5           # three-phase ideal source, dynamic head solve
    PHASE_THEVENIN = 6    # three-phase Thevenin source
    LINK = 7              # three-phase Thevenin both sides, joint link solve

    @property
    def balanced(self) -> bool:
        return self in (InterfaceModel.BAL_V_PF, InterfaceModel.BAL_V,
                        InterfaceModel.BAL_THEVENIN)

    @property
    def thevenin(self) -> bool:
        return self in (InterfaceModel.BAL_THEVENIN, InterfaceModel.PHASE_THEVENIN,
                        InterfaceModel.LINK)

    @property
    def uses_power_flow_feeder(self) -> bool:
        return self in (InterfaceModel.BAL_V_PF, InterfaceModel.PHASE_V_PF)

    @property
    def t_mode(self) -> str:
        return "positive" if self.balanced else "three_sequence"

    @property
    def is_link(self) -> bool:
        return self is InterfaceModel.LINK


@dataclass(frozen=True)
class EquivalentLoad:
    """What the distribution side publishes: per-sequence current draws in
    transmission convention (positive = drawn from the boundary bus)."""

    draws: np.ndarray  # (3,) complex, (zero, positive, negative)

    @staticmethod
    def zero() -> "EquivalentLoad":
        return EquivalentLoad(draws=np.zeros(3, dtype=complex))


def validate_combination(im: InterfaceModel, scheme_pattern: str,
                         scheme_name: str) -> None:
    """Reject interface/scheme pairings that have no meaning.

    The link model replaces the source-update exchange with a joint two-port
    solve of both boundary equivalents, which only exists in schemes where
    the two sides exchange simultaneously. Sequential schemes would feed the
    link solve a one-sided, already-stale equivalent, so they are refused.
    Every other model works with any scheme.
    """
    if im.is_link and scheme_pattern != "parallel":
        raise CombinationError(
            int(im), scheme_name,
            "the link interface solves both subsystem equivalents jointly and "
            "needs a simultaneous-exchange scheme",
        )


def t_to_d(im: InterfaceModel, v_seq: np.ndarray, z_seq: np.ndarray) -> HeadSource:
    """Build the distribution head source a transmission boundary view implies.

    ``v_seq``/``z_seq`` are (zero, positive, negative) boundary voltage and
    driving-point impedance in transmission per-unit. The returned source is
    in distribution phase per-unit, hence impedances are scaled by
    ``SEQ_CURRENT_SCALE``.
    """
    eye = np.eye(3, dtype=complex)
    if im.balanced:
        e = balanced_phases(complex(v_seq[1]))
        if im.thevenin:
            z = SEQ_CURRENT_SCALE * complex(z_seq[1]) * eye
        else:
            z = IDEAL_SOURCE_EPS * eye
        return HeadSource(e=e, z=z, kind="thevenin" if im.thevenin else "voltage")
    e = sequence_to_phase_vec(np.asarray(v_seq, dtype=complex))
    if im.thevenin:
        z = sequence_impedance_to_phase_matrix(
            SEQ_CURRENT_SCALE * complex(z_seq[0]),
            SEQ_CURRENT_SCALE * complex(z_seq[1]),
            SEQ_CURRENT_SCALE * complex(z_seq[2]),
        )
    else:
        z = IDEAL_SOURCE_EPS * eye
    return HeadSource(e=e, z=z, kind="thevenin" if im.thevenin else "voltage")


def d_to_t(im: InterfaceModel, boundary: BoundaryExtract) -> EquivalentLoad:
    """Aggregate a solved feeder head into the transmission-side draw.

    Balanced interfaces collapse the feeder to its total complex power and
    return the positive-sequence current that power implies at the
    positive-sequence head voltage. Three-phase interfaces return the actual
    per-sequence head currents (rescaled to the transmission base).
    """
    draws = np.zeros(3, dtype=complex)
    if im.balanced:
        v1 = boundary.v_seq[1]
        if abs(v1) < D_TO_T_VOLTAGE_FLOOR:
            raise LowVoltageError(abs(v1), D_TO_T_VOLTAGE_FLOOR)
        draws[1] = np.conj(boundary.s_total / v1)
    else:
        draws[:] = SEQ_CURRENT_SCALE * boundary.i_seq
    return EquivalentLoad(draws=draws)


def solve_link_current(v_seq_t: np.ndarray, z_seq_t: np.ndarray,
                       voc_d: np.ndarray, z_d: np.ndarray) -> np.ndarray:
    """Joint solve of the two boundary equivalents for the link model.

    The transmission Thevenin (per-sequence) is expressed as a 3x3 phase
    matrix on the distribution base; the distribution equivalent comes from
    its head open-circuit voltage and driving-point impedance block. Returns
    the phase current flowing from the transmission equivalent into the
    feeder head (distribution base).
    """
    e_t = sequence_to_phase_vec(np.asarray(v_seq_t, dtype=complex))
    z_t = sequence_impedance_to_phase_matrix(
        SEQ_CURRENT_SCALE * complex(z_seq_t[0]),
        SEQ_CURRENT_SCALE * complex(z_seq_t[1]),
        SEQ_CURRENT_SCALE * complex(z_seq_t[2]),
    )
    z_total = z_t + np.asarray(z_d, dtype=complex) \
        + LINK_REGULARIZATION * np.eye(3, dtype=complex)
    rhs = e_t - np.asarray(voc_d, dtype=complex)
    return np.linalg.solve(z_total, rhs)
