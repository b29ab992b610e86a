"""Complex phasor containers and symmetrical-component transforms.

Conventions used throughout the package:

* operator ``a`` is ``1 per 120 degrees`` (``exp(2j*pi/3)``),
* the forward (phase -> sequence) transform carries the 1/3 factor,
  the inverse carries none, so the pair is power-variant,
* sequence order is (zero, positive, negative).

The simulators work on raw ``numpy`` complex arrays for speed; the typed
containers here are the public boundary and are convertible both ways.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Phasor",
    "ThreePhase",
    "ThreeSequence",
    "ALPHA",
    "phase_to_sequence",
    "sequence_to_phase",
    "phase_to_sequence_vec",
    "sequence_to_phase_vec",
    "balanced_phases",
    "sequence_impedance_to_phase_matrix",
]

ALPHA = cmath.exp(2j * math.pi / 3)

# Inverse (sequence -> phase): rows are phases a, b, c.
_SEQ_TO_PHASE = np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, ALPHA**2, ALPHA],
        [1.0, ALPHA, ALPHA**2],
    ],
    dtype=complex,
)

# Forward (phase -> sequence) with the 1/3 normalization.
_PHASE_TO_SEQ = (1.0 / 3.0) * np.array(
    [
        [1.0, 1.0, 1.0],
        [1.0, ALPHA, ALPHA**2],
        [1.0, ALPHA**2, ALPHA],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class Phasor:
    """A single complex phasor with rectangular storage."""

    re: float
    im: float

    @staticmethod
    def from_complex(z: complex) -> "Phasor":
        return Phasor(z.real, z.imag)

    @staticmethod
    def from_polar(magnitude: float, angle_rad: float) -> "Phasor":
        return Phasor(magnitude * math.cos(angle_rad), magnitude * math.sin(angle_rad))

    @staticmethod
    def from_polar_deg(magnitude: float, angle_deg: float) -> "Phasor":
        return Phasor.from_polar(magnitude, math.radians(angle_deg))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    def magnitude(self) -> float:
        return math.hypot(self.re, self.im)

    def angle_rad(self) -> float:
        return math.atan2(self.im, self.re)

    def angle_deg(self) -> float:
        return math.degrees(self.angle_rad())

    def conjugate(self) -> "Phasor":
        return Phasor(self.re, -self.im)

    def __add__(self, other: "Phasor") -> "Phasor":
        return Phasor.from_complex(self.to_complex() + other.to_complex())

    def __sub__(self, other: "Phasor") -> "Phasor":
        return Phasor.from_complex(self.to_complex() - other.to_complex())

    def __mul__(self, other) -> "Phasor":
        zo = other.to_complex() if isinstance(other, Phasor) else other
        return Phasor.from_complex(self.to_complex() * zo)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Phasor":
        zo = other.to_complex() if isinstance(other, Phasor) else other
        return Phasor.from_complex(self.to_complex() / zo)

    def __neg__(self) -> "Phasor":
        return Phasor(-self.re, -self.im)


@dataclass(frozen=True)
class ThreePhase:
    """Phase-domain triple (a, b, c)."""

    a: Phasor
    b: Phasor
    c: Phasor

    @staticmethod
    def from_array(v: np.ndarray) -> "ThreePhase":
        return ThreePhase(*(Phasor.from_complex(complex(x)) for x in v))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.a.to_complex(), self.b.to_complex(), self.c.to_complex()],
            dtype=complex,
        )


@dataclass(frozen=True)
class ThreeSequence:
    """Sequence-domain triple (zero, positive, negative)."""

    zero: Phasor
    positive: Phasor
    negative: Phasor

    @staticmethod
    def from_array(v: np.ndarray) -> "ThreeSequence":
        return ThreeSequence(*(Phasor.from_complex(complex(x)) for x in v))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.zero.to_complex(), self.positive.to_complex(), self.negative.to_complex()],
            dtype=complex,
        )


def phase_to_sequence_vec(v_abc: np.ndarray) -> np.ndarray:
    """Forward transform on a length-3 complex vector, (a,b,c) -> (0,1,2)."""
    return _PHASE_TO_SEQ @ np.asarray(v_abc, dtype=complex)


def sequence_to_phase_vec(v_012: np.ndarray) -> np.ndarray:
    """Inverse transform on a length-3 complex vector, (0,1,2) -> (a,b,c)."""
    return _SEQ_TO_PHASE @ np.asarray(v_012, dtype=complex)


def phase_to_sequence(v: ThreePhase) -> ThreeSequence:
    return ThreeSequence.from_array(phase_to_sequence_vec(v.as_array()))


def sequence_to_phase(v: ThreeSequence) -> ThreePhase:
    return ThreePhase.from_array(sequence_to_phase_vec(v.as_array()))


def balanced_phases(v_positive: complex) -> np.ndarray:
    """Phase triple of a pure positive-sequence quantity."""
    return sequence_to_phase_vec(np.array([0.0, v_positive, 0.0], dtype=complex))


def sequence_impedance_to_phase_matrix(z0: complex, z1: complex, z2: complex) -> np.ndarray:
    """Coupled 3x3 phase impedance matrix of decoupled sequence impedances.

    Computed as ``A diag(z0, z1, z2) A^-1``; for z0 != z1 == z2 the result has
    equal diagonals (z0 + 2 z1)/3 and equal off-diagonals (z0 - z1)/3.
    """
    return _SEQ_TO_PHASE @ np.diag(np.array([z0, z1, z2], dtype=complex)) @ _PHASE_TO_SEQ
