"""Phasor containers and the phase/sequence transform pair."""
from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdcosim.phasor import (
    ALPHA,
    Phasor,
    ThreePhase,
    ThreeSequence,
    balanced_phases,
    phase_to_sequence,
    phase_to_sequence_vec,
    sequence_impedance_to_phase_matrix,
    sequence_to_phase,
    sequence_to_phase_vec,
)

finite = st.floats(min_value=-10.0, max_value=10.0,
                   allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
triples = st.tuples(complexes, complexes, complexes)


def test_rotation_operator_identities():
    assert abs(ALPHA ** 3 - 1.0) < 1e-15
    assert abs(1.0 + ALPHA + ALPHA ** 2) < 1e-15
    assert abs(abs(ALPHA) - 1.0) < 1e-15


def test_phasor_polar_round_trip():
    p = Phasor.from_polar(1.05, 0.3)
    assert p.magnitude() == pytest.approx(1.05, abs=1e-15)
    assert p.angle_rad() == pytest.approx(0.3, abs=1e-15)
    q = Phasor.from_polar_deg(2.0, -120.0)
    assert q.angle_deg() == pytest.approx(-120.0, abs=1e-12)
    assert q.conjugate().to_complex() == pytest.approx(
        q.to_complex().conjugate())


def test_phasor_arithmetic_matches_complex():
    a, b = Phasor.from_complex(1 + 2j), Phasor.from_complex(0.5 - 1j)
    assert (a * b).to_complex() == pytest.approx((1 + 2j) * (0.5 - 1j))
    assert (a / b).to_complex() == pytest.approx((1 + 2j) / (0.5 - 1j))
    assert (-a).to_complex() == -(1 + 2j)


@given(triples)
@settings(max_examples=200, deadline=None)
def test_transform_round_trip(abc):
    v = np.array(abc, dtype=complex)
    back = sequence_to_phase_vec(phase_to_sequence_vec(v))
    assert np.max(np.abs(back - v)) <= 1e-12 * max(1.0, np.max(np.abs(v)))


@given(triples, triples, complexes)
@settings(max_examples=100, deadline=None)
def test_transform_linearity(x, y, a):
    vx, vy = np.array(x, dtype=complex), np.array(y, dtype=complex)
    lhs = phase_to_sequence_vec(a * vx + vy)
    rhs = a * phase_to_sequence_vec(vx) + phase_to_sequence_vec(vy)
    scale = max(1.0, np.max(np.abs(lhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


@given(complexes)
@settings(max_examples=100, deadline=None)
def test_balanced_set_is_pure_positive_sequence(v1):
    seq = phase_to_sequence_vec(balanced_phases(v1))
    assert abs(seq[0]) < 1e-12 * max(1.0, abs(v1))
    assert abs(seq[2]) < 1e-12 * max(1.0, abs(v1))
    assert seq[1] == pytest.approx(v1, abs=1e-12)


def test_balanced_phases_explicit():
    v = balanced_phases(1.0 + 0.0j)
    assert v[0] == pytest.approx(1.0 + 0.0j, abs=1e-15)
    assert v[1] == pytest.approx(cmath.exp(-2j * math.pi / 3), abs=1e-15)
    assert v[2] == pytest.approx(cmath.exp(+2j * math.pi / 3), abs=1e-15)


def test_container_round_trip():
    tp = ThreePhase.from_array(np.array([1.0, ALPHA, 2j]))
    assert np.allclose(tp.as_array(), [1.0, ALPHA, 2j], atol=1e-15)
    seq = phase_to_sequence(tp)
    assert isinstance(seq, ThreeSequence)
    back = sequence_to_phase(seq)
    assert np.allclose(back.as_array(), tp.as_array(), atol=1e-12)


def test_sequence_impedance_matrix_structure():
    z0, z1 = 0.09 + 0.3j, 0.01 + 0.1j
    zm = sequence_impedance_to_phase_matrix(z0, z1, z1)
    diag = (z0 + 2 * z1) / 3
    off = (z0 - z1) / 3
    for i in range(3):
        for j in range(3):
            want = diag if i == j else off
            assert zm[i, j] == pytest.approx(want, abs=1e-15)


def test_equal_sequence_impedances_decouple():
    z = 0.02 + 0.15j
    zm = sequence_impedance_to_phase_matrix(z, z, z)
    assert np.allclose(zm, z * np.eye(3), atol=1e-15)


def test_sequence_matrix_maps_currents_consistently():
    # The phase matrix must reproduce per-sequence Ohm's law after transform.
    z0, z1, z2 = 0.3j, 0.1j, 0.12j
    zm = sequence_impedance_to_phase_matrix(z0, z1, z2)
    i_seq = np.array([0.1 + 0.02j, 0.9 - 0.1j, 0.05j])
    v_phase = zm @ sequence_to_phase_vec(i_seq)
    v_seq = phase_to_sequence_vec(v_phase)
    want = np.array([z0, z1, z2]) * i_seq
    assert np.max(np.abs(v_seq - want)) < 1e-12
