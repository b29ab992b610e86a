"""Built-in study systems.

The main system is the classic 9-bus, 3-machine network (gens at buses
1-3, loads at 5, 6 and 8) with each static load replaced by an eight-node
unbalanced feeder. Feeder node ids continue the transmission numbering:
10..17 hang from bus 5, 18..25 from bus 6, 26..33 from bus 8.

A small two-machine system with fixed internal EMFs and one four-node
feeder is provided for tight-tolerance comparisons against a monolithic
solution of the same equations.
"""
from __future__ import annotations

import math
from dataclasses import replace

from .distribution import FeederSpec, LoadPoint, MotorConfig, SegmentSpec, uniform_segment_matrix
from .network import BranchSpec, FaultSpec
from .orchestrator import ConvergenceConfig, MonitorSpec, Scenario
from .transmission import GeneratorSpec, TransmissionCase

__all__ = [
    "ieee9_case",
    "build_feeder",
    "ieee9_with_feeders",
    "accuracy_scenario",
    "robustness_scenario",
    "two_machine_case",
    "oracle_scenario",
    "FEEDER_SEGMENT_Z1",
]

# Per-segment positive-sequence impedance (distribution phase base). Eight
# of these in series under nominal load give a few percent of voltage drop
# at the feeder tail.
FEEDER_SEGMENT_Z1 = 0.0138 + 0.0276j


def ieee9_case() -> TransmissionCase:
    """The 9-bus system with its static loads in place."""
    branches = (
        BranchSpec(1, 4, 0.0576j),
        BranchSpec(2, 7, 0.0625j),
        BranchSpec(3, 9, 0.0586j),
        BranchSpec(4, 5, 0.010 + 0.085j, 0.176),
        BranchSpec(4, 6, 0.017 + 0.092j, 0.158),
        BranchSpec(5, 7, 0.032 + 0.161j, 0.306),
        BranchSpec(6, 9, 0.039 + 0.170j, 0.358),
        BranchSpec(7, 8, 0.0085 + 0.072j, 0.149),
        BranchSpec(8, 9, 0.0119 + 0.1008j, 0.209),
    )
    gens = (
        GeneratorSpec(bus=1, x_dp=0.0608, h=23.64, d=2.0, kind="slack", v_set=1.04),
        GeneratorSpec(bus=2, x_dp=0.1198, h=6.40, d=2.0, kind="pv", p_set=1.63,
                      v_set=1.025),
        GeneratorSpec(bus=3, x_dp=0.1813, h=3.01, d=2.0, kind="pv", p_set=0.85,
                      v_set=1.025),
    )
    loads = {5: 1.25 + 0.50j, 6: 0.90 + 0.30j, 8: 1.00 + 0.35j}
    return TransmissionCase(
        name="ieee9",
        bus_ids=tuple(range(1, 10)),
        branches=branches,
        generators=gens,
        boundary_buses=(5, 6, 8),
        static_loads=loads,
    )


def build_feeder(head_bus: int, first_bus_id: int, p_total: float, q_total: float,
                 n_loads: int = 8, z1: complex = FEEDER_SEGMENT_Z1,
                 motor: MotorConfig = MotorConfig(),
                 motor_fraction: float = 0.25) -> FeederSpec:
    """Uniform radial chain: ``n_loads`` identical composite load points on
    identical segments. Mutual coupling is set so the zero-sequence segment
    impedance is three times the positive-sequence one."""
    z_self = z1 * (5.0 / 3.0)
    z_mut = z1 * (2.0 / 3.0)
    z_seg = uniform_segment_matrix(z_self, z_mut)
    segments = tuple(SegmentSpec(i, i + 1, z_seg) for i in range(n_loads))
    pf = math.cos(math.atan2(q_total, p_total))
    loads = tuple(
        LoadPoint(node=i + 1, p_total=p_total / n_loads, pf=pf,
                  motor_fraction=motor_fraction)
        for i in range(n_loads)
    )
    bus_ids = tuple(range(first_bus_id, first_bus_id + n_loads))
    return FeederSpec(head_bus=head_bus, bus_ids=bus_ids, segments=segments,
                      loads=loads, motor=motor)


def ieee9_with_feeders(motor: MotorConfig = MotorConfig(),
                       z1: complex = FEEDER_SEGMENT_Z1) -> tuple[TransmissionCase, dict]:
    """The 9-bus case with every static load replaced by a feeder."""
    base = ieee9_case()
    feeders = {}
    first = 10
    for bus in base.boundary_buses:
        s = base.static_loads[bus]
        feeders[bus] = build_feeder(bus, first, s.real, s.imag, z1=z1, motor=motor)
        first += 8
    tcase = replace(base, static_loads={})
    return tcase, feeders


_MONITOR_9 = MonitorSpec(t_bus=5, d_bus=14, d_phase=0, gen_bus=1)


def accuracy_scenario(beta: float = 0.0, t_end: float = 15.0,
                      convergence: ConvergenceConfig = ConvergenceConfig()) -> Scenario:
    """Bolted fault at bus 5, default composite-load parameters."""
    tcase, feeders = ieee9_with_feeders()
    return Scenario(
        name=f"ieee9-fault5-beta{beta:g}",
        tcase=tcase,
        feeders=feeders,
        monitor=_MONITOR_9,
        beta=beta,
        fault=FaultSpec(bus=5, y=1e6, t_on=1.0, duration=0.07),
        dt=0.005,
        t_end=t_end,
        convergence=convergence,
    )


def robustness_scenario(beta: float = 0.0, t_end: float = 15.0,
                        stall_power_multiple: float = 8.0,
                        feeder_z_scale: float = 4.0) -> Scenario:
    """Same event on heavier feeders with a deeper stall draw.

    Once the motors latch at fault clearing, the product of cumulative
    segment impedance and stalled admittance pushes the sweep iteration
    past contraction, so sweep-based feeder solutions fail right at the
    clearing step. Direct admittance solutions stay well-posed: the extra
    series impedance keeps the aggregate boundary admittance low enough
    that every coupling damps from step to step.
    """
    motor = MotorConfig(stall_power_multiple=stall_power_multiple)
    tcase, feeders = ieee9_with_feeders(
        motor=motor, z1=FEEDER_SEGMENT_Z1 * feeder_z_scale)
    return Scenario(
        name=f"ieee9-fault5-stall{stall_power_multiple:g}-z{feeder_z_scale:g}",
        tcase=tcase,
        feeders=feeders,
        monitor=_MONITOR_9,
        beta=beta,
        fault=FaultSpec(bus=5, y=1e6, t_on=1.0, duration=0.07),
        dt=0.005,
        t_end=t_end,
    )


def two_machine_case() -> tuple[TransmissionCase, dict]:
    """Two fixed-EMF machines, three buses, one four-node feeder at bus 3."""
    branches = (
        BranchSpec(1, 2, 0.10j),
        BranchSpec(1, 3, 0.03 + 0.20j),
        BranchSpec(2, 3, 0.02 + 0.15j),
    )
    gens = (
        GeneratorSpec(bus=1, x_dp=0.08, h=5.0, d=1.0, kind="emf",
                      e0=1.06 + 0.0j),
        GeneratorSpec(bus=2, x_dp=0.12, h=3.0, d=1.0, kind="emf",
                      e0=1.05 * complex(math.cos(0.05), math.sin(0.05))),
    )
    tcase = TransmissionCase(
        name="two-machine",
        bus_ids=(1, 2, 3),
        branches=branches,
        generators=gens,
        boundary_buses=(3,),
        static_loads={},
    )
    feeder = build_feeder(3, 10, 0.3 * 0.95, 0.3 * math.sin(math.acos(0.95)),
                          n_loads=4, motor_fraction=0.0)
    return tcase, {3: feeder}


def oracle_scenario(t_end: float = 5.0) -> Scenario:
    """Mild shunt fault on the two-machine system; the feeder is pure
    constant impedance, so the combined network is linear and the whole
    system is solvable as one admittance problem."""
    tcase, feeders = two_machine_case()
    return Scenario(
        name="two-machine-fault3",
        tcase=tcase,
        feeders=feeders,
        monitor=MonitorSpec(t_bus=3, d_bus=12, d_phase=0, gen_bus=1),
        fault=FaultSpec(bus=3, y=5.0, t_on=0.5, duration=0.1),
        dt=0.005,
        t_end=t_end,
        convergence=ConvergenceConfig(tol_v=1e-8, tol_i=1e-8, max_iter=40),
    )
