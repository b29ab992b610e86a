"""YAML persistence for scenarios.

The on-disk format mirrors the dataclasses: a ``transmission`` block
(buses, branches, generators, static loads), a ``feeders`` list, the
monitor, the optional fault event, and the stepping/convergence settings.
Complex values are written as ``[re, im]`` pairs; segment impedance blocks
support the uniform ``self``/``mutual`` shorthand or a full 3x3 ``matrix``
of pairs. See ``docs/case_format.md`` for the grammar.
"""
from __future__ import annotations

import math

import numpy as np
import yaml

from .distribution import (
    FeederSpec,
    LoadPoint,
    MotorConfig,
    SegmentSpec,
    uniform_segment_matrix,
)
from .errors import CaseFormatError
from .network import BranchSpec, FaultSpec
from .orchestrator import ConvergenceConfig, MonitorSpec, Scenario
from .transmission import GeneratorSpec, TransmissionCase

__all__ = ["load_scenario", "load_scenario_file", "dump_scenario", "save_scenario"]


def _need(d: dict, key: str, where: str):
    if key not in d:
        raise CaseFormatError(f"{where}: missing key {key!r}")
    return d[key]


def _pair(v, where: str) -> complex:
    try:
        re, im = float(v[0]), float(v[1])
    except (TypeError, ValueError, IndexError) as exc:
        raise CaseFormatError(f"{where}: expected [re, im] pair, got {v!r}") from exc
    return complex(re, im)


def _gen_from_dict(d: dict) -> GeneratorSpec:
    where = f"generator at bus {d.get('bus', '?')}"
    kind = d.get("kind", "pv")
    if kind not in ("slack", "pv", "emf"):
        raise CaseFormatError(f"{where}: unknown kind {kind!r}")
    return GeneratorSpec(
        bus=int(_need(d, "bus", where)),
        x_dp=float(_need(d, "x_dp", where)),
        h=float(_need(d, "h", where)),
        d=float(d.get("d", 0.0)),
        kind=kind,
        p_set=float(d.get("p_set", 0.0)),
        v_set=float(d.get("v_set", 1.0)),
        e0=_pair(d["e0"], where) if "e0" in d else 0j,
        x2=float(d["x2"]) if "x2" in d else None,
        x0=float(d["x0"]) if "x0" in d else None,
    )


def _gen_to_dict(g: GeneratorSpec) -> dict:
    out = {"bus": g.bus, "kind": g.kind, "x_dp": g.x_dp, "h": g.h, "d": g.d}
    if g.kind == "emf":
        out["e0"] = [g.e0.real, g.e0.imag]
    else:
        out["v_set"] = g.v_set
        if g.kind == "pv":
            out["p_set"] = g.p_set
    if g.x2 is not None:
        out["x2"] = g.x2
    if g.x0 is not None:
        out["x0"] = g.x0
    return out


def _tcase_from_dict(d: dict) -> TransmissionCase:
    where = "transmission"
    branches = []
    for b in _need(d, "branches", where):
        w = f"branch {b.get('from', '?')}-{b.get('to', '?')}"
        branches.append(BranchSpec(
            i=int(_need(b, "from", w)), j=int(_need(b, "to", w)),
            z=complex(float(b.get("r", 0.0)), float(_need(b, "x", w))),
            b=float(b.get("b", 0.0)),
        ))
    loads = {}
    for ld in d.get("static_loads", []):
        loads[int(_need(ld, "bus", "static load"))] = complex(
            float(ld.get("p", 0.0)), float(ld.get("q", 0.0)))
    return TransmissionCase(
        name=str(d.get("name", "case")),
        bus_ids=tuple(int(x) for x in _need(d, "buses", where)),
        branches=tuple(branches),
        generators=tuple(_gen_from_dict(g) for g in _need(d, "generators", where)),
        boundary_buses=tuple(int(x) for x in _need(d, "boundary_buses", where)),
        static_loads=loads,
        freq_hz=float(d.get("freq_hz", 60.0)),
        line_x0_factor=float(d.get("line_x0_factor", 3.0)),
    )


def _tcase_to_dict(c: TransmissionCase) -> dict:
    return {
        "name": c.name,
        "freq_hz": c.freq_hz,
        "line_x0_factor": c.line_x0_factor,
        "buses": list(c.bus_ids),
        "branches": [
            {"from": b.i, "to": b.j, "r": b.z.real, "x": b.z.imag, "b": b.b}
            for b in c.branches
        ],
        "generators": [_gen_to_dict(g) for g in c.generators],
        "static_loads": [
            {"bus": bus, "p": s.real, "q": s.imag}
            for bus, s in sorted(c.static_loads.items())
        ],
        "boundary_buses": list(c.boundary_buses),
    }


def _segment_z(d: dict, where: str) -> np.ndarray:
    if "matrix" in d:
        rows = d["matrix"]
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise CaseFormatError(f"{where}: matrix must be 3x3")
        return np.array([[_pair(v, where) for v in row] for row in rows])
    return uniform_segment_matrix(
        _pair(_need(d, "self", where), where),
        _pair(_need(d, "mutual", where), where),
    )


def _feeder_from_dict(d: dict) -> FeederSpec:
    head = int(_need(d, "head_bus", "feeder"))
    where = f"feeder at bus {head}"
    segments = []
    for s in _need(d, "segments", where):
        w = f"{where}, segment {s.get('from', '?')}-{s.get('to', '?')}"
        segments.append(SegmentSpec(
            i=int(_need(s, "from", w)), j=int(_need(s, "to", w)),
            z=_segment_z(s, w),
        ))
    loads = []
    for ld in _need(d, "loads", where):
        w = f"{where}, load at node {ld.get('node', '?')}"
        loads.append(LoadPoint(
            node=int(_need(ld, "node", w)),
            p_total=float(_need(ld, "p_total", w)),
            pf=float(ld.get("pf", 0.95)),
            motor_fraction=float(ld.get("motor_fraction", 0.25)),
        ))
    m = d.get("motor", {})
    motor = MotorConfig(
        v_stall=float(m.get("v_stall", 0.6)),
        stall_delay=float(m.get("stall_delay", 0.07)),
        stall_power_multiple=float(m.get("stall_power_multiple", 3.0)),
        stall_pf=float(m.get("stall_pf", 0.5)),
        v_floor=float(m.get("v_floor", 0.5)),
    )
    return FeederSpec(
        head_bus=head,
        bus_ids=tuple(int(x) for x in _need(d, "bus_ids", where)),
        segments=tuple(segments),
        loads=tuple(loads),
        motor=motor,
    )


def _feeder_to_dict(f: FeederSpec) -> dict:
    segs = []
    off_mask = ~np.eye(3, dtype=bool)
    for s in f.segments:
        z = np.asarray(s.z)
        diag, off = np.diag(z), z[off_mask]
        entry = {"from": s.i, "to": s.j}
        # plain floats: numpy scalars are not YAML-representable
        if np.all(diag == diag[0]) and np.all(off == off[0]):
            entry["self"] = [float(diag[0].real), float(diag[0].imag)]
            entry["mutual"] = [float(off[0].real), float(off[0].imag)]
        else:
            entry["matrix"] = [[[float(v.real), float(v.imag)] for v in row]
                               for row in z]
        segs.append(entry)
    mc = f.motor
    return {
        "head_bus": f.head_bus,
        "bus_ids": list(f.bus_ids),
        "segments": segs,
        "loads": [
            {"node": lp.node, "p_total": lp.p_total, "pf": lp.pf,
             "motor_fraction": lp.motor_fraction}
            for lp in f.loads
        ],
        "motor": {
            "v_stall": mc.v_stall, "stall_delay": mc.stall_delay,
            "stall_power_multiple": mc.stall_power_multiple,
            "stall_pf": mc.stall_pf, "v_floor": mc.v_floor,
        },
    }


def load_scenario(data: dict) -> Scenario:
    if not isinstance(data, dict):
        raise CaseFormatError("scenario document must be a mapping")
    tcase = _tcase_from_dict(_need(data, "transmission", "scenario"))
    feeders = {}
    for fd in _need(data, "feeders", "scenario"):
        spec = _feeder_from_dict(fd)
        if spec.head_bus in feeders:
            raise CaseFormatError(f"two feeders at bus {spec.head_bus}")
        feeders[spec.head_bus] = spec
    mon = _need(data, "monitor", "scenario")
    monitor = MonitorSpec(
        t_bus=int(_need(mon, "t_bus", "monitor")),
        d_bus=int(_need(mon, "d_bus", "monitor")),
        d_phase=int(mon.get("d_phase", 0)),
        gen_bus=int(mon["gen_bus"]) if "gen_bus" in mon else None,
    )
    fault = None
    if data.get("event"):
        ev = data["event"]
        fault = FaultSpec(
            bus=int(_need(ev, "bus", "event")),
            y=float(ev.get("y", 1e6)),
            t_on=float(_need(ev, "t_on", "event")),
            duration=float(_need(ev, "duration", "event")),
        )
    cv = data.get("convergence", {})
    conv = ConvergenceConfig(
        tol_v=float(cv.get("tol_v", 1e-6)),
        tol_i=float(cv.get("tol_i", 1e-6)),
        max_iter=int(cv.get("max_iter", 20)),
        on_nonconvergence=str(cv.get("on_nonconvergence", "continue")),
    )
    if conv.on_nonconvergence not in ("continue", "abort"):
        raise CaseFormatError(
            f"convergence: unknown policy {conv.on_nonconvergence!r}")
    beta = float(data.get("beta", 0.0))
    dt = float(data.get("dt", 0.005))
    t_end = float(data.get("t_end", 15.0))
    if dt <= 0 or t_end <= 0 or not math.isfinite(dt * t_end):
        raise CaseFormatError(f"bad stepping: dt={dt}, t_end={t_end}")
    return Scenario(
        name=str(data.get("name", tcase.name)),
        tcase=tcase,
        feeders=feeders,
        monitor=monitor,
        beta=beta,
        fault=fault,
        dt=dt,
        t_end=t_end,
        convergence=conv,
        fbs_tol=float(data.get("fbs_tol", 1e-10)),
        max_sweeps=int(data.get("max_sweeps", 200)),
    )


def load_scenario_file(path: str) -> Scenario:
    with open(path) as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise CaseFormatError(f"{path}: not valid YAML ({exc})") from exc
    return load_scenario(data)


def dump_scenario(sc: Scenario) -> str:
    doc = {
        "name": sc.name,
        "beta": sc.beta,
        "dt": sc.dt,
        "t_end": sc.t_end,
        "fbs_tol": sc.fbs_tol,
        "max_sweeps": sc.max_sweeps,
        "transmission": _tcase_to_dict(sc.tcase),
        "feeders": [_feeder_to_dict(f) for _, f in sorted(sc.feeders.items())],
        "monitor": {
            "t_bus": sc.monitor.t_bus, "d_bus": sc.monitor.d_bus,
            "d_phase": sc.monitor.d_phase,
            **({"gen_bus": sc.monitor.gen_bus}
               if sc.monitor.gen_bus is not None else {}),
        },
        "convergence": {
            "tol_v": sc.convergence.tol_v, "tol_i": sc.convergence.tol_i,
            "max_iter": sc.convergence.max_iter,
            "on_nonconvergence": sc.convergence.on_nonconvergence,
        },
    }
    if sc.fault is not None:
        doc["event"] = {"bus": sc.fault.bus, "y": sc.fault.y,
                        "t_on": sc.fault.t_on, "duration": sc.fault.duration}
    return yaml.safe_dump(doc, sort_keys=False)


def save_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_scenario(sc))
