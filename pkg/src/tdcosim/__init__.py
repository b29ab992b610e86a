"""Transmission-distribution dynamic co-simulation.

Phasor-domain transient simulation of a transmission grid coupled to
unbalanced radial distribution feeders, with interchangeable boundary
interface models and interaction schemes, plus a benchmark harness that
compares their accuracy, robustness and efficiency against a reference
combination.
"""
from .bench import CellResult, ErrorMetrics, compute_metrics, emit_csv, emit_markdown, run_matrix
from .distribution import (
    BoundaryExtract,
    FeederSimulator,
    FeederSolution,
    FeederSpec,
    HeadSource,
    LoadPoint,
    MotorConfig,
    SegmentSpec,
)
from .errors import (
    CaseFormatError,
    CombinationError,
    FaultStateError,
    FbsDivergenceError,
    GridMismatchError,
    InitializationError,
    IsolatedNodeError,
    LowVoltageError,
    NonConvergenceError,
    SingularNetworkError,
    TdCosimError,
)
from .interface import EquivalentLoad, InterfaceModel, d_to_t, solve_link_current, t_to_d
from .network import BranchSpec, FaultSpec, NetworkMatrix, build_ybus
from .orchestrator import (
    ConvergenceConfig,
    CoSimulation,
    MonitorSpec,
    Scenario,
    Scheme,
    TimeSeriesResult,
    run_cosimulation,
)
from .phasor import Phasor, ThreePhase, ThreeSequence
from .transmission import GeneratorSpec, TransmissionCase, TransmissionSimulator

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BranchSpec", "FaultSpec", "NetworkMatrix", "build_ybus",
    "Phasor", "ThreePhase", "ThreeSequence",
    "SegmentSpec", "LoadPoint", "MotorConfig", "FeederSpec", "HeadSource",
    "FeederSolution", "BoundaryExtract", "FeederSimulator",
    "GeneratorSpec", "TransmissionCase", "TransmissionSimulator",
    "InterfaceModel", "EquivalentLoad", "t_to_d", "d_to_t", "solve_link_current",
    "Scheme", "ConvergenceConfig", "MonitorSpec", "Scenario",
    "TimeSeriesResult", "CoSimulation", "run_cosimulation",
    "ErrorMetrics", "CellResult", "compute_metrics", "run_matrix",
    "emit_csv", "emit_markdown",
    "TdCosimError", "IsolatedNodeError", "SingularNetworkError",
    "FaultStateError", "FbsDivergenceError", "LowVoltageError",
    "CombinationError", "CaseFormatError", "GridMismatchError",
    "InitializationError", "NonConvergenceError",
]
