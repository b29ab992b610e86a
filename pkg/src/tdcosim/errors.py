"""Exception hierarchy shared across the package."""
from __future__ import annotations

import math

__all__ = [
    "TdCosimError",
    "IsolatedNodeError",
    "SingularNetworkError",
    "FaultStateError",
    "FbsDivergenceError",
    "SolutionExplosionError",
    "LowVoltageError",
    "CombinationError",
    "CaseFormatError",
    "GridMismatchError",
    "InitializationError",
    "NonConvergenceError",
]


class TdCosimError(Exception):
    """Base class for the package's errors."""


class IsolatedNodeError(TdCosimError):
    """A node has no branch or shunt connection; the matrix would be singular."""

    def __init__(self, node):
        self.node = node
        super().__init__(f"node {node!r} is isolated (no branch or shunt touches it)")


class SingularNetworkError(TdCosimError):
    """Numerical factorization failed; carries what is known about the pivot."""

    def __init__(self, size: int, detail: str):
        self.size = size
        self.detail = detail
        super().__init__(f"singular {size}x{size} admittance matrix: {detail}")


class FaultStateError(TdCosimError):
    """Fault applied twice, or cleared without being applied."""


class FbsDivergenceError(TdCosimError):
    """Forward-backward sweep failed to converge.

    Attributes
    ----------
    sweeps : int
        Sweeps executed before giving up.
    trace : list[float]
        Max voltage change per sweep, useful to distinguish stagnation
        from explosion.
    """

    def __init__(self, sweeps: int, trace, reason: str):
        self.sweeps = sweeps
        self.trace = list(trace)
        self.reason = reason
        super().__init__(f"forward-backward sweep diverged after {sweeps} sweeps ({reason})")


class SolutionExplosionError(TdCosimError):
    """A network solution left the range where the phasor model means anything.

    Raised when bus voltages go nonfinite or beyond any physical magnitude,
    which happens when an interface coupling amplifies the boundary exchange
    from one step to the next instead of damping it.
    """

    def __init__(self, magnitude: float, limit: float):
        self.magnitude = magnitude
        self.limit = limit
        super().__init__(
            f"solution magnitude {magnitude:.3e} exceeds limit {limit:.3e}"
            if math.isfinite(magnitude)
            else "solution contains nonfinite values"
        )


class LowVoltageError(TdCosimError):
    """Boundary voltage below the floor; equivalent-load conversion ill-posed."""

    def __init__(self, magnitude: float, floor: float):
        self.magnitude = magnitude
        self.floor = floor
        super().__init__(
            f"boundary voltage magnitude {magnitude:.3e} below floor {floor:.3e}"
        )


class CombinationError(TdCosimError):
    """Interface model / interaction scheme / scenario combination rejected."""

    def __init__(self, im, scheme, reason: str):
        self.im = im
        self.scheme = scheme
        self.reason = reason
        super().__init__(f"{im!s} with {scheme!s} rejected: {reason}")


class CaseFormatError(TdCosimError):
    """Case, scenario, or matrix file failed structural validation."""


class GridMismatchError(TdCosimError):
    """Two result series do not share a time grid."""


class InitializationError(TdCosimError):
    """Steady-state initialization failed to converge or is inconsistent."""


class NonConvergenceError(TdCosimError):
    """Boundary iteration exceeded its budget with abort policy configured."""

    def __init__(self, t: float, mismatch: float):
        self.t = t
        self.mismatch = mismatch
        super().__init__(
            f"boundary iteration did not converge at t={t:.4f}s (mismatch {mismatch:.3e})"
        )
