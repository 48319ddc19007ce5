from pathlib import Path
from typing import Any, Dict, Optional


class ActionExitError(Exception):
    """
    Base class for every domain error raised by the project.

    Subclasses carry structured context in :attr:`details`, which the CLI
    error handlers copy into the diagnostic payload.
    """

    message: str = "Action exit error"

    def __init__(self, message: Optional[str] = None, **details: Any):
        self.details: Dict[str, Any] = {k: v for k, v in details.items() if v is not None}
        super().__init__(message or self.message)


# -------- TRAJECTORY ----------
class ShapeMismatchError(ActionExitError, ValueError):
    """Two trajectories (or a trace record) disagree on length or ``dt``."""

    def __init__(
        self,
        left: int,
        right: int,
        *,
        what: str = "length",
        layer: Optional[int] = None,
        path: Optional[Path] = None,
    ):
        where = f" at layer {layer}" if layer is not None else ""
        super().__init__(
            f"shape mismatch{where}: {what} {left} != {right}",
            left=left,
            right=right,
            what=what,
            layer=layer,
            path=str(path) if path else None,
        )
        self.left = left
        self.right = right
        self.layer = layer


class HorizonError(ActionExitError, ValueError):
    """Requested horizon lies outside ``[dt, T*dt]``."""

    def __init__(self, horizon_s: float, span_s: float, dt: float):
        super().__init__(
            f"horizon {horizon_s}s outside trajectory span [{dt}s, {span_s}s]",
            horizon_s=horizon_s,
            span_s=span_s,
            dt=dt,
        )
        self.horizon_s = horizon_s


# -------- CONTROLLER ----------
class PolicyError(ActionExitError, ValueError):
    """Exit policy does not fit the planner it is applied to."""


class DecodeError(ActionExitError):
    """A planner failed to decode the trajectory of one layer."""

    def __init__(self, layer: int, cause: BaseException):
        super().__init__(f"decode failed at layer {layer}: {cause}", layer=layer)
        self.layer = layer
        self.__cause__ = cause


# -------- TRACES / DATASETS ----------
class TraceFormatError(ActionExitError, ValueError):
    """Trace file is missing, malformed or violates a trace invariant."""

    def __init__(
        self,
        message: str,
        *,
        path: Optional[Path] = None,
        field: Optional[str] = None,
        layer: Optional[int] = None,
        line: Optional[int] = None,
    ):
        prefix = f"{path}: " if path else ""
        super().__init__(
            f"{prefix}{message}",
            path=str(path) if path else None,
            field=field,
            layer=layer,
            line=line,
        )
        self.path = path
        self.field = field
        self.layer = layer


class TraceCountError(TraceFormatError):
    """Declared layer count differs from the number of layer records."""

    def __init__(self, declared: int, found: int, *, path: Optional[Path] = None):
        super().__init__(
            f"count mismatch: total_layers={declared} but {found} layer records",
            path=path,
            field="total_layers",
        )
        self.declared = declared
        self.found = found


class EmptyDatasetError(ActionExitError, ValueError):
    message = "empty dataset"


class HeterogeneousDatasetError(ActionExitError, ValueError):
    """Traces of one dataset disagree on ``total_layers``."""


# -------- GENERATORS ----------
class ProfileError(ActionExitError, ValueError):
    """Invalid synthetic profile or generator shape parameters."""


class DistributionError(ActionExitError, ValueError):
    """Categorical distribution is empty, negative or not normalized."""


# -------- KINEMATICS ----------
class ControlError(ActionExitError, ValueError):
    """Invalid control sequence or integration step."""


# -------- COST MODEL ----------
class DegenerateAnchorsError(ActionExitError, ValueError):
    """Latency anchors do not determine a fixed + per-layer model."""
