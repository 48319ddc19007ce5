import hashlib
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from pydantic import TypeAdapter

from src.conf.config import settings
from src.core.exceptions import (
    EmptyDatasetError,
    ShapeMismatchError,
    TraceCountError,
    TraceFormatError,
)
from src.schemas import ControlSample, ScenarioTrace, Trajectory


logger = logging.getLogger(__name__)

#: First line of every trace file.
MAGIC = "# action-exit trace v1"

_CONTROLS = TypeAdapter(List[ControlSample])

# Format (one record per line, whitespace separated):
#   header <scenario_id> <total_layers> <horizon_T> <dt>
#   reference <x1> <y1> ... <xT> <yT>
#   layer <l> <x1> <y1> ... <xT> <yT>      (l = 1..L, in order)
# Lines starting with '#' and blank lines are ignored.


def _fmt(value: float) -> str:
    # 17 significant digits: bit-exact float round-trip
    return f"{value:.16e}"


def _floats(tokens: Sequence[str], *, path: Path, field: str, layer: int | None, line: int) -> np.ndarray:
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError:
        raise TraceFormatError(
            f"non-numeric value in {field} record (line {line})",
            path=path,
            field=field,
            layer=layer,
            line=line,
        ) from None


def _points(
    tokens: Sequence[str], horizon_T: int, *, path: Path, field: str, layer: int | None, line: int
) -> np.ndarray:
    if len(tokens) % 2:
        raise TraceFormatError(
            f"odd number of coordinates in {field} record (line {line})",
            path=path,
            field=field,
            layer=layer,
            line=line,
        )
    values = _floats(tokens, path=path, field=field, layer=layer, line=line)
    if not np.all(np.isfinite(values)):
        raise TraceFormatError(
            f"non-finite coordinate in {field} record (line {line})",
            path=path,
            field=field,
            layer=layer,
            line=line,
        )
    n_points = len(values) // 2
    if n_points != horizon_T:
        raise ShapeMismatchError(n_points, horizon_T, layer=layer, path=path)
    return values.reshape(horizon_T, 2)


def save_trace(trace: ScenarioTrace, path: Path) -> Path:
    """
    Write one scenario trace file.

    Coordinates are written with 17 significant digits so that
    :func:`load_trace` reproduces the trace bit for bit.

    :param trace: Trace to serialize.
    :type trace: ScenarioTrace
    :param path: Destination file; parent directories are created.
    :type path: Path
    :raises OSError: On I/O failure.
    :return: The written path.
    :rtype: Path
    """
    path = Path(path)
    lines = [
        MAGIC,
        f"header {trace.scenario_id} {trace.total_layers} {trace.horizon_T} {_fmt(trace.dt)}",
        "reference " + " ".join(_fmt(v) for v in trace.reference.xy.ravel()),
    ]
    for layer, traj in enumerate(trace.per_layer, start=1):
        lines.append(f"layer {layer} " + " ".join(_fmt(v) for v in traj.xy.ravel()))

    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_trace(path: Path) -> ScenarioTrace:
    """
    Read and validate one scenario trace file.

    :param path: Trace file.
    :type path: Path
    :raises TraceFormatError: Missing file, invalid UTF-8, malformed or out-of-order record.
    :raises ShapeMismatchError: A trajectory with the wrong number of points
        (names the layer).
    :raises TraceCountError: ``total_layers`` differs from the layer records.
    :return: Validated trace.
    :rtype: ScenarioTrace

    Example::

        trace = load_trace(Path("dataset/pop-7-00001.trace"))
        trace.total_layers   # 32
    """
    path = Path(path)
    if not path.is_file():
        raise TraceFormatError("missing file", path=path, field="path")

    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError:
        raise TraceFormatError("not valid UTF-8", path=path, field="encoding") from None

    records: List[Tuple[int, List[str]]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            records.append((number, stripped.split()))

    if not records or records[0][1][0] != "header":
        raise TraceFormatError("first record must be the header", path=path, field="header")

    line, header = records[0]
    if len(header) != 5:
        raise TraceFormatError(
            f"header expects 4 fields, got {len(header) - 1}", path=path, field="header", line=line
        )
    scenario_id = header[1]
    try:
        total_layers, horizon_T = int(header[2]), int(header[3])
        dt = float(header[4])
    except ValueError:
        raise TraceFormatError("malformed header field", path=path, field="header", line=line) from None
    if total_layers < 1 or horizon_T < 1 or not dt > 0:
        raise TraceFormatError(
            "header requires total_layers >= 1, horizon >= 1, dt > 0", path=path, field="header", line=line
        )

    if len(records) < 2 or records[1][1][0] != "reference":
        raise TraceFormatError("second record must be the reference", path=path, field="reference")
    line, tokens = records[1]
    reference = _points(tokens[1:], horizon_T, path=path, field="reference", layer=None, line=line)

    layer_records = records[2:]
    per_layer = []
    for expected, (line, tokens) in enumerate(layer_records, start=1):
        if tokens[0] != "layer" or len(tokens) < 2:
            raise TraceFormatError(
                f"unknown record {tokens[0]!r} (line {line})", path=path, field="layer", line=line
            )
        try:
            index = int(tokens[1])
        except ValueError:
            raise TraceFormatError(
                f"malformed layer index (line {line})", path=path, field="layer index", line=line
            ) from None
        if index != expected:
            raise TraceFormatError(
                f"layer records out of order: expected {expected}, got {index}",
                path=path,
                field="layer index",
                layer=index,
                line=line,
            )
        per_layer.append(_points(tokens[2:], horizon_T, path=path, field="layer", layer=index, line=line))

    if len(per_layer) != total_layers:
        raise TraceCountError(total_layers, len(per_layer), path=path)

    try:
        return ScenarioTrace(
            scenario_id=scenario_id,
            total_layers=total_layers,
            reference=Trajectory(xy=reference, dt=dt),
            per_layer=tuple(Trajectory(xy=xy, dt=dt) for xy in per_layer),
        )
    except ValueError as err:
        raise TraceFormatError(str(err), path=path, field="scenario") from err


# -------- DATASETS ----------
def list_dataset(directory: Path, suffix: str | None = None) -> List[Path]:
    """
    Trace files of a dataset directory, sorted lexicographically by name.

    :param directory: Dataset directory.
    :type directory: Path
    :param suffix: File extension; defaults to ``settings.TRACE_SUFFIX``.
    :type suffix: str | None
    :raises EmptyDatasetError: If the directory is missing or holds no trace.
    :return: Sorted trace paths.
    :rtype: list[Path]
    """
    directory = Path(directory)
    suffix = suffix or settings.TRACE_SUFFIX
    if not directory.is_dir():
        raise EmptyDatasetError(path=str(directory), reason="not a directory")
    paths = sorted((p for p in directory.iterdir() if p.is_file() and p.suffix == suffix), key=lambda p: p.name)
    if not paths:
        raise EmptyDatasetError(path=str(directory), suffix=suffix)
    return paths


def save_dataset(traces: Iterable[ScenarioTrace], directory: Path, suffix: str | None = None) -> List[Path]:
    """Write one file per trace, named ``<scenario_id><suffix>``."""
    directory = Path(directory)
    suffix = suffix or settings.TRACE_SUFFIX
    paths = [save_trace(trace, directory / f"{trace.scenario_id}{suffix}") for trace in traces]
    logger.info(f"Saved {len(paths)} traces to {directory}")
    return paths


def dataset_digest(paths: Iterable[Path]) -> str:
    """SHA-256 over the names and bytes of the given files, in the given order."""
    digest = hashlib.sha256()
    for path in paths:
        path = Path(path)
        digest.update(path.name.encode("utf-8") + b"\0")
        digest.update(path.read_bytes() + b"\0")
    return digest.hexdigest()


# -------- CONTROLS ----------
def load_controls(path: Path) -> List[ControlSample]:
    """
    Read a controls JSON file: a list of ``{"speed": ..., "steering_angle": ...}``.

    :raises TraceFormatError: If the file is missing.
    :raises pydantic.ValidationError: On malformed or out-of-range samples.
    :return: Control samples in file order.
    :rtype: list[ControlSample]
    """
    path = Path(path)
    if not path.is_file():
        raise TraceFormatError("missing file", path=path, field="path")
    return _CONTROLS.validate_json(path.read_bytes())
