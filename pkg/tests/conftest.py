import logging
from pathlib import Path
from typing import Callable, List, Sequence, Tuple

import numpy as np
import pytest

from src.repository.traces import save_dataset
from src.schemas import ExitPolicy, ScenarioTrace, Trajectory
from src.services.cost_model import default_cost_model
from src.services.planners import scenario_from_curve, straight_reference
from tests.utils.curves import linear_curve


# --- Faker ---
@pytest.fixture
def faker_seed():
    """
    Fixed seed for the Faker pytest plugin, so generated ids are stable.

    :return: Seed value.
    :rtype: int
    """
    return 20251018


@pytest.fixture
def scenario_id(faker):
    """
    File-name safe scenario identifier (``<slug>-<n>``).

    :param faker: Seeded Faker instance from the pytest plugin.
    :type faker: faker.Faker
    :return: Scenario id.
    :rtype: str
    """
    return f"{faker.slug()}-{faker.pyint(min_value=0, max_value=9999)}"


# --- Trajectories ---
@pytest.fixture
def reference():
    """
    Straight 10 m/s reference: 6 points, dt 0.5 s, ``(5, 0) ... (30, 0)``.

    :return: Reference trajectory.
    :rtype: Trajectory
    """
    return straight_reference(6, 0.5, 10.0)


@pytest.fixture
def rng():
    """Seeded numpy generator for randomized helpers."""
    return np.random.default_rng(12345)


# --- Traces ---
@pytest.fixture
def make_trace(scenario_id) -> Callable[..., ScenarioTrace]:
    """
    Factory building a trace whose score at layer ``l`` equals ``curve[l - 1]``.

    Usage:
        trace = make_trace([7.0, 3.0, 0.5])
        trace = make_trace(curve, scenario_id="case-1")

    :param scenario_id: Default scenario id.
    :type scenario_id: str
    :return: Factory function.
    :rtype: Callable
    """

    def _make(curve: Sequence[float], scenario_id: str = scenario_id) -> ScenarioTrace:
        return scenario_from_curve(scenario_id, curve)

    return _make


@pytest.fixture
def linear_trace(make_trace):
    """
    32-layer trace with score ``20 - l`` (clipped at 0).

    :return: Trace used by the hand-walked controller examples.
    :rtype: ScenarioTrace
    """
    return make_trace(linear_curve(20.0, 32))


@pytest.fixture
def dataset_dir(tmp_path) -> Callable[[List[ScenarioTrace]], Path]:
    """
    Factory writing traces into a fresh dataset directory under ``tmp_path``.

    :param tmp_path: Pytest temporary directory.
    :type tmp_path: Path
    :return: Factory returning the dataset directory.
    :rtype: Callable
    """

    def _write(traces: List[ScenarioTrace], name: str = "dataset") -> Path:
        directory = tmp_path / name
        save_dataset(traces, directory)
        return directory

    return _write


# --- Policies / cost model ---
@pytest.fixture
def multihop_policy():
    """Multi-hop policy: delta 1.0 m, start layer 13, L2@2s."""
    return ExitPolicy(delta=1.0)


@pytest.fixture
def cost_model():
    """
    Default cost model: fixed 15.2 ms, 11.43125 ms per layer, 4.9 ms per check.

    :rtype: CostModel
    """
    return default_cost_model()


# --- Logging ---
@pytest.fixture(autouse=True)
def restore_root_logger():
    """
    Keep handlers installed by ``main.main`` from leaking between tests.
    """
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


# --- CLI ---
@pytest.fixture
def cli(capsys) -> Callable[..., Tuple[int, str, str]]:
    """
    Run ``main.main`` in-process and capture its streams.

    Usage:
        status, out, err = cli("run", "--traces", str(d), "--out", str(r))

    :param capsys: Pytest capture fixture.
    :return: Function returning ``(status, stdout, stderr)``.
    :rtype: Callable
    """
    from main import main

    def _run(*argv: str) -> Tuple[int, str, str]:
        capsys.readouterr()
        status = main(["--log-level", "WARNING", "--no-log-json", *argv])
        captured = capsys.readouterr()
        return status, captured.out, captured.err

    return _run
