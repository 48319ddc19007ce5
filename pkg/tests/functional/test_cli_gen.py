import json

import pytest

from src.conf.config import settings
from src.repository.traces import list_dataset, load_trace

# Run with: pytest tests/functional/test_cli_gen.py -v

pytestmark = [pytest.mark.functional, pytest.mark.cli]


# ----------------------------------------------------------------------
# Generator modes
# ----------------------------------------------------------------------


def test_gen_profile_mode(cli, tmp_path):
    """
    Default profile mode.

    Expect:
    - status 0 and "wrote 3 traces"
    - three 32-layer, 6-point trace files
    """
    out = tmp_path / "profile"
    status, stdout, _ = cli("gen", "--out", str(out), "--count", "3", "--seed", "1", "--noise-sd", "0.2")
    assert status == 0
    assert stdout.strip() == f"wrote 3 traces to {out}"
    traces = [load_trace(p) for p in list_dataset(out)]
    assert len(traces) == 3
    assert {(t.total_layers, t.horizon_T, t.dt) for t in traces} == {(32, 6, 0.5)}


def test_gen_is_seeded(cli, tmp_path):
    """Same flags twice → byte-identical files."""
    args = ("--count", "2", "--seed", "42", "--noise-sd", "0.5")
    cli("gen", "--out", str(tmp_path / "a"), *args)
    cli("gen", "--out", str(tmp_path / "b"), *args)
    a, b = list_dataset(tmp_path / "a"), list_dataset(tmp_path / "b")
    assert [p.name for p in a] == [p.name for p in b]
    assert all(x.read_bytes() == y.read_bytes() for x, y in zip(a, b))


def test_gen_lipschitz_mode(cli, tmp_path):
    out = tmp_path / "lip"
    status, _, _ = cli("gen", "--out", str(out), "--lipschitz", "1.0", "--count", "5", "--layers", "16")
    assert status == 0
    assert {load_trace(p).total_layers for p in list_dataset(out)} == {16}


def test_gen_population_mode(cli, tmp_path):
    out = tmp_path / "pop"
    status, stdout, _ = cli("gen", "--out", str(out), "--population", "2.0", "--count", "25", "--seed", "7")
    assert status == 0
    assert "wrote 25 traces" in stdout
    names = [p.name for p in list_dataset(out)]
    assert names[0] == "pop-7-00000.trace"
    assert len(names) == 25


def test_gen_from_controls(cli, tmp_path):
    """
    Bicycle-model scenario from a controls file.

    Expect:
    - one trace named after the file stem
    - one point per control sample
    """
    controls = tmp_path / "left turn.json"
    controls.write_text(json.dumps([{"speed": 8.0, "steering_angle": 0.05}] * 6))
    out = tmp_path / "ctl"
    status, _, _ = cli("gen", "--out", str(out), "--from-controls", str(controls), "--layers", "20")
    assert status == 0
    (path,) = list_dataset(out)
    assert path.name == "controls-left-turn.trace"
    trace = load_trace(path)
    assert (trace.total_layers, trace.horizon_T) == (20, 6)


def test_gen_wheelbase_changes_rollout(cli, tmp_path):
    """
    Same steering controls rolled out with two wheelbases.

    Expect:
    - different reference points
    - the longer wheelbase turns less
    """
    controls = tmp_path / "turn.json"
    controls.write_text(json.dumps([{"speed": 8.0, "steering_angle": 0.2}] * 6))

    def reference(wheelbase):
        out = tmp_path / f"wb-{wheelbase}"
        status, _, _ = cli("gen", "--out", str(out), "--from-controls", str(controls), "--wheelbase", wheelbase)
        assert status == 0
        return load_trace(list_dataset(out)[0]).reference.xy

    short, long = reference("2.8"), reference("4.0")
    assert short.tobytes() != long.tobytes()
    assert abs(long[-1, 1]) < abs(short[-1, 1])


def test_gen_wheelbase_defaults_to_setting(cli, tmp_path, monkeypatch):
    """Without --wheelbase the rollout follows ACTION_EXIT_WHEELBASE_M."""
    controls = tmp_path / "turn.json"
    controls.write_text(json.dumps([{"speed": 8.0, "steering_angle": 0.2}] * 6))
    cli("gen", "--out", str(tmp_path / "explicit"), "--from-controls", str(controls), "--wheelbase", "4.0")
    monkeypatch.setattr(settings, "WHEELBASE_M", 4.0)
    cli("gen", "--out", str(tmp_path / "default"), "--from-controls", str(controls))
    explicit, default = list_dataset(tmp_path / "explicit")[0], list_dataset(tmp_path / "default")[0]
    assert default.read_bytes() == explicit.read_bytes()


def test_gen_negative_seed_wraps_in_every_mode(cli, tmp_path):
    """--seed -1 is masked to 64 bits for population and lipschitz modes alike."""
    pop = tmp_path / "pop"
    status, _, _ = cli("gen", "--out", str(pop), "--population", "2.0", "--count", "3", "--seed", "-1")
    assert status == 0
    assert [p.name for p in list_dataset(pop)][0] == f"pop-{(1 << 64) - 1}-00000.trace"
    status, _, _ = cli("gen", "--out", str(tmp_path / "lip"), "--lipschitz", "1.0", "--count", "3", "--seed", "-1")
    assert status == 0


# ----------------------------------------------------------------------
# Errors
# ----------------------------------------------------------------------


def test_gen_count_must_be_positive(cli, tmp_path):
    status, stdout, stderr = cli("gen", "--out", str(tmp_path / "x"), "--count", "0")
    assert status == 3
    assert stdout == ""
    assert stderr.strip().splitlines()[-1].startswith("action-exit gen: error: --count must be >= 1")


def test_gen_modes_are_exclusive(cli, tmp_path):
    status, _, _ = cli("gen", "--out", str(tmp_path), "--lipschitz", "1", "--population", "2")
    assert status == 2


def test_gen_missing_controls_file(cli, tmp_path):
    status, _, stderr = cli("gen", "--out", str(tmp_path / "x"), "--from-controls", str(tmp_path / "none.json"))
    assert status == 4
    assert "missing file" in stderr


def test_gen_negative_noise_is_validation_error(cli, tmp_path):
    status, _, stderr = cli("gen", "--out", str(tmp_path / "x"), "--noise-sd", "-1")
    assert status == 3
    assert "noise_sd" in stderr
