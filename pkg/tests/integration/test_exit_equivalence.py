import pytest

from src.models.policies import PolicyKind
from src.schemas import ExitPolicy
from src.services.controller import run_policy
from src.services.harness import oracle_check
from src.services.planners import TracePlanner, generate_lipschitz_scenario, generate_scenario
from src.schemas import SyntheticProfile

# Run with: pytest tests/integration/test_exit_equivalence.py -v

pytestmark = [pytest.mark.integration, pytest.mark.property]


def test_multi_hop_matches_full_scan_on_10000_seeds():
    """
    Seeded bounded-decrease sweep: δ 1.0, 32 layers, start layer 13.

    Expect:
    - 10000/10000 agree on the exit layer
    - 10000/10000 with no more checks than full scan
    """
    summary = oracle_check(n=10_000, delta=1.0, seed=7, total_layers=32, start_layer=13)
    assert (summary.agree, summary.dominate) == (10_000, 10_000)
    assert summary.first_disagreement is None


def test_sweep_wraps_at_the_seed_limit():
    """Seeds past 2**64 - 1 wrap to 0 instead of failing."""
    summary = oracle_check(n=20, delta=1.0, seed=2**64 - 10)
    assert summary.passed


@pytest.mark.parametrize("seed", range(25))
def test_full_scan_is_monotone_in_delta(seed):
    """
    Full scan exit layer is non-increasing in δ on any trace.
    """
    trace = generate_scenario(SyntheticProfile(noise_sd=0.4, divergence_layer=26, divergence_slope=0.3, seed=seed))
    exits = [
        run_policy(TracePlanner(trace), trace.reference, ExitPolicy(kind=PolicyKind.fullscan, delta=d)).exit_layer
        for d in (0.5, 1.0, 2.0)
    ]
    assert exits == sorted(exits, reverse=True)


@pytest.mark.parametrize("delta", [0.5, 1.0, 2.0])
def test_multi_hop_never_checks_more_than_full_scan(delta):
    for seed in range(200):
        trace = generate_lipschitz_scenario(seed, delta)
        multi = run_policy(TracePlanner(trace), trace.reference, ExitPolicy(delta=delta))
        full = run_policy(TracePlanner(trace), trace.reference, ExitPolicy(kind=PolicyKind.fullscan, delta=delta))
        assert multi.exit_layer == full.exit_layer
        assert multi.checks <= full.checks
