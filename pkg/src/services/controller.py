import logging
from typing import List

from src.core.exceptions import DecodeError, PolicyError
from src.models.policies import PolicyKind
from src.schemas import (
    DissimilarityScore,
    ExitOutcome,
    ExitPolicy,
    Tolerance,
    Trajectory,
)
from src.services.metrics import is_admissible, policy_score
from src.services.planners import LayerwisePlanner


logger = logging.getLogger(__name__)

#: (multiple of delta, stride) pairs, checked from the widest hop down.
STRIDE_TABLE = ((8, 8), (4, 4), (2, 2))


def next_stride(score: DissimilarityScore, tol: Tolerance) -> int:
    """
    Hop length after a failed check.

    ``8`` if ``score > 8*delta``, else ``4`` if ``score > 4*delta``, else ``2``
    if ``score > 2*delta``, else ``1``. All comparisons are strict, so a
    score of exactly ``8*delta`` gives ``4`` and ``2*delta`` gives ``1``.

    :param score: Score at the layer just checked.
    :type score: DissimilarityScore
    :param tol: Tolerance threshold.
    :type tol: Tolerance
    :return: One of 1, 2, 4, 8.
    :rtype: int
    """
    for multiple, stride in STRIDE_TABLE:
        if score.value > multiple * tol.delta:
            return stride
    return 1


def _decode(planner: LayerwisePlanner, layer: int) -> Trajectory:
    try:
        return planner.decode(layer)
    except DecodeError:
        raise
    except Exception as err:
        raise DecodeError(layer, err) from err


def _require(policy: ExitPolicy, kind: PolicyKind, planner: LayerwisePlanner) -> None:
    if policy.kind is not kind:
        raise PolicyError(f"expected a {kind.value} policy, got {policy.kind.value}")
    policy.validate_for(planner.total_layers)


def _walk(
    planner: LayerwisePlanner,
    reference: Trajectory,
    policy: ExitPolicy,
    hop: bool,
) -> ExitOutcome:
    L = planner.total_layers
    layer = policy.start_layer
    checked: List[int] = []
    scores: List[float] = []

    while True:
        traj = _decode(planner, layer)
        score = policy_score(traj, reference, policy.metric)
        checked.append(layer)
        scores.append(score.value)

        if is_admissible(score, policy.delta):
            logger.debug(f"exit at L{layer}: score {score.value:.3f} < {policy.delta.delta}")
            return ExitOutcome(
                exit_layer=layer,
                checked_layers=tuple(checked),
                scores=tuple(scores),
                exit_score=score,
                adopted=traj,
                exited_early=True,
                total_layers=L,
            )
        if layer == L:
            logger.debug(f"fall-through at L{L}: score {score.value:.3f}")
            return ExitOutcome(
                exit_layer=L,
                checked_layers=tuple(checked),
                scores=tuple(scores),
                exit_score=score,
                adopted=traj,
                exited_early=False,
                total_layers=L,
            )

        stride = next_stride(score, policy.delta) if hop else 1
        layer = min(layer + stride, L)  # the final layer is always checked


def run_multi_hop(planner: LayerwisePlanner, reference: Trajectory, policy: ExitPolicy) -> ExitOutcome:
    """
    Multi-hop early exit.

    Checks ``policy.start_layer`` first, then advances by
    :func:`next_stride` of the latest score, clamping the last hop to layer
    ``L``. Exits at the first admissible check; if none is admissible the
    layer-``L`` trajectory is adopted with ``exited_early=False``. Only
    checked layers are decoded.

    :param planner: Layerwise trajectory source.
    :type planner: LayerwisePlanner
    :param reference: Reference prior.
    :type reference: Trajectory
    :param policy: A ``multihop`` policy.
    :type policy: ExitPolicy
    :raises PolicyError: On a policy of another kind or a start layer beyond ``L``.
    :raises DecodeError: If the planner fails; carries the layer index.
    :return: Exit decision record.
    :rtype: ExitOutcome

    Example (score ``20 - l``, delta 1, start 13)::

        checked_layers == (13, 17, 19, 20), exit_layer == 20
    """
    _require(policy, PolicyKind.multihop, planner)
    return _walk(planner, reference, policy, hop=True)


def run_full_scan(planner: LayerwisePlanner, reference: Trajectory, policy: ExitPolicy) -> ExitOutcome:
    """
    Check every layer from ``policy.start_layer`` to ``L`` in order.

    Brute-force baseline and oracle for the multi-hop controller.

    :raises PolicyError: On a policy of another kind or a start layer beyond ``L``.
    :raises DecodeError: If the planner fails; carries the layer index.
    :rtype: ExitOutcome
    """
    _require(policy, PolicyKind.fullscan, planner)
    return _walk(planner, reference, policy, hop=False)


def run_fixed_depth(planner: LayerwisePlanner, reference: Trajectory, policy: ExitPolicy) -> ExitOutcome:
    """
    Exit unconditionally at ``policy.fixed_depth``.

    Decodes exactly once; the score is computed for reporting only.

    :raises PolicyError: On a policy of another kind or a depth beyond ``L``.
    :raises DecodeError: If the planner fails; carries the layer index.
    :rtype: ExitOutcome
    """
    _require(policy, PolicyKind.fixed, planner)
    layer = policy.fixed_depth
    traj = _decode(planner, layer)
    score = policy_score(traj, reference, policy.metric)
    return ExitOutcome(
        exit_layer=layer,
        checked_layers=(layer,),
        scores=(score.value,),
        exit_score=score,
        adopted=traj,
        exited_early=layer < planner.total_layers,
        total_layers=planner.total_layers,
    )


def run_no_exit(planner: LayerwisePlanner, reference: Trajectory, policy: ExitPolicy) -> ExitOutcome:
    """Vanilla inference: adopt the final layer, no exit checks."""
    _require(policy, PolicyKind.noexit, planner)
    L = planner.total_layers
    traj = _decode(planner, L)
    return ExitOutcome(
        exit_layer=L,
        checked_layers=(),
        exit_score=policy_score(traj, reference, policy.metric),
        adopted=traj,
        exited_early=False,
        total_layers=L,
    )


RUNNERS = {
    PolicyKind.multihop: run_multi_hop,
    PolicyKind.fullscan: run_full_scan,
    PolicyKind.fixed: run_fixed_depth,
    PolicyKind.noexit: run_no_exit,
}


def run_policy(planner: LayerwisePlanner, reference: Trajectory, policy: ExitPolicy) -> ExitOutcome:
    """Dispatch to the runner matching ``policy.kind``."""
    return RUNNERS[policy.kind](planner, reference, policy)
