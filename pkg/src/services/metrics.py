import numpy as np

from src.core.exceptions import ShapeMismatchError
from src.models.policies import MetricKind
from src.schemas import DissimilarityScore, ExitMetric, Tolerance, Trajectory


def _check_shapes(pred: Trajectory, reference: Trajectory) -> None:
    if len(pred) != len(reference):
        raise ShapeMismatchError(len(pred), len(reference))
    if pred.dt != reference.dt:
        raise ShapeMismatchError(pred.dt, reference.dt, what="dt")


def pointwise_distances(pred: Trajectory, reference: Trajectory) -> np.ndarray:
    """
    Euclidean distance between matching points of two trajectories.

    :raises ShapeMismatchError: If lengths or ``dt`` differ.
    :return: Array of ``T`` distances in meters.
    :rtype: numpy.ndarray
    """
    _check_shapes(pred, reference)
    return np.linalg.norm(pred.xy - reference.xy, axis=1)


def l2_dissimilarity(pred: Trajectory, reference: Trajectory) -> DissimilarityScore:
    """
    Mean point-wise L2 distance between a prediction and a reference.

    ``(1/T) * sum_t ||pred_t - ref_t||``; symmetric and deterministic.
    Trajectories are compared index by index (matching timestamps), never
    resampled.

    :param pred: Predicted trajectory.
    :type pred: Trajectory
    :param reference: Reference prior.
    :type reference: Trajectory
    :raises ShapeMismatchError: If lengths or ``dt`` differ.
    :return: Mean distance.
    :rtype: DissimilarityScore

    Example::

        >>> ref = Trajectory.from_points([(0, 0), (0, 0)], dt=0.5)
        >>> pred = Trajectory.from_points([(1, 0), (3, 0)], dt=0.5)
        >>> l2_dissimilarity(pred, ref).value
        2.0
    """
    return DissimilarityScore(value=float(np.mean(pointwise_distances(pred, reference))))


def displacement_at(pred: Trajectory, reference: Trajectory, horizon_s: float) -> float:
    """
    L2 displacement at one horizon (``L2@t``).

    Reads index ``t = round(horizon_s / dt)`` (1-based).

    :param pred: Predicted trajectory.
    :type pred: Trajectory
    :param reference: Reference trajectory.
    :type reference: Trajectory
    :param horizon_s: Horizon time in seconds.
    :type horizon_s: float
    :raises ShapeMismatchError: If lengths or ``dt`` differ.
    :raises HorizonError: If the horizon falls outside ``[dt, T*dt]``.
    :return: Distance in meters.
    :rtype: float
    """
    _check_shapes(pred, reference)
    t = reference.horizon_index(horizon_s)
    return float(np.linalg.norm(pred.xy[t - 1] - reference.xy[t - 1]))


def policy_score(pred: Trajectory, reference: Trajectory, metric: ExitMetric) -> DissimilarityScore:
    """
    Score a prediction with the metric selected by an exit policy.

    :param metric: ``mean_l2`` or ``l2_at`` with a horizon.
    :type metric: ExitMetric
    :return: Score in meters.
    :rtype: DissimilarityScore
    """
    if metric.kind is MetricKind.mean_l2:
        return l2_dissimilarity(pred, reference)
    return DissimilarityScore(value=displacement_at(pred, reference, metric.horizon_s))


def is_admissible(score: DissimilarityScore, tol: Tolerance) -> bool:
    """
    Exit predicate: accept a trajectory when its score is strictly below ``delta``.

    A score equal to ``delta`` does not exit.

    :param score: Dissimilarity at the checked layer.
    :type score: DissimilarityScore
    :param tol: Tolerance threshold.
    :type tol: Tolerance
    :return: ``True`` iff ``score.value < tol.delta``.
    :rtype: bool
    """
    return score.value < tol.delta
