import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.conf.config import settings
from src.core.exceptions import EmptyDatasetError, HeterogeneousDatasetError, HorizonError
from src.models.policies import PolicyKind
from src.repository.traces import dataset_digest, list_dataset, load_trace
from src.schemas import (
    MAX_SEED,
    ColumnSummary,
    CostModel,
    ExitMetric,
    ExitOutcome,
    ExitPolicy,
    OracleSummary,
    Report,
    ScenarioRow,
    ScenarioTrace,
    Trajectory,
)
from src.services.controller import run_policy
from src.services.cost_model import baseline_latency, default_cost_model, latency, sparsity, speedup_pct
from src.services.metrics import displacement_at
from src.services.planners import TracePlanner, generate_lipschitz_scenario


logger = logging.getLogger(__name__)

#: Report columns summarized by mean / p50 / p95.
SUMMARY_COLUMNS = ("exit_layer", "checks", "exit_score", "latency_ms", "sparsity_pct")


def horizon_label(horizon_s: float) -> str:
    return f"{horizon_s:g}s"


def l2_at_horizons(adopted: Trajectory, reference: Trajectory, horizons: Sequence[float]) -> Dict[str, float]:
    """
    Displacement of the adopted trajectory at each horizon, plus their average.

    Horizons beyond the trajectory span are omitted; ``"avg"`` is present
    only when at least one horizon fits.
    """
    values: Dict[str, float] = {}
    for h in horizons:
        try:
            values[horizon_label(h)] = displacement_at(adopted, reference, h)
        except HorizonError:
            continue
    if values:
        values["avg"] = float(np.mean(list(values.values())))
    return values


def evaluate_scenario(
    trace: ScenarioTrace,
    policy: ExitPolicy,
    model: CostModel,
    horizons: Sequence[float],
) -> Tuple[ScenarioRow, ExitOutcome]:
    """Run one policy on one trace and turn the outcome into a report row."""
    planner = TracePlanner(trace)
    outcome = run_policy(planner, trace.reference, policy)
    row = ScenarioRow(
        scenario_id=trace.scenario_id,
        exit_layer=outcome.exit_layer,
        checks=outcome.checks,
        exit_score=outcome.exit_score.value,
        latency_ms=latency(outcome, model),
        sparsity_pct=sparsity(outcome),
        exited_early=outcome.exited_early,
        l2_at=l2_at_horizons(outcome.adopted, trace.reference, horizons),
    )
    return row, outcome


def _summaries(rows: List[ScenarioRow]) -> Dict[str, ColumnSummary]:
    df = pd.DataFrame([row.model_dump(exclude={"l2_at", "scenario_id", "exited_early"}) for row in rows])
    l2 = pd.DataFrame([row.l2_at for row in rows]).add_prefix("l2_")
    df = pd.concat([df, l2], axis=1)

    summary = {}
    for column in [*SUMMARY_COLUMNS, *l2.columns]:
        values = df[column].dropna()
        if values.empty:
            continue
        summary[column] = ColumnSummary(
            mean=float(values.mean()),
            p50=float(values.median()),
            p95=float(values.quantile(0.95)),
        )
    return summary


def check_homogeneous(traces: Sequence[ScenarioTrace]) -> int:
    """
    Shared ``total_layers`` of a dataset.

    :raises EmptyDatasetError: If ``traces`` is empty.
    :raises HeterogeneousDatasetError: If the traces disagree on depth.
    """
    if not traces:
        raise EmptyDatasetError()
    depths = sorted({trace.total_layers for trace in traces})
    if len(depths) > 1:
        first = next(t for t in traces if t.total_layers != traces[0].total_layers)
        raise HeterogeneousDatasetError(
            f"traces disagree on total_layers: {traces[0].scenario_id} has {traces[0].total_layers}, "
            f"{first.scenario_id} has {first.total_layers}",
            depths=depths,
        )
    return depths[0]


def evaluate_traces(
    traces: Sequence[ScenarioTrace],
    policy: ExitPolicy,
    model: Optional[CostModel] = None,
    horizons: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    digest: str = "",
) -> Report:
    """
    Evaluate a policy over in-memory traces.

    Scenarios are independent; with ``workers > 1`` they run on a thread
    pool whose ``map`` keeps dataset order, so the report is identical to a
    sequential run.

    :param traces: Dataset in evaluation order.
    :type traces: Sequence[ScenarioTrace]
    :param policy: Exit policy, validated against the shared depth.
    :type policy: ExitPolicy
    :param model: Cost model; defaults to :func:`default_cost_model`.
    :type model: CostModel | None
    :param horizons: Report horizons in seconds; defaults to settings.
    :type horizons: Sequence[float] | None
    :param workers: Thread count; defaults to ``settings.WORKERS``.
    :type workers: int | None
    :param digest: Dataset digest echoed into the report.
    :type digest: str
    :raises EmptyDatasetError: On an empty dataset.
    :raises HeterogeneousDatasetError: If depths differ.
    :raises PolicyError: If the policy does not fit the depth.
    :return: Report with per-scenario rows, aggregates and exit histogram.
    :rtype: Report
    """
    total_layers = check_homogeneous(traces)
    policy.validate_for(total_layers)
    model = model or default_cost_model()
    horizons = list(settings.REPORT_HORIZONS_S if horizons is None else horizons)
    workers = workers or settings.WORKERS

    def run(trace: ScenarioTrace) -> ScenarioRow:
        return evaluate_scenario(trace, policy, model, horizons)[0]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, traces))
    else:
        rows = [run(trace) for trace in traces]

    counts = pd.Series([row.exit_layer for row in rows]).value_counts().sort_index()
    histogram = {int(layer): int(count) for layer, count in counts.items()}
    exited = 100.0 * sum(row.exited_early for row in rows) / len(rows)

    logger.info(f"Evaluated {len(rows)} scenarios with {policy.display_name}")
    return Report(
        policy=policy,
        cost_model=model,
        dataset_digest=digest,
        scenario_count=len(rows),
        total_layers=total_layers,
        baseline_latency_ms=baseline_latency(model, total_layers),
        exited_early_pct=exited,
        per_scenario=rows,
        aggregate=_summaries(rows),
        exit_histogram=histogram,
    )


def load_dataset(directory: Path, suffix: Optional[str] = None) -> Tuple[List[ScenarioTrace], str]:
    """Load every trace of a directory in lexicographic order, plus the dataset digest."""
    paths = list_dataset(directory, suffix)
    traces = [load_trace(path) for path in paths]
    logger.info(f"Loaded {len(traces)} traces from {directory}")
    return traces, dataset_digest(paths)


def evaluate_dataset(
    directory: Path,
    policy: ExitPolicy,
    model: Optional[CostModel] = None,
    horizons: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> Report:
    """
    Evaluate a policy over a trace directory.

    :raises EmptyDatasetError: If the directory holds no trace.
    :raises TraceFormatError: On the first malformed file (names it).
    :rtype: Report

    Example::

        report = evaluate_dataset(Path("dataset"), ExitPolicy(delta=1.0))
        report.exit_histogram   # {13: 40, 14: 31, ...}
    """
    traces, digest = load_dataset(directory)
    return evaluate_traces(traces, policy, model, horizons, workers, digest)


def compare_policies(
    directory: Path,
    policies: Sequence[ExitPolicy],
    model: Optional[CostModel] = None,
    horizons: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
) -> List[Report]:
    """One report per policy over the same dataset, loaded once."""
    traces, digest = load_dataset(directory)
    return [evaluate_traces(traces, policy, model, horizons, workers, digest) for policy in policies]


# -------- ABLATION ----------
def standard_ablation(
    delta: float = 1.0,
    fixed_depth: int = 24,
    start_layer: int = 13,
    metric: Optional[ExitMetric] = None,
) -> List[ExitPolicy]:
    """
    The full method and its five ablations.

    - ``full``: multi-hop with ``delta`` from ``start_layer``
    - ``B1``: fixed depth
    - ``B2``: full scan from layer 1
    - ``B3``: full scan from ``start_layer``
    - ``B4``: multi-hop with ``2 * delta``
    - ``B5``: multi-hop with ``delta / 2``
    """
    metric = metric or ExitMetric()
    return [
        ExitPolicy(kind=PolicyKind.multihop, delta=delta, start_layer=start_layer, metric=metric, label="full"),
        ExitPolicy(kind=PolicyKind.fixed, fixed_depth=fixed_depth, metric=metric, label=f"B1 fixed L{fixed_depth}"),
        ExitPolicy(kind=PolicyKind.fullscan, delta=delta, start_layer=1, metric=metric, label="B2 full scan L1"),
        ExitPolicy(
            kind=PolicyKind.fullscan,
            delta=delta,
            start_layer=start_layer,
            metric=metric,
            label=f"B3 full scan L{start_layer}",
        ),
        ExitPolicy(
            kind=PolicyKind.multihop,
            delta=2 * delta,
            start_layer=start_layer,
            metric=metric,
            label=f"B4 delta={2 * delta:g}",
        ),
        ExitPolicy(
            kind=PolicyKind.multihop,
            delta=delta / 2,
            start_layer=start_layer,
            metric=metric,
            label=f"B5 delta={delta / 2:g}",
        ),
    ]


def ablation_table(reports: Sequence[Report]) -> pd.DataFrame:
    """
    One row per report: mean exit layer, checks, latency, sparsity, speedup
    and the average L2 of the adopted trajectories.
    """
    records = []
    for report in reports:
        agg = report.aggregate
        latency_ms = agg["latency_ms"].mean
        records.append(
            {
                "policy": report.policy.display_name,
                "exit_layer": agg["exit_layer"].mean,
                "checks": agg["checks"].mean,
                "latency_ms": latency_ms,
                "speedup_pct": speedup_pct(latency_ms, report.baseline_latency_ms),
                "sparsity_pct": agg["sparsity_pct"].mean,
                "exited_early_pct": report.exited_early_pct,
                "l2_avg": agg["l2_avg"].mean if "l2_avg" in agg else float("nan"),
            }
        )
    return pd.DataFrame.from_records(records)


# -------- ORACLE ----------
def oracle_check(
    n: int,
    delta: float,
    seed: int,
    total_layers: int = 32,
    start_layer: int = 13,
    metric: Optional[ExitMetric] = None,
) -> OracleSummary:
    """
    Compare multi-hop against full scan on ``n`` bounded-decrease traces.

    Trace ``i`` uses seed ``(seed + i) mod 2**64``. On every such trace the
    two controllers must exit at the same layer, and multi-hop must not use
    more checks.

    :param n: Number of traces (>= 1).
    :type n: int
    :param delta: Tolerance and per-layer decrease bound.
    :type delta: float
    :param seed: First seed.
    :type seed: int
    :raises ValueError: If ``n`` < 1.
    :return: Agreement counts and the first disagreeing seed.
    :rtype: OracleSummary
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    metric = metric or ExitMetric()
    multi = ExitPolicy(kind=PolicyKind.multihop, delta=delta, start_layer=start_layer, metric=metric)
    full = ExitPolicy(kind=PolicyKind.fullscan, delta=delta, start_layer=start_layer, metric=metric)

    agree = dominate = 0
    first: Optional[int] = None
    for i in range(n):
        s = (seed + i) & MAX_SEED
        trace = generate_lipschitz_scenario(s, delta, total_layers=total_layers)
        a = run_policy(TracePlanner(trace), trace.reference, multi)
        b = run_policy(TracePlanner(trace), trace.reference, full)
        agree += a.exit_layer == b.exit_layer
        dominate += a.checks <= b.checks
        if first is None and (a.exit_layer != b.exit_layer or a.checks > b.checks):
            first = s
            logger.warning(f"seed {s}: multi-hop exits at L{a.exit_layer}, full scan at L{b.exit_layer}")

    return OracleSummary(n=n, agree=agree, dominate=dominate, first_disagreement=first)
