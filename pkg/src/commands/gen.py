import argparse
import logging
import re
from pathlib import Path
from typing import List

from src.conf.config import settings
from src.core.error_handlers import EXIT_OK
from src.repository.traces import load_controls, save_dataset
from src.schemas import MAX_SEED, ScenarioTrace, SyntheticProfile, VehicleState
from src.services.planners import (
    EARLY_EXIT_DISTRIBUTION,
    generate_lipschitz_scenario,
    generate_population,
    generate_scenario,
    scenario_from_controls,
)


logger = logging.getLogger(__name__)


def register(subparsers: argparse._SubParsersAction) -> argparse.ArgumentParser:
    parser = subparsers.add_parser("gen", help="synthesize a trace dataset")
    parser.add_argument("--out", type=Path, required=True, help="dataset directory")
    parser.add_argument("--seed", type=int, default=0, help="first seed; scenario i uses seed + i")
    parser.add_argument("--count", type=int, default=1, help="number of scenarios")
    parser.add_argument("--layers", type=int, default=settings.TOTAL_LAYERS)
    parser.add_argument("--horizon", type=int, default=settings.HORIZON_T, help="points per trajectory")
    parser.add_argument("--dt", type=float, default=settings.DT_S)

    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--lipschitz", type=float, metavar="DELTA", help="bounded-decrease traces under DELTA")
    mode.add_argument(
        "--population",
        type=float,
        metavar="DELTA",
        help="traces whose earliest exit under DELTA follows the 640-case distribution",
    )
    mode.add_argument("--from-controls", type=Path, metavar="FILE", help="controls JSON for one bicycle scenario")

    kinematic = parser.add_argument_group("controls mode")
    kinematic.add_argument(
        "--wheelbase", type=float, default=settings.WHEELBASE_M, help="axle distance of the bicycle model (m)"
    )

    profile = parser.add_argument_group("profile (default mode)")
    profile.add_argument("--base-scale", type=float, default=20.0)
    profile.add_argument("--decay-rate", type=float, default=0.15)
    profile.add_argument("--floor", type=float, default=0.0)
    profile.add_argument("--noise-sd", type=float, default=0.0)
    profile.add_argument("--divergence-layer", type=int, default=None)
    profile.add_argument("--divergence-slope", type=float, default=0.0)
    profile.add_argument("--ref-speed", type=float, default=settings.REF_SPEED_MPS)
    parser.set_defaults(handler=handle)
    return parser


def build_traces(args: argparse.Namespace) -> List[ScenarioTrace]:
    """Traces selected by the generator mode flags, in scenario order."""
    seeds = [(args.seed + i) & MAX_SEED for i in range(args.count)]
    shape = dict(total_layers=args.layers, horizon_T=args.horizon, dt=args.dt)

    if args.lipschitz is not None:
        return [generate_lipschitz_scenario(s, args.lipschitz, **shape) for s in seeds]
    if args.population is not None:
        return generate_population(EARLY_EXIT_DISTRIBUTION, args.count, args.seed & MAX_SEED, args.population, **shape)
    if args.from_controls is not None:
        controls = load_controls(args.from_controls)
        scenario_id = "controls-" + re.sub(r"[^A-Za-z0-9._-]+", "-", args.from_controls.stem)
        initial = VehicleState(wheelbase=args.wheelbase)
        return [scenario_from_controls(scenario_id, controls, args.dt, total_layers=args.layers, initial=initial)]

    return [
        generate_scenario(
            SyntheticProfile(
                base_scale=args.base_scale,
                decay_rate=args.decay_rate,
                floor=args.floor,
                noise_sd=args.noise_sd,
                divergence_layer=args.divergence_layer,
                divergence_slope=args.divergence_slope,
                seed=s,
                ref_speed=args.ref_speed,
            ),
            **shape,
        )
        for s in seeds
    ]


def handle(args: argparse.Namespace) -> int:
    """
    Write the generated traces to ``--out``, one file per scenario.

    Example::

        action-exit gen --population 2.0 --count 640 --seed 7 --out dataset
    """
    if args.count < 1:
        raise ValueError(f"--count must be >= 1, got {args.count}")
    paths = save_dataset(build_traces(args), args.out)
    logger.info(f"Generated {len(paths)} traces in {args.out}")
    print(f"wrote {len(paths)} traces to {args.out}")
    return EXIT_OK
