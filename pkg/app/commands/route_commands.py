import argparse
import logging
import math

import numpy as np

# Internal imports
from app.channel import tsook_packet_cost
from app.config import ScenarioConfig, load_config
from app.energy import (
    DEFAULT_CODEBOOK,
    Depleted,
    EnergyState,
    NodeRole,
    WakeFrame,
    consume,
    harvest,
    try_wake,
)
from app.geometry import Point, awoken_by, boundary_anchors
from app.harness import trial_seed
from app.localization import LocalizationState, localize_all
from app.routing import WakePlan, anchor_id, anchor_index, build_wake_graph, plan_wakeup, route_cost, select_route
from app.utils import EXIT_OK, EXIT_VALIDATION_ERROR, AmbiguousWakeError, NoRouteError

ROLE_TONES: dict[NodeRole, tuple[int, ...]] = {role: tones for tones, role in DEFAULT_CODEBOOK.items()}


async def handle_route_commands(command: str, args: argparse.Namespace) -> int:
    """
    Handles the route command: localize one trial, then pick and wake a path
    from --node to the SDM.

    Args:
        command (str): The command to handle.
        args (argparse.Namespace): Parsed CLI arguments.
    """
    config = load_config(args.config, seed=args.seed)
    rng = np.random.default_rng(trial_seed(config.seed, args.trial))
    state = LocalizationState.from_config(config, rng)
    localize_all(state, rng, config.max_iterations)

    estimates = state.snapshot_estimates()
    if args.node not in estimates:
        logging.error(f"Node {args.node} was not localized in trial {args.trial}")
        return EXIT_VALIDATION_ERROR

    if args.anchor is not None and not 0 <= args.anchor < config.anchor_count:
        logging.error(f"Anchor {args.anchor} does not exist, there are {config.anchor_count}")
        return EXIT_VALIDATION_ERROR

    energies = _harvested_energies(config, state, estimates)
    anchors = boundary_anchors(config.region, config.anchor_count)
    graph = build_wake_graph(estimates, anchors, config.channel, config.routing, {v: e.stored for v, e in energies.items()})

    target = estimates[args.node].position
    dst = anchor_id(args.anchor) if args.anchor is not None else _nearest_anchor(target, anchors)

    try:
        hops = select_route(graph, args.node, dst)
        routing = config.routing
        plan = plan_wakeup(
            hops,
            estimates,
            config.region,
            math.radians(routing.beam_half_width_deg),
            min_half_width=math.radians(routing.min_beam_half_width_deg),
            min_subtended=math.radians(routing.min_subtended_deg),
        )
    except (NoRouteError, AmbiguousWakeError) as e:
        logging.error(str(e))
        return EXIT_VALIDATION_ERROR

    print(f"route {args.node} -> anchor {anchor_index(dst)}: {len(hops) - 1} hops, cost {route_cost(graph, hops):.3f} dB")
    _report_wakeups(config, state, plan, energies)
    return EXIT_OK


def _nearest_anchor(target: Point, anchors: tuple[Point, ...]) -> int:
    return anchor_id(min(range(len(anchors)), key=lambda i: target.distance_to(anchors[i])))


def _harvested_energies(config: ScenarioConfig, state: LocalizationState, estimates: dict) -> dict[int, EnergyState]:
    """
    Every localized node starts empty and harvests at its true location.
    """
    profile = config.energy.profile()
    empty = config.energy.empty_state()
    return {
        v: harvest(empty, profile, state.node_set.position_of(v), config.energy.harvest_time_s)
        for v in estimates
    }


def _report_wakeups(config: ScenarioConfig, state: LocalizationState, plan: WakePlan, energies: dict[int, EnergyState]) -> None:
    """
    Replay each hop's beams against the node's *true* position, decode its
    role and charge it for one relayed packet.
    """
    bits = config.energy.bits_per_packet
    ones = round(bits * config.energy.ones_fraction)
    _, packet_energy = tsook_packet_cost(bits, ones, config.tsook)

    for position, (hop, beams) in enumerate(zip(plan.hops, plan.beam_sequences)):
        if hop < 0:
            print(f"  hop {position}: anchor {anchor_index(hop)} (SDM, always on)")
            continue

        role = NodeRole.APPLICATION if position == 0 else NodeRole.RELAY
        truth = state.node_set.position_of(hop)
        frames = [WakeFrame(awoken_by(truth, beams), tone) for tone in ROLE_TONES[role]]
        woken = try_wake(energies[hop], frames)

        outcome = "asleep"
        if woken.awake:
            spent = consume(woken, packet_energy)
            outcome = "depleted" if isinstance(spent, Depleted) else f"{spent.stored:.1f} pJ left"
        half_width = math.degrees(beams[0].half_width)
        print(f"  hop {position}: node {hop} role={woken.role.value} beams={len(beams)}x{half_width:.2f}deg {outcome}")
