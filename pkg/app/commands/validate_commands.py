import argparse
import logging

# Internal imports
from app.channel import comm_range, ranging_resolution
from app.config import load_config
from app.energy import idle_fraction
from app.mac import collision_probability
from app.utils import EXIT_OK


async def handle_validate_commands(command: str, args: argparse.Namespace) -> int:
    """
    Handles the validate command.

    Invalid configs raise ConfigValidationError, which main turns into exit 1.
    Valid ones get their derived quantities printed.
    """
    config = load_config(args.config)
    logging.info(f"Config {args.config} is valid")

    energy = config.energy
    derived = {
        "mode": config.mode,
        "node_count": config.region.node_count(config.density_per_cm3),
        "comm_range_mm": config.comm_range_mm,
        "channel_comm_range_mm": round(comm_range(config.channel), 6),
        "ranging_resolution_mm": ranging_resolution(config.ranging_bandwidth_hz),
        "tsook_beta_s": config.tsook.beta,
        "idle_fraction": round(
            idle_fraction(config.tsook, energy.packets_per_second, energy.bits_per_packet, energy.ones_fraction), 6
        ),
        "backoff_collision_probability_3": round(collision_probability(3, config.backoff.window_slots), 6),
    }
    print(f"{args.config}: OK")
    for name, value in derived.items():
        print(f"  {name} = {value}")
    return EXIT_OK
