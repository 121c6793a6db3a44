import logging
from collections import Counter
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, Field

# Internal imports
from app.channel import TsOokParams
from app.geometry import Point
from app.utils import DomainError, FRAMES_TOO_LONG, NEGATIVE_AMOUNT, ProtocolError


class NodeRole(Enum):
    ASLEEP = "asleep"
    LOCALIZE = "localize"
    VIRTUAL_ANCHOR = "virtual_anchor"
    RELAY = "relay"
    APPLICATION = "application"


class WakeFrame(NamedTuple):
    """
    What a node's WuR observed during one frame of a wake-up sequence.

    `hit` is the conjunction of the frame's beams at the node; `tone` is the
    role bit carried by the 250 Hz modulation of the ultrasound carrier.
    """
    hit: bool
    tone: int = 1


# Two frames, one role bit each.
DEFAULT_CODEBOOK: dict[tuple[int, ...], NodeRole] = {
    (1, 1): NodeRole.LOCALIZE,
    (1, 0): NodeRole.VIRTUAL_ANCHOR,
    (0, 1): NodeRole.RELAY,
    (0, 0): NodeRole.APPLICATION,
}


@dataclass(frozen=True)
class EnergyState:
    stored: float  # pJ
    capacity: float
    turn_on_threshold: float
    awake: bool = False
    role: NodeRole = NodeRole.ASLEEP


@dataclass(frozen=True)
class Depleted:
    """
    Result of a consume that asked for more than was stored.
    """
    state: EnergyState
    shortfall: float


@dataclass(frozen=True)
class HarvestProfile:
    base_rate: float  # pW
    hotspot_center: Point
    hotspot_gain: float = 1.0
    hotspot_radius: float = 0.0

    def __post_init__(self) -> None:
        if self.base_rate < 0 or self.hotspot_gain < 1 or self.hotspot_radius < 0:
            raise DomainError(
                f"invalid harvest profile: base_rate={self.base_rate}, gain={self.hotspot_gain}, radius={self.hotspot_radius}"
            )


class EnergyParams(BaseModel):
    """
    Energy configuration block. No absolute values come from measurements;
    defaults sit in the idling-dominated regime.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    capacity_pj: float = Field(default=1000.0, gt=0)
    turn_on_threshold_pj: float = Field(default=100.0, ge=0)
    base_rate_pw: float = Field(default=1.0, ge=0)
    hotspot_x_mm: float = -60.0
    hotspot_y_mm: float = 50.0
    hotspot_gain: float = Field(default=10.0, ge=1)
    hotspot_radius_mm: float = Field(default=60.0, ge=0)
    harvest_time_s: float = Field(default=60.0, ge=0)
    packets_per_second: float = Field(default=1.0, ge=0)
    bits_per_packet: int = Field(default=8, ge=0)
    ones_fraction: float = Field(default=0.5, ge=0, le=1)

    def profile(self) -> HarvestProfile:
        return HarvestProfile(
            base_rate=self.base_rate_pw,
            hotspot_center=Point(self.hotspot_x_mm, self.hotspot_y_mm),
            hotspot_gain=self.hotspot_gain,
            hotspot_radius=self.hotspot_radius_mm,
        )

    def empty_state(self) -> EnergyState:
        return EnergyState(0.0, self.capacity_pj, self.turn_on_threshold_pj)


def harvest_rate(profile: HarvestProfile, location: Point) -> float:
    if location.distance_to(profile.hotspot_center) <= profile.hotspot_radius:
        return profile.base_rate * profile.hotspot_gain
    return profile.base_rate


def harvest(state: EnergyState, profile: HarvestProfile, location: Point, dt: float) -> EnergyState:
    """
    Accumulate harvested energy for dt seconds, saturating at capacity.
    """
    if dt < 0:
        raise DomainError(f"dt must be non-negative, got {dt}")
    if dt == 0:
        return state
    stored = min(state.capacity, state.stored + harvest_rate(profile, location) * dt)
    return replace(state, stored=stored)


def consume(state: EnergyState, amount: float) -> EnergyState | Depleted:
    """
    Spend `amount` pJ. Overdrawing empties the store and forces the node to sleep.
    """
    if amount < 0:
        raise DomainError(f"{NEGATIVE_AMOUNT}: {amount}")
    if state.stored >= amount:
        return replace(state, stored=state.stored - amount)

    logging.debug(f"Node depleted: needed {amount} pJ, had {state.stored} pJ")
    return Depleted(
        replace(state, stored=0.0, awake=False, role=NodeRole.ASLEEP),
        shortfall=amount - state.stored,
    )


def idle_fraction(
    params: TsOokParams,
    packets_per_second: float,
    bits_per_packet: int,
    ones_fraction: float,
) -> float:
    """
    Share of one second's energy spent idling rather than on pulses.
    """
    if packets_per_second < 0 or bits_per_packet < 0 or not (0.0 <= ones_fraction <= 1.0):
        raise DomainError(
            f"rates must be non-negative: pps={packets_per_second}, bits={bits_per_packet}, ones={ones_fraction}"
        )
    pulse_energy = packets_per_second * bits_per_packet * ones_fraction * params.e_tx_pulse
    idle_energy = params.p_idle * 1.0
    total = pulse_energy + idle_energy
    return 0.0 if total == 0 else idle_energy / total


def decode_wakeup(frames: Sequence[WakeFrame], codebook: Mapping[tuple[int, ...], NodeRole] = DEFAULT_CODEBOOK) -> NodeRole:
    """
    Map a received wake-up sequence to a role.

    Every frame must have reached the node; one miss (or a truncated
    sequence) leaves it asleep.

    Raises:
        ProtocolError: more frames than the codebook's pattern length.
    """
    pattern_length = len(next(iter(codebook)))
    if len(frames) > pattern_length:
        raise ProtocolError(f"{FRAMES_TOO_LONG}: {len(frames)} > {pattern_length}")
    if len(frames) < pattern_length or not all(frame.hit for frame in frames):
        return NodeRole.ASLEEP
    return codebook.get(tuple(frame.tone for frame in frames), NodeRole.ASLEEP)


def try_wake(
    state: EnergyState,
    frames: Sequence[WakeFrame],
    codebook: Mapping[tuple[int, ...], NodeRole] = DEFAULT_CODEBOOK,
) -> EnergyState:
    """
    Apply a wake-up sequence, but only a node above its turn-on threshold can wake.
    """
    if state.stored < state.turn_on_threshold:
        logging.debug(f"Node below turn-on threshold ({state.stored} < {state.turn_on_threshold}), stays asleep")
        return replace(state, awake=False, role=NodeRole.ASLEEP)

    role = decode_wakeup(frames, codebook)
    return replace(state, awake=role is not NodeRole.ASLEEP, role=role)


def estimate_energy_from_activity(
    activity_log: Sequence[tuple[float, Point]],
    cell_size: float,
    now: float,
    window: float,
) -> dict[tuple[int, int], float]:
    """
    Network-controller estimate of relative energy per grid cell.

    Cells whose nodes were rarely woken during the last `window` seconds are
    assumed to have had time to recharge. Each active cell maps to
    1 - activity / busiest, so the busiest cell is 0.0; cells absent from the
    map saw no activity and should be read as 1.0.
    """
    if cell_size <= 0 or window < 0:
        raise DomainError(f"cell_size must be positive and window non-negative: {cell_size}, {window}")

    counts: Counter[tuple[int, int]] = Counter(
        (int(p.x // cell_size), int(p.y // cell_size))
        for t, p in activity_log
        if now - window <= t <= now
    )
    if not counts:
        return {}
    busiest = max(counts.values())
    return {cell: 1.0 - count / busiest for cell, count in sorted(counts.items())}
