import logging
from collections.abc import Sequence
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

# Internal imports
from app.channel import SPEED_OF_LIGHT_MM_S, TISSUE_REFRACTIVE_FACTOR
from app.geometry import Point, Region
from app.utils import DomainError, MALFORMED_ANNULUS


class ResponseEvent(NamedTuple):
    node_id: int
    backoff_slot: int
    arrival_time: float  # seconds


class BackoffConfig(BaseModel):
    """
    Random back-off window embedded inside one TS-OOK pulse interval.
    """
    model_config = ConfigDict(frozen=True, extra="forbid")

    window_slots: int = Field(default=10, ge=1)
    slot_duration: float = Field(default=1e-11, gt=0)
    guard_time: float = Field(default=1e-12, gt=0)
    pulse_interval: float = Field(default=1e-10, gt=0)  # beta
    propagation_speed: float = Field(default=SPEED_OF_LIGHT_MM_S / TISSUE_REFRACTIVE_FACTOR, gt=0)  # mm/s

    @model_validator(mode="after")
    def _fits_in_pulse_interval(self) -> "BackoffConfig":
        if self.guard_time > self.slot_duration:
            raise ValueError("slot_duration must be at least guard_time")
        # Relative slack so 10 * 1e-11 still fits in 1e-10.
        if self.window_slots * self.slot_duration > self.pulse_interval * (1.0 + 1e-9):
            raise ValueError("window_slots * slot_duration must fit within the pulse interval")
        return self


def draw_backoffs(
    node_ids: Sequence[int],
    config: BackoffConfig,
    distances: Sequence[float],
    rng: np.random.Generator,
) -> list[ResponseEvent]:
    """
    Each responder picks a uniform slot; arrival = round trip + slot offset.

    Args:
        node_ids (Sequence[int]): Responding nodes.
        config (BackoffConfig): Window and timing.
        distances (Sequence[float]): Responder-to-anchor distances in mm, one per node.
        rng (np.random.Generator): Random source.
    """
    if len(node_ids) != len(distances):
        raise DomainError(f"need one distance per node, got {len(distances)} for {len(node_ids)} nodes")

    slots = rng.integers(0, config.window_slots, size=len(node_ids))
    events = [
        ResponseEvent(
            int(node_id),
            int(slot),
            2.0 * float(d) / config.propagation_speed + int(slot) * config.slot_duration,
        )
        for node_id, slot, d in zip(node_ids, slots, distances)
    ]
    logging.debug(f"Drew back-offs {[e.backoff_slot for e in events]} for nodes {list(node_ids)}")
    return events


def resolve(events: Sequence[ResponseEvent], config: BackoffConfig) -> tuple[list[int], list[int]]:
    """
    Split responses into those separable by at least the guard time and those that collide.

    After sorting by arrival, the nearest other event is always an adjacent one.
    """
    ordered = sorted(events, key=lambda e: (e.arrival_time, e.node_id))
    distinguishable: list[int] = []
    collided: list[int] = []

    for i, event in enumerate(ordered):
        clear_before = i == 0 or event.arrival_time - ordered[i - 1].arrival_time >= config.guard_time
        clear_after = i == len(ordered) - 1 or ordered[i + 1].arrival_time - event.arrival_time >= config.guard_time
        if clear_before and clear_after:
            distinguishable.append(event.node_id)
        else:
            collided.append(event.node_id)

    logging.debug(f"Resolved {len(distinguishable)} distinguishable, {len(collided)} collided responses")
    return distinguishable, collided


def distinguishable_count(events: Sequence[ResponseEvent], config: BackoffConfig) -> int:
    return len(resolve(events, config)[0])


def collision_probability_exact(n: int, window: int) -> Fraction:
    """
    Probability that at least two of n responders share a slot out of `window`.
    """
    if n < 0 or window < 1:
        raise DomainError(f"need n >= 0 and window >= 1, got n={n}, window={window}")
    if n > window:
        return Fraction(1)

    all_distinct = Fraction(1)
    for i in range(n):
        all_distinct *= Fraction(window - i, window)
    return 1 - all_distinct


def collision_probability(n: int, window: int) -> float:
    return float(collision_probability_exact(n, window))


def constraint_filter(
    candidates: Sequence[Point],
    region: Region,
    covered_annuli: Sequence[tuple[float, float]],
) -> list[Point]:
    """
    Drop candidate positions outside the body or inside regions covered in earlier iterations.

    Order is preserved.
    """
    for inner, outer in covered_annuli:
        if not (0.0 <= inner < outer <= region.radius):
            raise DomainError(f"{MALFORMED_ANNULUS}: ({inner}, {outer})")

    kept: list[Point] = []
    for p in candidates:
        r = p.norm()
        if r > region.radius:
            continue
        if any(inner <= r <= outer for inner, outer in covered_annuli):
            continue
        kept.append(p)

    logging.debug(f"Constraint filter kept {len(kept)} of {len(candidates)} candidates")
    return kept
