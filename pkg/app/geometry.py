import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

# Internal imports
from app.utils import (
    DomainError,
    EMPTY_BEAM_SEQUENCE,
    INVALID_BEAM,
    NEGATIVE_DENSITY,
    ORIGIN_NOT_ON_BOUNDARY,
    OUTSIDE_REGION,
    TOO_FEW_ANCHORS,
)

# All lengths are millimetres internally; public config speaks cm.
MM_PER_CM = 10.0
DEFAULT_BEAM_REACH_MM = 500.0  # WuR reach of 0.5 m


class Point(NamedTuple):
    x: float
    y: float

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def distance_to(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Region:
    """
    A planar slice of the torso: a disk of `radius` mm, `thickness` mm deep.

    Thickness only enters the density -> node count conversion.
    """
    radius: float = 300.0
    thickness: float = 10.0

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.thickness <= 0:
            raise DomainError(f"region radius and thickness must be positive, got {self.radius}, {self.thickness}")

    def contains(self, p: Point, rel_tol: float = 1e-12) -> bool:
        return p.norm() <= self.radius * (1.0 + rel_tol)

    def volume_cm3(self) -> float:
        return math.pi * (self.radius / MM_PER_CM) ** 2 * (self.thickness / MM_PER_CM)

    def node_count(self, density_per_cm3: float) -> int:
        return round(self.volume_cm3() * density_per_cm3)

    def boundary_point(self, angle: float) -> Point:
        return Point(self.radius * math.cos(angle), self.radius * math.sin(angle))


class Nanonode(NamedTuple):
    id: int
    position: Point


@dataclass(frozen=True, eq=False)
class NodeSet:
    """
    Ground-truth nanonode positions.

    Positions are kept as an (N, 2) array so the localization engine can work on
    whole cohorts; `nodes` materialises the per-node view on demand.
    """
    positions: np.ndarray
    region: Region

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def ids(self) -> np.ndarray:
        return np.arange(len(self.positions))

    @cached_property
    def nodes(self) -> tuple[Nanonode, ...]:
        return tuple(
            Nanonode(i, Point(float(x), float(y))) for i, (x, y) in enumerate(self.positions)
        )

    def position_of(self, node_id: int) -> Point:
        x, y = self.positions[node_id]
        return Point(float(x), float(y))


@dataclass(frozen=True)
class BeamSector:
    """
    Directional ultrasound wake-up beam with sharp edges and binary reach.
    """
    origin: Point
    direction: float
    half_width: float
    max_reach: float = DEFAULT_BEAM_REACH_MM

    def __post_init__(self) -> None:
        if not (0.0 < self.half_width < math.pi / 2) or self.max_reach <= 0:
            raise DomainError(f"{INVALID_BEAM}: half_width={self.half_width}, max_reach={self.max_reach}")

    @classmethod
    def aimed_at(
        cls,
        region: Region,
        boundary_angle: float,
        target: Point,
        half_width: float,
        max_reach: float = DEFAULT_BEAM_REACH_MM,
    ) -> "BeamSector":
        """
        Beam emitted from the boundary point at `boundary_angle`, pointed at `target`.
        """
        origin = region.boundary_point(boundary_angle)
        direction = math.atan2(target.y - origin.y, target.x - origin.x)
        beam = cls(origin, direction, half_width, max_reach)
        beam.check_on_boundary(region)
        return beam

    def check_on_boundary(self, region: Region) -> None:
        if not math.isclose(self.origin.norm(), region.radius, rel_tol=1e-9):
            raise DomainError(f"{ORIGIN_NOT_ON_BOUNDARY}: |origin|={self.origin.norm()}, radius={region.radius}")


def place_nodes(region: Region, density: float, rng: np.random.Generator) -> NodeSet:
    """
    Scatter nanonodes uniformly over the disk.

    Args:
        region (Region): The slice to populate.
        density (float): Nodes per cm^3.
        rng (np.random.Generator): Trial-owned random source.
    """
    if density < 0:
        raise DomainError(f"{NEGATIVE_DENSITY}: {density}")

    count: int = region.node_count(density)
    # sqrt of a uniform radius fraction gives uniform density over area
    radii = region.radius * np.sqrt(rng.random(count))
    angles = rng.random(count) * 2.0 * math.pi
    positions = np.column_stack((radii * np.cos(angles), radii * np.sin(angles)))

    logging.info(f"Placed {count} nodes at {density}/cm^3 in a {region.radius} mm disk")
    return NodeSet(positions, region)


def distance_to_boundary(p: Point, region: Region) -> float:
    if not region.contains(p):
        raise DomainError(f"{OUTSIDE_REGION}: {p} with radius {region.radius}")
    return max(0.0, region.radius - p.norm())


def boundary_anchors(region: Region, count: int) -> tuple[Point, ...]:
    """
    Evenly spaced SDM anchors on the boundary, starting at angle 0.
    """
    if count < 3:
        raise DomainError(f"{TOO_FEW_ANCHORS}: {count}")
    step = 2.0 * math.pi / count
    return tuple(region.boundary_point(i * step) for i in range(count))


def _angle_off_axis(dx: np.ndarray, dy: np.ndarray, direction: float) -> np.ndarray:
    diff = np.arctan2(dy, dx) - direction
    return np.abs((diff + math.pi) % (2.0 * math.pi) - math.pi)


def in_beam_mask(points: np.ndarray, beam: BeamSector) -> np.ndarray:
    """
    Vectorised in_beam over an (N, 2) array.
    """
    dx = points[:, 0] - beam.origin.x
    dy = points[:, 1] - beam.origin.y
    dist = np.hypot(dx, dy)
    # The origin itself has no bearing; it is inside its own sector.
    on_axis = _angle_off_axis(dx, dy, beam.direction) <= beam.half_width
    return (dist <= beam.max_reach) & (on_axis | (dist == 0.0))


def in_beam(p: Point, beam: BeamSector) -> bool:
    return bool(in_beam_mask(np.array([p], dtype=float), beam)[0])


def awoken_mask(points: np.ndarray, beams: Sequence[BeamSector]) -> np.ndarray:
    if len(beams) == 0:
        raise DomainError(EMPTY_BEAM_SEQUENCE)
    mask = np.ones(len(points), dtype=bool)
    for beam in beams:
        mask &= in_beam_mask(points, beam)
    return mask


def awoken_by(p: Point, beams: Sequence[BeamSector]) -> bool:
    """
    A node wakes only if every beam in the sequence reaches it.
    """
    return bool(awoken_mask(np.array([p], dtype=float), beams)[0])
