import heapq
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.spatial import cKDTree

# Internal imports
from app.channel import ChannelParams, comm_range, path_loss
from app.geometry import BeamSector, Point, Region, awoken_mask
from app.localization import LocationEstimate, LocalizationMode
from app.utils import AmbiguousWakeError, DomainError, NoRouteError


class RoutingParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    k_sigma: float = Field(default=2.0, ge=0)
    d_floor: float = Field(default=0.1, gt=0)
    snr_threshold_db: float = 0.0
    low_energy_threshold_pj: float = Field(default=100.0, ge=0)
    energy_penalty_db: float = Field(default=10.0, ge=0)
    beam_half_width_deg: float = Field(default=10.0, gt=0, lt=90)
    min_beam_half_width_deg: float = Field(default=1.0, gt=0, lt=90)
    min_subtended_deg: float = Field(default=60.0, gt=0, lt=180)

    def snr_cap(self, channel: ChannelParams) -> float:
        """
        Best expected SNR any link can reach: zero variance at the distance floor.
        """
        return channel.link_budget_db - path_loss(self.d_floor, channel)


@dataclass(frozen=True)
class LinkMetric:
    """
    Expected link quality, with each contribution kept separate.

    distance_term is the SNR at the nominal estimated distance, location_penalty
    the dB lost by inflating that distance with the estimates' uncertainty.
    """
    expected_snr_db: float
    distance_term: float
    location_penalty: float
    energy_penalty: float

    @property
    def total_db(self) -> float:
        return self.expected_snr_db - self.energy_penalty


def link_metric(
    a: LocationEstimate,
    b: LocationEstimate,
    energies: tuple[float, float],
    channel: ChannelParams,
    k_sigma: float,
    params: RoutingParams = RoutingParams(),
) -> LinkMetric:
    d_nominal = max(params.d_floor, math.hypot(a.position.x - b.position.x, a.position.y - b.position.y))
    d_eff = d_nominal + k_sigma * math.sqrt(a.error_variance + b.error_variance)

    distance_term = channel.link_budget_db - path_loss(d_nominal, channel)
    expected_snr_db = channel.link_budget_db - path_loss(d_eff, channel)
    energy_penalty = params.energy_penalty_db if min(energies) < params.low_energy_threshold_pj else 0.0
    return LinkMetric(
        expected_snr_db=expected_snr_db,
        distance_term=distance_term,
        location_penalty=distance_term - expected_snr_db,
        energy_penalty=energy_penalty,
    )


@dataclass
class WakeGraph:
    vertices: dict[int, LocationEstimate]
    energies: dict[int, float]
    snr_cap: float
    edges: dict[int, dict[int, LinkMetric]] = field(default_factory=dict)

    def cost(self, u: int, v: int) -> float:
        # total_db <= expected_snr_db <= snr_cap, so costs are non-negative
        return self.snr_cap - self.edges[u][v].total_db

    def edge_set(self) -> set[tuple[int, int]]:
        return {(u, v) for u, nbrs in self.edges.items() for v in nbrs if u < v}

    def edge_count(self) -> int:
        return len(self.edge_set())


def anchor_id(index: int) -> int:
    """
    Boundary anchors live in the graph under negative ids.
    """
    return -1 - index


def anchor_index(vertex: int) -> int:
    return -1 - vertex


def anchor_estimates(anchors: Sequence[Point]) -> dict[int, LocationEstimate]:
    return {
        anchor_id(i): LocationEstimate(anchor_id(i), p, 0, 0.0, LocalizationMode.FULL)
        for i, p in enumerate(anchors)
    }


def _candidate_pairs(ids: list[int], positions: np.ndarray, channel: ChannelParams, params: RoutingParams) -> list[tuple[int, int]]:
    """
    Pairs that could possibly clear the SNR threshold.

    Inflating distance only lowers SNR, so no edge can be longer than the
    distance at which the nominal SNR equals the threshold.
    """
    threshold = params.snr_threshold_db
    if threshold > params.snr_cap(channel):
        return []
    max_len = math.inf if math.isinf(threshold) else comm_range(channel.model_copy(update={"link_budget_db": channel.link_budget_db - threshold}))
    if math.isinf(max_len):
        return [(ids[i], ids[j]) for i, j in combinations(range(len(ids)), 2)]
    if max_len == 0:
        # Threshold only reachable below the reference distance.
        max_len = channel.ref_distance

    pairs = cKDTree(positions).query_pairs(max(max_len, params.d_floor) * (1.0 + 1e-9) + 1e-12, output_type="ndarray")
    return sorted((ids[i], ids[j]) for i, j in pairs)


def build_wake_graph(
    estimates: Mapping[int, LocationEstimate],
    anchors: Sequence[Point],
    channel: ChannelParams,
    params: RoutingParams = RoutingParams(),
    energies: Mapping[int, float] | None = None,
) -> WakeGraph:
    """
    Symmetric graph over localized nodes and boundary anchors.

    An edge exists iff the expected SNR clears the threshold. Anchors are
    SDM-powered and never carry an energy penalty.

    Args:
        estimates (Mapping[int, LocationEstimate]): Localized nanonodes by id.
        anchors (Sequence[Point]): Boundary anchor positions.
        channel (ChannelParams): Path-loss model.
        params (RoutingParams): Thresholds and penalties.
        energies (Mapping[int, float] | None): Estimated stored energy per node (pJ); missing means unknown-but-fine.
    """
    if not estimates:
        raise DomainError("cannot build a wake graph without localized nodes")

    vertices = dict(sorted(estimates.items()))
    vertices.update(anchor_estimates(anchors))
    energy_of = {v: math.inf for v in vertices}
    if energies is not None:
        energy_of.update({v: e for v, e in energies.items() if v in vertices})

    graph = WakeGraph(vertices, energy_of, params.snr_cap(channel))
    graph.edges = {v: {} for v in vertices}

    ids = sorted(vertices)
    positions = np.array([vertices[v].position for v in ids], dtype=float)
    for u, v in _candidate_pairs(ids, positions, channel, params):
        metric = link_metric(vertices[u], vertices[v], (energy_of[u], energy_of[v]), channel, params.k_sigma, params)
        if metric.expected_snr_db >= params.snr_threshold_db:
            graph.edges[u][v] = metric
            graph.edges[v][u] = metric

    logging.info(f"Built wake graph with {len(vertices)} vertices and {graph.edge_count()} edges")
    return graph


def route_cost(graph: WakeGraph, hops: Sequence[int]) -> float:
    return sum(graph.cost(u, v) for u, v in zip(hops, hops[1:]))


def select_route(graph: WakeGraph, src: int, dst: int) -> list[int]:
    """
    Cheapest path by Dijkstra, edge cost = snr_cap - link total.

    Heap entries carry the whole path, so among equal-cost paths the
    lexicographically smallest id sequence is popped first.

    Raises:
        NoRouteError: src and dst are disconnected.
    """
    if src not in graph.vertices or dst not in graph.vertices:
        raise DomainError(f"route endpoints must be graph vertices: {src}, {dst}")

    best: dict[int, float] = {src: 0.0}
    settled: set[int] = set()
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (src,))]

    while heap:
        cost, path = heapq.heappop(heap)
        u = path[-1]
        if u in settled:
            continue
        settled.add(u)
        if u == dst:
            logging.info(f"Route {src} -> {dst}: {len(path) - 1} hops, cost {cost:.3f}")
            return list(path)

        for v in graph.edges[u]:
            if v in settled:
                continue
            new_cost = cost + graph.cost(u, v)
            if new_cost <= best.get(v, math.inf):
                best[v] = new_cost
                heapq.heappush(heap, (new_cost, path + (v,)))

    raise NoRouteError(src, dst)


############################################### Wake-up planning ####################################################


@dataclass(frozen=True)
class WakePlan:
    hops: tuple[int, ...]
    beam_sequences: tuple[tuple[BeamSector, ...], ...]
    unique: tuple[bool, ...]


def _beam_origins(target: Point, region: Region, min_subtended: float, max_reach: float) -> tuple[float, float]:
    """
    Two boundary angles symmetric about the target's bearing that see it under
    at least `min_subtended` and are within beam reach.
    """
    bearing = math.atan2(target.y, target.x)
    for alpha_deg in range(30, 180, 5):
        alpha = math.radians(alpha_deg)
        a, b = region.boundary_point(bearing + alpha), region.boundary_point(bearing - alpha)
        if max(target.distance_to(a), target.distance_to(b)) > max_reach:
            continue
        va = (a.x - target.x, a.y - target.y)
        vb = (b.x - target.x, b.y - target.y)
        subtended = abs(math.atan2(va[0] * vb[1] - va[1] * vb[0], va[0] * vb[0] + va[1] * vb[1]))
        if subtended >= min_subtended - 1e-12:
            return bearing + alpha, bearing - alpha
    raise AmbiguousWakeError(-1, [])


def plan_wakeup(
    hops: Sequence[int],
    estimates: Mapping[int, LocationEstimate],
    sdm_boundary: Region,
    beam_half_width: float,
    min_half_width: float = math.radians(1.0),
    min_subtended: float = math.radians(60.0),
    max_reach: float = 500.0,
) -> WakePlan:
    """
    Two crossing beams per nanonode hop, narrowed until only that hop is awoken.

    Anchor hops (negative ids) are SDM elements and need no beams.

    Raises:
        DomainError: a nanonode hop has no estimate.
        AmbiguousWakeError: another estimate stays inside the intersection at the minimum width.
    """
    ids = np.array(sorted(v for v in estimates if v >= 0), dtype=int)
    positions = np.array([estimates[v].position for v in ids], dtype=float).reshape(-1, 2)

    sequences: list[tuple[BeamSector, ...]] = []
    unique: list[bool] = []
    for hop in hops:
        if hop < 0:
            sequences.append(())
            unique.append(True)
            continue
        if hop not in estimates:
            raise DomainError(f"hop {hop} has no location estimate")

        target = estimates[hop].position
        try:
            angle_a, angle_b = _beam_origins(target, sdm_boundary, min_subtended, max_reach)
        except AmbiguousWakeError:
            raise AmbiguousWakeError(hop, []) from None

        width = beam_half_width
        while True:
            beams = (
                BeamSector.aimed_at(sdm_boundary, angle_a, target, width, max_reach),
                BeamSector.aimed_at(sdm_boundary, angle_b, target, width, max_reach),
            )
            awoken = ids[awoken_mask(positions, beams)].tolist()
            if awoken == [hop]:
                break
            if width <= min_half_width:
                raise AmbiguousWakeError(hop, [v for v in awoken if v != hop])
            width = max(min_half_width, width / 2.0)

        logging.debug(f"Hop {hop}: beams at {math.degrees(width):.2f} deg half width isolate it")
        sequences.append(beams)
        unique.append(True)

    return WakePlan(tuple(hops), tuple(sequences), tuple(unique))
