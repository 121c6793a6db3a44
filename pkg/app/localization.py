from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

# Internal imports
from app.channel import RangingModel, measure_ranges
from app.geometry import NodeSet, Point, boundary_anchors, place_nodes
from app.utils import DegenerateGeometryError, DomainError, TOO_FEW_ANCHORS

if TYPE_CHECKING:
    from app.config import ScenarioConfig

GN_MAX_ITERATIONS = 50
GN_STEP_TOL_MM = 1e-9
COLLINEAR_RATIO = 1e-9


class LocalizationMode(StrEnum):
    APPROXIMATE = "approximate"
    FULL = "full"


@dataclass(frozen=True)
class LocationEstimate:
    node_id: int
    position: Point
    iteration: int
    error_variance: float  # per-axis, mm^2
    mode: LocalizationMode


@dataclass(frozen=True)
class IterationStats:
    iteration: int
    newly_localized: int
    cumulative_coverage: float
    mean_error: float
    rmse: float


class TrilaterationResult(NamedTuple):
    position: Point
    residual_norm: float
    converged: bool


def error_variance(n: int, sigma: float) -> float:
    """
    Per-axis error variance of a node first localized in iteration n.

    Anchors (n = 0) carry no error.
    """
    if n < 0:
        raise DomainError(f"iteration index must be non-negative, got {n}")
    return n * sigma**2


############################################### Solver ####################################################


def range_residuals(p: np.ndarray, anchors: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    return np.linalg.norm(p - anchors, axis=-1) - ranges


def range_jacobian(p: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """
    d|p - a_i| / dp for each anchor, shape (k, 2).
    """
    diff = p - anchors
    dist = np.linalg.norm(diff, axis=-1, keepdims=True)
    return diff / np.where(dist > 0, dist, 1.0)


def degenerate_mask(anchor_sets: np.ndarray) -> np.ndarray:
    """
    Flag anchor sets whose centered geometry is (near) rank-deficient.

    Args:
        anchor_sets (np.ndarray): (m, k, 2) anchor positions per target.
    """
    if len(anchor_sets) == 0:
        return np.zeros(0, dtype=bool)
    centered = anchor_sets - anchor_sets.mean(axis=1, keepdims=True)
    sv = np.linalg.svd(centered, compute_uv=False)
    return sv[:, -1] <= COLLINEAR_RATIO * sv[:, 0]


def trilaterate_batch(
    anchor_sets: np.ndarray,
    ranges: np.ndarray,
    guesses: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Gauss-Newton minimisation of sum_i (|p - a_i| - r_i)^2 for m targets at once.

    Args:
        anchor_sets (np.ndarray): (m, k, 2) anchor positions.
        ranges (np.ndarray): (m, k) measured ranges.
        guesses (np.ndarray | None): (m, 2) starting points, anchor centroids if None.

    Returns:
        tuple: positions (m, 2), residual norms (m,), converged flags (m,)
    """
    x = anchor_sets.mean(axis=1) if guesses is None else np.array(guesses, dtype=float, copy=True)
    m = len(x)
    active = np.ones(m, dtype=bool)
    converged = np.zeros(m, dtype=bool)

    for _ in range(GN_MAX_ITERATIONS):
        if not active.any():
            break
        diff = x[:, None, :] - anchor_sets
        dist = np.linalg.norm(diff, axis=2)
        jac = diff / np.where(dist > 0, dist, 1.0)[..., None]
        residual = dist - ranges

        jtj = np.einsum("mki,mkj->mij", jac, jac)
        jtr = np.einsum("mki,mk->mi", jac, residual)
        step = -np.einsum("mij,mj->mi", np.linalg.pinv(jtj), jtr)
        step[~active] = 0.0

        x += step
        done = active & (np.linalg.norm(step, axis=1) < GN_STEP_TOL_MM)
        converged |= done
        active &= ~done

    residual_norm = np.linalg.norm(
        np.linalg.norm(x[:, None, :] - anchor_sets, axis=2) - ranges, axis=1
    )
    if not converged.all():
        logging.debug(f"Gauss-Newton did not converge for {int((~converged).sum())} of {m} targets")
    return x, residual_norm, converged


def trilaterate(
    anchors: Sequence[tuple[Point, float]],
    initial_guess: Point | None = None,
) -> TrilaterationResult:
    """
    Position a single target from >= 3 (anchor, measured range) pairs.

    Raises:
        DomainError: fewer than three anchors.
        DegenerateGeometryError: anchors are collinear.
    """
    if len(anchors) < 3:
        raise DomainError(f"{TOO_FEW_ANCHORS}: {len(anchors)}")

    anchor_set = np.array([[a.x, a.y] for a, _ in anchors], dtype=float)[None, :, :]
    ranges = np.array([r for _, r in anchors], dtype=float)[None, :]
    if degenerate_mask(anchor_set)[0]:
        raise DegenerateGeometryError()

    guesses = None if initial_guess is None else np.array([initial_guess], dtype=float)
    x, residual_norm, converged = trilaterate_batch(anchor_set, ranges, guesses)
    return TrilaterationResult(
        Point(float(x[0, 0]), float(x[0, 1])),
        float(residual_norm[0]),
        bool(converged[0]),
    )


def gdop_rmse(target: Point, anchors: Sequence[Point], sigma_r: float) -> float:
    """
    Linearised RMSE prediction sigma_r * sqrt(trace((J^T J)^-1)) at the target.
    """
    jac = range_jacobian(np.array(target, dtype=float), np.array(anchors, dtype=float))
    return sigma_r * math.sqrt(float(np.trace(np.linalg.inv(jac.T @ jac))))


def inward_guesses(anchor_sets: np.ndarray, depth: float) -> np.ndarray:
    """
    Anchor centroids moved `depth` mm towards the origin, clamped at the origin.

    Targets lie deeper in the body than the anchors that localize them.
    """
    centroids = anchor_sets.mean(axis=1)
    norms = np.linalg.norm(centroids, axis=1, keepdims=True)
    scale = np.clip(1.0 - depth / np.where(norms > 0, norms, 1.0), 0.0, 1.0)
    return centroids * scale


############################################### Engine ####################################################


@dataclass
class LocalizationState:
    """
    Everything an iterative localization run mutates.

    Per-node bookkeeping lives in arrays indexed by node id; `localized_at`
    holds the iteration a node was first localized in (0 = not yet).
    """
    node_set: NodeSet
    comm_range: float
    sigma: float = 1.0
    mode: LocalizationMode = LocalizationMode.APPROXIMATE
    ranging: RangingModel = field(default_factory=RangingModel)
    anchors: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    neighbors_k: int = 3
    virtual_anchor_fraction: float = 1.0
    current_iteration: int = 0

    def __post_init__(self) -> None:
        count = len(self.node_set)
        self.truth: np.ndarray = self.node_set.positions
        self.radii: np.ndarray = np.linalg.norm(self.truth, axis=1) if count else np.empty(0)
        self.localized_at: np.ndarray = np.zeros(count, dtype=int)
        self.estimated: np.ndarray = np.full((count, 2), np.nan)
        self.variances: np.ndarray = np.zeros(count)
        self.anchor_eligible: np.ndarray = np.zeros(count, dtype=bool)

    @classmethod
    def from_config(cls, config: ScenarioConfig, rng: np.random.Generator) -> LocalizationState:
        region = config.region
        node_set = place_nodes(region, config.density_per_cm3, rng)
        mode = LocalizationMode(config.mode)
        anchors = (
            np.array(boundary_anchors(region, config.anchor_count), dtype=float)
            if mode is LocalizationMode.FULL
            else np.empty((0, 2))
        )
        return cls(
            node_set=node_set,
            comm_range=config.comm_range_mm,
            sigma=config.sigma_mm,
            mode=mode,
            ranging=config.ranging,
            anchors=anchors,
            neighbors_k=config.neighbors_k,
            virtual_anchor_fraction=config.virtual_anchor_fraction,
        )

    @property
    def localized_count(self) -> int:
        return int(np.count_nonzero(self.localized_at))

    @property
    def coverage(self) -> float:
        total = len(self.node_set)
        return 1.0 if total == 0 else self.localized_count / total

    def snapshot_estimates(self) -> dict[int, LocationEstimate]:
        return {
            int(i): LocationEstimate(
                node_id=int(i),
                position=Point(float(self.estimated[i, 0]), float(self.estimated[i, 1])),
                iteration=int(self.localized_at[i]),
                error_variance=float(self.variances[i]),
                mode=self.mode,
            )
            for i in np.flatnonzero(self.localized_at)
        }

    def _record(self, iteration: int, cohort: np.ndarray) -> IterationStats:
        self.current_iteration = iteration
        if len(cohort):
            err = np.linalg.norm(self.estimated[cohort] - self.truth[cohort], axis=1)
            mean_error, rmse = float(err.mean()), float(np.sqrt(np.mean(err**2)))
        else:
            mean_error, rmse = 0.0, 0.0

        stats = IterationStats(iteration, len(cohort), self.coverage, mean_error, rmse)
        logging.info(
            f"Iteration {iteration}: localized {stats.newly_localized} nodes, "
            f"coverage {stats.cumulative_coverage:.4f}, mean error {mean_error:.3f} mm"
        )
        return stats

    def _boundary_cohort(self) -> np.ndarray:
        return np.flatnonzero((self.localized_at == 0) & (self.node_set.region.radius - self.radii < self.comm_range))

    def _supported_cohort(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Unlocalized nodes with >= k anchor-eligible localized nodes strictly within range.

        Reachability is physical, so true positions drive the test. Returns the
        qualifying node ids and their k nearest supporters, nearest first.
        """
        empty = (np.empty(0, dtype=int), np.empty((0, k), dtype=int))
        support = np.flatnonzero((self.localized_at > 0) & self.anchor_eligible)
        if len(support) < k or self.comm_range <= 0:
            return empty

        # Only nodes within comm_range of some supporter can qualify.
        candidates = np.flatnonzero(self.localized_at == 0)
        candidates = candidates[self.radii[candidates] >= self.radii[support].min() - self.comm_range]
        if len(candidates) == 0:
            return empty
        lo = self.radii[candidates].min() - self.comm_range
        hi = self.radii[candidates].max() + self.comm_range
        support = support[(self.radii[support] >= lo) & (self.radii[support] <= hi)]
        if len(support) < k:
            return empty

        tree = cKDTree(self.truth[support])
        dist, nearest = tree.query(self.truth[candidates], k=k, distance_upper_bound=self.comm_range)
        ok = dist[:, k - 1] < self.comm_range
        return candidates[ok], support[nearest[ok]]


def run_iteration_approx(state: LocalizationState, rng: np.random.Generator) -> IterationStats:
    """
    One synchronous round of the statistical localization model.

    Iteration 1 localizes nodes closer to the boundary than the range; later
    iterations localize nodes with three localized nodes in range. Estimates are
    truth plus N(0, n * sigma^2) per axis.
    """
    if state.mode is not LocalizationMode.APPROXIMATE:
        raise DomainError(f"state is in {state.mode} mode")

    n = state.current_iteration + 1
    cohort = state._boundary_cohort() if n == 1 else state._supported_cohort(3)[0]

    noise = rng.normal(0.0, state.sigma * math.sqrt(n), size=(len(cohort), 2))
    state.estimated[cohort] = state.truth[cohort] + noise
    state.variances[cohort] = error_variance(n, state.sigma)
    state.localized_at[cohort] = n
    state.anchor_eligible[cohort] = True
    return state._record(n, cohort)


def run_iteration_full(state: LocalizationState, rng: np.random.Generator) -> IterationStats:
    """
    One round with noisy ranging and Gauss-Newton multilateration.

    Boundary anchors serve iteration 1; afterwards the k nearest localized
    virtual anchors are used at their *estimated* positions, so errors compound.
    Nodes whose anchors are collinear are deferred to a later round.
    """
    if state.mode is not LocalizationMode.FULL:
        raise DomainError(f"state is in {state.mode} mode")
    k = state.neighbors_k
    if len(state.anchors) < k:
        raise DomainError(f"{TOO_FEW_ANCHORS}: {len(state.anchors)} boundary anchors for k={k}")

    n = state.current_iteration + 1
    if n == 1:
        cohort = state._boundary_cohort()
        if len(cohort):
            _, nearest = cKDTree(state.anchors).query(state.truth[cohort], k=k)
            anchor_pos = state.anchors[nearest]
        else:
            anchor_pos = np.empty((0, k, 2))
        anchor_var = np.zeros((len(cohort), k))
    else:
        cohort, supporters = state._supported_cohort(k)
        anchor_pos = state.estimated[supporters]
        anchor_var = state.variances[supporters]

    if len(cohort) == 0:
        return state._record(n, cohort)

    if n == 1:
        true_d = np.linalg.norm(state.truth[cohort][:, None, :] - anchor_pos, axis=2)
    else:
        true_d = np.linalg.norm(state.truth[cohort][:, None, :] - state.truth[supporters], axis=2)
    ranges = measure_ranges(true_d, state.ranging, rng)

    degenerate = degenerate_mask(anchor_pos)
    if degenerate.any():
        logging.info(f"Deferring {int(degenerate.sum())} nodes with collinear anchors")
    keep = ~degenerate
    cohort, anchor_pos, ranges, anchor_var = cohort[keep], anchor_pos[keep], ranges[keep], anchor_var[keep]
    if len(cohort) == 0:
        return state._record(n, cohort)

    positions, residual_norm, _ = trilaterate_batch(anchor_pos, ranges, inward_guesses(anchor_pos, 0.5 * state.comm_range))

    # Estimates outside the body are pulled back onto the boundary.
    radius = state.node_set.region.radius
    norms = np.linalg.norm(positions, axis=1)
    outside = norms > radius
    positions[outside] *= (radius / norms[outside])[:, None]

    state.estimated[cohort] = positions
    dof = max(k - 2, 1)
    state.variances[cohort] = residual_norm**2 / dof + anchor_var.mean(axis=1)
    state.localized_at[cohort] = n
    if state.virtual_anchor_fraction >= 1.0:
        state.anchor_eligible[cohort] = True
    else:
        state.anchor_eligible[cohort] = rng.random(len(cohort)) < state.virtual_anchor_fraction
    return state._record(n, cohort)


def localize_all(state: LocalizationState, rng: np.random.Generator, max_iterations: int = 1000) -> list[IterationStats]:
    """
    Run rounds until one localizes nobody or every node is localized.

    The empty terminating round is not part of the trace unless it is the
    very first round.
    """
    step = run_iteration_full if state.mode is LocalizationMode.FULL else run_iteration_approx
    trace: list[IterationStats] = []
    if len(state.node_set) == 0:
        logging.info("Empty node set, nothing to localize")
        return trace

    while state.current_iteration < max_iterations:
        stats = step(state, rng)
        if stats.newly_localized == 0:
            if not trace:
                trace.append(stats)
            break
        trace.append(stats)
        if stats.cumulative_coverage >= 1.0:
            break

    logging.info(f"Localization finished after {len(trace)} iterations, coverage {state.coverage:.4f}")
    return trace


def run_localization(config: ScenarioConfig, rng: np.random.Generator) -> list[IterationStats]:
    state = LocalizationState.from_config(config, rng)
    return localize_all(state, rng, config.max_iterations)
