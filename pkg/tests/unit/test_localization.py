import math
import unittest

import numpy as np
from scipy.stats import spearmanr

from app.channel import RangingModel
from app.config import ScenarioConfig
from app.geometry import Point, Region, boundary_anchors, place_nodes
from app.localization import (
    LocalizationMode,
    LocalizationState,
    degenerate_mask,
    error_variance,
    gdop_rmse,
    inward_guesses,
    localize_all,
    range_jacobian,
    range_residuals,
    run_iteration_approx,
    run_iteration_full,
    trilaterate,
    trilaterate_batch,
)
from app.utils import DegenerateGeometryError, DomainError


def approx_state(region: Region, density: float, comm_range: float, seed: int, sigma: float = 1.0) -> tuple[LocalizationState, np.random.Generator]:
    rng = np.random.default_rng(seed)
    return LocalizationState(place_nodes(region, density, rng), comm_range, sigma), rng


class ErrorVarianceTests(unittest.TestCase):
    def test_first_iteration(self):
        self.assertEqual(error_variance(1, 1.0), 1.0)

    def test_anchors_have_no_error(self):
        self.assertEqual(error_variance(0, 1.0), 0.0)

    def test_linear_in_iteration(self):
        self.assertAlmostEqual(error_variance(35, 1.0), 35.0)
        self.assertAlmostEqual(error_variance(4, 0.5), 1.0)

    def test_negative_iteration(self):
        with self.assertRaises(DomainError):
            error_variance(-1, 1.0)


class SolverTests(unittest.TestCase):
    """
    trilaterate, Jacobian, GDOP
    """

    def test_noiseless_recovery(self):
        anchors = [(Point(0, 0), 5.0), (Point(10, 0), math.hypot(7, 4)), (Point(0, 10), math.hypot(3, 6))]
        result = trilaterate(anchors)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(result.position.x, 3.0, delta=1e-9)
        self.assertAlmostEqual(result.position.y, 4.0, delta=1e-9)
        self.assertLess(result.residual_norm, 1e-9)

    def test_noiseless_recovery_random(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            angles = np.arange(4) * math.pi / 2 + rng.uniform(-0.3, 0.3, 4)
            anchors = np.column_stack((50 * np.cos(angles), 50 * np.sin(angles)))
            target = rng.uniform(-25, 25, 2)
            ranges = np.linalg.norm(anchors - target, axis=1)
            result = trilaterate([(Point(*a), float(r)) for a, r in zip(anchors, ranges)])
            self.assertLess(math.hypot(result.position.x - target[0], result.position.y - target[1]), 1e-9)

    def test_batch_matches_single(self):
        anchors = np.array([[[0, 0], [10, 0], [0, 10]], [[0, 0], [20, 0], [0, 20]]], dtype=float)
        targets = np.array([[3, 4], [5, 12]], dtype=float)
        ranges = np.linalg.norm(anchors - targets[:, None, :], axis=2)
        positions, residuals, converged = trilaterate_batch(anchors, ranges)
        np.testing.assert_allclose(positions, targets, atol=1e-9)
        self.assertTrue(converged.all())

    def test_collinear_anchors(self):
        anchors = [(Point(0, 0), 1.0), (Point(1, 0), 1.0), (Point(2, 0), 1.0)]
        with self.assertRaises(DegenerateGeometryError):
            trilaterate(anchors)

    def test_too_few_anchors(self):
        with self.assertRaises(DomainError):
            trilaterate([(Point(0, 0), 1.0), (Point(1, 0), 1.0)])

    def test_degenerate_mask(self):
        sets = np.array([[[0, 0], [1, 0], [2, 0]], [[0, 0], [1, 0], [0, 1]]], dtype=float)
        self.assertEqual(degenerate_mask(sets).tolist(), [True, False])
        self.assertEqual(len(degenerate_mask(np.empty((0, 3, 2)))), 0)

    def test_jacobian_matches_central_differences(self):
        rng = np.random.default_rng(12)
        h = 1e-6
        for _ in range(100):
            anchors = rng.uniform(-50, 50, size=(4, 2))
            p = rng.uniform(-50, 50, size=2)
            if np.min(np.linalg.norm(anchors - p, axis=1)) < 1.0:
                p = p + 5.0
            ranges = rng.uniform(0, 50, size=4)
            numeric = np.column_stack([
                (range_residuals(p + h * e, anchors, ranges) - range_residuals(p - h * e, anchors, ranges)) / (2 * h)
                for e in np.eye(2)
            ])
            analytic = range_jacobian(p, anchors)
            rel = np.linalg.norm(numeric - analytic) / np.linalg.norm(analytic)
            self.assertLess(rel, 1e-6)

    def test_gdop_predicts_monte_carlo_rmse(self):
        angles = np.array([0.0, 2 * math.pi / 3, 4 * math.pi / 3])
        anchors = np.column_stack((50 * np.cos(angles), 50 * np.sin(angles)))
        target = np.array([0.0, 0.0])
        samples = 4000
        rng = np.random.default_rng(13)
        ranges = np.linalg.norm(anchors - target, axis=1) + rng.normal(0, 1.0, size=(samples, 3))
        positions, _, _ = trilaterate_batch(np.broadcast_to(anchors, (samples, 3, 2)).copy(), ranges)
        rmse = math.sqrt(float(np.mean(np.sum((positions - target) ** 2, axis=1))))

        predicted = gdop_rmse(Point(0, 0), [Point(*a) for a in anchors], 1.0)
        self.assertAlmostEqual(predicted, math.sqrt(4 / 3))
        self.assertLess(abs(rmse - predicted) / predicted, 0.10)

    def test_inward_guesses(self):
        sets = np.array([[[100, 0], [100, 0], [100, 0]], [[1, 0], [1, 0], [1, 0]]], dtype=float)
        np.testing.assert_allclose(inward_guesses(sets, 10.0), [[90, 0], [0, 0]])


class ApproximateEngineTests(unittest.TestCase):
    """
    run_iteration_approx, localize_all
    """

    def test_empty_node_set(self):
        state, rng = approx_state(Region(), 0, 20.0, seed=0)
        self.assertEqual(localize_all(state, rng), [])

    def test_range_beyond_radius_localizes_everyone_at_once(self):
        state, rng = approx_state(Region(radius=30.0), 100, 61.0, seed=1)
        trace = localize_all(state, rng)
        self.assertEqual(len(trace), 1)
        self.assertEqual(trace[0].iteration, 1)
        self.assertEqual(trace[0].cumulative_coverage, 1.0)

    def test_zero_range_localizes_nobody(self):
        state, rng = approx_state(Region(radius=30.0), 100, 0.0, seed=2)
        trace = localize_all(state, rng)
        self.assertEqual(len(trace), 1)
        self.assertEqual(trace[0].newly_localized, 0)
        self.assertEqual(trace[0].cumulative_coverage, 0.0)

    def test_first_iteration_is_the_boundary_ring(self):
        state, rng = approx_state(Region(radius=60.0), 100, 10.0, seed=3)
        stats = run_iteration_approx(state, rng)
        expected = int(np.sum(60.0 - np.linalg.norm(state.truth, axis=1) < 10.0))
        self.assertEqual(stats.newly_localized, expected)
        self.assertEqual(state.localized_count, expected)

    def test_trace_is_consistent(self):
        state, rng = approx_state(Region(radius=60.0), 100, 10.0, seed=4)
        trace = localize_all(state, rng)
        self.assertEqual([s.iteration for s in trace], list(range(1, len(trace) + 1)))
        self.assertTrue(all(s.newly_localized > 0 for s in trace))
        coverages = [s.cumulative_coverage for s in trace]
        self.assertEqual(coverages, sorted(coverages))
        self.assertEqual(sum(s.newly_localized for s in trace), state.localized_count)

    def test_every_node_localized_once_with_three_earlier_supporters(self):
        state, rng = approx_state(Region(radius=40.0), 100, 8.0, seed=5)
        localize_all(state, rng)
        at = state.localized_at
        for i in np.flatnonzero(at > 1)[:300]:
            d = np.linalg.norm(state.truth - state.truth[i], axis=1)
            supporters = (d < 8.0) & (at > 0) & (at < at[i])
            self.assertGreaterEqual(int(supporters.sum()), 3)

    def test_snapshot_estimates(self):
        state, rng = approx_state(Region(radius=30.0), 100, 10.0, seed=6)
        run_iteration_approx(state, rng)
        estimates = state.snapshot_estimates()
        self.assertEqual(len(estimates), state.localized_count)
        for node_id, estimate in list(estimates.items())[:20]:
            self.assertEqual(estimate.iteration, 1)
            self.assertEqual(estimate.error_variance, 1.0)
            self.assertEqual(estimate.mode, LocalizationMode.APPROXIMATE)

    def test_wrong_mode(self):
        state, rng = approx_state(Region(radius=30.0), 10, 10.0, seed=7)
        with self.assertRaises(DomainError):
            run_iteration_full(state, rng)

    def test_cohort_variance_grows_linearly(self):
        errors: dict[int, list[np.ndarray]] = {1: [], 2: [], 3: []}
        for seed in range(5):
            state, rng = approx_state(Region(radius=60.0), 100, 10.0, seed=100 + seed)
            localize_all(state, rng)
            for n in errors:
                cohort = state.localized_at == n
                errors[n].append((state.estimated[cohort] - state.truth[cohort]).ravel())

        for n, chunks in errors.items():
            pooled = np.concatenate(chunks)
            self.assertGreater(len(pooled), 1000)
            self.assertLess(abs(float(np.var(pooled)) - n) / n, 0.10)

    def test_cohort_size_decays(self):
        negative = 0
        runs = 0
        for seed in range(10):
            state, rng = approx_state(Region(radius=60.0), 100, 10.0, seed=200 + seed)
            trace = localize_all(state, rng)
            if len(trace) < 5:
                continue
            runs += 1
            slope = np.polyfit([s.iteration for s in trace], [s.newly_localized for s in trace], 1)[0]
            negative += slope < 0
        self.assertGreater(runs, 0)
        self.assertGreaterEqual(negative / runs, 0.9)

    def test_cohort_error_rises_with_iteration(self):
        iterations, mean_errors = [], []
        for seed in range(5):
            state, rng = approx_state(Region(radius=60.0), 100, 10.0, seed=300 + seed)
            for s in localize_all(state, rng):
                iterations.append(s.iteration)
                mean_errors.append(s.mean_error)
        self.assertGreater(spearmanr(iterations, mean_errors).statistic, 0)


class FullEngineTests(unittest.TestCase):
    """
    run_iteration_full with Gauss-Newton multilateration
    """

    def full_state(self, sigma_r: float, seed: int, **kwargs) -> tuple[LocalizationState, np.random.Generator]:
        region = Region(radius=50.0)
        rng = np.random.default_rng(seed)
        state = LocalizationState(
            place_nodes(region, 10, rng),
            comm_range=10.0,
            mode=LocalizationMode.FULL,
            ranging=RangingModel(sigma_r=sigma_r),
            anchors=np.array(boundary_anchors(region, 8), dtype=float),
            **kwargs,
        )
        return state, rng

    def test_noiseless_ranging_is_exact(self):
        state, rng = self.full_state(0.0, seed=20)
        trace = localize_all(state, rng)
        self.assertGreater(len(trace), 1)
        done = state.localized_at > 0
        err = np.linalg.norm(state.estimated[done] - state.truth[done], axis=1)
        self.assertLess(float(np.median(err)), 1e-6)
        self.assertGreater(float(np.mean(err < 1e-6)), 0.95)

    def test_estimates_stay_inside_body(self):
        state, rng = self.full_state(1.0, seed=21)
        localize_all(state, rng)
        done = state.localized_at > 0
        norms = np.linalg.norm(state.estimated[done], axis=1)
        self.assertTrue(np.all(norms <= 50.0 * (1 + 1e-9)))
        self.assertTrue(np.all(state.variances[done] >= 0))

    def test_virtual_anchor_fraction_limits_supporters(self):
        state, rng = self.full_state(0.0, seed=22, virtual_anchor_fraction=0.5)
        localize_all(state, rng)
        later = state.localized_at > 1
        if later.any():
            share = float(np.mean(state.anchor_eligible[later]))
            self.assertLess(share, 0.8)

    def test_too_few_boundary_anchors(self):
        state, rng = self.full_state(0.0, seed=23, neighbors_k=9)
        with self.assertRaises(DomainError):
            run_iteration_full(state, rng)

    def test_wrong_mode(self):
        state, rng = self.full_state(0.0, seed=24)
        with self.assertRaises(DomainError):
            run_iteration_approx(state, rng)


class CrossModeTests(unittest.TestCase):
    """
    Full mode on the default scenario (64 boundary anchors, 20 mm range, sigma_r 1 mm)
    """

    def test_first_iteration_rmse_close_to_approximate(self):
        full = ScenarioConfig(mode="full")
        for seed in range(3):
            rng = np.random.default_rng(seed)
            full_stats = run_iteration_full(LocalizationState.from_config(full, rng), rng)
            rng = np.random.default_rng(seed)
            approx_stats = run_iteration_approx(LocalizationState.from_config(ScenarioConfig(), rng), rng)

            self.assertGreater(full_stats.newly_localized, 0)
            ratio = full_stats.rmse / approx_stats.rmse
            self.assertTrue(0.5 <= ratio <= 2.0, f"seed {seed}: full {full_stats.rmse:.3f} vs approximate {approx_stats.rmse:.3f}")

    def test_cohort_error_rises_with_iteration(self):
        config = ScenarioConfig(mode="full", radius_cm=10.0)
        iterations, mean_errors = [], []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            for s in localize_all(LocalizationState.from_config(config, rng), rng):
                iterations.append(s.iteration)
                mean_errors.append(s.mean_error)
        self.assertGreater(spearmanr(iterations, mean_errors).statistic, 0)


if __name__ == "__main__":
    unittest.main()
