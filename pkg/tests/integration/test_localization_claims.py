import asyncio
import statistics
import unittest

from app.config import build_config
from app.harness import cell_terminals, run_sweep

SIGMA_MM = 1.0


class IterationCountTests(unittest.TestCase):
    """
    Torso slice of 30 cm radius at the lowest density, 20 seeds per range.
    """

    @classmethod
    def setUpClass(cls):
        base = build_config({"density_per_cm3": "10", "trials": "20", "sigma_mm": str(SIGMA_MM), "seed": "2024"})
        cls.result = asyncio.run(run_sweep([1.0, 2.0, 3.0], [10.0], base))
        cls.terminals = cell_terminals(cls.result)

    def test_fewer_than_35_iterations(self):
        for range_cm in (2.0, 3.0):
            self.assertLess(statistics.median(self.terminals[(range_cm, 10.0)]), 35)

    def test_one_cm_range_needs_about_40_iterations(self):
        # About 31 neighbours in range; the localized front advances 6-7 mm per round
        median = statistics.median(self.terminals[(1.0, 10.0)])
        self.assertGreaterEqual(median, 36)
        self.assertLessEqual(median, 45)

    def test_error_bound_within_35_mm(self):
        for range_cm in (2.0, 3.0):
            n_max = max(self.terminals[(range_cm, 10.0)])
            self.assertLessEqual(n_max * SIGMA_MM, 35.0)

    def test_variance_bound_never_exceeds_linear_bound(self):
        for row in self.result.rows:
            self.assertLessEqual(row.bound_variance_mm, row.bound_linear_mm + 1e-12)

    def test_longer_range_needs_fewer_iterations(self):
        medians = [statistics.median(self.terminals[(r, 10.0)]) for r in (1.0, 2.0, 3.0)]
        self.assertEqual(medians, sorted(medians, reverse=True))


class DensityTests(unittest.IsolatedAsyncioTestCase):
    async def test_denser_networks_need_no_more_iterations(self):
        base = build_config({"radius_cm": "11", "trials": "20", "seed": "99"})
        terminals = cell_terminals(await run_sweep([2.0], [10.0, 100.0, 1000.0], base))
        medians = [statistics.median(terminals[(2.0, d)]) for d in (10.0, 100.0, 1000.0)]
        self.assertLessEqual(medians[1], medians[0])
        self.assertLessEqual(medians[2], medians[1])


if __name__ == "__main__":
    unittest.main()
