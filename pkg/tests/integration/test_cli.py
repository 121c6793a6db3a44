import contextlib
import io
import re
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np

from app.config import load_config
from app.harness import trial_seed
from app.localization import LocalizationState, localize_all
from app.main import main
from app.utils import EXIT_IO_ERROR, EXIT_OK, EXIT_VALIDATION_ERROR, DomainError

SHIPPED_CONFIG = Path(__file__).resolve().parents[2] / "configs" / "torso_slice.conf"
ROUTE_DEMO_CONFIG = SHIPPED_CONFIG.with_name("route_demo.conf")

SMALL_SCENARIO = """\
# 4 cm disk, about 500 nodes
radius_cm = 4
density_per_cm3 = 10
comm_range_cm = 1
trials = 3
seed = 42
"""

# Three nodes, everyone reachable from everyone
ROUTE_SCENARIO = """\
radius_cm = 2
density_per_cm3 = 0.25
comm_range_cm = 5
seed = 3
routing.snr_threshold_db = -30
"""


class CliTest(unittest.IsolatedAsyncioTestCase):
    """
    Base class for CLI tests.

    Gives each test a scratch directory and a helper to run main with captured stdout.
    """

    async def asyncSetUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    async def asyncTearDown(self):
        self.tmp.cleanup()

    def write_config(self, text: str, name: str = "scenario.conf") -> str:
        path = self.dir / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    async def run_cli(self, *argv: str) -> tuple[int, str]:
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            code = await main(list(argv))
        return code, out.getvalue()


class ValidateCommandTests(CliTest):
    async def test_shipped_config(self):
        code, out = await self.run_cli("validate", "--config", str(SHIPPED_CONFIG))
        self.assertEqual(code, EXIT_OK)
        self.assertIn("node_count = 28274", out)
        self.assertIn("idle_fraction", out)

    async def test_invalid_config(self):
        config = self.write_config("comm_range_cm = -1\nbogus = 3\n")
        with contextlib.redirect_stderr(io.StringIO()):
            code, _ = await self.run_cli("validate", "--config", config)
        self.assertEqual(code, EXIT_VALIDATION_ERROR)

    async def test_missing_config(self):
        with contextlib.redirect_stderr(io.StringIO()):
            code, _ = await self.run_cli("validate", "--config", str(self.dir / "nope.conf"))
        self.assertEqual(code, EXIT_IO_ERROR)

    async def test_too_few_anchors_rejected_in_every_mode(self):
        config = self.write_config("anchor_count = 2\n")
        for command in (("validate",), ("route", "--node", "0")):
            with contextlib.redirect_stderr(io.StringIO()) as err:
                code, _ = await self.run_cli(*command, "--config", config)
            self.assertEqual(code, EXIT_VALIDATION_ERROR)
            self.assertIn("invalid anchor_count", err.getvalue())


class RunCommandTests(CliTest):
    """
    run, sweep
    """

    async def test_run_writes_csv(self):
        config = self.write_config(SMALL_SCENARIO)
        out = self.dir / "results.csv"
        code, _ = await self.run_cli("run", "--config", config, "--out", str(out), "--trials", "2")
        self.assertEqual(code, EXIT_OK)
        lines = out.read_text(encoding="utf-8").splitlines()
        self.assertEqual(
            lines[0],
            "trial,range_cm,density_per_cm3,iteration,newly_localized,cumulative_coverage,"
            "mean_err_mm,rmse_mm,bound_linear_mm,bound_variance_mm",
        )
        self.assertEqual({line.split(",")[0] for line in lines[1:]}, {"0", "1"})

    async def test_run_into_missing_directory(self):
        config = self.write_config(SMALL_SCENARIO)
        with contextlib.redirect_stderr(io.StringIO()):
            code, _ = await self.run_cli("run", "--config", config, "--out", str(self.dir / "missing" / "r.csv"))
        self.assertEqual(code, EXIT_IO_ERROR)

    async def test_sweep_is_byte_identical(self):
        config = self.write_config(SMALL_SCENARIO)
        outputs = []
        for name in ("first", "second"):
            out_dir = self.dir / name
            code, _ = await self.run_cli(
                "sweep", "--config", config, "--ranges", "1,2", "--densities", "10", "--out", str(out_dir), "--workers", "2"
            )
            self.assertEqual(code, EXIT_OK)
            for artefact in ("results.csv", "summary.csv", "heatmap.svg"):
                self.assertTrue((out_dir / artefact).exists())
            outputs.append((out_dir / "results.csv").read_bytes())
        self.assertEqual(outputs[0], outputs[1])

    async def test_seed_override_changes_results(self):
        config = self.write_config(SMALL_SCENARIO)
        first, second = self.dir / "a.csv", self.dir / "b.csv"
        await self.run_cli("run", "--config", config, "--out", str(first), "--trials", "1")
        await self.run_cli("run", "--config", config, "--out", str(second), "--trials", "1", "--seed", "7")
        self.assertNotEqual(first.read_bytes(), second.read_bytes())

    async def test_sweep_output_not_creatable(self):
        config = self.write_config(SMALL_SCENARIO)
        blocker = self.dir / "file"
        blocker.write_text("", encoding="utf-8")
        with contextlib.redirect_stderr(io.StringIO()):
            code, _ = await self.run_cli(
                "sweep", "--config", config, "--ranges", "1", "--densities", "10", "--out", str(blocker / "out")
            )
        self.assertEqual(code, EXIT_IO_ERROR)


class RouteCommandTests(CliTest):
    async def test_route_to_nearest_anchor(self):
        config = self.write_config(ROUTE_SCENARIO)
        code, out = await self.run_cli("route", "--config", config, "--node", "0")
        self.assertEqual(code, EXIT_OK)
        self.assertIn("route 0 -> anchor", out)
        self.assertIn("hop 0: node 0", out)

    async def test_unknown_node(self):
        config = self.write_config(ROUTE_SCENARIO)
        code, _ = await self.run_cli("route", "--config", config, "--node", "999")
        self.assertEqual(code, EXIT_VALIDATION_ERROR)

    async def test_domain_error_maps_to_validation_exit(self):
        config = self.write_config(ROUTE_SCENARIO)
        with (
            patch("app.main.handle_route_commands", side_effect=DomainError("bad precondition")),
            contextlib.redirect_stderr(io.StringIO()) as err,
        ):
            code, _ = await self.run_cli("route", "--config", config, "--node", "0")
        self.assertEqual(code, EXIT_VALIDATION_ERROR)
        self.assertIn("bad precondition", err.getvalue())

    async def test_multi_hop_route_on_demo_config(self):
        config = load_config(ROUTE_DEMO_CONFIG)
        rng = np.random.default_rng(trial_seed(config.seed, 0))
        state = LocalizationState.from_config(config, rng)
        localize_all(state, rng, config.max_iterations)
        estimates = state.snapshot_estimates()
        central = min(estimates, key=lambda v: estimates[v].position.norm())

        code, out = await self.run_cli("route", "--config", str(ROUTE_DEMO_CONFIG), "--node", str(central))
        self.assertEqual(code, EXIT_OK)
        hops = int(re.search(r"route \d+ -> anchor \d+: (\d+) hops", out).group(1))
        self.assertGreaterEqual(hops, 2)
        hop_lines = re.findall(r"^  hop \d+: (node|anchor) ", out, re.MULTILINE)
        self.assertEqual(len(hop_lines), hops + 1)
        self.assertGreaterEqual(hop_lines.count("node"), 2)
        self.assertRegex(out, r"hop \d+: anchor \d+ \(SDM, always on\)")


if __name__ == "__main__":
    unittest.main()
