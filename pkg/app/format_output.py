import csv
import logging
import math
from collections.abc import Iterable, Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# Internal imports
from app.harness import SummaryRow, SweepResult, SweepRow, heatmap_cells, summarize  # noqa: E402

CSV_HEADER: list[str] = list(SweepRow._fields)
SUMMARY_HEADER: list[str] = list(SummaryRow._fields)

# Fixed salt and no date keep the SVG byte-stable across runs.
SVG_RC = {"svg.hashsalt": "nanoloc-sim", "svg.fonttype": "none"}


def format_number(value: int | float) -> str:
    """
    Integers verbatim, floats with up to 6 significant digits and never an exponent.
    """
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return np.format_float_positional(value, precision=6, unique=False, fractional=False, trim="-")


def _write_rows(path: Path, header: list[str], rows: Iterable[Sequence[int | float]]) -> None:
    try:
        with path.open("w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows([format_number(v) for v in row] for row in rows)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def emit_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    _write_rows(path, CSV_HEADER, result.rows)
    logging.info(f"Wrote {len(result.rows)} rows to {path}")
    return path


def emit_summary_csv(result: SweepResult, path: str | Path) -> Path:
    path = Path(path)
    _write_rows(path, SUMMARY_HEADER, summarize(result))
    logging.info(f"Wrote sweep summary to {path}")
    return path


def _edges(values: list[float], log: bool) -> np.ndarray:
    """
    Cell boundaries around sorted centre values, geometric midpoints on a log axis.
    """
    v = np.array(values, dtype=float)
    if log:
        if len(v) == 1:
            return np.array([v[0] / math.sqrt(10.0), v[0] * math.sqrt(10.0)])
        mids = np.sqrt(v[:-1] * v[1:])
        return np.concatenate(([v[0] ** 2 / mids[0]], mids, [v[-1] ** 2 / mids[-1]]))
    if len(v) == 1:
        return np.array([v[0] - 0.5, v[0] + 0.5])
    mids = 0.5 * (v[:-1] + v[1:])
    return np.concatenate(([2 * v[0] - mids[0]], mids, [2 * v[-1] - mids[-1]]))


def emit_heatmap(result: SweepResult, path: str | Path) -> Path:
    """
    Self-contained SVG: range (cm) across, density (per cm^3, log) up, each
    cell labelled with its median terminal iteration count.
    """
    path = Path(path)
    cells = heatmap_cells(result)
    if not cells:
        raise ValueError("heatmap needs at least one sweep cell")

    ranges = sorted({r for r, _ in cells})
    densities = sorted({d for _, d in cells})
    log_y = all(d > 0 for d in densities)

    grid = np.full((len(densities), len(ranges)), np.nan)
    for (r, d), value in cells.items():
        grid[densities.index(d), ranges.index(r)] = value

    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        mesh = ax.pcolormesh(_edges(ranges, False), _edges(densities, log_y), grid, cmap="viridis", shading="flat")
        if log_y:
            ax.set_yscale("log")
        for (r, d), value in sorted(cells.items()):
            ax.text(r, d, f"{value:g}", ha="center", va="center", color="white", fontsize=9, gid=f"cell_{r:g}_{d:g}")

        ax.set_xticks(ranges)
        ax.set_xlabel("Communication range (cm)")
        ax.set_ylabel("Nanonode density (per cm³)")
        ax.set_title("Localization iterations (median)")
        fig.colorbar(mesh, ax=ax, label="Iterations")
        fig.tight_layout()

        try:
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as e:
            raise OSError(f"cannot write {path}: {e.strerror or e}") from e
        finally:
            plt.close(fig)

    logging.info(f"Wrote heatmap with {len(cells)} cells to {path}")
    return path
