"""Monte Carlo estimates, dominance probabilities, sweeps with crossover detection and
pairwise heatmaps, plus their CSV/JSON writers."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .breakdown import COMPONENT_FIELDS, CfpBreakdown
from .params import EXPECTED, SampleBlock
from .platform import DeploymentScenario, PlatformSpec, total_cfp

THREADS_ENV = "CARBONSCOPE_THREADS"
CHUNK_SIZE = 2048
QUANTILE_LEVELS = (0.05, 0.25, 0.5, 0.75, 0.95)
SWEEP_VARIABLES = ("n_app", "t_i", "n_vol", "f_use")
INTEGER_VARIABLES = ("n_app",)
AtoB, BtoA = "AtoB", "BtoA"


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, min(8, os.cpu_count() or 1))


# --------------------------------------------------------------------------
# sampling


def sample_breakdown(spec: PlatformSpec, scenario: DeploymentScenario, n_samples: int, seed: int,
                     threads: int | None = None) -> CfpBreakdown:
    """Per-sample breakdown arrays; sample i is keyed by (seed, i) whatever the chunking."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    threads = default_threads() if threads is None else max(1, threads)
    bounds = [(s, min(s + CHUNK_SIZE, n_samples)) for s in range(0, n_samples, CHUNK_SIZE)]

    def run(b):
        part = total_cfp(spec, scenario, SampleBlock(seed, b[0], b[1]))
        size = b[1] - b[0]
        return {f: np.broadcast_to(np.asarray(getattr(part, f), dtype=float), (size,))
                for f in COMPONENT_FIELDS}

    if threads == 1 or len(bounds) == 1:
        parts = [run(b) for b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, bounds))
    return CfpBreakdown(**{f: np.concatenate([p[f] for p in parts]) for f in COMPONENT_FIELDS})


@dataclass(frozen=True)
class McEstimate:
    platform: str
    mean: CfpBreakdown
    stddev_total: float
    quantiles: dict
    n_samples: int
    seed: int
    totals: np.ndarray = field(repr=False, compare=False, default=None)


def summarize(name: str, samples: CfpBreakdown, seed: int) -> McEstimate:
    totals = np.asarray(samples.total, dtype=float)
    n = totals.size
    q = np.quantile(totals, QUANTILE_LEVELS)
    return McEstimate(
        platform=name,
        mean=samples.mean(),
        stddev_total=float((totals - totals[0]).std(ddof=1)) if n > 1 else 0.0,  # shift keeps constants exact
        quantiles={lvl: float(v) for lvl, v in zip(QUANTILE_LEVELS, np.maximum.accumulate(q))},
        n_samples=n,
        seed=seed,
        totals=totals,
    )


def monte_carlo(specs: Sequence[PlatformSpec], scenario: DeploymentScenario, n_samples: int,
                seed: int = 0, threads: int | None = None) -> dict[str, McEstimate]:
    """Estimates for each platform; all platforms see the same per-sample draws."""
    return {s.name: summarize(s.name, sample_breakdown(s, scenario, n_samples, seed, threads), seed)
            for s in specs}


def prob_a_less_b(spec_a: PlatformSpec, spec_b: PlatformSpec, scenario: DeploymentScenario,
                  n_samples: int, seed: int = 0, threads: int | None = None) -> float:
    """Fraction of paired samples with total_a < total_b; ties count one half."""
    a = np.asarray(sample_breakdown(spec_a, scenario, n_samples, seed, threads).total)
    b = np.asarray(sample_breakdown(spec_b, scenario, n_samples, seed, threads).total)
    return float(np.mean((a < b) + 0.5 * (a == b)))


# --------------------------------------------------------------------------
# sweeps


def scenario_at(scenario: DeploymentScenario, variable: str, x: float) -> DeploymentScenario:
    if variable == "n_app":
        if x != int(x):
            raise ValueError(f"n_app must be integral, got {x}")
        if isinstance(scenario.t_i_yr, tuple):
            raise ValueError("cannot sweep n_app with a per-application t_i_yr list")
        return scenario.with_changes(n_app=int(x))
    if variable == "t_i":
        return scenario.with_changes(t_i_yr=float(x))
    if variable == "n_vol":
        return scenario.with_changes(n_vol=float(x))
    if variable == "f_use":
        return scenario.with_changes(f_use=float(x))
    raise ValueError(f"unknown sweep variable {variable!r}; expected one of {SWEEP_VARIABLES}")


def evaluate_total(spec: PlatformSpec, scenario: DeploymentScenario, mode: str = "expected",
                   n_samples: int = 10_000, seed: int = 0, threads: int | None = None) -> float:
    if mode == "expected":
        return float(total_cfp(spec, scenario, EXPECTED).total)
    if mode == "mc":
        return float(np.mean(sample_breakdown(spec, scenario, n_samples, seed, threads).total))
    raise ValueError(f"mode must be 'expected' or 'mc', got {mode!r}")


@dataclass(frozen=True)
class Crossing:
    index: int
    interpolated_x: float
    direction: str


@dataclass(frozen=True)
class CrossoverReport:
    variable_name: str
    grid: list
    series_a: list
    series_b: list
    crossings: list

    @property
    def ratio(self) -> list:
        return [a / b for a, b in zip(self.series_a, self.series_b)]

    def first_b_lower(self):
        """Smallest grid value where B is strictly lower than A, or None."""
        for x, a, b in zip(self.grid, self.series_a, self.series_b):
            if b < a:
                return x
        return None

    def first_a_lower(self):
        for x, a, b in zip(self.grid, self.series_a, self.series_b):
            if a < b:
                return x
        return None


def _check_grid(grid: Sequence[float]) -> list:
    grid = [float(g) for g in grid]
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    return grid


def find_crossings(grid: Sequence[float], diff: Sequence[float], integer: bool) -> list[Crossing]:
    """Sign changes of ``diff`` (A minus B) along ``grid``.

    AtoB means A was the lower-carbon option before the flip and B after it.
    """
    out = []
    sign = np.sign(diff)
    prev = None  # index of last nonzero sign
    for i, s in enumerate(sign):
        if s == 0:
            continue
        if prev is not None and sign[prev] != s:
            direction = AtoB if s > 0 else BtoA
            if prev == i - 1 and not integer:
                d0, d1 = diff[prev], diff[i]
                x = grid[prev] + (grid[i] - grid[prev]) * d0 / (d0 - d1)
                idx = i
            elif prev == i - 1:
                x, idx = grid[i], i
            else:
                # exact tie at grid points between prev and i
                idx = prev + 1
                x = grid[idx]
            out.append(Crossing(idx, float(x), direction))
        prev = i
    return out


def sweep_1d(spec_a: PlatformSpec, spec_b: PlatformSpec, scenario: DeploymentScenario,
             variable: str, grid: Sequence[float], mode: str = "expected",
             n_samples: int = 10_000, seed: int = 0, threads: int | None = None) -> CrossoverReport:
    grid = _check_grid(grid)
    series_a, series_b = [], []
    for x in grid:
        sc = scenario_at(scenario, variable, x)
        series_a.append(evaluate_total(spec_a, sc, mode, n_samples, seed, threads))
        series_b.append(evaluate_total(spec_b, sc, mode, n_samples, seed, threads))
    diff = [a - b for a, b in zip(series_a, series_b)]
    crossings = find_crossings(grid, diff, variable in INTEGER_VARIABLES)
    return CrossoverReport(variable, grid, series_a, series_b, crossings)


def prob_curve(spec_a: PlatformSpec, spec_b: PlatformSpec, scenario: DeploymentScenario,
               variable: str, grid: Sequence[float], n_samples: int = 10_000, seed: int = 0,
               threads: int | None = None) -> list[tuple[float, float]]:
    return [(float(x), prob_a_less_b(spec_a, spec_b, scenario_at(scenario, variable, x),
                                     n_samples, seed, threads)) for x in grid]


@dataclass(frozen=True)
class HeatmapGrid:
    x_name: str
    y_name: str
    x_grid: list
    y_grid: list
    ratio: np.ndarray   # shape (len(y_grid), len(x_grid)), CFP_A / CFP_B
    locus: list
    degenerate: bool = False


def ratio_locus(x_grid: Sequence[float], y_grid: Sequence[float], ratio: np.ndarray) -> list:
    """Points on cell edges where log(ratio) changes sign, linearly interpolated."""
    z = np.log(ratio)
    ny, nx = z.shape
    points = set()
    for j in range(ny):
        for i in range(nx):
            if z[j, i] == 0.0:
                points.add((float(x_grid[i]), float(y_grid[j])))
            if i + 1 < nx and z[j, i] * z[j, i + 1] < 0:
                t = z[j, i] / (z[j, i] - z[j, i + 1])
                points.add((float(x_grid[i] + t * (x_grid[i + 1] - x_grid[i])), float(y_grid[j])))
            if j + 1 < ny and z[j, i] * z[j + 1, i] < 0:
                t = z[j, i] / (z[j, i] - z[j + 1, i])
                points.add((float(x_grid[i]), float(y_grid[j] + t * (y_grid[j + 1] - y_grid[j]))))
    return sorted(points)


def sweep_2d(spec_a: PlatformSpec, spec_b: PlatformSpec, scenario: DeploymentScenario,
             var_x: str, var_y: str, x_grid: Sequence[float], y_grid: Sequence[float],
             mode: str = "expected", n_samples: int = 10_000, seed: int = 0,
             threads: int | None = None) -> HeatmapGrid:
    if var_x == var_y:
        raise ValueError("heatmap axes must be different variables")
    x_grid, y_grid = _check_grid(x_grid), _check_grid(y_grid)
    ratio = np.empty((len(y_grid), len(x_grid)))
    for j, y in enumerate(y_grid):
        sc_y = scenario_at(scenario, var_y, y)
        for i, x in enumerate(x_grid):
            sc = scenario_at(sc_y, var_x, x)
            a = evaluate_total(spec_a, sc, mode, n_samples, seed, threads)
            b = evaluate_total(spec_b, sc, mode, n_samples, seed, threads)
            if not (a > 0 and b > 0):
                raise ValueError(f"non-positive total at {var_x}={x}, {var_y}={y}")
            ratio[j, i] = a / b
    if np.all(np.abs(np.log(ratio)) < 1e-12):
        return HeatmapGrid(var_x, var_y, x_grid, y_grid, ratio, [], degenerate=True)
    return HeatmapGrid(var_x, var_y, x_grid, y_grid, ratio, ratio_locus(x_grid, y_grid, ratio))


def interpolate_ratio(grid: HeatmapGrid, x: float, y: float) -> float:
    """Bilinear interpolation of log(ratio) at (x, y), returned as a ratio."""
    xs, ys, z = np.asarray(grid.x_grid), np.asarray(grid.y_grid), np.log(grid.ratio)
    i = int(np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2))
    j = int(np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(ys) - 2))
    tx = (x - xs[i]) / (xs[i + 1] - xs[i])
    ty = (y - ys[j]) / (ys[j + 1] - ys[j])
    v = ((1 - tx) * (1 - ty) * z[j, i] + tx * (1 - ty) * z[j, i + 1]
         + (1 - tx) * ty * z[j + 1, i] + tx * ty * z[j + 1, i + 1])
    return float(math.exp(v))


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    return repr(float(v))


def write_sweep_csv(report: CrossoverReport, path: Path) -> None:
    by_index = {c.index: c for c in report.crossings}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "cfp_a", "cfp_b", "ratio", "crossing", "direction"])
        for i, (x, a, b) in enumerate(zip(report.grid, report.series_a, report.series_b)):
            c = by_index.get(i)
            w.writerow([_fmt(x), _fmt(a), _fmt(b), _fmt(a / b),
                        _fmt(c.interpolated_x) if c else "", c.direction if c else ""])


def write_heatmap_csv(grid: HeatmapGrid, path: Path, locus_path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "ratio"])
        for j, y in enumerate(grid.y_grid):
            for i, x in enumerate(grid.x_grid):
                w.writerow([_fmt(x), _fmt(y), _fmt(grid.ratio[j, i])])
    with open(locus_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in grid.locus:
            w.writerow([_fmt(x), _fmt(y)])


def write_prob_csv(curve: Iterable[tuple[float, float]], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "p_a_less_b"])
        for x, p in curve:
            w.writerow([_fmt(x), _fmt(p)])


def write_sidecar(path: Path, seed: int, config_hash: str, mode: str, **extra) -> None:
    payload = {"seed": seed, "config_hash": config_hash, "mode": mode}
    payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_csv_columns(path: Path) -> dict[str, list]:
    """Read a CSV written above back into columns (floats where parseable)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols: dict[str, list] = {}
    for row in rows:
        for k, v in row.items():
            try:
                val = float(v)
            except ValueError:
                val = v
            cols.setdefault(k, []).append(val)
    return cols
