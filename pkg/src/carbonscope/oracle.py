"""Brute-force reference computations used to cross-check the closed-form model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .deployment import AgingModel, aging_factor


@dataclass(frozen=True)
class ReplacementSimResult:
    trials: int
    mean_replacements: float
    stderr: float


def simulate_replacements(t_life_yr: float, lambda_total: float, trials: int,
                          seed: int = 0) -> ReplacementSimResult:
    """Count events of a rate-``lambda_total`` Poisson process on [0, t_life_yr] by
    summing exponential inter-arrival times, independently per trial."""
    if lambda_total < 0 or t_life_yr < 0 or trials < 1:
        raise ValueError("need lambda >= 0, t_life >= 0, trials >= 1")
    if lambda_total == 0 or t_life_yr == 0:
        return ReplacementSimResult(trials, 0.0, 0.0)
    rng = np.random.default_rng(seed)
    clock = np.zeros(trials)
    counts = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    scale = 1.0 / lambda_total
    while active.size:
        clock[active] += rng.exponential(scale, active.size)
        hit = clock[active] <= t_life_yr
        counts[active[hit]] += 1
        active = active[hit]
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return ReplacementSimResult(trials, mean, stderr)


def integrate_energy_bruteforce(aging: AgingModel, t_life_yr: float, steps: int = 1_000_000) -> float:
    """Trapezoid integral of the aging factor over [0, t_life_yr] (years)."""
    if steps < 10_000:
        raise ValueError("steps must be >= 1e4")
    if t_life_yr < 0:
        raise ValueError("t_life_yr must be >= 0")
    if t_life_yr == 0:
        return 0.0
    t = np.linspace(0.0, t_life_yr, steps + 1)
    g = np.asarray(aging_factor(aging, t), dtype=float)
    h = t_life_yr / steps
    return float(h * (g.sum() - 0.5 * (g[0] + g[-1])))
