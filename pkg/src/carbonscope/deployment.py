"""Operational carbon with aging, and application development/reconfiguration carbon."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .breakdown import CfpBreakdown
from .params import Context, ParamDistribution, draw

HOURS_PER_YEAR = 8766.0   # 365.25 days
HOURS_PER_MONTH = 730.5
DEFAULT_SIMPSON_STEPS = 16384


@dataclass(frozen=True)
class AgingModel:
    """Energy-efficiency degradation ``gamma(t)``; ``form`` is ``"none"`` or ``"power_law"``.

    The power law is ``1 + k * t**n`` with t in years.
    """

    form: str = "none"
    k: float = 0.0
    n: float = 1.0

    def __post_init__(self):
        if self.form not in ("none", "power_law"):
            raise ValueError(f"unknown aging form {self.form!r}")
        if self.form == "power_law":
            if self.k < 0:
                raise ValueError("aging k must be >= 0")
            if not self.n > 0:
                raise ValueError("aging n must be > 0")

    @classmethod
    def power_law(cls, k: float = 0.05, n: float = 0.2) -> "AgingModel":
        return cls("power_law", k, n)

    @property
    def is_ideal(self) -> bool:
        return self.form == "none" or self.k == 0.0

    def antiderivative(self, t):
        """Closed-form integral of gamma from 0 to ``t``."""
        if self.is_ideal:
            return t
        return t + self.k * np.power(t, self.n + 1.0) / (self.n + 1.0)


NO_AGING = AgingModel()
DEFAULT_AGING = AgingModel.power_law()


@dataclass(frozen=True)
class OperationProfile:
    p_use_w: float
    f_use: float
    carbon_intensity_use: ParamDistribution  # kg CO2-eq/kWh
    aging: AgingModel = field(default=NO_AGING)

    def __post_init__(self):
        if self.p_use_w < 0:
            raise ValueError("p_use_w must be >= 0")
        if not 0.0 < self.f_use <= 1.0:
            raise ValueError("f_use must lie in (0, 1]")


@dataclass(frozen=True)
class ReconfigProfile:
    t_sw_dev_mo: float
    t_compile_mo: float
    t_reg_mo: float
    t_app_config_hr: float
    dev_system_power_w: float
    dev_carbon_intensity: ParamDistribution

    def __post_init__(self):
        for name in ("t_sw_dev_mo", "t_compile_mo", "t_reg_mo", "t_app_config_hr",
                     "dev_system_power_w"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def development_months(self) -> float:
        return self.t_sw_dev_mo + self.t_compile_mo + self.t_reg_mo


def aging_factor(model: AgingModel, t_yr):
    if np.any(np.asarray(t_yr) < 0):
        raise ValueError("t must be >= 0")
    if model.is_ideal:
        return np.ones_like(t_yr, dtype=float) if isinstance(t_yr, np.ndarray) else 1.0
    return 1.0 + model.k * np.power(t_yr, model.n)


def aging_integral(model: AgingModel, t_end: float, t_start: float = 0.0,
                   n_steps: int = DEFAULT_SIMPSON_STEPS) -> float:
    """Integral of gamma over [t_start, t_end] years by composite Simpson's rule."""
    if t_start < 0 or t_end < t_start:
        raise ValueError("need 0 <= t_start <= t_end")
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if model.is_ideal:
        return t_end - t_start
    if t_end == t_start:
        return 0.0
    n = n_steps + (n_steps % 2)
    t = np.linspace(t_start, t_end, n + 1)
    return float(simpson(aging_factor(model, t), x=t))


def lifetime_energy(op: OperationProfile, t_life_yr: float, n_steps: int = DEFAULT_SIMPSON_STEPS,
                    t_start: float = 0.0) -> float:
    """Energy in kWh drawn over ``t_life_yr`` years starting at device age ``t_start``."""
    if t_life_yr < 0:
        raise ValueError("t_life_yr must be >= 0")
    if op.aging.is_ideal:
        return op.p_use_w * op.f_use * t_life_yr * HOURS_PER_YEAR / 1000.0
    integral = aging_integral(op.aging, t_start + t_life_yr, t_start, n_steps)
    return op.p_use_w * op.f_use * integral * HOURS_PER_YEAR / 1000.0


def operational_cfp(op: OperationProfile, t_life_yr: float, ctx: Context, t_start: float = 0.0,
                    n_steps: int = DEFAULT_SIMPSON_STEPS):
    return draw(op.carbon_intensity_use, ctx) * lifetime_energy(op, t_life_yr, n_steps, t_start)


def reconfig_time(rc: ReconfigProfile, n_app: int, n_vol) -> float:
    """Hours of development-system time: per-app development plus per-device configuration."""
    if n_app < 0 or np.any(np.asarray(n_vol) < 0):
        raise ValueError("n_app and n_vol must be >= 0")
    return n_app * rc.development_months * HOURS_PER_MONTH + n_vol * rc.t_app_config_hr


def reconfig_cfp(rc: ReconfigProfile, n_app: int, n_vol, ctx: Context):
    if rc.dev_system_power_w == 0:
        return 0.0
    return draw(rc.dev_carbon_intensity, ctx) * (rc.dev_system_power_w / 1000.0) * reconfig_time(rc, n_app, n_vol)


def deployment_cfp(op: OperationProfile, rc: ReconfigProfile | None, n_vol, n_app_segment: int,
                   t_life_yr: float, ctx: Context, n_proc: int = 1, t_start: float = 0.0,
                   n_steps: int = DEFAULT_SIMPSON_STEPS) -> CfpBreakdown:
    """Fleet operational carbon over one segment plus its reconfiguration carbon."""
    operational = n_vol * n_proc * operational_cfp(op, t_life_yr, ctx, t_start, n_steps)
    reconfiguration = 0.0 if rc is None else reconfig_cfp(rc, n_app_segment, n_vol, ctx)
    return CfpBreakdown(operational=operational, reconfiguration=reconfiguration)
