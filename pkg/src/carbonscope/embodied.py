"""Embodied carbon: design, fabrication, packaging, test, retirement, memory and
end-of-life replacement.

Functions take a sampling context (see :mod:`carbonscope.params`) and return
floats in expected/scalar mode or arrays for a :class:`SampleBlock`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .breakdown import CfpBreakdown
from .params import Context, ParamDistribution, draw

if TYPE_CHECKING:  # pragma: no cover
    from .platform import PlatformSpec

KWH_PER_GWH = 1e6
MM2_PER_CM2 = 100.0
WAFER_300MM_AREA_CM2 = math.pi * 15.0**2


@dataclass(frozen=True)
class TechnologyProfile:
    node_name: str
    epa: ParamDistribution                  # kWh/cm^2
    gpa_per_wafer: ParamDistribution        # kg CO2-eq per wafer
    defect_density: ParamDistribution       # defects/cm^2
    fab_carbon_intensity: ParamDistribution  # kg CO2-eq/kWh
    materials_new_per_cm2: float
    materials_recycled_per_cm2: float
    recycled_fraction_rho: float
    alpha: float = 2.0
    wafer_area_cm2: float = WAFER_300MM_AREA_CM2

    def __post_init__(self):
        if not self.wafer_area_cm2 > 0:
            raise ValueError("wafer_area_cm2 must be > 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0")
        if not 0.0 <= self.recycled_fraction_rho <= 1.0:
            raise ValueError("recycled_fraction_rho must lie in [0, 1]")
        if self.materials_recycled_per_cm2 > self.materials_new_per_cm2:
            raise ValueError("recycled materials cannot cost more than new materials")


@dataclass(frozen=True)
class DesignHouseProfile:
    annual_energy_gwh: float
    total_employees: int
    design_carbon_intensity: ParamDistribution
    employees_on_chip: float
    gates_per_project: float
    ip_durations_yr: tuple[float, ...]
    soc_duration_yr: float

    def __post_init__(self):
        object.__setattr__(self, "ip_durations_yr", tuple(self.ip_durations_yr))
        if self.total_employees <= 0:
            raise ValueError("total_employees must be > 0")
        if not self.gates_per_project > 0:
            raise ValueError("gates_per_project must be > 0")
        if self.soc_duration_yr < 0 or any(t < 0 for t in self.ip_durations_yr):
            raise ValueError("design durations must be >= 0")

    @property
    def project_duration_yr(self) -> float:
        return math.fsum(self.ip_durations_yr) + self.soc_duration_yr


@dataclass(frozen=True)
class TestProfile:
    test_times_hr: tuple[float, ...]
    slots: int
    overhead_hr: float
    ate_power_w: float
    test_carbon_intensity: ParamDistribution

    __test__ = False  # not a pytest class

    def __post_init__(self):
        object.__setattr__(self, "test_times_hr", tuple(self.test_times_hr))
        if self.slots < 1:
            raise ValueError("slots must be >= 1")
        if self.overhead_hr < 0 or any(t < 0 for t in self.test_times_hr):
            raise ValueError("test times must be >= 0")
        if self.ate_power_w < 0:
            raise ValueError("ate_power_w must be >= 0")


@dataclass(frozen=True)
class RetireProfile:
    recycle_fraction_delta: float
    recycle_credit: ParamDistribution   # MTCO2E per ton
    discard_cost: ParamDistribution     # MTCO2E per ton
    device_mass_g: float

    def __post_init__(self):
        if not 0.0 <= self.recycle_fraction_delta <= 1.0:
            raise ValueError("recycle_fraction_delta must lie in [0, 1]")
        if not self.device_mass_g > 0:
            raise ValueError("device_mass_g must be > 0")


@dataclass(frozen=True)
class EolProfile:
    lambda_fail: ParamDistribution
    lambda_obsol: ParamDistribution
    lambda_upgrade: ParamDistribution


@dataclass(frozen=True)
class MemoryProfile:
    cfp_per_gb: ParamDistribution  # kg CO2-eq/GB
    capacity_gb: float

    def __post_init__(self):
        if self.capacity_gb < 0:
            raise ValueError("capacity_gb must be >= 0")


@dataclass(frozen=True)
class PackageProfile:
    fixed_cfp_per_package: float  # kg CO2-eq
    per_area_cfp: float           # kg CO2-eq/cm^2

    def __post_init__(self):
        if self.fixed_cfp_per_package < 0 or self.per_area_cfp < 0:
            raise ValueError("package CFP terms must be >= 0")


# --------------------------------------------------------------------------
# design


def design_cfp(profile: DesignHouseProfile, n_gates: float, ctx: Context):
    """One-time design carbon of a chip with ``n_gates`` gates (kg CO2-eq)."""
    if profile.gates_per_project == 0:
        raise ValueError("gates_per_project must be non-zero")
    if not n_gates > 0:
        raise ValueError("n_gates must be > 0")
    kwh_per_employee = profile.annual_energy_gwh * KWH_PER_GWH / profile.total_employees
    per_employee_year = kwh_per_employee * draw(profile.design_carbon_intensity, ctx)
    return (per_employee_year * profile.employees_on_chip
            * (n_gates / profile.gates_per_project) * profile.project_duration_yr)


# --------------------------------------------------------------------------
# manufacturing


def die_yield(area_cm2, d0, alpha: float):
    """Negative-binomial die yield."""
    return (1.0 + area_cm2 * d0 / alpha) ** (-alpha)


def materials_cfp_per_cm2(tech: TechnologyProfile) -> float:
    rho = tech.recycled_fraction_rho
    if rho == 1.0:
        return tech.materials_recycled_per_cm2
    return rho * tech.materials_recycled_per_cm2 + (1.0 - rho) * tech.materials_new_per_cm2


def cfpa(tech: TechnologyProfile, ctx: Context, yield_area_cm2: float = 1.0):
    """Manufacturing carbon per cm^2 of good silicon.

    The yield divisor is evaluated at ``yield_area_cm2`` (unit area by default);
    :func:`manufacturing_cfp` passes the actual die area.
    """
    energy = draw(tech.fab_carbon_intensity, ctx) * draw(tech.epa, ctx)
    gas = draw(tech.gpa_per_wafer, ctx) / tech.wafer_area_cm2
    numerator = energy + gas + materials_cfp_per_cm2(tech)
    return numerator / die_yield(yield_area_cm2, draw(tech.defect_density, ctx), tech.alpha)


def manufacturing_cfp(die_area_mm2: float, tech: TechnologyProfile, ctx: Context):
    if die_area_mm2 < 0:
        raise ValueError("die area must be >= 0")
    if die_area_mm2 == 0:
        return 0.0
    area_cm2 = die_area_mm2 / MM2_PER_CM2
    return cfpa(tech, ctx, yield_area_cm2=area_cm2) * area_cm2


def package_cfp(die_area_mm2: float, pkg: PackageProfile) -> float:
    if die_area_mm2 < 0:
        raise ValueError("die area must be >= 0")
    return pkg.fixed_cfp_per_package + pkg.per_area_cfp * (die_area_mm2 / MM2_PER_CM2)


# --------------------------------------------------------------------------
# retire, test, memory


def retire_cfp(profile: RetireProfile, ctx: Context):
    """Discard cost minus recycling credit for one device; negative when the credit wins."""
    delta = profile.recycle_fraction_delta
    per_ton = (1.0 - delta) * draw(profile.discard_cost, ctx) - delta * draw(profile.recycle_credit, ctx)
    # MTCO2E/ton * tonnes * 1000 kg/tonne, with tonnes = grams * 1e-6
    return per_ton * profile.device_mass_g * 1e-3


def testing_total_time(test: TestProfile, n_vol) -> float:
    """ATE hours to test ``n_vol`` chips, including loading overhead."""
    if np.any(np.asarray(n_vol) < 0):
        raise ValueError("n_vol must be >= 0")
    per_slot = n_vol / test.slots
    return sum(per_slot * t for t in test.test_times_hr) + test.overhead_hr


def testing_cfp_total(test: TestProfile, n_units, ctx: Context):
    return draw(test.test_carbon_intensity, ctx) * (test.ate_power_w / 1000.0) * testing_total_time(test, n_units)


def testing_cfp_per_device(test: TestProfile, n_vol, n_eol, ctx: Context):
    """Test carbon per tested unit; replacement units are tested too."""
    units = n_vol + n_eol
    if np.any(np.asarray(units) <= 0):
        raise ValueError("no tested units")
    return testing_cfp_total(test, n_vol + np.ceil(n_eol), ctx) / units


def memory_cfp(mem: MemoryProfile, ctx: Context):
    if mem.capacity_gb == 0:
        return 0.0
    return draw(mem.cfp_per_gb, ctx) * mem.capacity_gb


# --------------------------------------------------------------------------
# replacement and per-device totals


def eol_rate(eol: EolProfile, ctx: Context):
    return draw(eol.lambda_fail, ctx) + draw(eol.lambda_obsol, ctx) + draw(eol.lambda_upgrade, ctx)


def expected_replacements(n_vol, t_life_yr: float, eol: EolProfile, ctx: Context):
    """Expected replacements of ``n_vol`` devices over ``t_life_yr`` years."""
    if np.any(np.asarray(n_vol) < 0) or t_life_yr < 0:
        raise ValueError("n_vol and t_life_yr must be >= 0")
    return n_vol * t_life_yr * eol_rate(eol, ctx)


def n_proc(app_size_gates: float, cores_capacity_gates: float) -> int:
    """Devices of one type needed to host an application."""
    if not cores_capacity_gates > 0:
        raise ValueError("cores_capacity_gates must be > 0")
    if not app_size_gates > 0:
        raise ValueError("app_size_gates must be > 0")
    return max(1, math.ceil(app_size_gates / cores_capacity_gates))


def per_device_cfp(spec: "PlatformSpec", n_vol, n_eol, ctx: Context, n_proc: int = 1) -> CfpBreakdown:
    """Embodied carbon of one deployed system (``n_proc`` identical chips)."""
    return CfpBreakdown(
        manufacturing=n_proc * manufacturing_cfp(spec.die_area_mm2, spec.tech, ctx),
        package=n_proc * package_cfp(spec.die_area_mm2, spec.package),
        retire=n_proc * retire_cfp(spec.retire, ctx),
        test=n_proc * testing_cfp_per_device(spec.test, n_vol, n_eol, ctx),
        memory=n_proc * memory_cfp(spec.memory, ctx),
    )


def embodied_cfp(spec: "PlatformSpec", n_vol, t_life_yr: float, ctx: Context,
                 n_proc: int = 1) -> CfpBreakdown:
    """Design once, then build ``n_vol`` systems plus their expected replacements."""
    if np.any(np.asarray(n_vol) < 1):
        raise ValueError("n_vol must be >= 1")
    n_eol = expected_replacements(n_vol, t_life_yr, spec.eol, ctx)
    device = per_device_cfp(spec, n_vol, n_eol, ctx, n_proc)
    initial = device.scaled(n_vol)
    return CfpBreakdown(
        design=design_cfp(spec.design_house, spec.n_gates, ctx),
        manufacturing=initial.manufacturing,
        package=initial.package,
        test=initial.test,
        retire=initial.retire,
        memory=initial.memory,
        eol_replacement=n_eol * device.total,
    )
