"""Shared builders: small point-mass platforms for exact hand checks."""

from __future__ import annotations

import copy
import sys

import pytest

from carbonscope.deployment import NO_AGING, ReconfigProfile
from carbonscope.embodied import (DesignHouseProfile, EolProfile, MemoryProfile, PackageProfile,
                                  RetireProfile, TechnologyProfile, TestProfile)
from carbonscope.params import PointMass, Uniform
from carbonscope.platform import DeploymentScenario, PlatformSpec


def tech(**kw) -> TechnologyProfile:
    base = dict(node_name="t", epa=PointMass(1.0), gpa_per_wafer=PointMass(100.0),
                defect_density=PointMass(0.1), fab_carbon_intensity=PointMass(0.5),
                materials_new_per_cm2=0.2, materials_recycled_per_cm2=0.1,
                recycled_fraction_rho=0.5)
    base.update(kw)
    return TechnologyProfile(**base)


def design_house(**kw) -> DesignHouseProfile:
    base = dict(annual_energy_gwh=2.0, total_employees=20000, design_carbon_intensity=PointMass(0.475),
                employees_on_chip=100, gates_per_project=1e8, ip_durations_yr=(1.0,), soc_duration_yr=1.0)
    base.update(kw)
    return DesignHouseProfile(**base)


def test_profile(**kw) -> TestProfile:
    base = dict(test_times_hr=(0.01,), slots=10, overhead_hr=1.0, ate_power_w=10000.0,
                test_carbon_intensity=PointMass(0.475))
    base.update(kw)
    return TestProfile(**base)


test_profile.__test__ = False


def eol(rate: float = 0.3) -> EolProfile:
    return EolProfile(PointMass(rate), PointMass(0.0), PointMass(0.0))


def spec(kind: str = "ASIC", name: str | None = None, **kw) -> PlatformSpec:
    base = dict(
        name=name or kind, kind=kind, die_area_mm2=100.0, p_use_w=10.0, n_gates=1e8,
        cores_capacity_gates=1e9, tech=tech(), design_house=design_house(),
        package=PackageProfile(0.15, 0.05), test=test_profile(),
        retire=RetireProfile(0.8, PointMass(10.0), PointMass(1.0), 10.0),
        eol=eol(), memory=MemoryProfile(PointMass(0.05), 0.0),
    )
    base.update(kw)
    return PlatformSpec(**base)


def reconfig(**kw) -> ReconfigProfile:
    base = dict(t_sw_dev_mo=1.0, t_compile_mo=0.5, t_reg_mo=0.5, t_app_config_hr=0.01,
                dev_system_power_w=200.0, dev_carbon_intensity=PointMass(0.475))
    base.update(kw)
    return ReconfigProfile(**base)


def deployment(**kw) -> DeploymentScenario:
    base = dict(n_app=3, t_i_yr=2.0, n_vol=1000.0, f_use=0.2, app_size_gates=1e6,
                carbon_intensity_use=PointMass(0.475), aging=NO_AGING, reconfig=reconfig())
    base.update(kw)
    return DeploymentScenario(**base)


def uncertain_spec(kind: str = "ASIC", name: str | None = None, **kw) -> PlatformSpec:
    """A spec with continuous inputs, for Monte Carlo checks."""
    t = tech(epa=Uniform(0.9, 1.45, stream="technology.epa"),
             defect_density=Uniform(0.1, 0.4, stream="technology.defect_density"))
    return spec(kind, name, tech=t, **kw)


MINIMAL_PLATFORM = {
    "name": "P",
    "kind": "ASIC",
    "die_area_mm2": 100,
    "p_use_w": 10,
    "n_gates": 1e8,
    "cores_capacity_gates": 1e9,
    "technology": {
        "epa": 1.0, "gpa_per_wafer": 100.0, "defect_density": 0.1, "fab_carbon_intensity": 0.5,
        "materials_new_per_cm2": 0.2, "materials_recycled_per_cm2": 0.1, "recycled_fraction_rho": 0.5,
    },
    "design_house": {
        "annual_energy_gwh": 2, "total_employees": 20000, "design_carbon_intensity": 0.475,
        "employees_on_chip": 100, "gates_per_project": 1e8, "ip_durations_yr": [1.0], "soc_duration_yr": 1.0,
    },
    "package": {"fixed_cfp_per_package": 0.15, "per_area_cfp": 0.05},
    "test": {"test_times_hr": [0.01], "slots": 10, "overhead_hr": 1, "ate_power_w": 10000,
             "test_carbon_intensity": 0.475},
    "retire": {"recycle_fraction_delta": 0.8, "recycle_credit": 10, "discard_cost": 1, "device_mass_g": 10},
    "eol": {"lambda_fail": 0.3, "lambda_obsol": 0, "lambda_upgrade": 0},
    "memory": {"cfp_per_gb": 0.05, "capacity_gb": 0},
}

MINIMAL_SCENARIO = {
    "n_app": 3, "t_i_yr": 2.0, "n_vol": 1000, "f_use": 0.2, "app_size_gates": 1e6,
    "operation": {"carbon_intensity_use": 0.475, "aging": {"form": "none"}},
}


@pytest.fixture
def minimal_raw():
    return {"version": "1", "platforms": [copy.deepcopy(MINIMAL_PLATFORM)],
            "scenario": copy.deepcopy(MINIMAL_SCENARIO)}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion that ran."""
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
