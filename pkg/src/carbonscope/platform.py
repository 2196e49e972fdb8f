"""Lifecycle composition per platform: ASICs are redesigned per application, processors
(FPGA, GPU, CPU) are reused across applications within a device generation."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from . import embodied
from .breakdown import CfpBreakdown
from .deployment import (DEFAULT_AGING, DEFAULT_SIMPSON_STEPS, AgingModel, OperationProfile,
                         ReconfigProfile, deployment_cfp)
from .embodied import (DesignHouseProfile, EolProfile, MemoryProfile, PackageProfile,
                       RetireProfile, TechnologyProfile, TestProfile)
from .params import Context, ParamDistribution

KINDS = ("ASIC", "FPGA", "GPU", "CPU")


@dataclass(frozen=True)
class PlatformSpec:
    name: str
    kind: str
    die_area_mm2: float
    p_use_w: float
    n_gates: float
    cores_capacity_gates: float
    tech: TechnologyProfile
    design_house: DesignHouseProfile
    package: PackageProfile
    test: TestProfile
    retire: RetireProfile
    eol: EolProfile
    memory: MemoryProfile
    apps_per_device: int | None = None
    reconfig: ReconfigProfile | None = None
    aging: AgingModel | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.die_area_mm2 > 0:
            raise ValueError("die_area_mm2 must be > 0")
        if self.p_use_w < 0:
            raise ValueError("p_use_w must be >= 0")
        if not self.cores_capacity_gates > 0:
            raise ValueError("cores_capacity_gates must be > 0")
        if not self.n_gates > 0:
            raise ValueError("n_gates must be > 0")
        if self.apps_per_device is not None and self.apps_per_device < 1:
            raise ValueError("apps_per_device must be >= 1")

    @property
    def is_asic(self) -> bool:
        return self.kind == "ASIC"


@dataclass(frozen=True)
class DeploymentScenario:
    """Shared deployment conditions; ``apps_per_device`` is the GPU grouping k."""

    n_app: int
    t_i_yr: float | tuple[float, ...]
    n_vol: float
    f_use: float
    app_size_gates: float
    carbon_intensity_use: ParamDistribution
    aging: AgingModel = field(default=DEFAULT_AGING)
    reconfig: ReconfigProfile | None = None
    apps_per_device: int | None = None
    scale_op_by_nproc: bool = True

    def __post_init__(self):
        if isinstance(self.t_i_yr, (list, tuple)):
            object.__setattr__(self, "t_i_yr", tuple(float(t) for t in self.t_i_yr))
        if self.n_app < 1:
            raise ValueError("n_app must be >= 1")
        if not self.n_vol >= 1:
            raise ValueError("n_vol must be >= 1")
        if not 0.0 < self.f_use <= 1.0:
            raise ValueError("f_use must lie in (0, 1]")
        if not self.app_size_gates > 0:
            raise ValueError("app_size_gates must be > 0")
        if self.apps_per_device is not None and self.apps_per_device < 1:
            raise ValueError("apps_per_device must be >= 1")
        if isinstance(self.t_i_yr, tuple):
            if len(self.t_i_yr) != self.n_app:
                raise ValueError("t_i_yr list length must equal n_app")
            if any(t <= 0 for t in self.t_i_yr):
                raise ValueError("t_i_yr must be > 0")
        elif not self.t_i_yr > 0:
            raise ValueError("t_i_yr must be > 0")

    def app_lifetimes(self) -> list[float]:
        if isinstance(self.t_i_yr, tuple):
            return list(self.t_i_yr)
        return [float(self.t_i_yr)] * self.n_app

    def with_changes(self, **changes) -> "DeploymentScenario":
        # a scalar T_i is broadcast when n_app changes; a per-app list must be replaced explicitly
        return dataclasses.replace(self, **changes)


def device_generations(n_app: int, apps_per_device: int, kind: str | None = None) -> int:
    """Number of device generations needed to serve ``n_app`` applications."""
    if n_app < 1 or apps_per_device < 1:
        raise ValueError("n_app and apps_per_device must be >= 1")
    if kind == "ASIC":
        return n_app
    return math.ceil(n_app / apps_per_device)


def effective_apps_per_device(spec: PlatformSpec, scenario: DeploymentScenario) -> int:
    """ASIC: 1. Processors: platform override, then the scenario's k for GPUs, else full reuse."""
    if spec.is_asic:
        return 1
    if spec.apps_per_device is not None:
        return spec.apps_per_device
    if spec.kind == "GPU" and scenario.apps_per_device is not None:
        return scenario.apps_per_device
    return scenario.n_app


def operation_profile(spec: PlatformSpec, scenario: DeploymentScenario) -> OperationProfile:
    aging = spec.aging if spec.aging is not None else scenario.aging
    return OperationProfile(spec.p_use_w, scenario.f_use, scenario.carbon_intensity_use, aging)


def reconfig_profile(spec: PlatformSpec, scenario: DeploymentScenario) -> ReconfigProfile | None:
    rc = spec.reconfig if spec.reconfig is not None else scenario.reconfig
    if rc is not None and spec.is_asic and rc.t_app_config_hr:
        # ASIC software flows carry regression time but no per-device configuration
        rc = dataclasses.replace(rc, t_app_config_hr=0.0)
    return rc


def total_cfp(spec: PlatformSpec, scenario: DeploymentScenario, ctx: Context,
              n_steps: int = DEFAULT_SIMPSON_STEPS) -> CfpBreakdown:
    """Lifecycle carbon of serving every application in ``scenario`` on ``spec``."""
    nproc = embodied.n_proc(scenario.app_size_gates, spec.cores_capacity_gates)
    op_nproc = nproc if scenario.scale_op_by_nproc else 1
    op = operation_profile(spec, scenario)
    rc = reconfig_profile(spec, scenario)
    n_vol = scenario.n_vol
    lifetimes = scenario.app_lifetimes()

    k = effective_apps_per_device(spec, scenario)
    groups = [lifetimes[i:i + k] for i in range(0, len(lifetimes), k)]
    result = CfpBreakdown()
    for group in groups:
        result = result + embodied.embodied_cfp(spec, n_vol, math.fsum(group), ctx, nproc)
        age = 0.0
        for t_i in group:
            result = result + deployment_cfp(op, rc, n_vol, 1, t_i, ctx, op_nproc,
                                             t_start=age, n_steps=n_steps)
            age += t_i
    return result


def build_testcase(base: PlatformSpec, area_ratio: float, power_ratio: float, **overrides) -> PlatformSpec:
    """Iso-performance counterpart of ``base``: area and power scaled, everything else inherited."""
    if not (area_ratio > 0 and power_ratio > 0):
        raise ValueError("ratios must be > 0")
    if area_ratio == 1 and power_ratio == 1 and not overrides:
        return base
    changes = dict(die_area_mm2=base.die_area_mm2 * area_ratio, p_use_w=base.p_use_w * power_ratio)
    changes.update(overrides)
    return dataclasses.replace(base, **changes)

