"""Lifecycle carbon modeling for ASIC, FPGA, GPU and CPU platforms."""

from .analysis import (CrossoverReport, HeatmapGrid, McEstimate, monte_carlo, prob_a_less_b,
                       sweep_1d, sweep_2d)
from .breakdown import CfpBreakdown
from .deployment import AgingModel, OperationProfile, ReconfigProfile
from .params import EXPECTED, SampleBlock, SampleContext
from .platform import DeploymentScenario, PlatformSpec, build_testcase, device_generations, total_cfp
from .scenario import ScenarioError, load_scenario

__version__ = "0.1.0"

__all__ = [
    "AgingModel", "CfpBreakdown", "CrossoverReport", "DeploymentScenario", "EXPECTED",
    "HeatmapGrid", "McEstimate", "OperationProfile", "PlatformSpec", "ReconfigProfile",
    "SampleBlock", "SampleContext", "ScenarioError", "build_testcase", "device_generations",
    "load_scenario", "monte_carlo", "prob_a_less_b", "sweep_1d", "sweep_2d", "total_cfp",
]
