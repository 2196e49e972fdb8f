"""Scenario files: JSON loading with unit conversion, inheritance and validation, plus a
canonical dump that reloads to the same resolved scenario."""

from __future__ import annotations

import copy
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import params
from .deployment import AgingModel, ReconfigProfile
from .embodied import (WAFER_300MM_AREA_CM2, DesignHouseProfile, EolProfile, MemoryProfile,
                       PackageProfile, RetireProfile, TechnologyProfile, TestProfile)
from .platform import KINDS, DeploymentScenario, PlatformSpec

DATA_DIR = Path(__file__).resolve().parent / "data"
FORMAT_VERSION = "1"

BUILTINS = {
    "dnn": "calibration/dnn_vs_asic.json",
    "imgproc": "calibration/imgproc_vs_asic.json",
    "crypto": "calibration/crypto_vs_asic.json",
    "rnn_hp": "calibration/rnn_hp_vs_gpu.json",
    "rnn_ee": "calibration/rnn_ee_vs_gpu.json",
    "lhcb": "calibration/lhcb_vs_gpu.json",
    "randgen": "calibration/randgen_vs_cpu.json",
    "llama2": "calibration/llama2_vs_cpu.json",
    "fir": "calibration/fir_vs_cpu.json",
    "industry_tpu": "industry/tpu_v4.json",
    "industry_h100": "industry/h100.json",
    "industry_i9": "industry/i9.json",
    "industry_agilex7": "industry/agilex7.json",
}
ALIASES = {
    "tpu_v4": "industry_tpu", "tpu": "industry_tpu", "h100": "industry_h100",
    "i9": "industry_i9", "agilex7": "industry_agilex7",
    "dnn_vs_asic": "dnn", "imgproc_vs_asic": "imgproc", "crypto_vs_asic": "crypto",
    "rnn_hp_vs_gpu": "rnn_hp", "rnn_ee_vs_gpu": "rnn_ee", "lhcb_vs_gpu": "lhcb",
    "randgen_vs_cpu": "randgen", "llama2_vs_cpu": "llama2", "fir_vs_cpu": "fir",
}


class ScenarioError(Exception):
    """Base class for every scenario loading problem."""


class ScenarioNotFound(ScenarioError):
    pass


class SchemaError(ScenarioError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class UnitError(SchemaError):
    pass


class CyclicExtendsError(ScenarioError):
    pass


# --------------------------------------------------------------------------
# units: symbol -> (dimension, factor to the dimension's reference unit)

UNITS = {
    "kWh/cm2": ("energy/area", 1.0), "Wh/cm2": ("energy/area", 1e-3), "kWh/mm2": ("energy/area", 100.0),
    "g": ("mass", 1e-3), "kg": ("mass", 1.0), "t": ("mass", 1e3),
    "1/cm2": ("1/area", 1.0), "1/mm2": ("1/area", 100.0),
    "kg/kWh": ("mass/energy", 1.0), "g/kWh": ("mass/energy", 1e-3), "kg/MWh": ("mass/energy", 1e-3),
    "kg/cm2": ("mass/area", 1.0), "g/cm2": ("mass/area", 1e-3), "kg/mm2": ("mass/area", 100.0),
    "g/mm2": ("mass/area", 0.1),
    "cm2": ("area", 1.0), "mm2": ("area", 0.01),
    "kWh": ("energy", 1.0), "MWh": ("energy", 1e3), "GWh": ("energy", 1e6),
    "hr": ("time", 1.0), "h": ("time", 1.0), "day": ("time", 24.0), "mo": ("time", 730.5),
    "yr": ("time", 8766.0),
    "W": ("power", 1.0), "kW": ("power", 1e3),
    "kg/GB": ("mass/data", 1.0), "g/GB": ("mass/data", 1e-3),
    "GB": ("data", 1.0), "TB": ("data", 1e3),
    "MTCO2E/ton": ("mass/mass", 1.0),
    "1/yr": ("rate", 1.0), "1/mo": ("rate", 12.0),
}


def unit_factor(unit: str, canonical: str | None, path: str) -> float:
    if canonical is None:
        raise UnitError(path, f"field is dimensionless; unit {unit!r} not allowed")
    if unit not in UNITS:
        raise UnitError(path, f"unknown unit {unit!r}")
    dim, f = UNITS[unit]
    cdim, cf = UNITS[canonical]
    if dim != cdim:
        raise UnitError(path, f"unit {unit!r} is not compatible with {canonical!r}")
    return f / cf


# --------------------------------------------------------------------------
# field tables

_REQUIRED = object()


@dataclass(frozen=True)
class F:
    kind: str                 # dist | float | int | floats | str | bool
    unit: str | None = None
    lo: float | None = None   # inclusive bounds
    hi: float | None = None
    gt: float | None = None   # exclusive lower bound
    default: Any = _REQUIRED


TECHNOLOGY = {
    "node_name": F("str", default="10nm"),
    "epa": F("dist", "kWh/cm2"),
    "gpa_per_wafer": F("dist", "kg"),
    "defect_density": F("dist", "1/cm2"),
    "fab_carbon_intensity": F("dist", "kg/kWh"),
    "materials_new_per_cm2": F("float", "kg/cm2", lo=0.0),
    "materials_recycled_per_cm2": F("float", "kg/cm2", lo=0.0),
    "recycled_fraction_rho": F("float", None, lo=0.0, hi=1.0),
    "alpha": F("float", None, gt=0.0, default=2.0),
    "wafer_area_cm2": F("float", "cm2", gt=0.0, default=WAFER_300MM_AREA_CM2),
}
DESIGN_HOUSE = {
    "annual_energy_gwh": F("float", "GWh", lo=0.0),
    "total_employees": F("int", gt=0),
    "design_carbon_intensity": F("dist", "kg/kWh"),
    "employees_on_chip": F("float", lo=0.0),
    "gates_per_project": F("float", gt=0.0),
    "ip_durations_yr": F("floats", "yr", lo=0.0, default=()),
    "soc_duration_yr": F("float", "yr", lo=0.0),
}
PACKAGE = {
    "fixed_cfp_per_package": F("float", "kg", lo=0.0),
    "per_area_cfp": F("float", "kg/cm2", lo=0.0),
}
TEST = {
    "test_times_hr": F("floats", "hr", lo=0.0),
    "slots": F("int", gt=0),
    "overhead_hr": F("float", "hr", lo=0.0, default=0.0),
    "ate_power_w": F("float", "W", lo=0.0),
    "test_carbon_intensity": F("dist", "kg/kWh"),
}
RETIRE = {
    "recycle_fraction_delta": F("float", None, lo=0.0, hi=1.0),
    "recycle_credit": F("dist", "MTCO2E/ton"),
    "discard_cost": F("dist", "MTCO2E/ton"),
    "device_mass_g": F("float", "g", gt=0.0),
}
EOL = {
    "lambda_fail": F("dist", "1/yr"),
    "lambda_obsol": F("dist", "1/yr", default=0.0),
    "lambda_upgrade": F("dist", "1/yr", default=0.0),
}
MEMORY = {
    "cfp_per_gb": F("dist", "kg/GB"),
    "capacity_gb": F("float", "GB", lo=0.0),
}
RECONFIG = {
    "t_sw_dev_mo": F("float", "mo", lo=0.0),
    "t_compile_mo": F("float", "mo", lo=0.0),
    "t_reg_mo": F("float", "mo", lo=0.0),
    "t_app_config_hr": F("float", "hr", lo=0.0, default=0.0),
    "dev_system_power_w": F("float", "W", lo=0.0),
    "dev_carbon_intensity": F("dist", "kg/kWh"),
}
PLATFORM_SCALARS = {
    "die_area_mm2": F("float", "mm2", gt=0.0),
    "p_use_w": F("float", "W", lo=0.0),
    "n_gates": F("float", gt=0.0),
    "cores_capacity_gates": F("float", gt=0.0),
    "apps_per_device": F("int", gt=0, default=None),
}
SECTIONS = {
    "technology": (TECHNOLOGY, TechnologyProfile),
    "design_house": (DESIGN_HOUSE, DesignHouseProfile),
    "package": (PACKAGE, PackageProfile),
    "test": (TEST, TestProfile),
    "retire": (RETIRE, RetireProfile),
    "eol": (EOL, EolProfile),
    "memory": (MEMORY, MemoryProfile),
}
# dataclass attribute names that differ from the JSON section names
SECTION_ATTRS = {"technology": "tech"}
PLATFORM_KEYS = ({"name", "kind", "extends", "from_baseline", "reconfig", "aging", "description"}
                 | set(PLATFORM_SCALARS) | set(SECTIONS))
SCENARIO_KEYS = {"n_app", "t_i_yr", "n_vol", "f_use", "app_size_gates", "apps_per_device",
                 "scale_op_by_nproc", "operation", "reconfig"}
OPERATION_KEYS = {"carbon_intensity_use", "aging"}
ANALYSIS_KEYS = {"mode", "n_samples", "seed", "platform_a", "platform_b", "sweep", "heatmap", "prob"}
TOP_KEYS = {"version", "description", "platforms", "scenario", "analysis"}


# --------------------------------------------------------------------------
# primitive parsers


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _unwrap(value, spec: F, path: str):
    """Split ``{"value": x, "unit": u}`` into (x, factor)."""
    if isinstance(value, dict) and "kind" not in value:
        extra = set(value) - {"value", "unit"}
        if extra or "value" not in value:
            raise SchemaError(path, "expected a number or {\"value\": ..., \"unit\": ...}")
        factor = unit_factor(value["unit"], spec.unit, path) if "unit" in value else 1.0
        return value["value"], factor
    return value, 1.0


def _check_bounds(x: float, spec: F, path: str) -> None:
    if not math.isfinite(x):
        raise SchemaError(path, "must be finite")
    if spec.lo is not None and x < spec.lo:
        raise SchemaError(path, f"must be >= {spec.lo}, got {x}")
    if spec.hi is not None and x > spec.hi:
        raise SchemaError(path, f"must be <= {spec.hi}, got {x}")
    if spec.gt is not None and not x > spec.gt:
        raise SchemaError(path, f"must be > {spec.gt}, got {x}")


def parse_value(value, spec: F, path: str, stream: str = ""):
    if spec.kind == "str":
        if not isinstance(value, str):
            raise SchemaError(path, "must be a string")
        return value
    if spec.kind == "bool":
        if not isinstance(value, bool):
            raise SchemaError(path, "must be true or false")
        return value
    if spec.kind == "dist":
        return parse_dist(value, spec, path, stream)
    raw, factor = _unwrap(value, spec, path)
    if spec.kind == "floats":
        if not isinstance(raw, list) or not all(_is_number(v) for v in raw):
            raise SchemaError(path, "must be a list of numbers")
        out = tuple(float(v) * factor for v in raw)
        for i, v in enumerate(out):
            _check_bounds(v, spec, f"{path}[{i}]")
        return out
    if not _is_number(raw):
        raise SchemaError(path, "must be a number")
    if spec.kind == "int":
        if factor != 1.0 or float(raw) != int(raw):
            raise SchemaError(path, "must be an integer")
        out = int(raw)
    else:
        out = float(raw) * factor
    _check_bounds(out, spec, path)
    return out


def parse_dist(value, spec: F, path: str, stream: str) -> params.ParamDistribution:
    try:
        if isinstance(value, dict) and "kind" in value:
            body = dict(value)
            unit = body.pop("unit", None)
            factor = unit_factor(unit, spec.unit, path) if unit is not None else 1.0
            dist = params.from_dict(body)
        else:
            raw, factor = _unwrap(value, spec, path)
            if not _is_number(raw):
                raise SchemaError(path, "must be a number or a distribution object")
            dist = params.PointMass(float(raw))
        dist = params.scaled(dist, factor)
    except params.DistributionError as exc:
        raise SchemaError(path, str(exc)) from None
    if not dist.stream:
        dist = dist.with_stream(stream)
    return dist.with_nonnegative(True)


def parse_section(obj, table: dict, path: str, stream_prefix: str) -> dict:
    if not isinstance(obj, dict):
        raise SchemaError(path, "must be an object")
    unknown = sorted(set(obj) - set(table))
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown key")
    out = {}
    for key, spec in table.items():
        if key not in obj:
            if spec.default is _REQUIRED:
                raise SchemaError(f"{path}.{key}", "required key missing")
            out[key] = (parse_value(spec.default, spec, f"{path}.{key}", f"{stream_prefix}{key}")
                        if spec.kind == "dist" else spec.default)
            continue
        out[key] = parse_value(obj[key], spec, f"{path}.{key}", f"{stream_prefix}{key}")
    return out


def _construct(cls, kwargs: dict, path: str):
    try:
        return cls(**kwargs)
    except (ValueError, params.DistributionError) as exc:
        raise SchemaError(path, str(exc)) from None


def parse_aging(obj, path: str) -> AgingModel:
    if not isinstance(obj, dict) or "form" not in obj:
        raise SchemaError(path, "aging must be an object with a 'form' key")
    form = obj["form"]
    if form == "none":
        if set(obj) - {"form"}:
            raise SchemaError(path, "aging form 'none' takes no parameters")
        return AgingModel()
    if form != "power_law":
        raise SchemaError(f"{path}.form", f"unknown aging form {form!r}")
    extra = set(obj) - {"form", "k", "n"}
    if extra:
        raise SchemaError(f"{path}.{sorted(extra)[0]}", "unknown key")
    k = parse_value(obj.get("k", 0.05), F("float", lo=0.0), f"{path}.k")
    n = parse_value(obj.get("n", 0.2), F("float", gt=0.0), f"{path}.n")
    return AgingModel.power_law(k, n)


# --------------------------------------------------------------------------
# inheritance


def _is_leaf_object(v) -> bool:
    return isinstance(v, dict) and ("kind" in v or "value" in v or "form" in v)


def deep_merge(parent: dict, child: dict) -> dict:
    """Child wins; nested sections merge key by key, distributions are replaced whole."""
    out = copy.deepcopy(parent)
    for k, v in child.items():
        if (k in out and isinstance(out[k], dict) and isinstance(v, dict)
                and not _is_leaf_object(v) and not _is_leaf_object(out[k])):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _absolutize_sample_files(obj, base_dir: Path):
    if isinstance(obj, dict):
        for k, v in obj.items():
            if k == "samples_file" and isinstance(v, str):
                p = Path(v)
                obj[k] = str(p if p.is_absolute() else (base_dir / p).resolve())
            else:
                _absolutize_sample_files(v, base_dir)
    elif isinstance(obj, list):
        for v in obj:
            _absolutize_sample_files(v, base_dir)
    return obj


def _read_json(path: Path) -> Any:
    if not path.is_file():
        raise ScenarioNotFound(f"scenario file not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"{path}: invalid JSON ({exc})") from None


def _load_template(path: Path, stack: list[str], where: str) -> dict:
    key = str(path.resolve())
    if key in stack:
        raise CyclicExtendsError("cyclic extends: " + " -> ".join(stack + [key]))
    try:
        raw = _read_json(path)
    except ScenarioNotFound:
        raise SchemaError(where, f"template not found: {path}") from None
    if not isinstance(raw, dict):
        raise SchemaError(where, f"template {path.name} must be an object")
    raw = _absolutize_sample_files(raw, path.parent)
    parent_ref = raw.pop("extends", None)
    if parent_ref is None:
        return raw
    if not (isinstance(parent_ref, str) and parent_ref.endswith(".json")):
        raise SchemaError(where, f"template {path.name} may only extend another .json template")
    parent = _load_template(path.parent / parent_ref, stack + [key], where)
    return deep_merge(parent, raw)


def _resolve_raw_platforms(raw_list, base_dir: Path) -> list[dict]:
    if not isinstance(raw_list, list) or not raw_list:
        raise SchemaError("platforms", "must be a non-empty list")
    by_name: dict[str, tuple[int, dict]] = {}
    for i, p in enumerate(raw_list):
        path = f"platforms[{i}]"
        if not isinstance(p, dict):
            raise SchemaError(path, "must be an object")
        name = p.get("name")
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{path}.name", "required non-empty string")
        if name in by_name:
            raise SchemaError(f"{path}.name", f"duplicate platform name {name!r}")
        by_name[name] = (i, p)

    resolved: dict[str, dict] = {}

    def resolve(name: str, stack: list[str], where: str) -> dict:
        if name in resolved:
            return resolved[name]
        if name in stack:
            raise CyclicExtendsError("cyclic extends: " + " -> ".join(stack + [name]))
        if name not in by_name:
            raise SchemaError(where, f"unknown platform {name!r}")
        i, raw = by_name[name]
        path = f"platforms[{i}]"
        raw = dict(raw)
        ext = raw.pop("extends", None)
        base = raw.pop("from_baseline", None)
        parent = None
        if ext is not None:
            if not isinstance(ext, str):
                raise SchemaError(f"{path}.extends", "must be a platform name or a .json path")
            if ext.endswith(".json"):
                parent = _load_template(base_dir / ext, stack + [name], f"{path}.extends")
            else:
                parent = dict(resolve(ext, stack + [name], f"{path}.extends"))
                parent.pop("name", None)
        if base is not None:
            # baseline first, then the template, then the platform's own keys
            merged = _apply_baseline(base, raw, parent, path,
                                     lambda n: resolve(n, stack + [name], f"{path}.from_baseline.platform"))
        elif parent is not None:
            merged = deep_merge(parent, raw)
        else:
            merged = raw
        resolved[name] = merged
        return merged

    return [resolve(p["name"], [], f"platforms[{i}]") for i, p in enumerate(raw_list)]


def _apply_baseline(base, raw: dict, template: dict | None, path: str, resolve) -> dict:
    where = f"{path}.from_baseline"
    if not isinstance(base, dict):
        raise SchemaError(where, "must be an object")
    extra = set(base) - {"platform", "area_ratio", "power_ratio"}
    if extra:
        raise SchemaError(f"{where}.{sorted(extra)[0]}", "unknown key")
    for key in ("die_area_mm2", "p_use_w"):
        if key in raw:
            raise SchemaError(f"{path}.{key}", "cannot be set together with from_baseline")
    if not isinstance(base.get("platform"), str):
        raise SchemaError(f"{where}.platform", "required platform name")
    ratio = F("float", gt=0.0)
    area_ratio = parse_value(base.get("area_ratio", 1.0), ratio, f"{where}.area_ratio")
    power_ratio = parse_value(base.get("power_ratio", 1.0), ratio, f"{where}.power_ratio")
    parent = dict(resolve(base["platform"]))
    parent.pop("name", None)
    area = parse_value(parent.get("die_area_mm2"), PLATFORM_SCALARS["die_area_mm2"], f"{where}.die_area_mm2")
    power = parse_value(parent.get("p_use_w"), PLATFORM_SCALARS["p_use_w"], f"{where}.p_use_w")
    if template is not None:
        template = {k: v for k, v in template.items() if k not in ("die_area_mm2", "p_use_w")}
        parent = deep_merge(parent, template)
    merged = deep_merge(parent, raw)
    merged["die_area_mm2"] = area * area_ratio
    merged["p_use_w"] = power * power_ratio
    return merged


# --------------------------------------------------------------------------
# resolved objects


def parse_platform(obj: dict, path: str) -> PlatformSpec:
    unknown = sorted(set(obj) - PLATFORM_KEYS)
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown key")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"{path}.kind", f"must be one of {list(KINDS)}")
    kwargs: dict[str, Any] = {"name": obj["name"], "kind": kind}
    for key, spec in PLATFORM_SCALARS.items():
        if key not in obj:
            if spec.default is _REQUIRED:
                raise SchemaError(f"{path}.{key}", "required key missing")
            kwargs[key] = spec.default
        else:
            kwargs[key] = parse_value(obj[key], spec, f"{path}.{key}")
    for section, (table, cls) in SECTIONS.items():
        if section not in obj:
            raise SchemaError(f"{path}.{section}", "required section missing")
        values = parse_section(obj[section], table, f"{path}.{section}", f"{section}.")
        kwargs[SECTION_ATTRS.get(section, section)] = _construct(cls, values, f"{path}.{section}")
    if "reconfig" in obj:
        values = parse_section(obj["reconfig"], RECONFIG, f"{path}.reconfig", "reconfig.")
        kwargs["reconfig"] = _construct(ReconfigProfile, values, f"{path}.reconfig")
    if "aging" in obj:
        kwargs["aging"] = parse_aging(obj["aging"], f"{path}.aging")
    return _construct(PlatformSpec, kwargs, path)


def parse_scenario(obj, path: str = "scenario") -> DeploymentScenario:
    if not isinstance(obj, dict):
        raise SchemaError(path, "must be an object")
    unknown = sorted(set(obj) - SCENARIO_KEYS)
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown key")
    for key in ("n_app", "t_i_yr", "n_vol", "f_use", "app_size_gates", "operation"):
        if key not in obj:
            raise SchemaError(f"{path}.{key}", "required key missing")
    n_app = parse_value(obj["n_app"], F("int", gt=0), f"{path}.n_app")
    t_raw, _ = _unwrap(obj["t_i_yr"], F("float", "yr"), f"{path}.t_i_yr")
    t_spec = F("floats" if isinstance(t_raw, list) else "float", "yr", gt=0.0)
    t_i = parse_value(obj["t_i_yr"], t_spec, f"{path}.t_i_yr")
    op = obj["operation"]
    if not isinstance(op, dict):
        raise SchemaError(f"{path}.operation", "must be an object")
    unknown = sorted(set(op) - OPERATION_KEYS)
    if unknown:
        raise SchemaError(f"{path}.operation.{unknown[0]}", "unknown key")
    if "carbon_intensity_use" not in op:
        raise SchemaError(f"{path}.operation.carbon_intensity_use", "required key missing")
    ci = parse_dist(op["carbon_intensity_use"], F("dist", "kg/kWh"),
                    f"{path}.operation.carbon_intensity_use", "scenario.operation.carbon_intensity_use")
    aging = parse_aging(op.get("aging", {"form": "power_law"}), f"{path}.operation.aging")
    reconfig = None
    if "reconfig" in obj:
        values = parse_section(obj["reconfig"], RECONFIG, f"{path}.reconfig", "scenario.reconfig.")
        reconfig = _construct(ReconfigProfile, values, f"{path}.reconfig")
    kwargs = dict(
        n_app=n_app,
        t_i_yr=t_i,
        n_vol=parse_value(obj["n_vol"], F("float", lo=1.0), f"{path}.n_vol"),
        f_use=parse_value(obj["f_use"], F("float", gt=0.0, hi=1.0), f"{path}.f_use"),
        app_size_gates=parse_value(obj["app_size_gates"], F("float", gt=0.0), f"{path}.app_size_gates"),
        carbon_intensity_use=ci,
        aging=aging,
        reconfig=reconfig,
        apps_per_device=(parse_value(obj["apps_per_device"], F("int", gt=0), f"{path}.apps_per_device")
                         if obj.get("apps_per_device") is not None else None),
        scale_op_by_nproc=parse_value(obj.get("scale_op_by_nproc", True), F("bool"),
                                      f"{path}.scale_op_by_nproc"),
    )
    return _construct(DeploymentScenario, kwargs, path)


@dataclass(frozen=True)
class GridSpec:
    variable: str
    grid: tuple[float, ...]


@dataclass(frozen=True)
class AnalysisConfig:
    mode: str = "expected"
    n_samples: int = 10_000
    seed: int = 0
    platform_a: str | None = None
    platform_b: str | None = None
    sweep: GridSpec | None = None
    heatmap: tuple[GridSpec, GridSpec] | None = None
    prob: GridSpec | None = None


SWEEP_VARIABLES = ("n_app", "t_i", "n_vol", "f_use")


def expand_grid(spec: dict, path: str) -> GridSpec:
    if not isinstance(spec, dict):
        raise SchemaError(path, "must be an object")
    extra = set(spec) - {"variable", "grid", "from", "to", "steps", "scale"}
    if extra:
        raise SchemaError(f"{path}.{sorted(extra)[0]}", "unknown key")
    var = spec.get("variable")
    if var not in SWEEP_VARIABLES:
        raise SchemaError(f"{path}.variable", f"must be one of {list(SWEEP_VARIABLES)}")
    if "grid" in spec:
        if set(spec) & {"from", "to", "steps", "scale"}:
            raise SchemaError(path, "give either 'grid' or 'from'/'to', not both")
        grid = parse_value(spec["grid"], F("floats"), f"{path}.grid")
    else:
        for key in ("from", "to"):
            if key not in spec:
                raise SchemaError(f"{path}.{key}", "required key missing")
        grid = make_grid(var, parse_value(spec["from"], F("float"), f"{path}.from"),
                         parse_value(spec["to"], F("float"), f"{path}.to"),
                         spec.get("steps"), spec.get("scale", "linear"), path)
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise SchemaError(f"{path}.grid", "needs at least two strictly increasing values")
    if var == "n_app" and any(g != int(g) or g < 1 for g in grid):
        raise SchemaError(f"{path}.grid", "n_app values must be positive integers")
    return GridSpec(var, tuple(float(g) for g in grid))


def make_grid(variable: str, start: float, stop: float, steps=None, scale: str = "linear",
              path: str = "grid") -> tuple[float, ...]:
    if not stop > start:
        raise SchemaError(path, "'to' must exceed 'from'")
    if variable == "n_app" and steps is None:
        return tuple(float(v) for v in range(int(start), int(stop) + 1))
    steps = 25 if steps is None else steps
    if not (_is_number(steps) and int(steps) == steps and steps >= 2):
        raise SchemaError(f"{path}.steps", "must be an integer >= 2")
    if scale == "log":
        if start <= 0:
            raise SchemaError(f"{path}.from", "log grids need a positive start")
        values = np.geomspace(start, stop, int(steps))
    elif scale == "linear":
        values = np.linspace(start, stop, int(steps))
    else:
        raise SchemaError(f"{path}.scale", "must be 'linear' or 'log'")
    if variable == "n_app":
        values = np.unique(np.round(values))
    return tuple(float(v) for v in values)


def parse_analysis(obj, names: list[str], path: str = "analysis") -> AnalysisConfig:
    if obj is None:
        return AnalysisConfig()
    if not isinstance(obj, dict):
        raise SchemaError(path, "must be an object")
    unknown = sorted(set(obj) - ANALYSIS_KEYS)
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown key")
    mode = obj.get("mode", "expected")
    if mode not in ("expected", "mc"):
        raise SchemaError(f"{path}.mode", "must be 'expected' or 'mc'")
    for key in ("platform_a", "platform_b"):
        if key in obj and obj[key] not in names:
            raise SchemaError(f"{path}.{key}", f"unknown platform {obj[key]!r}")
    heatmap = None
    if "heatmap" in obj:
        hm = obj["heatmap"]
        if not isinstance(hm, dict) or set(hm) != {"x", "y"}:
            raise SchemaError(f"{path}.heatmap", "needs exactly 'x' and 'y' grids")
        heatmap = (expand_grid(hm["x"], f"{path}.heatmap.x"), expand_grid(hm["y"], f"{path}.heatmap.y"))
        if heatmap[0].variable == heatmap[1].variable:
            raise SchemaError(f"{path}.heatmap", "axes must use different variables")
    return AnalysisConfig(
        mode=mode,
        n_samples=parse_value(obj.get("n_samples", 10_000), F("int", gt=0), f"{path}.n_samples"),
        seed=parse_value(obj.get("seed", 0), F("int", lo=0), f"{path}.seed"),
        platform_a=obj.get("platform_a"),
        platform_b=obj.get("platform_b"),
        sweep=expand_grid(obj["sweep"], f"{path}.sweep") if "sweep" in obj else None,
        heatmap=heatmap,
        prob=expand_grid(obj["prob"], f"{path}.prob") if "prob" in obj else None,
    )


@dataclass(frozen=True)
class ScenarioFile:
    version: str
    platforms: tuple[PlatformSpec, ...]
    scenario: DeploymentScenario
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    description: str = ""
    source: Path | None = field(default=None, compare=False)

    def platform(self, name: str) -> PlatformSpec:
        for p in self.platforms:
            if p.name == name:
                return p
        raise KeyError(name)

    def pair(self) -> tuple[PlatformSpec, PlatformSpec]:
        """Platforms (A, B) for comparisons: as configured, else the first two."""
        if len(self.platforms) < 2 and not (self.analysis.platform_a and self.analysis.platform_b):
            raise SchemaError("platforms", "comparison needs at least two platforms")
        a = self.platform(self.analysis.platform_a) if self.analysis.platform_a else self.platforms[0]
        if self.analysis.platform_b:
            b = self.platform(self.analysis.platform_b)
        else:
            b = next(p for p in self.platforms if p.name != a.name)
        return a, b

    def dumps(self) -> str:
        return dumps(self)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def build(raw, base_dir: Path, source: Path | None = None) -> ScenarioFile:
    if not isinstance(raw, dict):
        raise SchemaError("", "scenario file must be a JSON object")
    unknown = sorted(set(raw) - TOP_KEYS)
    if unknown:
        raise SchemaError(unknown[0], "unknown key")
    version = raw.get("version", FORMAT_VERSION)
    if str(version) != FORMAT_VERSION:
        raise SchemaError("version", f"unsupported version {version!r}")
    description = raw.get("description", "")
    if not isinstance(description, str):
        raise SchemaError("description", "must be a string")
    raw = _absolutize_sample_files(copy.deepcopy(raw), base_dir)
    if "scenario" not in raw:
        raise SchemaError("scenario", "required section missing")
    merged = _resolve_raw_platforms(raw.get("platforms"), base_dir)
    platforms = tuple(parse_platform(p, f"platforms[{i}]") for i, p in enumerate(merged))
    scenario = parse_scenario(raw["scenario"])
    analysis = parse_analysis(raw.get("analysis"), [p.name for p in platforms])
    return ScenarioFile(str(version), platforms, scenario, analysis, description, source)


# --------------------------------------------------------------------------
# overrides and lookup

_TOKEN = re.compile(r"([^.\[\]]+)|\[([^\]]+)\]")


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``a.b[0].c=VALUE`` (VALUE parsed as JSON, else kept as a string) in place."""
    if "=" not in assignment:
        raise SchemaError(assignment, "override must look like PATH=VALUE")
    path, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    tokens = [(m.group(1), m.group(2)) for m in _TOKEN.finditer(path)]
    if not tokens:
        raise SchemaError(path, "empty override path")
    node: Any = raw
    for pos, (key, index) in enumerate(tokens):
        last = pos == len(tokens) - 1
        if index is not None:
            if not isinstance(node, list):
                raise SchemaError(path, "index applied to a non-list")
            if index.lstrip("-").isdigit():
                i = int(index)
                if not -len(node) <= i < len(node):
                    raise SchemaError(path, f"index {i} out of range")
            else:
                matches = [j for j, item in enumerate(node) if isinstance(item, dict) and item.get("name") == index]
                if not matches:
                    raise SchemaError(path, f"no list entry named {index!r}")
                i = matches[0]
            if last:
                node[i] = value
            else:
                node = node[i]
        else:
            if not isinstance(node, dict):
                raise SchemaError(path, f"cannot set key {key!r} on a non-object")
            if last:
                node[key] = value
            else:
                node = node.setdefault(key, {})


def resolve_path(name_or_path: str | Path) -> Path:
    """A filesystem path, or a built-in scenario name such as ``dnn`` or ``tpu_v4``."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    name = str(name_or_path)
    if name.endswith(".json"):
        name = name[:-5]
    name = Path(name).name if "/" not in str(name_or_path) else name
    name = ALIASES.get(name, name)
    if name in BUILTINS:
        return DATA_DIR / BUILTINS[name]
    raise ScenarioNotFound(f"no scenario file or built-in named {str(name_or_path)!r}; "
                           f"built-ins: {', '.join(sorted(BUILTINS))}")


def load_scenario(path: str | Path, overrides: Iterable[str] = ()) -> ScenarioFile:
    resolved = resolve_path(path)
    raw = _read_json(resolved)
    for assignment in overrides:
        if not isinstance(raw, dict):
            break
        apply_override(raw, assignment)
    return build(raw, resolved.resolve().parent, resolved)


def loads(text: str, base_dir: str | Path = ".") -> ScenarioFile:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON ({exc})") from None
    return build(raw, Path(base_dir).resolve())


# --------------------------------------------------------------------------
# canonical dump


def _dist(d: params.ParamDistribution, stream: str) -> dict:
    return params.to_dict(d, default_stream=stream)


def _section(obj, table: dict, stream_prefix: str) -> dict:
    out = {}
    for key, spec in table.items():
        v = getattr(obj, key)
        if spec.kind == "dist":
            out[key] = _dist(v, f"{stream_prefix}{key}")
        elif spec.kind == "floats":
            out[key] = [float(x) for x in v]
        elif spec.kind == "int":
            out[key] = int(v)
        elif spec.kind == "float":
            out[key] = float(v)
        else:
            out[key] = v
    return out


def _aging(a: AgingModel) -> dict:
    if a.form == "none":
        return {"form": "none"}
    return {"form": "power_law", "k": float(a.k), "n": float(a.n)}


def platform_to_dict(p: PlatformSpec) -> dict:
    out: dict[str, Any] = {"name": p.name, "kind": p.kind}
    for key, spec in PLATFORM_SCALARS.items():
        v = getattr(p, key)
        if v is None:
            continue
        out[key] = int(v) if spec.kind == "int" else float(v)
    for section, (table, _) in SECTIONS.items():
        out[section] = _section(getattr(p, SECTION_ATTRS.get(section, section)), table, f"{section}.")
    if p.reconfig is not None:
        out["reconfig"] = _section(p.reconfig, RECONFIG, "reconfig.")
    if p.aging is not None:
        out["aging"] = _aging(p.aging)
    return out


def scenario_to_dict(s: DeploymentScenario) -> dict:
    t = s.t_i_yr
    out: dict[str, Any] = {
        "n_app": int(s.n_app),
        "t_i_yr": [float(x) for x in t] if isinstance(t, tuple) else float(t),
        "n_vol": float(s.n_vol),
        "f_use": float(s.f_use),
        "app_size_gates": float(s.app_size_gates),
    }
    if s.apps_per_device is not None:
        out["apps_per_device"] = int(s.apps_per_device)
    out["scale_op_by_nproc"] = bool(s.scale_op_by_nproc)
    out["operation"] = {
        "carbon_intensity_use": _dist(s.carbon_intensity_use, "scenario.operation.carbon_intensity_use"),
        "aging": _aging(s.aging),
    }
    if s.reconfig is not None:
        out["reconfig"] = _section(s.reconfig, RECONFIG, "scenario.reconfig.")
    return out


def _grid(g: GridSpec) -> dict:
    return {"variable": g.variable, "grid": [float(x) for x in g.grid]}


def analysis_to_dict(a: AnalysisConfig) -> dict:
    out: dict[str, Any] = {"mode": a.mode, "n_samples": int(a.n_samples), "seed": int(a.seed)}
    if a.platform_a is not None:
        out["platform_a"] = a.platform_a
    if a.platform_b is not None:
        out["platform_b"] = a.platform_b
    if a.sweep is not None:
        out["sweep"] = _grid(a.sweep)
    if a.heatmap is not None:
        out["heatmap"] = {"x": _grid(a.heatmap[0]), "y": _grid(a.heatmap[1])}
    if a.prob is not None:
        out["prob"] = _grid(a.prob)
    return out


def to_dict(sf: ScenarioFile) -> dict:
    out: dict[str, Any] = {"version": sf.version}
    if sf.description:
        out["description"] = sf.description
    out["platforms"] = [platform_to_dict(p) for p in sf.platforms]
    out["scenario"] = scenario_to_dict(sf.scenario)
    out["analysis"] = analysis_to_dict(sf.analysis)
    return out


def dumps(sf: ScenarioFile) -> str:
    return json.dumps(to_dict(sf), indent=2) + "\n"


def dump(sf: ScenarioFile, path: str | Path) -> None:
    Path(path).write_text(dumps(sf), encoding="utf-8")
