import copy
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carbonscope import scenario
from carbonscope.params import EXPECTED, Uniform
from carbonscope.platform import total_cfp
from carbonscope.scenario import (CyclicExtendsError, ScenarioError, ScenarioNotFound, SchemaError,
                                  UnitError)
from conftest import MINIMAL_PLATFORM


def build(raw, base_dir="."):
    return scenario.build(raw, scenario.Path(base_dir))


def test_minimal_loads(minimal_raw):
    sf = build(minimal_raw)
    p = sf.platform("P")
    assert p.kind == "ASIC" and p.die_area_mm2 == 100.0
    assert sf.scenario.n_app == 3
    assert total_cfp(p, sf.scenario, EXPECTED).total > 0


def test_rho_out_of_range_names_the_field(minimal_raw):
    minimal_raw["platforms"][0]["technology"]["recycled_fraction_rho"] = 1.3
    with pytest.raises(SchemaError) as exc:
        build(minimal_raw)
    assert exc.value.path.endswith("technology.recycled_fraction_rho")
    assert "technology.recycled_fraction_rho" in str(exc.value)


def test_unknown_key_rejected(minimal_raw):
    minimal_raw["platforms"][0]["package"]["glue"] = 1
    with pytest.raises(SchemaError) as exc:
        build(minimal_raw)
    assert exc.value.path == "platforms[0].package.glue"
    minimal_raw["platforms"][0]["package"].pop("glue")
    minimal_raw["colour"] = "red"
    with pytest.raises(SchemaError):
        build(minimal_raw)


def test_missing_required_key(minimal_raw):
    del minimal_raw["platforms"][0]["p_use_w"]
    with pytest.raises(SchemaError) as exc:
        build(minimal_raw)
    assert "p_use_w" in exc.value.path


def test_units_convert(minimal_raw):
    p = minimal_raw["platforms"][0]
    p["die_area_mm2"] = {"value": 1.0, "unit": "cm2"}
    p["retire"]["device_mass_g"] = {"value": 0.05, "unit": "kg"}
    p["design_house"]["annual_energy_gwh"] = {"value": 2000, "unit": "MWh"}
    sf = build(minimal_raw)
    plat = sf.platform("P")
    assert plat.die_area_mm2 == pytest.approx(100.0)
    assert plat.retire.device_mass_g == pytest.approx(50.0)
    assert plat.design_house.annual_energy_gwh == pytest.approx(2.0)


@pytest.mark.parametrize("unit", ["W", "furlong", "kg"])
def test_incompatible_unit(minimal_raw, unit):
    minimal_raw["platforms"][0]["die_area_mm2"] = {"value": 1.0, "unit": unit}
    with pytest.raises(UnitError) as exc:
        build(minimal_raw)
    assert exc.value.path == "platforms[0].die_area_mm2"


def test_cyclic_platform_extends(minimal_raw):
    a = copy.deepcopy(MINIMAL_PLATFORM)
    a["name"], a["extends"] = "A", "B"
    b = {"name": "B", "extends": "A"}
    minimal_raw["platforms"] = [a, b]
    with pytest.raises(CyclicExtendsError):
        build(minimal_raw)


def test_cyclic_template_extends(tmp_path, minimal_raw):
    (tmp_path / "x.json").write_text(json.dumps({"extends": "y.json"}))
    (tmp_path / "y.json").write_text(json.dumps({"extends": "x.json"}))
    minimal_raw["platforms"][0]["extends"] = "x.json"
    with pytest.raises(CyclicExtendsError):
        build(minimal_raw, tmp_path)


def test_missing_file():
    with pytest.raises(ScenarioNotFound):
        scenario.load_scenario("/nonexistent/nothing.json")
    with pytest.raises(ScenarioNotFound):
        scenario.load_scenario("no_such_builtin")


def test_error_classes_are_distinct():
    assert issubclass(UnitError, SchemaError)
    assert not issubclass(CyclicExtendsError, SchemaError)
    assert not issubclass(ScenarioNotFound, SchemaError)
    for cls in (SchemaError, CyclicExtendsError, ScenarioNotFound):
        assert issubclass(cls, ScenarioError)


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SchemaError):
        scenario.load_scenario(path)


def test_distribution_fields(minimal_raw):
    minimal_raw["platforms"][0]["technology"]["epa"] = {"kind": "uniform", "lo": 0.9, "hi": 1.45}
    sf = build(minimal_raw)
    epa = sf.platform("P").tech.epa
    assert isinstance(epa, Uniform)
    assert epa.stream == "technology.epa"


@pytest.mark.parametrize("name", sorted(scenario.BUILTINS))
def test_builtin_round_trip(name):
    sf = scenario.load_scenario(name)
    text = sf.dumps()
    again = scenario.loads(text)
    assert again.dumps() == text
    assert again.config_hash == sf.config_hash
    assert again.platforms == sf.platforms
    assert again.scenario == sf.scenario


def test_minimal_round_trip(minimal_raw):
    sf = build(minimal_raw)
    again = scenario.loads(sf.dumps())
    assert again == sf


def test_dnn_resolves_to_published_ratios():
    sf = scenario.load_scenario("dnn")
    a, b = sf.pair()
    assert (a.kind, b.kind) == ("ASIC", "FPGA")
    assert b.die_area_mm2 / a.die_area_mm2 == pytest.approx(4.0)
    assert b.p_use_w / a.p_use_w == pytest.approx(3.0)


def test_template_and_baseline_merge():
    sf = scenario.load_scenario("dnn")
    a, b = sf.pair()
    # FPGA keeps the template's kind and design house but takes scaled baseline geometry
    assert b.kind == "FPGA"
    assert b.n_gates != a.n_gates
    assert b.design_house != a.design_house or b.n_gates != a.n_gates


def test_overrides():
    base = scenario.load_scenario("dnn")
    sf = scenario.load_scenario("dnn", ["scenario.n_app=7", "platforms[0].p_use_w=1.5"])
    assert sf.scenario.n_app == 7
    assert sf.platforms[0].p_use_w == 1.5
    # baseline-derived platforms follow the override
    assert sf.platforms[1].p_use_w == pytest.approx(4.5)
    assert sf.config_hash != base.config_hash
    named = scenario.load_scenario("dnn", ["platforms[FPGA].eol.lambda_fail=0.1"])
    assert named.platform("FPGA").eol.lambda_fail.expected_value() == 0.1


@pytest.mark.parametrize("bad", ["scenario.n_app", "platforms[9].p_use_w=1", "platforms[nope].p_use_w=1"])
def test_bad_overrides(bad):
    with pytest.raises(SchemaError):
        scenario.load_scenario("dnn", [bad])


def test_aliases_resolve():
    assert scenario.resolve_path("tpu_v4") == scenario.resolve_path("industry_tpu")
    assert scenario.resolve_path("dnn_vs_asic.json") == scenario.resolve_path("dnn")


def test_make_grid():
    assert scenario.make_grid("n_app", 1, 8) == tuple(float(v) for v in range(1, 9))
    g = scenario.make_grid("n_vol", 1e3, 1e7, 5, "log")
    assert g[0] == pytest.approx(1e3) and g[-1] == pytest.approx(1e7)
    assert g[2] == pytest.approx(1e5)
    assert scenario.make_grid("n_app", 1, 8, 4) == (1.0, 3.0, 6.0, 8.0)
    for bad in ((2, 1, 3, "linear"), (1, 2, 1, "linear"), (0, 2, 3, "log"), (1, 2, 3, "cubic")):
        with pytest.raises(SchemaError):
            scenario.make_grid("t_i", *bad)


@settings(max_examples=30, deadline=None)
@given(area=st.floats(1, 800), power=st.floats(0.1, 500), n_app=st.integers(1, 20),
       rho=st.floats(0, 1), t=st.floats(0.1, 10))
def test_round_trip_property(area, power, n_app, rho, t):
    p = copy.deepcopy(MINIMAL_PLATFORM)
    p["die_area_mm2"], p["p_use_w"] = area, power
    p["technology"]["recycled_fraction_rho"] = rho
    raw = {"platforms": [p], "scenario": {"n_app": n_app, "t_i_yr": t, "n_vol": 1000, "f_use": 0.2,
                                          "app_size_gates": 1e6, "operation": {"carbon_intensity_use": 0.4}}}
    sf = build(raw)
    again = scenario.loads(sf.dumps())
    assert again == sf
    assert again.dumps() == sf.dumps()
