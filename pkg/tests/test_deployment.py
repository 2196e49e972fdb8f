import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carbonscope import deployment as dp
from carbonscope.deployment import DEFAULT_AGING, NO_AGING, AgingModel, OperationProfile
from carbonscope.oracle import integrate_energy_bruteforce
from carbonscope.params import EXPECTED, PointMass
from conftest import reconfig

CI = PointMass(0.475)


def test_aging_factor_values():
    assert dp.aging_factor(NO_AGING, 7.0) == 1.0
    assert dp.aging_factor(AgingModel.power_law(0.05, 0.5), 4.0) == pytest.approx(1.1, rel=1e-15)
    assert dp.aging_factor(DEFAULT_AGING, 0.0) == 1.0
    with pytest.raises(ValueError):
        dp.aging_factor(DEFAULT_AGING, -1.0)


def test_aging_validation():
    with pytest.raises(ValueError):
        AgingModel("exponential")
    with pytest.raises(ValueError):
        AgingModel.power_law(-0.1, 0.2)
    with pytest.raises(ValueError):
        AgingModel.power_law(0.1, 0.0)


def test_lifetime_energy_closed_form():
    op = OperationProfile(10.0, 0.2, CI, NO_AGING)
    assert dp.lifetime_energy(op, 2.0) == 10 * 0.2 * 17532 / 1000
    assert dp.lifetime_energy(op, 2.0) == pytest.approx(35.064, rel=1e-15)
    assert dp.lifetime_energy(op, 0.0) == 0.0


@pytest.mark.parametrize("k,n,t", [(0.1, 1.0, 2.0), (0.05, 0.2, 10.0), (0.05, 0.2, 2.0), (0.2, 0.5, 6.0)])
def test_simpson_matches_antiderivative(k, n, t):
    model = AgingModel.power_law(k, n)
    exact = t + k * t ** (n + 1) / (n + 1)
    assert dp.aging_integral(model, t) == pytest.approx(exact, rel=1e-6)


def test_simpson_on_offset_interval():
    model = DEFAULT_AGING
    exact = model.antiderivative(6.0) - model.antiderivative(4.0)
    assert dp.aging_integral(model, 6.0, 4.0) == pytest.approx(exact, rel=1e-9)


def test_simpson_matches_trapezoid_oracle():
    for t in (0.5, 2.0, 10.0):
        simpson = dp.aging_integral(DEFAULT_AGING, t)
        brute = integrate_energy_bruteforce(DEFAULT_AGING, t, 1_000_000)
        assert abs(simpson - brute) / brute <= 1e-6


def test_operational_values():
    op = OperationProfile(10.0, 0.2, CI, NO_AGING)
    assert dp.operational_cfp(op, 2.0, EXPECTED) == pytest.approx(16.6554, rel=1e-12)
    clean = OperationProfile(10.0, 0.2, PointMass(0.0), NO_AGING)
    assert dp.operational_cfp(clean, 2.0, EXPECTED) == 0.0
    aged = OperationProfile(10.0, 0.2, CI, DEFAULT_AGING)
    assert dp.operational_cfp(aged, 2.0, EXPECTED) >= dp.operational_cfp(op, 2.0, EXPECTED)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.1, 500), f=st.floats(0.01, 1), t=st.floats(0, 20), ci=st.floats(0, 1))
def test_ideal_operational_exact(p, f, t, ci):
    op = OperationProfile(p, f, PointMass(ci), NO_AGING)
    assert dp.operational_cfp(op, t, EXPECTED) == ci * (p * f * t * 8766.0 / 1000.0)


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.1, 500), f=st.floats(0.01, 0.5), t=st.floats(1.01, 10), k=st.floats(0.0, 0.5),
       n=st.floats(0.05, 2), bump=st.floats(1.01, 2))
def test_energy_monotone(p, f, t, k, n, bump):
    def e(p=p, f=f, t=t, k=k, n=n):
        return dp.lifetime_energy(OperationProfile(p, f, CI, AgingModel.power_law(k, n)), t, n_steps=256)
    base = e()
    assert e(p=p * bump) > base
    assert e(f=f * bump) > base
    assert e(t=t * bump) > base
    assert e(k=k + 0.01) > base


@settings(max_examples=60, deadline=None)
@given(t=st.floats(2.72, 20), k=st.floats(0.01, 0.5), n=st.floats(0.05, 2), bump=st.floats(1.01, 2))
def test_energy_monotone_in_exponent(t, k, n, bump):
    # integral of t^n is T^(n+1)/(n+1), increasing in n once ln T > 1/(n+1); T >= e covers every n
    def e(n):
        return dp.lifetime_energy(OperationProfile(10.0, 0.2, CI, AgingModel.power_law(k, n)), t, n_steps=256)
    assert e(n * bump) > e(n)


def test_reconfig_time_values():
    rc = reconfig(t_sw_dev_mo=1.0, t_compile_mo=0.5, t_reg_mo=0.5, t_app_config_hr=0.0)
    assert dp.reconfig_time(rc, 0, 0) == 0.0
    assert dp.reconfig_time(rc, 1, 0) == pytest.approx(1461.0)
    rc2 = reconfig(t_app_config_hr=0.01)
    assert dp.reconfig_time(rc2, 1, 1000) == pytest.approx(1461.0 + 10.0)


def test_reconfig_cfp_values():
    rc = reconfig(t_app_config_hr=0.0)
    assert dp.reconfig_cfp(rc, 1, 0, EXPECTED) == pytest.approx(138.795, rel=1e-12)
    assert dp.reconfig_cfp(reconfig(dev_system_power_w=0.0), 5, 1e6, EXPECTED) == 0.0


def test_deployment_composition():
    op = OperationProfile(10.0, 0.2, CI, NO_AGING)
    b = dp.deployment_cfp(op, None, 1, 1, 2.0, EXPECTED, n_proc=3)
    assert b.operational == pytest.approx(3 * dp.operational_cfp(op, 2.0, EXPECTED))
    assert b.reconfiguration == 0.0
    idle = OperationProfile(0.0, 0.2, CI, NO_AGING)
    rc = reconfig()
    b = dp.deployment_cfp(idle, rc, 1000, 1, 2.0, EXPECTED)
    assert b.total == dp.reconfig_cfp(rc, 1, 1000, EXPECTED)


def test_deployment_linear_in_volume_except_development():
    op = OperationProfile(10.0, 0.2, CI, NO_AGING)
    rc = reconfig()
    one = dp.deployment_cfp(op, rc, 1000, 1, 2.0, EXPECTED)
    two = dp.deployment_cfp(op, rc, 2000, 1, 2.0, EXPECTED)
    dev = dp.reconfig_cfp(rc, 1, 0, EXPECTED)
    assert two.operational == pytest.approx(2 * one.operational)
    assert two.reconfiguration - dev == pytest.approx(2 * (one.reconfiguration - dev))


def test_aging_clock_continues():
    op = OperationProfile(10.0, 0.2, CI, DEFAULT_AGING)
    first = dp.operational_cfp(op, 2.0, EXPECTED, t_start=0.0)
    second = dp.operational_cfp(op, 2.0, EXPECTED, t_start=2.0)
    assert second > first
