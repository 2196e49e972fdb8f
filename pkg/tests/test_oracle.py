import math

import pytest

from carbonscope.deployment import DEFAULT_AGING, NO_AGING, AgingModel
from carbonscope.embodied import expected_replacements
from carbonscope.oracle import integrate_energy_bruteforce, simulate_replacements
from carbonscope.params import EXPECTED
from conftest import eol


def test_zero_rate():
    r = simulate_replacements(5.0, 0.0, 1000, 0)
    assert r.mean_replacements == 0.0 and r.stderr == 0.0


def test_zero_lifetime():
    r = simulate_replacements(0.0, 0.3, 1000, 0)
    assert r.mean_replacements == 0.0


@pytest.mark.parametrize("lam,t", [(0.1, 10.0), (0.3, 2.0)])
def test_poisson_mean(lam, t):
    r = simulate_replacements(t, lam, 1_000_000, 1)
    assert abs(r.mean_replacements - lam * t) <= 3 * r.stderr


def test_within_two_percent_of_closed_form():
    r = simulate_replacements(2.0, 0.3, 1_000_000, 2)
    closed = expected_replacements(1, 2.0, eol(0.3), EXPECTED)
    assert abs(r.mean_replacements - closed) / closed <= 0.02


def test_stderr_definition():
    r = simulate_replacements(1.0, 1.0, 10_000, 3)
    assert r.trials == 10_000
    # Poisson(1): stddev 1, so stderr close to 1/sqrt(trials)
    assert r.stderr == pytest.approx(1 / math.sqrt(10_000), rel=0.05)


def test_simulation_deterministic():
    assert simulate_replacements(2.0, 0.3, 1000, 5) == simulate_replacements(2.0, 0.3, 1000, 5)


def test_simulation_validation():
    with pytest.raises(ValueError):
        simulate_replacements(1.0, -0.1, 10, 0)
    with pytest.raises(ValueError):
        simulate_replacements(1.0, 0.1, 0, 0)


def test_bruteforce_integral_values():
    assert integrate_energy_bruteforce(NO_AGING, 5.0, 10_000) == pytest.approx(5.0, rel=1e-15)
    assert integrate_energy_bruteforce(AgingModel.power_law(0.1, 1.0), 2.0, 10_000) == pytest.approx(2.2, rel=1e-12)
    exact = 10 + 0.05 * 10 ** 1.2 / 1.2
    assert integrate_energy_bruteforce(DEFAULT_AGING, 10.0, 1_000_000) == pytest.approx(exact, rel=1e-7)


def test_bruteforce_needs_fine_grid():
    with pytest.raises(ValueError):
        integrate_energy_bruteforce(DEFAULT_AGING, 1.0, 100)
