import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlslab.bounds import (
    BoundDomainError,
    binomial_tail_large,
    chernoff_tail,
    epoch_expected_time,
    epoch_whp_time,
    exp_sum_tail,
    geom_sum_tail,
    geom_sum_zero_point,
    harmonic,
    lower_bound_times,
    phase1_schedule,
)
from rlslab.harness.checks import check_bound, schedule_sweep
from rlslab.sampling import RngStream


def test_chernoff_values():
    assert chernoff_tail(10, 1) == pytest.approx(0.07135, abs=5e-6)
    assert chernoff_tail(10, 0) == 2
    with pytest.raises(BoundDomainError):
        chernoff_tail(10, 1.6)
    with pytest.raises(BoundDomainError):
        binomial_tail_large(5, np_=1)
    assert binomial_tail_large(6, np_=1) == 2**-6


def test_chernoff_monte_carlo():
    rng = RngStream(1).generator()
    x = rng.binomial(100, 0.1, 10**6)
    f = (np.abs(x - 10) >= 10).mean()
    assert f <= chernoff_tail(10, 1) + 3 * math.sqrt(f * (1 - f) / 10**6)


def test_exp_sum_values():
    assert exp_sum_tail(1, 1, 10) == pytest.approx(0.008652, rel=1e-4)
    assert exp_sum_tail(2, 3, 2 * 3 / 2) == 1.0
    with pytest.raises(BoundDomainError):
        exp_sum_tail(0, 1, 1)


@pytest.mark.parametrize("delta", [5, 10])
def test_exp_sum_monte_carlo(delta):
    rng = RngStream(2).generator()
    x = rng.gamma(10, 1.0, 10**6)  # sum of 10 unit exponentials
    f = (x >= 10 + delta).mean()
    assert f <= exp_sum_tail(1, 10, delta) + 3 * math.sqrt(f * (1 - f) / 10**6)


def test_geom_sum_values():
    b = geom_sum_tail(0.5, [1], 10)
    assert b == pytest.approx(math.exp(0.25 + (1 + math.log(2) - 10 * math.log(2)) / 2))
    assert b == pytest.approx(0.0936, abs=5e-5)
    assert math.log(b) == pytest.approx(-2.369, abs=5e-4)
    # exact tail: Y >= 10 means nine failures first
    assert 0.5**9 <= b
    t0 = geom_sum_zero_point(0.5, [1, 2, 0.5])
    assert geom_sum_tail(0.5, [1, 2, 0.5], t0) == pytest.approx(1.0)
    with pytest.raises(BoundDomainError):
        geom_sum_tail(1.0, [1], 3)
    with pytest.raises(BoundDomainError):
        geom_sum_tail(0.5, [1, 2], 3, S=1)


def test_geom_sum_monte_carlo():
    rng = RngStream(3).generator()
    c = np.array([0.5, 1.0, 1.5, 0.25])
    p = 0.3
    x = sum(ci * rng.geometric(p, 10**6) for ci in c)
    for t in (15, 25, 40):
        f = (x >= t).mean()
        assert f <= geom_sum_tail(p, c, t) + 3 * math.sqrt(f * (1 - f) / 10**6)


@given(st.floats(0.01, 0.99), st.lists(st.floats(0.1, 5), min_size=1, max_size=6),
       st.floats(0, 100), st.floats(0, 50))
def test_bounds_monotone(p, c, t, dt):
    assert geom_sum_tail(p, c, t + dt) <= geom_sum_tail(p, c, t)
    assert exp_sum_tail(1.3, 2.0, t + dt) <= exp_sum_tail(1.3, 2.0, t)
    assert binomial_tail_large(t + dt) <= binomial_tail_large(t)


def test_epochs():
    assert epoch_whp_time(5, 16) == 40
    assert epoch_expected_time(5, 1) == 5
    assert epoch_expected_time(5, 0.5) == 10
    with pytest.raises(BoundDomainError):
        epoch_expected_time(5, 0)


def test_epoch_restart_experiment():
    # two-phase runs: restarting epochs of length t_bar fail with prob <= 1/2 each
    from rlslab.engine import ProcessState, run_until

    n, m, runs = 16, 256, 10_000
    rng = RngStream(4).generator()
    times = np.array([run_until(ProcessState((m,) + (0,) * (n - 1)), "perfect", rng=rng).time
                      for _ in range(runs)])
    t_bar = times.mean()
    assert (times > epoch_whp_time(t_bar, n)).mean() <= 1 / n


def test_schedule_example():
    s = phase1_schedule(math.exp(2), 256, check=False)
    assert s.x[:3] == (128.0, 32.0, 16.0)
    assert s.r == 3
    assert phase1_schedule(16, 256).r == 3
    assert not s.violations()


def test_schedule_regime():
    with pytest.raises(BoundDomainError):
        phase1_schedule(100, 16 * math.log(100))
    with pytest.raises(BoundDomainError):
        phase1_schedule(1, 100)


def test_schedule_invariants_sweep():
    res = schedule_sweep(1000, RngStream(5).generator())
    assert all(not v for _, _, v in res)


@given(st.integers(2, 10**6), st.floats(1.0001, 1e4))
def test_schedule_invariants_property(n, factor):
    s = phase1_schedule(n, 16 * math.log(n) * factor)
    assert s.violations() == []
    assert len(s.x) == s.r + 1 and len(s.c) == s.r


def test_harmonic_and_lower_bounds():
    assert harmonic(10) - harmonic(2) == sum(Fraction(1, k) for k in range(3, 11))
    assert float(harmonic(10) - harmonic(2)) == pytest.approx(1.4290, abs=5e-5)
    lb = lower_bound_times(50, 500)
    assert lb["perturbation_bound"] == pytest.approx(50 / 11) and lb["perturbation_bound"] == pytest.approx(4.5455, abs=5e-5)
    assert lb["activation_bound"] == pytest.approx(float(harmonic(500) - harmonic(10)))
    assert lower_bound_times(7, 7)["activation_bound"] == pytest.approx(float(harmonic(7) - 1))
    assert lower_bound_times(3, 7)["perturbation_bound"] is None


@pytest.mark.parametrize("kind", ["chernoff", "binomial_large", "exp_sum", "geom_sum"])
def test_random_parameter_validity(kind):
    res = check_bound(kind, sets=8, samples=50_000, rng=RngStream(6).generator())
    assert all(r.ok for r in res), [r for r in res if not r.ok]
