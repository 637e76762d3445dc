import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fluxlab import (FluxLaw, InconclusiveTailError, NonmonotoneLawError,
                     admissibility_integral)


def test_power_eval_examples():
    law = FluxLaw.power(2.0)
    assert law.g(2.0) == 4.0
    assert law.g(-2.0) == -4.0
    assert law.g(0.0) == 0.0


def test_any_law_vanishes_at_zero():
    for law in (FluxLaw.power(1.3), FluxLaw.power(2.5),
                FluxLaw.tabulated([(-2.0, -3.0), (0.0, 0.0), (1.0, 2.0)])):
        assert law.g(0.0) == 0.0


@settings(max_examples=30, deadline=None)
@given(p=st.floats(min_value=1.05, max_value=2.8),
       s=st.floats(min_value=1e-3, max_value=50.0))
def test_power_law_is_odd(p, s):
    law = FluxLaw.power(p)
    assert law.g(-s) == pytest.approx(-law.g(s), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(min_value=1.05, max_value=2.8))
def test_power_law_nondecreasing_on_probe(p):
    FluxLaw.power(p).validate()


def test_tabulated_interp_and_extrapolation():
    law = FluxLaw.tabulated([(-1.0, -2.0), (0.0, 0.0), (1.0, 1.0), (2.0, 4.0)])
    assert law.g(0.5) == pytest.approx(0.5)
    assert law.g(3.0) == pytest.approx(7.0)   # slope 3 continued
    assert law.g(-2.0) == pytest.approx(-4.0)  # slope 2 continued
    law.validate()


def test_tabulated_rejects_decreasing():
    with pytest.raises(NonmonotoneLawError):
        FluxLaw.tabulated([(0.0, 0.0), (1.0, -1.0)])


def test_antiderivative_power_and_convexity():
    law = FluxLaw.power(1.75)
    s = np.linspace(-3.0, 3.0, 241)
    G = law.G(s)
    assert law.G(0.0) == 0.0
    assert law.G(2.0) == pytest.approx(2.0 ** 2.75 / 2.75, rel=1e-14)
    d2 = np.diff(G, 2)
    assert np.all(d2 >= -1e-10)


def test_antiderivative_tabulated_matches_quadrature():
    law = FluxLaw.tabulated([(-1.0, -2.0), (0.0, 0.0), (2.0, 1.0)])
    ss = np.linspace(-0.8, 1.7, 11)
    for s in ss:
        brute = np.trapezoid(law.g(np.linspace(0, s, 4001)), np.linspace(0, s, 4001))
        assert law.G(s) == pytest.approx(brute, abs=1e-8)


def test_admissibility_closed_forms():
    # oracle: int_1^inf 2 s^(p - (2n+1)/n) ds = 2 / ((n+1)/n - p)
    res = admissibility_integral(FluxLaw.power(1.5), 1)
    assert res.finite and res.value == pytest.approx(4.0, rel=1e-8)
    res = admissibility_integral(FluxLaw.power(1.4), 2)
    assert res.finite and res.value == pytest.approx(20.0, rel=1e-8)


def test_admissibility_divergent_beyond_critical():
    assert not admissibility_integral(FluxLaw.power(2.0 + 0.2), 1).finite


def test_admissibility_dead_band_raises():
    # slope sits within 0.05 of -1 for p = 2 exactly (n = 1)
    with pytest.raises(InconclusiveTailError):
        admissibility_integral(FluxLaw.power(2.0), 1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_admissibility_window_matches_critical_exponent(n):
    critical = (n + 1) / n
    for p in np.arange(1.1, 2.31, 0.1):
        p = round(float(p), 10)
        if abs(p - critical) < 0.06:
            continue  # dead band by design
        res = admissibility_integral(FluxLaw.power(p), n)
        assert res.finite == (p < critical), (n, p)
        if res.finite:
            oracle = 2.0 / (critical - p)
            assert res.value == pytest.approx(oracle, rel=1e-6)


def test_admissibility_even_law_trivially_finite():
    even = FluxLaw.tabulated([(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)])
    res = admissibility_integral(even, 1)
    assert res.finite and res.value == pytest.approx(0.0, abs=1e-12)
