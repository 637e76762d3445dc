import numpy as np
import pytest

from fluxlab import (FluxLaw, GradedTimeGrid, MeasureData, TestFunction,
                     contraction_check, dichotomy_sweep, marcinkiewicz_check,
                     scaling_identity_check, solve_trace, weak_residual)
from fluxlab.harness import UnclassifiableError

SQPI = np.sqrt(np.pi)


@pytest.fixture(scope="module")
def delta_solution():
    grid = GradedTimeGrid(1.0, 512, 4.0)
    return solve_trace(FluxLaw.power(1.75), MeasureData.zero("initial"),
                       MeasureData.dirac(mass=1.0, T=1.0), grid)


def test_test_function_construction():
    z = TestFunction.random(1.0, 0)
    assert z.theta(1.0) == 0.0
    # psi'(0) = 0 analytically
    h = 1e-6
    assert abs(z.psi(h) - z.psi(-h)) < 1e-14
    # decay condition: both zeta and zeta_x vanish far out
    assert abs(z.zeta(0.5, 40.0)) < 1e-100


def test_weak_residual_zero_test_function(delta_solution):
    z = TestFunction(T=1.0, sigma=1.0, coeffs=(0.0, 0.0, 0.0))
    assert weak_residual(delta_solution, z) == 0.0


def test_weak_residual_small_for_atom_data(delta_solution):
    for seed in range(3):
        z = TestFunction.random(1.0, seed)
        assert weak_residual(delta_solution, z) < 1e-2


def test_weak_residual_decreases_under_refinement():
    # simultaneous refinement: solver grid and the field-sampling table
    from fluxlab.harness import _WeakFormTable
    z = TestFunction.random(1.0, 4)
    vals = []
    for N in (128, 256, 512):
        grid = GradedTimeGrid(1.0, N, 4.0)
        sol = solve_trace(FluxLaw.power(1.75), MeasureData.zero("initial"),
                          MeasureData.dirac(mass=1.0, T=1.0), grid)
        sol._weak_table = _WeakFormTable(sol, nt_slices=N // 2, n_layer=N // 4 + 1,
                                         n_coarse=N // 8 + 1)
        vals.append(weak_residual(sol, z))
    assert vals[2] <= vals[0]


def _random_pair(seed, T=1.0):
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, T, 33)
    y = np.linspace(0.0, 3.0, 25)
    mu_v = rng.uniform(0.1, 1.0) + rng.uniform(0.1, 0.5) * np.sin(
        2 * np.pi * rng.integers(1, 3) * s)
    nu_v = rng.uniform(0.0, 0.8) * np.exp(-((y - rng.uniform(0.5, 1.5)) ** 2))
    mu = MeasureData.from_density(s, mu_v, T=T)
    nu = MeasureData.from_density(y, nu_v, domain="initial")
    return nu, mu


def test_contraction_identical_data_zero():
    law = FluxLaw.power(1.75)
    grid = GradedTimeGrid(1.0, 96, 2.0)
    pair = _random_pair(0)
    lhs, rhs, ok = contraction_check(law, pair, pair, 0.7, grid)
    assert lhs < 1e-10 and ok


def test_contraction_nonnegative_bump():
    law = FluxLaw.power(1.75)
    grid = GradedTimeGrid(1.0, 96, 2.0)
    nu, mu = _random_pair(1)
    s = mu.density_nodes
    bump = 0.25 * np.exp(-((s - 0.5) / 0.1) ** 2)
    mu_b = MeasureData.from_density(s, mu.density_values + bump, T=1.0)
    lhs, rhs, ok = contraction_check(law, (nu, mu), (nu, mu_b), 1.0, grid)
    mass = np.trapezoid(bump, s)
    assert ok
    assert lhs <= mass * (1 + 1e-2)


def test_contraction_random_pairs():
    law = FluxLaw.power(1.75)
    grid = GradedTimeGrid(1.0, 96, 2.0)
    for seed in range(5):
        a = _random_pair(2 * seed + 10)
        b = _random_pair(2 * seed + 11)
        lhs, rhs, ok = contraction_check(law, a, b, 1.0, grid)
        assert ok, (seed, lhs, rhs)


def test_marcinkiewicz_delta_trace_value():
    rep = marcinkiewicz_check(MeasureData.zero("initial"),
                              MeasureData.dirac(mass=1.0, T=1.0), T=1.0)
    assert rep.trace_weak2 == pytest.approx(1.0 / SQPI, abs=1e-2)
    assert rep.total_variation == 1.0


def test_marcinkiewicz_homogeneity():
    nu = MeasureData.zero("initial")
    one = marcinkiewicz_check(nu, MeasureData.dirac(mass=1.0, T=1.0), T=1.0)
    two = marcinkiewicz_check(nu, MeasureData.dirac(mass=2.0, T=1.0), T=1.0)
    assert two.trace_weak2 == pytest.approx(2 * one.trace_weak2, rel=1e-6)
    assert two.field_weak3 == pytest.approx(2 * one.field_weak3, rel=1e-6)


def test_scaling_identity_trivial_and_nontrivial():
    grid = GradedTimeGrid(1.0, 128, 4.0)
    assert scaling_identity_check(1.75, 1.0, 1.0, grid) < 1e-12
    assert scaling_identity_check(1.75, 1.0, 2.0, grid) < 1e-2


def test_dichotomy_ladder_validation():
    grid = GradedTimeGrid(1.0, 64, 4.0)
    with pytest.raises(ValueError):
        dichotomy_sweep(1.75, [1.0, 2.0, 4.0], grid)
    with pytest.raises(ValueError):
        dichotomy_sweep(1.75, [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 250.0],
                        grid)


def test_dichotomy_small_grid_diverging_case():
    # p = 1.3 resolves on a light grid; classification must be 'diverging'
    grid = GradedTimeGrid(1.0, 256, 4.0)
    rep = dichotomy_sweep(1.3, [2.0 ** k for k in range(9)], grid)
    assert rep.classification == "diverging"
    assert np.all(np.diff(rep.rescaled_traces) > 0)
    assert rep.limit is None


def test_dichotomy_reports_are_deterministic():
    grid = GradedTimeGrid(1.0, 128, 4.0)
    ladder = [2.0 ** k for k in range(9)]
    r1 = dichotomy_sweep(1.3, ladder, grid)
    r2 = dichotomy_sweep(1.3, ladder, grid)
    assert r1.rescaled_traces == r2.rescaled_traces
