import numpy as np
import pytest

from fluxlab import (WeightedGrid, apply_operator, assemble_LK, eigen_smallest,
                     functional_J, minimize_J, profile_constant)

SQPI = np.sqrt(np.pi)


@pytest.fixture(scope="module")
def grid():
    return WeightedGrid(eta_inf=12.0, n=2048)


def test_grid_invariants():
    with pytest.raises(ValueError):
        WeightedGrid(eta_inf=12.0, n=100)
    with pytest.raises(ValueError):
        WeightedGrid(eta_inf=6.0, n=512)


def test_operator_reproduces_ground_state(grid):
    forms = assemble_LK(grid, "neumann")
    samples = np.exp(-grid.nodes ** 2 / 4.0)
    out = apply_operator(forms, samples)
    want = 0.5 * samples[forms.offset:grid.n - 1]
    assert np.max(np.abs(out - want)) / samples.max() < 1e-3


def test_forms_symmetry_and_positivity(grid):
    forms = assemble_LK(grid, "neumann")
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = rng.normal(size=forms.A.shape[0])
        v = rng.normal(size=forms.A.shape[0])
        assert u @ (forms.A @ v) == pytest.approx(v @ (forms.A @ u), rel=1e-10)
        assert u @ (forms.A @ u) >= 0.0


def test_neumann_spectrum_half_integer_ladder(grid):
    res = eigen_smallest(grid, "neumann", count=3)
    assert np.max(np.abs(res.eigenvalues - np.array([0.5, 1.5, 2.5]))) < 1e-2


def test_dirichlet_spectrum_integer_ladder(grid):
    res = eigen_smallest(grid, "dirichlet", count=3)
    assert np.max(np.abs(res.eigenvalues - np.array([1.0, 2.0, 3.0]))) < 1e-2


def test_ground_vector_is_gaussian(grid):
    res = eigen_smallest(grid, "neumann", count=1)
    v = res.eigenvectors[:, 0]
    ref = np.exp(-grid.nodes ** 2 / 4.0)
    cos = abs(v @ ref) / (np.linalg.norm(v) * np.linalg.norm(ref))
    assert cos > 1.0 - 1e-6


def test_eigenvectors_weight_orthonormal(grid):
    res = eigen_smallest(grid, "neumann", count=3)
    forms = assemble_LK(grid, "neumann")
    V = res.eigenvectors[forms.offset:grid.n - 1, :]
    gram = V.T @ (forms.M @ V)
    assert np.max(np.abs(gram - np.eye(3))) < 1e-8


def test_eigenvalue_doubling_stability():
    v1 = eigen_smallest(WeightedGrid(12.0, 1024), "neumann", count=3).eigenvalues
    v2 = eigen_smallest(WeightedGrid(12.0, 2048), "neumann", count=3).eigenvalues
    assert np.max(np.abs(v1 - v2)) < 1e-3


def test_rayleigh_quotient_lower_bound(grid):
    forms = assemble_LK(grid, "neumann")
    rng = np.random.default_rng(42)
    for _ in range(8):
        u = rng.normal(size=forms.A.shape[0])
        q = (u @ (forms.A @ u)) / (u @ (forms.M @ u))
        assert q >= 0.5 - 1e-3


def test_functional_J_zero_and_closed_form(grid):
    p, eps = 1.75, 0.1
    assert functional_J(grid, np.zeros(grid.n), p) == 0.0
    phi = eps * np.exp(-grid.nodes ** 2 / 4.0)
    got = functional_J(grid, phi, p)
    # closed form for the ray through exp(-eta^2/4) (unit boundary value):
    # J(eps phi1) = eps^2 sqrt(pi) (1/4 - 1/(4(p-1))) + eps^(p+1)/(p+1)
    want = eps ** 2 * SQPI * (0.25 - 0.25 / (p - 1.0)) + eps ** (p + 1) / (p + 1)
    assert got == pytest.approx(want, rel=1e-3)
    assert got < 0.0


def test_minimizer_matches_ode_route(grid):
    for p in (1.6, 1.75, 1.9):
        minimizer, value = minimize_J(grid, p)
        prof = profile_constant(p).profile
        ws = np.interp(grid.nodes, prof.eta, prof.omega)
        rel = np.max(np.abs(minimizer - ws)) / np.max(np.abs(ws))
        assert rel < 1e-3, (p, rel)
        assert value < 0.0


def test_minimizer_below_ray_value(grid):
    p = 1.75
    _, value = minimize_J(grid, p)
    ray = functional_J(grid, 0.1 * np.exp(-grid.nodes ** 2 / 4.0), p)
    assert value < ray < 0.0


def test_minimizer_boundary_relation(grid):
    p = 1.75
    minimizer, _ = minimize_J(grid, p)
    h = grid.nodes[1] - grid.nodes[0]
    # one-sided 4th-order derivative at the wall
    d0 = (-25 * minimizer[0] + 48 * minimizer[1] - 36 * minimizer[2]
          + 16 * minimizer[3] - 3 * minimizer[4]) / (12 * h)
    assert d0 == pytest.approx(minimizer[0] ** p, rel=1e-3)


def test_minimizer_nonnegative_and_ode_consistent(grid):
    p = 1.75
    minimizer, _ = minimize_J(grid, p)
    assert np.all(minimizer >= -1e-12)
    h = grid.nodes[1] - grid.nodes[0]
    lam = 1.0 / (2.0 * (p - 1.0))
    eta = grid.nodes[1:-1]
    wpp = (minimizer[2:] - 2 * minimizer[1:-1] + minimizer[:-2]) / h ** 2
    wp = (minimizer[2:] - minimizer[:-2]) / (2 * h)
    res = wpp + 0.5 * eta * wp + lam * minimizer[1:-1]
    assert np.max(np.abs(res[:-1])) < 1e-3 * np.max(np.abs(minimizer))


def test_coercivity_probe(grid):
    p = 1.75
    rng = np.random.default_rng(1)
    psi = rng.normal(scale=0.05, size=grid.n) * np.exp(-grid.nodes ** 2 / 8.0)
    phi1 = np.exp(-grid.nodes ** 2 / 4.0)
    ray = phi1 + psi
    assert functional_J(grid, 1e3 * ray, p) > functional_J(grid, 10.0 * ray, p)


def test_minimize_window_guard(grid):
    with pytest.raises(ValueError):
        minimize_J(grid, 2.3)
