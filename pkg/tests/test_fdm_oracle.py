import numpy as np
import pytest

from fluxlab import (FdmConfig, FluxLaw, MeasureData, linear_solution,
                     solve_fdm, solve_fdm_interval)

ZERO_LAW = FluxLaw.tabulated([(-1.0, 0.0), (1.0, 0.0)])


def test_config_invariants():
    with pytest.raises(ValueError):
        FdmConfig(L=1.0, nx=16, nt=64)
    with pytest.raises(ValueError):
        FdmConfig(L=1.0, nx=64, nt=64, scheme="leapfrog")


def manufactured_errors(scheme, nts):
    # u = exp(t - x) solves u_t = u_xx with forcing mu = e^t + g(e^t)
    law = FluxLaw.power(1.75)
    mu = lambda t: np.exp(t) + np.exp(t) ** 1.75
    errs = []
    for nt in nts:
        cfg = FdmConfig(L=1.0, nx=2048, nt=nt, scheme=scheme,
                        far_value=lambda t: np.exp(t - 1.0))
        _, frames = solve_fdm(law, lambda x: np.exp(-x), mu, 1.0, cfg,
                              frame_times=(1.0,))
        errs.append(np.max(np.abs(frames[0].u - np.exp(1.0 - frames[0].xs))))
    return np.array(errs)


def test_implicit_euler_first_order():
    errs = manufactured_errors("implicit-euler", (32, 64, 128, 256))
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(np.abs(orders - 1.0) < 0.2)


def test_crank_nicolson_second_order():
    errs = manufactured_errors("crank-nicolson", (32, 64, 128, 256))
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all(np.abs(orders - 2.0) < 0.2)


def test_linear_case_matches_kernel_formula():
    y = np.linspace(0.0, 6.0, 385)
    nu = MeasureData.from_density(y, np.exp(-y ** 2), domain="initial")
    cfg = FdmConfig(L=14.0, nx=2048, nt=256, scheme="crank-nicolson")
    (times, trace), _ = solve_fdm(ZERO_LAW, lambda x: np.exp(-x ** 2),
                                  lambda t: 0.0, 1.0, cfg)
    mu0 = MeasureData.zero("boundary", T=1.0)
    for i in (64, 128, 256):
        want = linear_solution(nu, mu0, times[i], 0.0)
        assert trace[i] == pytest.approx(want, rel=1e-3)


def test_discrete_mass_balance():
    # implicit Euler satisfies, exactly per step,
    #   (M^{n+1} - M^n)/dt = mu(t^{n+1}) - g(u0^{n+1}) + u_x(L)^{n+1}
    # with trapezoid mass M and one-sided far-end flux
    law = FluxLaw.power(1.75)
    mu = lambda t: np.sin(np.pi * t) ** 2
    L, nx, nt, T = 24.0, 512, 32, 1.0
    x = np.linspace(0.0, L, nx + 1)
    h = x[1] - x[0]
    dt = T / nt
    cfg = FdmConfig(L=L, nx=nx, nt=nt, scheme="implicit-euler")
    start = np.exp(-((x - 2.0) ** 2))
    (times, trace), frames = solve_fdm(law, lambda x_: np.interp(x_, x, start),
                                       mu, T, cfg,
                                       frame_times=tuple(times_ * dt for times_ in range(1, nt + 1)))
    prev = start
    worst = 0.0
    for k, snap in enumerate(frames):
        m0 = np.trapezoid(prev, x)
        m1 = np.trapezoid(snap.u, x)
        flux = mu(times[k + 1]) - law.g(snap.u[0]) + (snap.u[-1] - snap.u[-2]) / h
        worst = max(worst, abs((m1 - m0) / dt - flux))
        prev = snap.u
    assert worst < 1e-6


def test_nonnegative_and_monotone_in_data():
    law = FluxLaw.power(1.75)
    rng = np.random.default_rng(9)
    for _ in range(5):
        c = rng.uniform(0.2, 1.0)
        cfg = FdmConfig(L=12.0, nx=256, nt=64, scheme="implicit-euler")
        (t1, lo), _ = solve_fdm(law, lambda x: c * np.exp(-x),
                                lambda t: c * (1 + np.sin(3 * t)), 1.0, cfg)
        (t2, hi), _ = solve_fdm(law, lambda x: (c + 0.3) * np.exp(-x),
                                lambda t: (c + 0.3) * (1 + np.sin(3 * t)), 1.0, cfg)
        assert np.all(lo >= -1e-12)
        assert np.all(lo <= hi + 1e-10)


def test_interval_oracle_constant_state():
    times, tr_a, tr_b = solve_fdm_interval(ZERO_LAW, lambda x: 1.0 + 0.0 * x,
                                           lambda t: 0.0, lambda t: 0.0,
                                           0.0, 1.0, 0.5, 128, 64)
    assert np.max(np.abs(tr_a - 1.0)) < 1e-12
    assert np.max(np.abs(tr_b - 1.0)) < 1e-12
