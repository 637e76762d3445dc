"""Independent finite-difference solver for the regular (smooth-data) problem,
used to cross-validate the Volterra trace path."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .fluxlaw import FluxLaw
from .trace_volterra import FieldSnapshot, NewtonStallError


@dataclass(frozen=True)
class FdmConfig:
    """Truncated-domain theta-scheme configuration.

    far_bc 'dirichlet-zero' closes the truncated end with u = 0; far_value
    (optional callable of t) overrides it with an exact Dirichlet trace, which
    the manufactured-solution tests use."""
    L: float
    nx: int
    nt: int
    scheme: str = "implicit-euler"
    far_bc: str = "dirichlet-zero"
    far_value: object = None

    def __post_init__(self):
        if self.nx < 32 or self.nt < 32:
            raise ValueError("need nx, nt >= 32")
        if self.scheme not in ("implicit-euler", "crank-nicolson"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.far_bc != "dirichlet-zero":
            raise ValueError(f"unknown far boundary {self.far_bc!r}")

    @property
    def theta(self):
        return 1.0 if self.scheme == "implicit-euler" else 0.5


def _as_callable(table_or_fn):
    if callable(table_or_fn):
        return table_or_fn
    nodes, values = table_or_fn
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    return lambda s: np.interp(s, nodes, values, left=0.0, right=0.0)


def solve_fdm(law: FluxLaw, nu_density, mu_density, T: float, cfg: FdmConfig,
              frame_times=()):
    """theta-scheme march of u_t = u_xx on (0, L) with the ghost-node flux
    closure -(u1 - u_-1)/(2h) + g(u0) = mu(t) resolved by Newton inside each
    implicit solve.  Returns ((times, trace), [FieldSnapshot ...]).

    nu_density / mu_density are piecewise-linear tables (nodes, values) or
    callables; atoms are outside this solver's contract.
    """
    nu_f = _as_callable(nu_density)
    mu_f = _as_callable(mu_density)
    x = np.linspace(0.0, cfg.L, cfg.nx + 1)
    h = x[1] - x[0]
    dt = T / cfg.nt
    th = cfg.theta
    far = cfg.far_value if cfg.far_value is not None else (lambda t: 0.0)
    u = np.asarray(nu_f(x), dtype=float) * np.ones_like(x)
    u[-1] = far(0.0)
    r = dt / h ** 2
    nx = cfg.nx

    def laplacian_row(u, mu_t):
        lap = np.empty(nx)
        lap[1:] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h ** 2
        lap[0] = (2.0 * u[1] - 2.0 * u[0] + 2.0 * h * (mu_t - law.g(u[0]))) / h ** 2
        return lap

    times = np.linspace(0.0, T, cfg.nt + 1)
    trace = np.empty(cfg.nt + 1)
    trace[0] = u[0]
    frames = []
    frame_set = sorted(frame_times)

    for n in range(cfg.nt):
        t1 = times[n + 1]
        expl = u[:-1] + (1.0 - th) * dt * laplacian_row(u, mu_f(times[n]))
        w = u.copy()
        w[nx] = far(t1)
        mu1 = mu_f(t1)
        converged = False
        for _ in range(60):
            g0 = law.g(w[0])
            gp0 = law.gprime(w[0])
            ab = np.zeros((3, nx))
            rhs = np.empty(nx)
            ab[1, 0] = 1.0 + th * r * (2.0 + 2.0 * h * gp0)
            ab[0, 1] = -2.0 * th * r
            rhs[0] = expl[0] + th * dt * (2.0 / h) * (mu1 - g0 + gp0 * w[0])
            ab[1, 1:] = 1.0 + 2.0 * th * r
            ab[0, 2:] = -th * r
            ab[2, : nx - 1] = -th * r
            rhs[1:] = expl[1:]
            rhs[nx - 1] += th * r * w[nx]
            sol = solve_banded((1, 1), ab, rhs)
            moved = abs(sol[0] - w[0])
            w[:nx] = sol
            if moved < 1e-10 * (1.0 + abs(sol[0])):
                converged = True
                break
        if not converged:
            raise NewtonStallError("boundary Newton closure did not converge")
        u = w
        trace[n + 1] = u[0]
        while frame_set and t1 >= frame_set[0] - 1e-12:
            frames.append(FieldSnapshot(t=t1, xs=x.copy(), u=u.copy()))
            frame_set.pop(0)
    return (times, trace), frames


def solve_fdm_interval(law: FluxLaw, nu_density, mu1_density, mu2_density,
                       a: float, b: float, T: float, nx: int, nt: int,
                       scheme: str = "crank-nicolson"):
    """Interval variant with nonlinear flux at both ends:
    u_x(., b) + g(u(., b)) = mu1, -u_x(., a) + g(u(., a)) = mu2.
    Returns (times, trace at a, trace at b)."""
    nu_f = _as_callable(nu_density)
    mu1_f = _as_callable(mu1_density)
    mu2_f = _as_callable(mu2_density)
    x = np.linspace(a, b, nx + 1)
    h = x[1] - x[0]
    dt = T / nt
    th = 1.0 if scheme == "implicit-euler" else 0.5
    u = np.asarray(nu_f(x), dtype=float) * np.ones_like(x)
    r = dt / h ** 2
    n_un = nx + 1

    def laplacian(u, mu1_t, mu2_t):
        lap = np.empty(n_un)
        lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h ** 2
        lap[0] = (2.0 * u[1] - 2.0 * u[0] + 2.0 * h * (mu2_t - law.g(u[0]))) / h ** 2
        lap[-1] = (2.0 * u[-2] - 2.0 * u[-1] + 2.0 * h * (mu1_t - law.g(u[-1]))) / h ** 2
        return lap

    times = np.linspace(0.0, T, nt + 1)
    tr_a = np.empty(nt + 1)
    tr_b = np.empty(nt + 1)
    tr_a[0], tr_b[0] = u[0], u[-1]
    for n in range(nt):
        t1 = times[n + 1]
        expl = u + (1.0 - th) * dt * laplacian(u, mu1_f(times[n]), mu2_f(times[n]))
        w = u.copy()
        mu1v, mu2v = mu1_f(t1), mu2_f(t1)
        for _ in range(60):
            gA, gB = law.g(w[0]), law.g(w[-1])
            gpA, gpB = law.gprime(w[0]), law.gprime(w[-1])
            ab = np.zeros((3, n_un))
            rhs = np.empty(n_un)
            ab[1, 1:-1] = 1.0 + 2.0 * th * r
            ab[0, 2:] = -th * r               # supers of rows 1..nx-1
            ab[2, : n_un - 2] = -th * r       # subs of rows 1..nx-1
            rhs[1:-1] = expl[1:-1]
            ab[1, 0] = 1.0 + th * r * (2.0 + 2.0 * h * gpA)
            ab[0, 1] = -2.0 * th * r
            rhs[0] = expl[0] + th * dt * (2.0 / h) * (mu2v - gA + gpA * w[0])
            ab[1, -1] = 1.0 + th * r * (2.0 + 2.0 * h * gpB)
            ab[2, n_un - 2] = -2.0 * th * r
            rhs[-1] = expl[-1] + th * dt * (2.0 / h) * (mu1v - gB + gpB * w[-1])
            sol = solve_banded((1, 1), ab, rhs)
            moved = max(abs(sol[0] - w[0]), abs(sol[-1] - w[-1]))
            w = sol
            if moved < 1e-10 * (1.0 + np.max(np.abs(sol))):
                break
        u = w
        tr_a[n + 1], tr_b[n + 1] = u[0], u[-1]
    return times, tr_a, tr_b
