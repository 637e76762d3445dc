"""Gaussian kernels on the half line, measure data, the linear representation
formula, heat-ball set measures and the weak-Lq (level-set) quasinorm."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import erf

SQRT_PI = np.sqrt(np.pi)


def heat_kernel(t, x):
    """E(t, x) = (4 pi t)^(-1/2) exp(-x^2 / 4t); fundamental solution of u_t = u_xx."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat_kernel requires t > 0")
    x = np.asarray(x, dtype=float)
    out = np.exp(-x ** 2 / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)
    return out if out.ndim else float(out)


def mirrored_kernel(dt, x, y):
    """Neumann half-line kernel E(dt, x-y) + E(dt, x+y)."""
    return heat_kernel(dt, np.asarray(x) - y) + heat_kernel(dt, np.asarray(x) + y)


@dataclass(frozen=True)
class MeasureData:
    """Radon measure as atoms plus an optional piecewise-linear density.

    domain 'initial' lives on [0, inf); 'boundary' on [0, T). Atoms are kept
    symbolic and integrated exactly against kernels; the density is linear
    between its nodes.
    """
    domain: str
    atoms: tuple = ()
    density_nodes: np.ndarray | None = field(default=None, repr=False)
    density_values: np.ndarray | None = field(default=None, repr=False)
    T: float | None = None

    def __post_init__(self):
        if self.domain not in ("initial", "boundary"):
            raise ValueError(f"unknown domain {self.domain!r}")
        if self.domain == "boundary" and (self.T is None or self.T <= 0):
            raise ValueError("boundary measures need a positive horizon T")
        atoms = tuple((float(a), float(m)) for a, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        for loc, _ in atoms:
            if loc < 0:
                raise ValueError("atom locations must be >= 0")
            if self.domain == "boundary" and loc >= self.T:
                raise ValueError("boundary atoms must sit strictly before T")
        if (self.density_nodes is None) != (self.density_values is None):
            raise ValueError("density needs both nodes and values")
        if self.density_nodes is not None:
            nodes = np.asarray(self.density_nodes, dtype=float)
            vals = np.asarray(self.density_values, dtype=float)
            if nodes.ndim != 1 or nodes.shape != vals.shape or len(nodes) < 2:
                raise ValueError("density tables need matching 1-d arrays, >= 2 nodes")
            if np.any(np.diff(nodes) <= 0):
                raise ValueError("density nodes must be strictly increasing")
            if nodes[0] < 0:
                raise ValueError("density support must be >= 0")
            object.__setattr__(self, "density_nodes", nodes)
            object.__setattr__(self, "density_values", vals)

    @staticmethod
    def zero(domain="boundary", T=1.0):
        return MeasureData(domain=domain, T=T if domain == "boundary" else None)

    @staticmethod
    def dirac(mass=1.0, location=0.0, domain="boundary", T=1.0):
        return MeasureData(domain=domain, atoms=((location, mass),),
                           T=T if domain == "boundary" else None)

    @staticmethod
    def from_density(nodes, values, domain="boundary", T=None):
        if domain == "boundary" and T is None:
            T = float(np.asarray(nodes)[-1])
        return MeasureData(domain=domain, density_nodes=np.asarray(nodes, float),
                           density_values=np.asarray(values, float),
                           T=T if domain == "boundary" else None)

    def has_density(self):
        return self.density_nodes is not None

    def density_at(self, s):
        if not self.has_density():
            out = np.zeros_like(np.asarray(s, dtype=float))
            return out if out.ndim else 0.0
        out = np.interp(np.asarray(s, dtype=float), self.density_nodes,
                        self.density_values, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def atom_mass_at_zero(self):
        return sum(m for loc, m in self.atoms if loc == 0.0)

    def total_variation(self):
        tv = sum(abs(m) for _, m in self.atoms)
        if self.has_density():
            # split segments at sign crossings so |density| integrates exactly
            n, v = self.density_nodes, self.density_values
            for a, b, fa, fb in zip(n[:-1], n[1:], v[:-1], v[1:]):
                if fa * fb < 0:
                    root = a + (b - a) * fa / (fa - fb)
                    tv += 0.5 * (abs(fa) * (root - a) + abs(fb) * (b - root))
                else:
                    tv += 0.5 * (abs(fa) + abs(fb)) * (b - a)
        return tv

    def scaled(self, mass_factor, location_factor, value_factor):
        """Pushforward helper: atoms (loc*lf, m*mf); density (n*lf, v*vf)."""
        atoms = tuple((loc * location_factor, m * mass_factor) for loc, m in self.atoms)
        nodes = None if not self.has_density() else self.density_nodes * location_factor
        vals = None if not self.has_density() else self.density_values * value_factor
        T = None if self.T is None else self.T * location_factor
        return MeasureData(self.domain, atoms, nodes, vals, T)


def _gauss_linear_moment(t, x, a, b, fa, fb):
    """Exact int_a^b (fa + slope (y-a)) E(t, y - x) dy via erf and exp."""
    rt = 2.0 * np.sqrt(t)
    i0 = 0.5 * (erf((b - x) / rt) - erf((a - x) / rt))
    i1 = -2.0 * t * (heat_kernel(t, b - x) - heat_kernel(t, a - x))
    slope = (fb - fa) / (b - a)
    c0 = fa + slope * (x - a)
    return c0 * i0 + slope * i1


def _initial_density_term(nu: MeasureData, t, x):
    """int_0^inf [E(t,x-y) + E(t,x+y)] rho(y) dy, exact per linear segment."""
    if not nu.has_density():
        return 0.0
    nodes, vals = nu.density_nodes, nu.density_values
    tot = 0.0
    for a, b, fa, fb in zip(nodes[:-1], nodes[1:], vals[:-1], vals[1:]):
        tot += _gauss_linear_moment(t, x, a, b, fa, fb)
        tot += _gauss_linear_moment(t, -x, a, b, fa, fb)  # mirror image
    return tot


def _boundary_density_term(mu: MeasureData, t, x):
    """2 int_0^t E(t-s, x) rho(s) ds with the w = sqrt(t-s) substitution."""
    if not mu.has_density():
        return 0.0
    # integrand (2/sqrt(pi)) exp(-x^2/(4 w^2)) rho(t - w^2) on w in (0, sqrt(t))
    breaks = sorted({0.0} | {t - s for s in mu.density_nodes if 0.0 < s < t} | {t})
    wpts = np.sqrt(np.array(breaks))

    def f(w):
        ker = np.exp(-x ** 2 / (4.0 * w ** 2)) if x > 0 else 1.0
        return 2.0 / SQRT_PI * ker * mu.density_at(t - w ** 2)

    tot = 0.0
    for wa, wb in zip(wpts[:-1], wpts[1:]):
        val, _ = quad(f, wa, wb, limit=200)
        tot += val
    return tot


def linear_solution(nu: MeasureData, mu: MeasureData, t, x):
    """v_{nu,mu}(t,x): mirrored propagation of the initial measure plus the
    boundary-flux convolution 2 int_0^t E(t-s,x) dmu(s); atoms are exact."""
    if t <= 0:
        raise ValueError("linear_solution requires t > 0")
    if mu.T is not None and t > mu.T * (1 + 1e-12):
        raise ValueError("t beyond the boundary measure horizon")
    x = float(x)
    val = 0.0
    for y0, m in nu.atoms:
        val += m * mirrored_kernel(t, x, y0)
    val += _initial_density_term(nu, t, x)
    for s0, m in mu.atoms:
        if s0 < t:
            val += 2.0 * m * heat_kernel(t - s0, x)
    val += _boundary_density_term(mu, t, x)
    return float(val)


@dataclass(frozen=True)
class HeatBallQuery:
    t: float
    x: float
    r: float
    samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if self.t <= 0 or self.x < 0 or self.r <= 0:
            raise ValueError("need t > 0, x >= 0, r > 0")
        if self.samples < 10_000:
            raise ValueError("Monte Carlo budget must be at least 1e4 samples")


def heat_ball_measure(q: HeatBallQuery):
    """Monte Carlo measure of {(s, y): s <= t, mirrored_kernel(t-s, x, y) >= r},
    sampled uniformly over the containment box
    [t - 1/(4 pi e r^2), t] x [x - 1/(r sqrt(pi e)), x + 1/(r sqrt(pi e))]
    clipped to the quadrant {s >= 0, y >= 0}.  Returns (estimate, std_error).
    """
    t, x, r = q.t, q.x, q.r
    s_lo = max(0.0, t - 1.0 / (4.0 * np.pi * np.e * r ** 2))
    y_half = 1.0 / (r * np.sqrt(np.pi * np.e))
    y_lo, y_hi = max(0.0, x - y_half), x + y_half
    area = (t - s_lo) * (y_hi - y_lo)
    if area <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng(q.seed)
    s = rng.uniform(s_lo, t, q.samples)
    y = rng.uniform(y_lo, y_hi, q.samples)
    dt = t - s
    ok = dt > 0
    inside = np.zeros(q.samples, dtype=bool)
    inside[ok] = mirrored_kernel(dt[ok], x, y[ok]) >= r
    phat = inside.mean()
    est = area * phat
    se = area * np.sqrt(max(phat * (1.0 - phat), 0.0) / q.samples)
    return float(est), float(se)


def boundary_heat_ball_measure(t, r, samples=1_000_000, seed=0):
    """Measure of {s <= t : mirrored_kernel(t-s, 0, 0) >= r} sampled over the
    containment interval [t - 1/(4 pi e r^2), t] clipped to s >= 0."""
    s_lo = max(0.0, t - 1.0 / (4.0 * np.pi * np.e * r ** 2))
    width = t - s_lo
    if width <= 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    s = rng.uniform(s_lo, t, samples)
    dt = t - s
    inside = np.zeros(samples, dtype=bool)
    ok = dt > 0
    inside[ok] = 1.0 / np.sqrt(np.pi * dt[ok]) >= r
    phat = inside.mean()
    return float(width * phat), float(width * np.sqrt(max(phat * (1 - phat), 0.0) / samples))


def weak_norm(weights, values, qexp: float):
    """Level-set quasinorm sup_lambda lambda |{|f| >= lambda}|^(1/q) from
    weighted samples (weights = cell measures, values = |f| on the cells).

    Levels are taken at every distinct sampled value, which captures the
    lambda -> lambda^- limits of the right-continuous distribution function.
    """
    if qexp <= 1:
        raise ValueError("need q > 1")
    w = np.asarray(weights, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if w.size == 0 or v.size == 0:
        raise ValueError("empty sample set")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    order = np.argsort(v)[::-1]
    v_sorted = v[order]
    meas_ge = np.cumsum(w[order])          # measure of {|f| >= v_sorted[k]}
    return float(np.max(v_sorted * meas_ge ** (1.0 / qexp)))
