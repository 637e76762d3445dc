"""Self-similar profiles: the Gaussian-decaying branch of the profile ODE,
the boundary-matching constant, the existence window, and the envelope."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator


class ProfileInconclusiveError(RuntimeError):
    """omega_1(0) vanished within tolerance; the matching ratio is undefined."""


@dataclass(frozen=True)
class WhittakerParams:
    """Normal-form parameters after r = eta^2/4: k = 1/(2(p-1)) - 1/4, mu = 1/4."""
    p: float
    k: float
    mu: float = 0.25

    @property
    def decay_exponent(self):
        # k - mu - 1/2 equals 1/(2(p-1)) - 1, the power in the decaying branch
        return self.k - self.mu - 0.5


def whittaker_params(p: float) -> WhittakerParams:
    return WhittakerParams(p=p, k=1.0 / (2.0 * (p - 1.0)) - 0.25)


@dataclass(frozen=True)
class SelfSimilarProfile:
    """Profile on a uniform eta grid with derivative values.

    exists=True marks a matched positive profile (omega_s = c * omega_1);
    exists=False holds the raw decaying branch omega_1.
    """
    p: float
    eta: np.ndarray = field(repr=False)
    omega: np.ndarray = field(repr=False)
    omega_prime: np.ndarray = field(repr=False)
    c: float | None
    exists: bool
    eta_inf: float
    normalization: str

    def interpolator(self):
        return PchipInterpolator(self.eta, self.omega)

    def ode_residual(self):
        """omega'' + (eta/2) omega' + omega/(2(p-1)) at interior nodes, with a
        fourth-order stencil for omega'' and the integrator's omega'; vanishes
        to well below the stencil truncation for a true solution."""
        h = self.eta[1] - self.eta[0]
        w, wp = self.omega, self.omega_prime
        wpp = (-w[:-4] + 16 * w[1:-3] - 30 * w[2:-2] + 16 * w[3:-1] - w[4:]) \
            / (12.0 * h ** 2)
        res = wpp + 0.5 * self.eta[2:-2] * wp[2:-2] + w[2:-2] / (2.0 * (self.p - 1.0))
        return res


@dataclass(frozen=True)
class ProfileExistence:
    exists: bool
    c: float | None = None
    profile: SelfSimilarProfile | None = None
    reason: str | None = None


def decaying_profile(p: float, eta_inf: float = 14.0, rtol: float = 1e-10,
                     num: int | None = None) -> SelfSimilarProfile:
    """Integrate the profile ODE backward from eta_inf, seeded with the leading
    term of the Gaussian-decaying branch.

    Seed: omega(eta_inf) = eta_inf^(1/(p-1)-1) exp(-eta_inf^2/4) and the
    derivative of that expression; backward integration is stable because the
    decaying branch grows toward eta = 0.
    """
    if not (1.0 < p < 3.0):
        raise ValueError(f"p must lie in (1, 3), got {p}")
    if eta_inf < 10.0:
        raise ValueError("eta_inf must be at least 10")
    a = 1.0 / (p - 1.0) - 1.0
    lam = 1.0 / (2.0 * (p - 1.0))

    def rhs(eta, y):
        return [y[1], -0.5 * eta * y[1] - lam * y[0]]

    w_inf = eta_inf ** a * np.exp(-eta_inf ** 2 / 4.0)
    wp_inf = (a * eta_inf ** (a - 1.0) - 0.5 * eta_inf ** (a + 1.0)) * np.exp(-eta_inf ** 2 / 4.0)
    if num is None:
        num = int(100 * eta_inf) + 1
    grid = np.linspace(0.0, eta_inf, num)
    sol = solve_ivp(rhs, (eta_inf, 0.0), [w_inf, wp_inf], t_eval=grid[::-1],
                    method="DOP853", rtol=rtol, atol=1e-300)
    if not sol.success:
        raise RuntimeError(f"profile integration failed: {sol.message}")
    return SelfSimilarProfile(
        p=p, eta=sol.t[::-1].copy(), omega=sol.y[0][::-1].copy(),
        omega_prime=sol.y[1][::-1].copy(), c=None, exists=False,
        eta_inf=eta_inf, normalization="leading-asymptotic seed at eta_inf")


def profile_constant(p: float, eta_inf: float = 14.0, rtol: float = 1e-10) -> ProfileExistence:
    """Match the decaying branch to the boundary relation omega'(0) = omega(0)^p.

    With omega_1 positive at infinity, rho = omega_1'(0)/omega_1(0)^p; a
    positive matched profile needs rho > 0 and omega_1 > 0 on the whole grid,
    and then c = rho^(1/(p-1)).
    """
    prof = decaying_profile(p, eta_inf=eta_inf, rtol=rtol)
    w0, wp0 = prof.omega[0], prof.omega_prime[0]
    scale = np.max(np.abs(prof.omega))
    if abs(w0) < 1e-9 * scale:
        raise ProfileInconclusiveError(
            f"omega_1(0) = {w0:.3e} is degenerate relative to max {scale:.3e}")
    if np.any(prof.omega <= 0):
        return ProfileExistence(False, reason="profile changes sign")
    rho = wp0 / w0 ** p
    slope_scale = np.max(np.abs(prof.omega_prime))
    if rho <= 0 or wp0 <= 1e-9 * slope_scale:
        return ProfileExistence(False, reason=f"matching ratio {rho:.3e} not positive")
    c = rho ** (1.0 / (p - 1.0))
    matched = SelfSimilarProfile(
        p=p, eta=prof.eta, omega=c * prof.omega, omega_prime=c * prof.omega_prime,
        c=c, exists=True, eta_inf=eta_inf, normalization=prof.normalization)
    return ProfileExistence(True, c=c, profile=matched)


def existence_sweep(p_values, eta_inf: float = 14.0):
    """profile_constant over a p grid; degenerate points report as non-existence."""
    out = []
    for p in p_values:
        try:
            res = profile_constant(float(p), eta_inf=eta_inf)
        except ProfileInconclusiveError as exc:
            res = ProfileExistence(False, reason=f"degenerate: {exc}")
        out.append((float(p), res))
    return out


def envelope_check(profile: SelfSimilarProfile, eta_lo: float, eta_hi: float):
    """min and max of exp(eta^2/4) omega(eta) / eta^(1/(p-1)-1) over the grid
    slice [eta_lo, eta_hi]."""
    if not (0.0 < eta_lo < eta_hi <= profile.eta_inf - 2.0):
        raise ValueError("need 0 < eta_lo < eta_hi <= eta_inf - 2")
    a = 1.0 / (profile.p - 1.0) - 1.0
    m = (profile.eta >= eta_lo) & (profile.eta <= eta_hi)
    ratio = np.exp(profile.eta[m] ** 2 / 4.0) * profile.omega[m] / profile.eta[m] ** a
    return float(ratio.min()), float(ratio.max())


def self_similar_solution(profile: SelfSimilarProfile, t, x):
    """u(t, x) = t^(-1/(2(p-1))) omega(x / sqrt(t)), monotone-cubic interpolation."""
    if not profile.exists:
        raise ValueError("profile was not matched (exists=False)")
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    eta = x / np.sqrt(t)
    if np.any(eta > profile.eta_inf):
        raise ValueError("x / sqrt(t) outside the profile grid")
    vals = profile.interpolator()(eta)
    out = t ** (-1.0 / (2.0 * (profile.p - 1.0))) * vals
    return out if out.ndim else float(out)
