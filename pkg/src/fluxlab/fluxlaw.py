"""Boundary flux nonlinearities and the measure-data admissibility integral."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad


class NonmonotoneLawError(ValueError):
    """A tabulated flux law failed the nondecreasing check."""


class InconclusiveTailError(RuntimeError):
    """Fitted tail slope of the admissibility integrand sits in the dead band
    around -1; raise s_max and retry."""


@dataclass(frozen=True)
class FluxLaw:
    """Nondecreasing boundary nonlinearity with g(0) = 0.

    kind 'power': g(s) = sign(s) |s|^p.
    kind 'tabulated': piecewise-linear through sorted breakpoints, extended
    linearly beyond the table (keeps the Newton closure in the trace solver
    well posed).
    """
    kind: str
    p: float | None = None
    table_s: np.ndarray | None = field(default=None, repr=False)
    table_g: np.ndarray | None = field(default=None, repr=False)

    @staticmethod
    def power(p: float) -> "FluxLaw":
        if p <= 0:
            raise ValueError(f"power exponent must be positive, got {p}")
        return FluxLaw(kind="power", p=float(p))

    @staticmethod
    def tabulated(points) -> "FluxLaw":
        pts = sorted((float(s), float(g)) for s, g in points)
        s = np.array([q[0] for q in pts])
        g = np.array([q[1] for q in pts])
        if len(s) < 2 or np.any(np.diff(s) <= 0):
            raise ValueError("need at least two breakpoints with distinct s")
        if np.any(np.diff(g) < 0):
            raise NonmonotoneLawError("tabulated g must be nondecreasing")
        law = FluxLaw(kind="tabulated", table_s=s, table_g=g)
        if abs(law.g(0.0)) > 0.0:
            raise ValueError("tabulated law must satisfy g(0) = 0")
        return law

    def g(self, s):
        """Evaluate g; accepts scalars or arrays."""
        if self.kind == "power":
            s = np.asarray(s, dtype=float)
            out = np.sign(s) * np.abs(s) ** self.p
            return out if out.ndim else float(out)
        s_arr = np.asarray(s, dtype=float)
        sk, gk = self.table_s, self.table_g
        # linear extrapolation using the end-segment slopes
        lo_slope = (gk[1] - gk[0]) / (sk[1] - sk[0])
        hi_slope = (gk[-1] - gk[-2]) / (sk[-1] - sk[-2])
        out = np.interp(s_arr, sk, gk)
        out = np.where(s_arr < sk[0], gk[0] + lo_slope * (s_arr - sk[0]), out)
        out = np.where(s_arr > sk[-1], gk[-1] + hi_slope * (s_arr - sk[-1]), out)
        return out if out.ndim else float(out)

    def gprime(self, s):
        """One-sided derivative of g, used by Newton closures."""
        if self.kind == "power":
            s_arr = np.asarray(s, dtype=float)
            out = self.p * np.abs(s_arr) ** (self.p - 1.0)
            return out if out.ndim else float(out)
        sk, gk = self.table_s, self.table_g
        slopes = np.diff(gk) / np.diff(sk)
        idx = np.clip(np.searchsorted(sk, np.asarray(s, dtype=float)) - 1, 0, len(slopes) - 1)
        out = slopes[idx]
        return out if out.ndim else float(out)

    def G(self, s):
        """Antiderivative G(r) = int_0^r g; exact for both kinds."""
        if self.kind == "power":
            s_arr = np.asarray(s, dtype=float)
            out = np.abs(s_arr) ** (self.p + 1.0) / (self.p + 1.0)
            return out if out.ndim else float(out)
        return _tabulated_antiderivative(self, s)

    def validate(self, probe=None):
        """Monotonicity / g(0)=0 sanity probe on a test grid."""
        if probe is None:
            probe = np.linspace(-10.0, 10.0, 401)
        vals = self.g(probe)
        if np.any(np.diff(vals) < -1e-12):
            raise NonmonotoneLawError("g is decreasing somewhere on the probe grid")
        if abs(self.g(0.0)) > 0.0:
            raise ValueError("g(0) != 0")
        return True


def _tabulated_antiderivative(law, s):
    """Exact integral of the piecewise-linear g from 0 to s (trapezoid per cell)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    out = np.empty_like(s_arr)
    for i, si in enumerate(s_arr):
        lo, hi = (0.0, si) if si >= 0 else (si, 0.0)
        cuts = law.table_s[(law.table_s > lo) & (law.table_s < hi)]
        xs = np.concatenate([[lo], cuts, [hi]])
        val = float(np.trapezoid(law.g(xs), xs))
        out[i] = val if si >= 0 else -val
    return out if np.ndim(s) else float(out[0])


@dataclass(frozen=True)
class AdmissibilityResult:
    finite: bool
    value: float | None
    tail_slope: float
    s_max: float


def admissibility_integral(law: FluxLaw, n: int = 1, s_max: float = 1e6,
                           slope_band: float = 0.05) -> AdmissibilityResult:
    """Classify int_1^inf (g(s) - g(-s)) s^(-(2n+1)/n) ds.

    Adaptive quadrature on [1, s_max]; the tail beyond s_max is classified by
    the fitted log-log slope of the integrand near s_max: slope < -1 -
    slope_band gives a finite extrapolated tail, slope >= -1 + slope_band
    means divergence, and slopes inside the band raise InconclusiveTailError.
    """
    if n < 1 or int(n) != n:
        raise ValueError("n must be a positive integer")
    expo = (2 * n + 1) / n

    def integrand(s):
        return (law.g(s) - law.g(-s)) * s ** (-expo)

    # fit the tail slope over the last two decades before s_max
    s_fit = np.geomspace(s_max / 100.0, s_max, 9)
    f_fit = np.array([integrand(s) for s in s_fit])
    def body_quad():
        # integrate in y = log s; smooth for power-like integrands
        val, _ = quad(lambda y: integrand(np.exp(y)) * np.exp(y), 0.0,
                      np.log(s_max), limit=400)
        return val

    if np.any(f_fit <= 0):
        # odd part vanished: integral trivially finite
        return AdmissibilityResult(True, body_quad(), -np.inf, s_max)
    slope = np.polyfit(np.log(s_fit), np.log(f_fit), 1)[0]

    if slope >= -1.0 + slope_band:
        return AdmissibilityResult(False, None, float(slope), s_max)
    if slope >= -1.0 - slope_band:
        raise InconclusiveTailError(
            f"tail slope {slope:.4f} within {slope_band} of -1 at s_max={s_max:g}")

    # power-law tail: int_smax^inf f ~ -f(smax) smax / (slope + 1)
    tail = -integrand(s_max) * s_max / (slope + 1.0)
    return AdmissibilityResult(True, body_quad() + tail, float(slope), s_max)
