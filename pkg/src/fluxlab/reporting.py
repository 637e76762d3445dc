"""Figure rendering for the CLI report paths; every command that writes a
delimited output also drops a PNG next to it."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_profile(results: dict, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if results.get("exists"):
        eta = np.asarray(results["eta"])
        omega = np.asarray(results["omega"])
        ax.plot(eta, omega, "b-", lw=1.6, label="matched profile")
        ax.set_title(f"p = {results['p']}: matching constant c = {results['c']:.6g}")
        ax.set_yscale("log")
        ax.set_ylim(max(omega.min(), 1e-18), omega.max() * 2)
    else:
        ax.text(0.5, 0.5, f"no positive profile at p = {results['p']}\n"
                          f"({results.get('reason', 'outside the existence window')})",
                ha="center", va="center", transform=ax.transAxes)
        ax.set_title(f"p = {results['p']}: nonexistence")
    ax.set_xlabel("similarity variable")
    ax.set_ylabel("profile value")
    ax.grid(True, alpha=0.3)
    if results.get("exists"):
        ax.legend()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_spectrum(results: dict, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    markers = {"neumann": "o", "dirichlet": "s"}
    for block in results["spectra"]:
        vals = block["eigenvalues"]
        ax.plot(range(1, len(vals) + 1), vals, markers.get(block["bc"], "x"),
                ms=8, label=block["bc"])
        for j, v in enumerate(vals):
            ax.axhline(round(2 * v) / 2, color="0.8", lw=0.6, zorder=0)
    ax.set_xlabel("mode index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("weighted half-line spectra (half-integer ladders)")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_solve(results: dict, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    t = np.asarray(results["t"])
    U = np.asarray(results["trace"])
    ax.plot(t, U, "b-", lw=1.4, label="boundary trace")
    F = np.asarray(results["forcing"])
    ax.plot(t, F, "k--", lw=1.0, label="linear forcing")
    if np.all(U[np.isfinite(U)] >= 0) and np.nanmax(U) / max(np.nanmin(U[U > 0], initial=1e-300), 1e-300) > 50:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("u(t, 0)")
    ax.set_title("trace of the nonlinear-flux solution")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_solve_interval(results: dict, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    t = np.asarray(results["t"])
    ax.plot(t, np.asarray(results["trace_left"]), "b-", lw=1.4,
            label=f"x = {results['a']}")
    ax.plot(t, np.asarray(results["trace_right"]), "r--", lw=1.4,
            label=f"x = {results['b']}")
    ax.set_xlabel("t")
    ax.set_ylabel("boundary traces")
    ax.set_title("interval problem boundary traces")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_sweep(results: dict, path):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ell = np.asarray(results["ladder"])
    R = np.asarray(results["rescaled_traces"])
    ax.semilogx(ell, R, "bo-", lw=1.4, base=2, label="rescaled trace at t = 1")
    if results.get("limit") is not None:
        ax.axhline(results["limit"], color="g", ls=":",
                   label=f"extrapolated limit {results['limit']:.5g}")
    if results.get("profile_value") is not None:
        ax.axhline(results["profile_value"], color="r", ls="--",
                   label=f"profile value {results['profile_value']:.5g}")
    ax.set_xlabel("atom mass")
    ax.set_ylabel("rescaled trace")
    ax.set_title(f"flux ladder, p = {results['p']}: {results['classification']}")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


def render_verify(results: dict, path):
    checks = results["checks"]
    names = [c["name"] for c in checks]
    margins = [c["margin"] for c in checks]
    colors = ["tab:green" if c["pass"] else "tab:red" for c in checks]
    fig, ax = plt.subplots(figsize=(7.0, 0.45 * len(checks) + 1.4))
    ax.barh(range(len(checks)), margins, color=colors)
    ax.set_yticks(range(len(checks)))
    ax.set_yticklabels(names, fontsize=8)
    ax.axvline(1.0, color="k", lw=1.0)
    ax.set_xlabel("measured / tolerance (pass < 1)")
    ax.set_title("verification margins")
    ax.set_xscale("log")
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)


_RENDERERS = {
    "profile": render_profile,
    "spectrum": render_spectrum,
    "solve": render_solve,
    "solve-interval": render_solve_interval,
    "sweep": render_sweep,
    "verify": render_verify,
}


def save_figure(command: str, results: dict, path):
    _RENDERERS[command](results, path)
    return path
