"""Command-line entry point: configuration ingestion, experiment orchestration
and result emission (JSON or CSV, with a rendered figure alongside).

Exit codes: 0 success (nonexistence results included), 2 invalid
configuration, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .fluxlaw import FluxLaw, InconclusiveTailError, admissibility_integral
from .kernels import (HeatBallQuery, MeasureData, boundary_heat_ball_measure,
                      heat_ball_measure, weak_norm)
from .selfsimilar import (ProfileInconclusiveError, decaying_profile,
                          envelope_check, profile_constant)
from .spectral_weighted import (ConvergedToZeroError, NoDescentError,
                                WeightedGrid, eigen_smallest, functional_J,
                                minimize_J)
from .trace_volterra import (GradedTimeGrid, ImageSeriesTooShortError,
                             NewtonStallError, solve_interval_trace,
                             solve_trace)
from .harness import UnclassifiableError, dichotomy_sweep, marcinkiewicz_check, \
    scaling_identity_check
from . import reporting

_SOLVER_ERRORS = (NewtonStallError, NoDescentError, ConvergedToZeroError,
                  UnclassifiableError, ImageSeriesTooShortError,
                  InconclusiveTailError)

_COMMON_KEYS = {"command", "out", "format", "seed", "workers"}
_COMMAND_KEYS = {
    "profile": {"p", "eta_inf", "rtol", "eta_lo", "eta_hi"},
    "spectrum": {"bc", "count", "n", "eta_inf"},
    "solve": {"p", "T", "N", "gamma", "mu", "nu", "law"},
    "solve-interval": {"p", "a", "b", "images", "T", "N", "gamma",
                       "mu1", "mu2", "nu"},
    "sweep": {"p", "ell_min", "rungs", "T", "N", "gamma"},
    "verify": {"n", "eta_inf"},
}


class ConfigError(ValueError):
    pass


def _load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _measure_from_spec(spec, domain, T):
    """Build MeasureData from {'atoms': [[loc, mass], ...],
    'density': {'nodes': [...], 'values': [...]}}."""
    if spec is None:
        return MeasureData.zero(domain, T)
    if not isinstance(spec, dict) or not set(spec) <= {"atoms", "density"}:
        raise ConfigError(f"bad measure spec {spec!r}")
    atoms = tuple((float(a), float(m)) for a, m in spec.get("atoms", ()))
    dens = spec.get("density")
    nodes = values = None
    if dens is not None:
        nodes = np.asarray(dens["nodes"], dtype=float)
        values = np.asarray(dens["values"], dtype=float)
    return MeasureData(domain=domain, atoms=atoms, density_nodes=nodes,
                       density_values=values, T=T if domain == "boundary" else None)


def _law_from_config(cfg):
    law_spec = cfg.get("law")
    if law_spec is not None:
        if law_spec.get("kind") == "power":
            return FluxLaw.power(float(law_spec["p"]))
        if law_spec.get("kind") == "tabulated":
            return FluxLaw.tabulated(law_spec["points"])
        raise ConfigError(f"unknown law spec {law_spec!r}")
    if "p" not in cfg:
        raise ConfigError("need either 'p' or a 'law' spec")
    return FluxLaw.power(float(cfg["p"]))


def _resolve(args, parser_defaults, command):
    """Merge config-file values with CLI flags (flags win) and validate keys."""
    cfg = dict(parser_defaults)
    file_cfg = {}
    if args.config:
        file_cfg = _load_config(args.config)
        if "command" in file_cfg and file_cfg["command"] != command:
            raise ConfigError(
                f"config command {file_cfg['command']!r} != {command!r}")
        allowed = _COMMAND_KEYS[command] | _COMMON_KEYS
        unknown = set(file_cfg) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg.update({k: v for k, v in file_cfg.items() if k != "command"})
    for key, value in vars(args).items():
        if key in ("config", "func", "defaults"):
            continue
        if value is not None:
            cfg[key] = value
    cfg["command"] = command
    return cfg


def _emit(cfg, results, tolerances, columns, rows):
    """Write the payload (JSON or CSV plus figure) or print JSON to stdout."""
    payload = {
        "command": cfg["command"],
        "config": {k: v for k, v in sorted(cfg.items()) if k not in ("out", "func")},
        "results": results,
        "tolerances": tolerances,
        "seed": cfg.get("seed", 0),
        "version": __version__,
    }
    out = cfg.get("out")
    if not out:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=_jsonify)
        sys.stdout.write("\n")
        return
    fmt = cfg.get("format", "json")
    if fmt == "json":
        with open(out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonify)
            fh.write("\n")
    elif fmt == "csv":
        with open(out, "w", newline="") as fh:
            fh.write(f"# command: {cfg['command']}\n")
            fh.write("# config: " + json.dumps(payload["config"], sort_keys=True,
                                               default=_jsonify) + "\n")
            fh.write("# tolerances: " + json.dumps(tolerances, sort_keys=True) + "\n")
            fh.write(f"# seed: {payload['seed']}\n")
            fh.write(f"# version: {__version__}\n")
            writer = csv.writer(fh)
            writer.writerow(columns)
            writer.writerows(rows)
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    fig_path = _figure_path(out)
    reporting.save_figure(cfg["command"], results, fig_path)
    print(f"wrote {out} and {fig_path}")


def _figure_path(out):
    stem = out.rsplit(".", 1)[0] if "." in str(out).split("/")[-1] else str(out)
    return f"{stem}.png"


def _jsonify(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON-serializable: {type(obj)}")


# ---------------------------------------------------------------------------
# commands

def _cmd_profile(cfg):
    p = float(cfg["p"])
    tol = {"envelope_window": [cfg["eta_lo"], cfg["eta_hi"]]}
    try:
        res = profile_constant(p, eta_inf=cfg["eta_inf"], rtol=cfg["rtol"])
    except ProfileInconclusiveError as exc:
        results = {"p": p, "exists": False, "reason": f"degenerate: {exc}"}
        _emit(cfg, results, tol, ["eta", "omega", "omega_prime"], [])
        return 0
    if res.exists:
        prof = res.profile
        lo, hi = cfg["eta_lo"], cfg["eta_hi"]
        rmin, rmax = envelope_check(prof, lo, hi)
        results = {"p": p, "exists": True, "c": res.c,
                   "eta": prof.eta, "omega": prof.omega,
                   "omega_prime": prof.omega_prime,
                   "envelope": {"ratio_min": rmin, "ratio_max": rmax,
                                "window": [lo, hi]}}
        rows = list(zip(prof.eta, prof.omega, prof.omega_prime))
    else:
        results = {"p": p, "exists": False, "reason": res.reason}
        rows = []
    _emit(cfg, results, tol, ["eta", "omega", "omega_prime"], rows)
    return 0


def _cmd_spectrum(cfg):
    grid = WeightedGrid(eta_inf=cfg["eta_inf"], n=cfg["n"])
    bcs = ("neumann", "dirichlet") if cfg["bc"] == "both" else (cfg["bc"],)
    spectra = []
    rows = []
    for bc in bcs:
        res = eigen_smallest(grid, bc, count=cfg["count"])
        spectra.append({"bc": bc, "eigenvalues": res.eigenvalues})
        for j, lam in enumerate(res.eigenvalues, start=1):
            rows.append((bc, j, float(lam)))
    results = {"spectra": spectra, "n": cfg["n"], "eta_inf": cfg["eta_inf"]}
    _emit(cfg, results, {"eigenvalue_abs_tol": 1e-2}, ["bc", "index", "eigenvalue"], rows)
    return 0


def _cmd_solve(cfg):
    law = _law_from_config(cfg)
    grid = GradedTimeGrid(cfg["T"], cfg["N"], cfg["gamma"])
    mu = _measure_from_spec(cfg.get("mu"), "boundary", cfg["T"])
    nu = _measure_from_spec(cfg.get("nu"), "initial", None)
    sol = solve_trace(law, nu, mu, grid)
    t, U = sol.trace()
    results = {"t": t, "trace": U, "g_trace": sol.gU[1:], "forcing": sol.forcing[1:],
               "atom_snaps": list(sol.atom_snaps)}
    rows = list(zip(t, U, sol.gU[1:], sol.forcing[1:]))
    _emit(cfg, results, {"newton_rel_tol": 1e-12},
          ["t", "trace", "g_trace", "forcing"], rows)
    return 0


def _cmd_solve_interval(cfg):
    law = _law_from_config(cfg)
    a, b = float(cfg["a"]), float(cfg["b"])
    grid = GradedTimeGrid(cfg["T"], cfg["N"], cfg["gamma"])
    mu1 = _measure_from_spec(cfg.get("mu1"), "boundary", cfg["T"])
    mu2 = _measure_from_spec(cfg.get("mu2"), "boundary", cfg["T"])
    nu = _measure_from_spec(cfg.get("nu"), "initial", None)
    sol_a, sol_b = solve_interval_trace(law, nu, mu1, mu2, grid, a, b,
                                        images=cfg["images"])
    t = sol_a.grid.nodes[1:]
    results = {"a": a, "b": b, "t": t, "trace_left": sol_a.U[1:],
               "trace_right": sol_b.U[1:], "images": cfg["images"]}
    rows = list(zip(t, sol_a.U[1:], sol_b.U[1:]))
    _emit(cfg, results, {"image_tail_bound": 1e-8},
          ["t", "trace_left", "trace_right"], rows)
    return 0


def _cmd_sweep(cfg):
    p = float(cfg["p"])
    grid = GradedTimeGrid(cfg["T"], cfg["N"], cfg["gamma"])
    ladder = [cfg["ell_min"] * 2.0 ** k for k in range(cfg["rungs"])]
    report = dichotomy_sweep(p, ladder, grid, workers=cfg.get("workers", 1))
    profile_value = None
    if report.classification == "converging":
        try:
            res = profile_constant(p)
            if res.exists:
                profile_value = float(res.profile.omega[0])
        except ProfileInconclusiveError:
            pass
    results = {"p": p, "ladder": report.ladder,
               "rescaled_traces": report.rescaled_traces,
               "cauchy_ratios": report.cauchy_ratios,
               "growth_factors": report.growth_factors,
               "classification": report.classification,
               "limit": report.limit, "profile_value": profile_value}
    ratios_padded = [float("nan"), float("nan")] + list(report.cauchy_ratios)
    rows = [(ell, R, r) for ell, R, r in
            zip(report.ladder, report.rescaled_traces, ratios_padded)]
    _emit(cfg, results, report.thresholds,
          ["ell", "rescaled_trace_t1", "cauchy_ratio"], rows)
    return 0


def _cmd_verify(cfg):
    seed = cfg.get("seed", 0)
    checks = []

    def add(name, value, tolerance, passed):
        checks.append({"name": name, "value": float(value),
                       "tolerance": float(tolerance), "pass": bool(passed),
                       "margin": float(value / tolerance) if tolerance else np.inf})

    grid = WeightedGrid(eta_inf=cfg["eta_inf"], n=cfg["n"])
    for bc, expect in (("neumann", [0.5, 1.5, 2.5]), ("dirichlet", [1.0, 2.0, 3.0])):
        res = eigen_smallest(grid, bc, count=3)
        err = float(np.max(np.abs(res.eigenvalues - np.array(expect))))
        add(f"spectrum-{bc}", err, 1e-2, err < 1e-2)

    for p, expect in ((1.4, False), (1.75, True), (2.1, False)):
        res = profile_constant(p)
        add(f"profile-exists-p{p}", float(res.exists == expect), 1.0,
            res.exists == expect)
    res = profile_constant(1.75)
    rmin, rmax = envelope_check(res.profile, 0.25, 8.0)
    add("envelope-ratio-p1.75", rmax / rmin, 10.0, 0 < rmin and rmax / rmin < 10)

    prof2 = decaying_profile(2.0)
    m = prof2.eta <= 6.0
    vals = prof2.omega[m] * np.exp(prof2.eta[m] ** 2 / 4.0)
    spread = float(vals.max() / vals.min() - 1.0)
    add("closed-form-p2", spread, 1e-6, spread < 1e-6)

    err = scaling_identity_check(1.75, 1.0, 2.0, GradedTimeGrid(1.0, 256, 4.0))
    add("scaling-identity", err, 1e-2, err < 1e-2)

    adm = admissibility_integral(FluxLaw.power(1.5), 1)
    err = abs(adm.value - 4.0) / 4.0
    add("admissibility-closed-form", err, 1e-6, adm.finite and err < 1e-6)
    adm2 = admissibility_integral(FluxLaw.power(2.2), 1)
    add("admissibility-divergent-p2.2", float(not adm2.finite), 1.0, not adm2.finite)

    est, se = heat_ball_measure(HeatBallQuery(t=1.0, x=0.5, r=1.0,
                                              samples=200_000, seed=seed))
    bound = 1.0 / (2.0 * (np.pi * np.e) ** 1.5)
    add("heat-ball-bound", est, bound + 3 * se, est <= bound + 3 * se)
    est_b, se_b = boundary_heat_ball_measure(1.0, 1.0, samples=200_000, seed=seed)
    bound_b = 1.0 / (4.0 * np.pi * np.e)
    add("boundary-heat-ball-bound", est_b, bound_b + 3 * se_b,
        est_b <= bound_b + 3 * se_b)

    report = marcinkiewicz_check(MeasureData.zero("initial"),
                                 MeasureData.dirac(mass=1.0, T=1.0), T=1.0)
    err = abs(report.trace_weak2 - 1.0 / np.sqrt(np.pi)) * np.sqrt(np.pi)
    add("trace-weak2-delta0", err, 1e-2, err < 1e-2)

    eps_phi = 0.1 * np.exp(-grid.nodes ** 2 / 4.0)
    jval = functional_J(grid, eps_phi, 1.75)
    add("J-negative-direction", float(jval < 0), 1.0, jval < 0)

    results = {"checks": checks, "all_pass": all(c["pass"] for c in checks)}
    rows = [(c["name"], c["value"], c["tolerance"], c["pass"]) for c in checks]
    _emit(cfg, results, {c["name"]: c["tolerance"] for c in checks},
          ["name", "value", "tolerance", "pass"], rows)
    return 0


# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(prog="fluxlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output path (figure lands alongside)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("profile", help="self-similar profile and matching constant")
    sp.add_argument("--p", type=float)
    sp.add_argument("--eta-inf", dest="eta_inf", type=float)
    sp.add_argument("--rtol", type=float)
    sp.add_argument("--eta-lo", dest="eta_lo", type=float)
    sp.add_argument("--eta-hi", dest="eta_hi", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_profile,
                    defaults={"eta_inf": 14.0, "rtol": 1e-10, "eta_lo": 0.25,
                              "eta_hi": 8.0, "format": "json", "seed": 0})

    sp = sub.add_parser("spectrum", help="weighted half-line eigenvalues")
    sp.add_argument("--bc", choices=("neumann", "dirichlet", "both"))
    sp.add_argument("--count", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--eta-inf", dest="eta_inf", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_spectrum,
                    defaults={"bc": "both", "count": 3, "n": 2048,
                              "eta_inf": 12.0, "format": "json", "seed": 0})

    sp = sub.add_parser("solve", help="half-line nonlinear-flux trace solve")
    sp.add_argument("--p", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--gamma", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_solve,
                    defaults={"T": 1.0, "N": 512, "gamma": 2.0,
                              "mu": {"atoms": [[0.0, 1.0]]}, "nu": None,
                              "format": "json", "seed": 0})

    sp = sub.add_parser("solve-interval", help="bounded-interval trace solve")
    sp.add_argument("--p", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--b", type=float)
    sp.add_argument("--images", type=int)
    sp.add_argument("--T", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--gamma", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_solve_interval,
                    defaults={"a": 0.0, "b": 1.0, "images": 12, "T": 1.0,
                              "N": 256, "gamma": 2.0, "mu1": None, "mu2": None,
                              "nu": None, "format": "json", "seed": 0})

    sp = sub.add_parser("sweep", help="flux-ladder dichotomy sweep")
    sp.add_argument("--p", type=float)
    sp.add_argument("--ell-min", dest="ell_min", type=float)
    sp.add_argument("--rungs", type=int)
    sp.add_argument("--T", type=float)
    sp.add_argument("--N", type=int)
    sp.add_argument("--gamma", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_sweep,
                    defaults={"ell_min": 1.0, "rungs": 9, "T": 1.0, "N": 2048,
                              "gamma": 8.0, "workers": 1, "format": "json",
                              "seed": 0})

    sp = sub.add_parser("verify", help="run the quick verification battery")
    sp.add_argument("--n", type=int)
    sp.add_argument("--eta-inf", dest="eta_inf", type=float)
    common(sp)
    sp.set_defaults(func=_cmd_verify,
                    defaults={"n": 2048, "eta_inf": 12.0, "format": "json",
                              "seed": 0})
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = _resolve(args, args.defaults, args.command)
        if cfg["command"] == "profile" and "p" not in cfg:
            raise ConfigError("profile needs --p")
        if cfg["command"] in ("solve", "solve-interval", "sweep") and \
                "p" not in cfg and "law" not in cfg:
            raise ConfigError(f"{cfg['command']} needs --p or a law spec")
        return args.func(cfg)
    except (ConfigError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
