"""Batch command line driver.

Every experiment is a subcommand writing CSV/JSON artifacts (and, with
--plot, PNG figures) into --out.  Option values merge from four layers,
later layers winning: built-in defaults, a JSON config file (--config),
environment variables (SKEWLOC_<OPTION>), explicit flags.  The merged
experiment configuration is embedded in every output file, hashed, so
artifacts are self-describing and re-runnable; execution details
(workers, out, plot) stay outside the hash because they may not change
any byte of the results.

Exit codes: 0 success (including negative verdicts), 2 singularity
guard, 3 untrusted inversion or non-contracting series, 4 invalid
configuration, 5 spectral truncation breach.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import (
    DEFAULT_COND_CAP,
    DEFAULT_DC_CONSTANT,
    DEFAULT_DC_RANGE,
    DEFAULT_TAU_SING,
    VERSION,
)
from .diagnostics import frequency_comparison, localization_report
from .dynamics import (
    Frequency,
    OrbitSpec,
    TorusPoint,
    _mul_mod1,
    check_dc,
    circle_dist,
    iterate_closed,
    orbit_coords,
    orbit_iterated,
    singularity_distance,
    torus_dist,
    visit_count,
)
from .errors import (
    ConfigError,
    ConvergenceFailure,
    HypothesisFailed,
    IllConditioned,
    SingularityGuard,
    TruncationBreach,
)
from .green import factorize, fit_decay, green, green_direct
from .multiscale import (
    ScaleSchedule,
    bad_set_measure,
    classify_sites,
    diag_smallness_measure,
    neumann_initial,
    single_site_smallness,
    window_density,
)
from .operator import HoppingKernel, Window, assemble, kernel_from_file, kernel_from_profile
from .patching import contraction_check, patch_verify
from .rotor import RotorState, evolve, growth_exponent, resonance_scan
from .sampling import parallel_map, rng_for
from .output import write_csv, write_json

OMEGA_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ALPHA_GOLDEN = OMEGA_GOLDEN  # badly approximable kinetic coefficient for the rotor

# Keys that control execution, not the experiment; excluded from the
# embedded config so results are byte-identical across worker counts.
EXEC_KEYS = {"config", "workers", "out", "plot"}


def _u64(text) -> int:
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise ConfigError(f"seed must fit in 64 bits, got {v}")
    return v


def _positive_int(text) -> int:
    v = int(text)
    if v < 1:
        raise ConfigError(f"expected a positive integer, got {v}")
    return v


@dataclass(frozen=True)
class Opt:
    """One merged option: flag, converter, default, help text."""

    name: str
    typ: object
    default: object
    help: str
    nargs: str | None = None

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")


def _common() -> list[Opt]:
    return [
        Opt("seed", _u64, 0, "base seed for every random draw"),
        Opt("workers", _positive_int, 1, "process count for parameter sweeps"),
        Opt("out", str, ".", "output directory"),
        Opt("plot", bool, False, "also render PNG figures"),
    ]


OPTIONS: dict[str, list[Opt]] = {
    "orbit": [
        Opt("omega", float, OMEGA_GOLDEN, "skew-shift frequency"),
        Opt("x1", float, None, "starting first coordinate (sampled from seed if omitted)"),
        Opt("x2", float, None, "starting second coordinate (sampled from seed if omitted)"),
        Opt("length", _positive_int, 5000, "orbit length"),
        Opt("ball_x1", float, 0.5, "visit-ball center, first coordinate"),
        Opt("ball_x2", float, 0.5, "visit-ball center, second coordinate"),
        Opt("ball_eps", float, 0.1, "visit-ball radius"),
        Opt("checkpoint", _positive_int, 100000, "largest |m| for closed-vs-iterated drift"),
    ],
    "dc-check": [
        Opt("omega", float, OMEGA_GOLDEN, "frequency to test"),
        Opt("c", float, DEFAULT_DC_CONSTANT, "diophantine constant"),
        Opt("range", _positive_int, DEFAULT_DC_RANGE, "largest |k| tested"),
    ],
    "green": [
        Opt("n", _positive_int, 256, "window sites"),
        Opt("eps", float, 1e-3, "hopping strength"),
        Opt("rho", float, 1.0, "kernel decay rate"),
        Opt("energy", float, 0.0, "spectral parameter E"),
        Opt("omega", float, OMEGA_GOLDEN, "skew-shift frequency"),
        Opt("x1", float, None, "starting first coordinate (sampled from seed if omitted)"),
        Opt("x2", float, None, "starting second coordinate (sampled from seed if omitted)"),
        Opt("kernel", str, "geometric", "kernel profile: geometric or single-cosine"),
        Opt("kernel_file", str, None, "kernel table file overriding the profile"),
        Opt("tau_sing", float, DEFAULT_TAU_SING, "pole guard distance"),
    ],
    "scan-measure": [
        Opt("scales", _positive_int, [32, 64], "window site counts", nargs="+"),
        Opt("samples", _positive_int, 500, "starting points per scale"),
        Opt("eps", float, 1e-3, "hopping strength"),
        Opt("rho", float, 1.0, "kernel decay rate"),
        Opt("energies", float, [0.0], "spectral parameters", nargs="+"),
        Opt("omega", float, OMEGA_GOLDEN, "skew-shift frequency"),
        Opt("eps0", float, 0.05, "diagonal smallness threshold"),
        Opt("smallness_sites", _positive_int, 32, "window sites for the smallness measure"),
        Opt("smallness_samples", _positive_int, 2000, "samples for the smallness measure"),
    ],
    "multiscale": [
        Opt("sites", _positive_int, 256, "window sites to classify"),
        Opt("sub_length", _positive_int, 32, "classification sub-window length"),
        Opt("l0", _positive_int, 8, "initial-scale window sites for the series certificate"),
        Opt("eps0", float, None,
            "diagonal floor for the series certificate (default exp(-sqrt(l0)))"),
        Opt("eps", float, 1e-3, "hopping strength"),
        Opt("rho", float, 1.0, "kernel decay rate"),
        Opt("energy", float, 0.0, "spectral parameter E"),
        Opt("omega", float, OMEGA_GOLDEN, "skew-shift frequency"),
        Opt("x1", float, None, "starting first coordinate (sampled from seed if omitted)"),
        Opt("x2", float, None, "starting second coordinate (sampled from seed if omitted)"),
        Opt("delta", float, 0.3, "density exponent"),
    ],
    "patch": [
        Opt("interval_sites", _positive_int, 129, "full interval sites"),
        Opt("window_length", _positive_int, 32, "cover window length (multiple of 4)"),
        Opt("eps", float, 1e-3, "hopping strength"),
        Opt("rho", float, 2.0, "kernel decay rate"),
        Opt("energy", float, 0.3, "spectral parameter E"),
        Opt("omega", float, OMEGA_GOLDEN, "skew-shift frequency"),
        Opt("x1", float, None, "starting first coordinate (sampled from seed if omitted)"),
        Opt("x2", float, None, "starting second coordinate (sampled from seed if omitted)"),
    ],
    "eig": [
        Opt("sites", _positive_int, 128, "window sites"),
        Opt("samples", _positive_int, 4, "starting points"),
        Opt("omegas", float, [OMEGA_GOLDEN, 0.5], "frequencies to compare", nargs="+"),
        Opt("eps", float, 1e-3, "hopping strength"),
        Opt("rho", float, 1.0, "kernel decay rate"),
        Opt("loc_samples", _positive_int, 16, "starts for nearest-pair diagnostics"),
        Opt("energy_low", float, -10.0, "target-energy range low end"),
        Opt("energy_high", float, 10.0, "target-energy range high end"),
    ],
    "rotor": [
        Opt("n_max", _positive_int, 256, "mode cutoff for the evolution"),
        Opt("kappa", float, 5.0, "kick strength"),
        Opt("a", float, ALPHA_GOLDEN / (4.0 * math.pi), "kinetic coefficient"),
        Opt("b", float, 0.0, "drift coefficient"),
        Opt("steps", _positive_int, 500, "kick count for the evolution"),
        Opt("order", str, "kick-first", "factor order: kick-first or kinetic-first"),
        Opt("scan_alphas", float,
            [2.0, 4.0, ALPHA_GOLDEN, math.sqrt(2.0) - 1.0, 1.0 / math.pi],
            "4*pi*a values for the resonance scan", nargs="+"),
        Opt("scan_steps", _positive_int, 300, "kick count per scan point"),
        Opt("scan_n_max", _positive_int, 2048, "mode cutoff for the scan"),
    ],
}


SUMMARIES = {
    "orbit": "skew-shift orbit, ball-visit counts, closed-form drift check",
    "dc-check": "diophantine verdict for a frequency over a finite range",
    "green": "single-window inverse with decay profile and fitted rate",
    "scan-measure": "Monte-Carlo smallness and bad-set measures across scales",
    "multiscale": "per-site good/bad classification, density, series certificate",
    "patch": "local-hypothesis checks and patched-interval decay verdict",
    "eig": "eigenpair localization diagnostics and frequency comparison",
    "rotor": "kicked-rotor evolution and resonance scan",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as invalid configuration."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="skewloc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"skewloc {VERSION}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND")
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd, help=SUMMARIES[cmd], description=SUMMARIES[cmd])
        sp.add_argument("--config", type=str, default=None,
                        help="JSON file with option values")
        for o in opts + _common():
            if o.typ is bool:
                sp.add_argument(o.flag, dest=o.name, action="store_true",
                                default=None, help=o.help)
            elif o.nargs:
                sp.add_argument(o.flag, dest=o.name, type=o.typ, nargs=o.nargs,
                                default=None, help=o.help)
            else:
                sp.add_argument(o.flag, dest=o.name, type=o.typ, default=None,
                                help=o.help)
    return parser


def _convert_json(o: Opt, value):
    if value is None:
        return None
    try:
        if o.typ is bool:
            if not isinstance(value, bool):
                raise ConfigError(f"{o.name}: expected true/false, got {value!r}")
            return value
        if o.nargs:
            if not isinstance(value, list):
                raise ConfigError(f"{o.name}: expected a list, got {value!r}")
            return [o.typ(v) for v in value]
        return o.typ(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{o.name}: {exc}") from None


def _convert_env(o: Opt, raw: str):
    try:
        if o.typ is bool:
            return raw.strip().lower() in {"1", "true", "yes", "on"}
        if o.nargs:
            return [o.typ(v) for v in raw.replace(",", " ").split()]
        return o.typ(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"SKEWLOC_{o.name.upper()}: {exc}") from None


def merge_config(cmd: str, args: argparse.Namespace) -> dict:
    """defaults < config file < environment < explicit flags."""
    opts = OPTIONS[cmd] + _common()
    by_name = {o.name: o for o in opts}
    merged = {o.name: o.default for o in opts}

    cfg_path = getattr(args, "config", None) or os.environ.get("SKEWLOC_CONFIG")
    if cfg_path:
        try:
            raw = json.loads(Path(cfg_path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{cfg_path}: invalid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{cfg_path}: top level must be an object")
        declared = raw.pop("command", cmd)
        if declared != cmd:
            raise ConfigError(
                f"{cfg_path} is a config for {declared!r}, not {cmd!r}"
            )
        unknown = sorted(set(raw) - set(by_name))
        if unknown:
            raise ConfigError(f"{cfg_path}: unknown options {unknown}")
        for k, v in raw.items():
            merged[k] = _convert_json(by_name[k], v)

    for o in opts:
        env = os.environ.get(f"SKEWLOC_{o.name.upper()}")
        if env is not None:
            merged[o.name] = _convert_env(o, env)

    for o in opts:
        given = getattr(args, o.name, None)
        if given is not None:
            merged[o.name] = given
    return merged


def _resolve_start(cfg: dict) -> TorusPoint:
    """Fill in the starting point, sampling it from the seed when omitted.

    The draw uses a dedicated stream so other consumers of the seed are
    unaffected; the resolved values are written back into the config so
    the embedded provenance pins them exactly.
    """
    if cfg.get("x1") is None or cfg.get("x2") is None:
        u = rng_for(cfg["seed"], stream=100).uniform(size=2)
        cfg.setdefault("x1", None)
        if cfg["x1"] is None:
            cfg["x1"] = float(u[0])
        if cfg["x2"] is None:
            cfg["x2"] = float(u[1])
    return TorusPoint(cfg["x1"], cfg["x2"])


def _embedded(cmd: str, cfg: dict) -> dict:
    out = {"command": cmd}
    out.update({k: v for k, v in cfg.items() if k not in EXEC_KEYS})
    return out


def _outdir(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _kernel(cfg: dict) -> HoppingKernel:
    if cfg.get("kernel_file"):
        return kernel_from_file(cfg["kernel_file"], rho=cfg["rho"], eps=cfg["eps"])
    return kernel_from_profile(cfg["rho"], cfg["eps"], profile=cfg.get("kernel", "geometric"))


# -- handlers ----------------------------------------------------------------

def cmd_orbit(cfg: dict) -> None:
    out = _outdir(cfg)
    x = _resolve_start(cfg)
    freq = Frequency(cfg["omega"])
    econf = _embedded("orbit", cfg)
    length = cfg["length"]
    x1s, x2s = orbit_coords(x, freq, length)
    rows = [(0, x.x1, x.x2)]
    rows += [(m + 1, float(x1s[m]), float(x2s[m])) for m in range(length)]
    write_csv(out / "orbit.csv", ["m", "x1", "x2"], rows, econf)
    visits = visit_count(OrbitSpec(x, freq, 1, length),
                         TorusPoint(cfg["ball_x1"], cfg["ball_x2"]),
                         cfg["ball_eps"], length)
    checkpoints = []
    m = 10
    while m <= cfg["checkpoint"]:
        checkpoints.extend([m, -m])
        m *= 10
    drift = {}
    for m in checkpoints:
        closed = iterate_closed(x, freq, m)
        stepped = orbit_iterated(x, freq, m)
        drift[str(m)] = torus_dist(closed, stepped)
    sing = singularity_distance(OrbitSpec(x, freq, 0, min(length, 4096)))
    result = {
        "visit": visits,
        "drift": drift,
        "drift_max": max(drift.values()) if drift else 0.0,
        "singularity_distance": sing,
    }
    write_json(out / "orbit.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_orbit
        keep = min(length, 2000)
        plot_orbit(x1s[:keep], x2s[:keep], out / "orbit.png")


def cmd_dc_check(cfg: dict) -> None:
    out = _outdir(cfg)
    econf = _embedded("dc-check", cfg)
    freq = Frequency(cfg["omega"], dc_constant=cfg["c"], dc_range=cfg["range"])
    report = check_dc(freq)
    ks = np.arange(1, cfg["range"] + 1)
    dists = np.array([circle_dist(_mul_mod1(int(k), cfg["omega"])) for k in ks])
    bounds = cfg["c"] / ks.astype(np.float64) ** 2
    rows = zip(ks.tolist(), dists.tolist(), bounds.tolist())
    write_csv(out / "dc_margins.csv", ["k", "dist", "bound"], rows, econf)
    write_json(out / "dc.json", report, econf)
    if cfg["plot"]:
        from .plots import plot_dc
        plot_dc(ks, dists, bounds, out / "dc.png")


def cmd_green(cfg: dict) -> None:
    out = _outdir(cfg)
    x = _resolve_start(cfg)
    freq = Frequency(cfg["omega"])
    kern = _kernel(cfg)
    econf = _embedded("green", cfg)
    window = Window(0, cfg["n"] - 1)
    f = factorize(window, x, freq, kern, cfg["energy"], tau_sing=cfg["tau_sing"])
    g = green(f, cond_cap=DEFAULT_COND_CAP)
    fit = fit_decay(g.profile)
    rows = [(d, float(p)) for d, p in enumerate(g.profile)]
    write_csv(out / "green_profile.csv", ["d", "max_abs_entry"], rows, econf)
    direct_delta = None
    if g.cond < 1e8:
        op = assemble(window, x, freq, kern, tau_sing=cfg["tau_sing"])
        gd = green_direct(op, cfg["energy"], cond_cap=DEFAULT_COND_CAP)
        direct_delta = float(np.max(np.abs(g.entries - gd.entries))
                             / np.max(np.abs(gd.entries)))
    result = {
        "fit": fit,
        "cond": g.cond,
        "sup_norm": g.sup_norm,
        "route": g.route,
        "direct_relative_delta": direct_delta,
    }
    write_json(out / "green.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_decay
        plot_decay(g.profile, fit.rate, out / "green.png", title="inverse decay profile")


def _scan_cell(task):
    sites, omega, kern, energy, seed, samples = task
    return bad_set_measure(sites, omega, kern, energy, seed, samples)


def cmd_scan_measure(cfg: dict) -> None:
    out = _outdir(cfg)
    kern = kernel_from_profile(cfg["rho"], cfg["eps"])
    econf = _embedded("scan-measure", cfg)
    smallness = diag_smallness_measure(
        cfg["smallness_sites"], cfg["omega"], kern, cfg["energies"][0],
        cfg["eps0"], cfg["seed"], cfg["smallness_samples"])
    tasks = [(sites, cfg["omega"], kern, energy, cfg["seed"], cfg["samples"])
             for energy in cfg["energies"] for sites in cfg["scales"]]
    cells = parallel_map(_scan_cell, tasks, workers=cfg["workers"], chunk_size=1)
    rows = [(c.sites, c.energy, c.samples, c.fail_norm, c.fail_decay,
             c.fail_singular, c.fraction, c.std_error) for c in cells]
    write_csv(out / "scan_measure.csv",
              ["sites", "energy", "samples", "fail_norm", "fail_decay",
               "fail_singular", "fraction", "std_error"],
              rows, econf)
    result = {
        "smallness": {
            "estimate": smallness,
            "threshold": cfg["eps0"],
            "sites": cfg["smallness_sites"],
            "single_site_exact": single_site_smallness(cfg["eps0"]),
        },
        # fraction and std_error are derived properties; list them explicitly
        # because generic serialization only walks dataclass fields.
        "cells": [{
            "sites": c.sites,
            "energy": c.energy,
            "samples": c.samples,
            "fail_norm": c.fail_norm,
            "fail_decay": c.fail_decay,
            "fail_singular": c.fail_singular,
            "fraction": c.fraction,
            "std_error": c.std_error,
        } for c in cells],
    }
    write_json(out / "scan_measure.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_scan
        frac = {}
        for c in cells:
            frac.setdefault(c.energy, []).append(c.fraction)
        plot_scan(cfg["scales"], frac, out / "scan_measure.png")


def cmd_multiscale(cfg: dict) -> None:
    out = _outdir(cfg)
    x = _resolve_start(cfg)
    freq = Frequency(cfg["omega"])
    kern = kernel_from_profile(cfg["rho"], cfg["eps"])
    econf = _embedded("multiscale", cfg)
    schedule = ScaleSchedule(l0=cfg["l0"], m=cfg["sub_length"], n=cfg["sites"],
                             rho=cfg["rho"], delta=cfg["delta"])
    window = Window(0, cfg["sites"] - 1)
    cls = classify_sites(window, x, freq, kern, cfg["energy"], cfg["sub_length"])
    density = window_density(~cls.good, cfg["delta"], schedule.min_subinterval)
    try:
        cert = neumann_initial(Window(0, cfg["l0"] - 1), x, freq, kern,
                               cfg["energy"], eps0=cfg["eps0"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    sites_arr = window.offsets()
    rows = [(int(s), bool(g), float(nm))
            for s, g, nm in zip(sites_arr, cls.good, cls.norms)]
    write_csv(out / "classify.csv", ["site", "good", "local_inverse_norm"],
              rows, econf)
    result = {
        "bad_fraction": cls.bad_fraction,
        "cap": cls.cap,
        "decay_floor": cls.decay_floor,
        "density": density,
        "series_certificate": {
            "mu": cert.mu, "q": cert.q, "max_ratio": cert.max_ratio,
            "ok": cert.ok, "failure": cert.failure,
        },
        "schedule": schedule,
    }
    write_json(out / "multiscale.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_classification
        plot_classification(sites_arr, cls.norms, cls.cap, cls.good,
                            out / "multiscale.png")


def cmd_patch(cfg: dict) -> None:
    out = _outdir(cfg)
    x = _resolve_start(cfg)
    freq = Frequency(cfg["omega"])
    kern = kernel_from_profile(cfg["rho"], cfg["eps"])
    econf = _embedded("patch", cfg)
    interval = Window(0, cfg["interval_sites"] - 1)
    try:
        report = patch_verify(interval, x, freq, kern, cfg["energy"],
                              cfg["window_length"])
        checks = report.checks
        verdict = {
            "hypotheses_ok": True,
            "ok": report.ok,
            "tail_ok": report.tail_ok,
            "tail_rate": report.tail_rate,
            "fit": report.fit,
            "norm_full": report.norm_full,
        }
        profile = report.green_full.profile
        fit_rate = report.fit.rate
    except HypothesisFailed as exc:
        checks = exc.report
        verdict = {
            "hypotheses_ok": False,
            "ok": False,
            "failing_windows": [[w.lo, w.hi] for w in exc.windows],
            "detail": str(exc),
        }
        profile = None
        fit_rate = None
    rows = [(c.window.lo, c.window.hi, float(c.norm), c.norm_ok, c.tail_ok,
             c.invertible, c.ok) for c in checks]
    write_csv(out / "patch_windows.csv",
              ["lo", "hi", "norm", "norm_ok", "tail_ok", "invertible", "ok"],
              rows, econf)
    norms = [c.norm for c in checks if c.invertible]
    contraction = (contraction_check(cfg["window_length"], cfg["rho"], max(norms))
                   if norms else None)
    write_json(out / "patch.json",
               {"verdict": verdict, "contraction": contraction}, econf)
    if cfg["plot"] and profile is not None:
        from .plots import plot_decay
        plot_decay(profile, fit_rate, out / "patch.png",
                   title="patched interval decay")


def cmd_eig(cfg: dict) -> None:
    out = _outdir(cfg)
    kern = kernel_from_profile(cfg["rho"], cfg["eps"])
    econf = _embedded("eig", cfg)
    window = Window(0, cfg["sites"] - 1)
    comparison = frequency_comparison(
        cfg["omegas"], window, kern, seed=cfg["seed"], samples=cfg["samples"],
        energy_low=cfg["energy_low"], energy_high=cfg["energy_high"],
        workers=cfg["workers"])
    loc = localization_report(
        window, Frequency(cfg["omegas"][0]), kern, seed=cfg["seed"],
        samples=cfg["loc_samples"], energy_low=cfg["energy_low"],
        energy_high=cfg["energy_high"], workers=cfg["workers"])
    rows = []
    for rec in comparison.records:
        for i in range(rec.iprs.size):
            rows.append((rec.omega, rec.tag, float(rec.iprs[i]), float(rec.rates[i])))
    write_csv(out / "eig_pairs.csv", ["omega", "tag", "ipr", "rate"], rows, econf)
    loc_rows = [(s.x1, s.x2, s.energy, s.value, s.center, s.ipr, s.rate)
                for s in loc.samples]
    write_csv(out / "eig_samples.csv",
              ["x1", "x2", "energy", "value", "center", "ipr", "rate"],
              loc_rows, econf)
    result = {
        "records": [
            {"omega": r.omega, "tag": r.tag, "median_ipr": r.median_ipr,
             "median_rate": r.median_rate, "pairs": int(r.iprs.size),
             "rejected": r.rejected}
            for r in comparison.records
        ],
        "nearest_pair": {
            "accepted": len(loc.samples),
            "rejected": loc.rejected,
            "median_ipr": float(np.median(loc.iprs)) if loc.samples else None,
            "median_rate": float(np.median(loc.rates)) if loc.samples else None,
        },
    }
    write_json(out / "eig.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_ipr
        plot_ipr(comparison.records, out / "eig.png")


def _rotor_point(task):
    a, kappa, n_max, steps, b, order = task
    return resonance_scan([a], kappa, n_max, steps, b=b, order=order)[0]


def cmd_rotor(cfg: dict) -> None:
    out = _outdir(cfg)
    econf = _embedded("rotor", cfg)
    start = RotorState.delta(cfg["n_max"], cfg["a"], cfg["b"], cfg["kappa"])
    ev = evolve(start, cfg["steps"], order=cfg["order"])
    rows = [(t, float(ev.n2[t]), float(ev.norm[t]), float(ev.leak[t]))
            for t in range(len(ev.n2))]
    write_csv(out / "rotor_series.csv", ["t", "n2", "norm", "leakage"], rows, econf)
    tasks = [(alpha / (4.0 * math.pi), cfg["kappa"], cfg["scan_n_max"],
              cfg["scan_steps"], cfg["b"], cfg["order"])
             for alpha in cfg["scan_alphas"]]
    scan = parallel_map(_rotor_point, tasks, workers=cfg["workers"], chunk_size=1)
    result = {
        "gamma": growth_exponent(ev.n2),
        "norm_drift": float(np.max(np.abs(ev.norm - 1.0))),
        "max_leakage": float(ev.leak.max()),
        "scan": scan,
    }
    write_json(out / "rotor.json", result, econf)
    if cfg["plot"]:
        from .plots import plot_rotor
        plot_rotor(ev.n2, out / "rotor.png", rows=scan)


HANDLERS = {
    "orbit": cmd_orbit,
    "dc-check": cmd_dc_check,
    "green": cmd_green,
    "scan-measure": cmd_scan_measure,
    "multiscale": cmd_multiscale,
    "patch": cmd_patch,
    "eig": cmd_eig,
    "rotor": cmd_rotor,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise ConfigError("a subcommand is required (see --help)")
        cfg = merge_config(args.command, args)
        HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"skewloc: invalid configuration: {exc}", file=sys.stderr)
        return 4
    except SingularityGuard as exc:
        print(f"skewloc: singularity guard: {exc}", file=sys.stderr)
        return 2
    except (IllConditioned, ConvergenceFailure) as exc:
        print(f"skewloc: {exc}", file=sys.stderr)
        return 3
    except TruncationBreach as exc:
        print(f"skewloc: truncation breach: {exc}", file=sys.stderr)
        return 5
    return 0


if __name__ == "__main__":
    sys.exit(main())
