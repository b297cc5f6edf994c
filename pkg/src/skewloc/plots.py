"""Optional figure rendering for the CLI report paths.

Figures are a convenience layer over the delimited outputs: every
number they show is also in the CSV/JSON next to them, and they are
excluded from the byte-determinism contract (image encoders embed
library internals).  The Agg backend keeps rendering headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)
import numpy as np  # noqa: E402

DPI = 150


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def plot_orbit(x1: np.ndarray, x2: np.ndarray, path) -> Path:
    """Orbit scatter on the torus, colored by time."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    t = np.arange(len(x1))
    sc = ax.scatter(x1, x2, c=t, s=2.0, cmap="viridis")
    fig.colorbar(sc, ax=ax, label="step")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_title("orbit")
    return _save(fig, path)


def plot_dc(ks: np.ndarray, dists: np.ndarray, bounds: np.ndarray, path) -> Path:
    """Distance of k*omega to the nearest integer vs the lower bound."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(ks, dists, ".", ms=3, label="|k w| mod 1")
    ax.loglog(ks, bounds, "-", lw=1, label="c / k^2")
    ax.set_xlabel("k")
    ax.set_ylabel("distance to nearest integer")
    ax.legend()
    ax.set_title("diophantine margins")
    return _save(fig, path)


def plot_decay(profile: np.ndarray, rate: float, path,
               title: str = "decay profile") -> Path:
    """Semilog decay profile with its fitted exponential."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    d = np.arange(len(profile))
    pos = profile > 0
    ax.semilogy(d[pos], profile[pos], ".", ms=3, label="max |entry| at distance d")
    if np.isfinite(rate) and np.any(pos):
        anchor = profile[pos][0] or 1.0
        ax.semilogy(d, anchor * np.exp(-rate * (d - d[pos][0])), "-", lw=1,
                    label=f"rate {rate:.4g}")
    ax.set_xlabel("distance d")
    ax.set_ylabel("magnitude")
    ax.legend()
    ax.set_title(title)
    return _save(fig, path)


def plot_scan(scales, fractions_by_energy: dict, path) -> Path:
    """Bad-set fraction vs scale, one line per energy."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for energy, fractions in sorted(fractions_by_energy.items()):
        f = np.asarray(fractions, dtype=np.float64)
        shown = np.where(f > 0, f, np.nan)
        ax.semilogy(scales, shown, "o-", label=f"E = {energy:g}")
    ax.set_xlabel("window sites")
    ax.set_ylabel("bad fraction")
    ax.legend()
    ax.set_title("bad-set measure vs scale")
    return _save(fig, path)


def plot_classification(sites: np.ndarray, norms: np.ndarray, cap: float,
                        good: np.ndarray, path) -> Path:
    """Per-site local inverse norms against the cap, bad sites marked."""
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.semilogy(sites[good], norms[good], ".", ms=3, color="tab:blue", label="good")
    if np.any(~good):
        shown = np.where(np.isfinite(norms[~good]), norms[~good], cap * 10)
        ax.semilogy(sites[~good], shown, "x", ms=4, color="tab:red", label="bad")
    ax.axhline(cap, color="k", lw=1, ls="--", label="cap")
    ax.set_xlabel("site")
    ax.set_ylabel("local inverse norm")
    ax.legend()
    ax.set_title("site classification")
    return _save(fig, path)


def plot_ipr(records, path) -> Path:
    """IPR distribution per frequency tag."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, rec in enumerate(records):
        ip = np.asarray(rec.iprs, dtype=np.float64)
        if ip.size == 0:
            continue
        jitter = (np.arange(ip.size) % 17) / 17.0 - 0.5
        ax.semilogy(i + 0.3 * jitter, ip, ".", ms=2)
        ax.semilogy([i - 0.2, i + 0.2], [rec.median_ipr] * 2, "-", lw=2, color="k")
    ax.set_xticks(range(len(records)))
    ax.set_xticklabels([f"{r.omega:.4g}\n({r.tag})" for r in records], fontsize=8)
    ax.set_ylabel("IPR")
    ax.set_title("eigenvector participation by frequency")
    return _save(fig, path)


def plot_rotor(n2: np.ndarray, path, rows=None) -> Path:
    """Momentum spread vs time; scan exponents inset if provided."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    t = np.arange(len(n2))
    pos = n2 > 0
    ax.loglog(t[pos], n2[pos], "-", lw=1, label="<n^2>(t)")
    ax.set_xlabel("kick")
    ax.set_ylabel("momentum spread")
    if rows:
        text = "\n".join(f"alpha={r.alpha:.4g}: gamma={r.gamma:.2f}" for r in rows)
        ax.text(0.02, 0.98, text, transform=ax.transAxes, va="top", fontsize=7,
                family="monospace")
    ax.legend(loc="lower right")
    ax.set_title("rotor evolution")
    return _save(fig, path)
