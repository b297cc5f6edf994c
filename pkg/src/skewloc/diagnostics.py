"""Spectral diagnostics: eigenpairs, localization centers, inverse
participation ratios, eigenvector decay rates, and paired comparisons of
these statistics across driving frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_MAX_DIAG
from .dynamics import Frequency, TorusPoint, check_dc
from .errors import ConvergenceFailure
from .green import DecayFit, fit_decay
from .operator import LatticeOperator, Window, assemble
from .sampling import parallel_map, sample_torus

# Relative magnitude below which eigenvector entries count as numerical
# zeros: dense solvers leave ~1e-16 noise in tails that would otherwise
# masquerade as a flat (rate ~ 0) profile.
NOISE_FLOOR = 1e-13


def ipr(vector: np.ndarray) -> float:
    """Inverse participation ratio sum |v|^4 of a unit vector.

    1 for a delta peak, 1/n for a flat vector; higher means more
    localized.
    """
    a2 = np.abs(np.asarray(vector)) ** 2
    total = float(a2.sum())
    if not math.isclose(total, 1.0, rel_tol=1e-9):
        a2 /= total
    return float(np.sum(a2 * a2))


def localization_center(vector: np.ndarray) -> int:
    """Index of the largest |entry|, breaking exact ties toward the middle."""
    a = np.abs(np.asarray(vector))
    mx = a.max()
    cands = np.nonzero(a == mx)[0]
    if cands.size == 1:
        return int(cands[0])
    mid = (a.size - 1) / 2.0
    return int(cands[np.argmin(np.abs(cands - mid))])


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One eigenvalue with its localization summary."""

    value: float
    vector: np.ndarray = field(repr=False)
    center: int
    ipr: float


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Full eigensystem of a window operator, residual-checked."""

    window: Window
    values: np.ndarray = field(repr=False)
    pairs: tuple[EigenPair, ...] = field(repr=False)
    residual: float

    def nearest(self, energy: float) -> EigenPair:
        """Eigenpair whose value is closest to ``energy``."""
        return self.pairs[int(np.argmin(np.abs(self.values - energy)))]


def spectrum(op: LatticeOperator, check: bool = True,
             residual_tol: float = 1e-8) -> SpectrumResult:
    """Diagonalize a window operator with an explicit residual check.

    Raises ConvergenceFailure when max_m |H v - lambda v|_inf exceeds
    residual_tol * max |lambda|; hermiticity is guaranteed by assembly.
    """
    h = np.asarray(op.entries)
    values, vectors = np.linalg.eigh(h)
    scale = float(np.max(np.abs(values))) or 1.0
    residual = 0.0
    if check:
        resid = h @ vectors - vectors * values[None, :]
        residual = float(np.max(np.abs(resid)))
        if residual > residual_tol * scale:
            raise ConvergenceFailure(
                f"eigensolver residual {residual:.3e} exceeds "
                f"{residual_tol:g} * {scale:.3e}"
            )
    pairs = []
    for j in range(values.size):
        vec = vectors[:, j]
        vec.setflags(write=False)
        pairs.append(EigenPair(value=float(values[j]), vector=vec,
                               center=localization_center(vec), ipr=ipr(vec)))
    values.setflags(write=False)
    return SpectrumResult(window=op.window, values=values, pairs=tuple(pairs),
                          residual=residual)


def eigenvector_profile(vector: np.ndarray, center: int | None = None,
                        noise_floor: float = NOISE_FLOOR) -> np.ndarray:
    """Max |entry| at each distance from the localization center.

    Entries at or below noise_floor * max|entry| are censored to zero so
    solver noise cannot flatten the tail; a profile that is entirely
    noise beyond some distance therefore ends in exact zeros.
    """
    a = np.abs(np.asarray(vector)).astype(np.float64)
    if center is None:
        center = localization_center(a)
    a[a <= noise_floor * a.max()] = 0.0
    n = a.size
    d_max = max(center, n - 1 - center)
    prof = np.zeros(d_max + 1, dtype=np.float64)
    for d in range(d_max + 1):
        left = a[center - d] if center - d >= 0 else 0.0
        right = a[center + d] if center + d < n else 0.0
        prof[d] = max(left, right)
    return prof


def eigenvector_decay(vector: np.ndarray, center: int | None = None,
                      cutoff_fraction: float = 0.1,
                      noise_floor: float = NOISE_FLOOR) -> DecayFit:
    """Fitted exponential rate of an eigenvector's tail.

    Censored-to-zero tails (pure solver noise) yield the +inf sentinel
    via the underlying fit, meaning "decays faster than resolvable".
    """
    prof = eigenvector_profile(vector, center=center, noise_floor=noise_floor)
    return fit_decay(prof, cutoff_fraction=cutoff_fraction)


def spectral_distance(energy: float, spec) -> float:
    """Distance of ``energy`` to a finite-volume spectrum: min |E - lambda|.

    ``spec`` may be a LatticeOperator (diagonalized here), a
    SpectrumResult, or a plain array of eigenvalues.
    """
    if isinstance(spec, LatticeOperator):
        values = spectrum(spec, check=False).values
    elif isinstance(spec, SpectrumResult):
        values = spec.values
    else:
        values = np.asarray(spec, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("spectral distance to an empty spectrum")
    return float(np.min(np.abs(values - energy)))


# -- sampled localization statistics ----------------------------------------

@dataclass(frozen=True, eq=False)
class LocalizationSample:
    """Diagnostics of the eigenpair nearest the target energy for one start."""

    x1: float
    x2: float
    energy: float
    value: float
    center: int
    ipr: float
    rate: float


@dataclass(frozen=True, eq=False)
class LocalizationReport:
    """Aggregate eigenvector statistics over sampled starting points."""

    window: Window
    omega: float
    samples: tuple[LocalizationSample, ...]
    rejected: int

    @property
    def rates(self) -> np.ndarray:
        return np.array([s.rate for s in self.samples], dtype=np.float64)

    @property
    def iprs(self) -> np.ndarray:
        return np.array([s.ipr for s in self.samples], dtype=np.float64)

    def rate_quantile(self, floor: float) -> float:
        """Fraction of samples whose fitted rate reaches ``floor``."""
        if not self.samples:
            raise ValueError("no accepted samples")
        return float(np.mean(self.rates >= floor))


def _nearest_pair_stats(task) -> LocalizationSample:
    """Worker body: diagnose the eigenpair nearest the target energy."""
    window, x1, x2, freq, kernel, energy, check = task
    op = assemble(window, TorusPoint(x1, x2), freq, kernel, tau_sing=0.0)
    spec = spectrum(op, check=check)
    pair = spec.nearest(energy)
    fit = eigenvector_decay(pair.vector, center=pair.center)
    return LocalizationSample(x1=x1, x2=x2, energy=energy, value=pair.value,
                              center=int(window.lo + pair.center),
                              ipr=pair.ipr, rate=fit.rate)


def localization_report(window: Window, freq, kernel, seed: int, samples: int,
                        energy_low: float = -10.0, energy_high: float = 10.0,
                        max_diag: float = DEFAULT_MAX_DIAG,
                        check: bool = True, workers: int = 1) -> LocalizationReport:
    """Sample starts and target energies; diagnose the nearest eigenpair.

    Starts whose potential has an entry above ``max_diag`` sit too close
    to a pole for trustworthy dense spectra and are rejected (counted,
    not replaced).  For each accepted start the eigenpair nearest the
    sampled energy is summarized by center, IPR, and fitted decay rate.
    The accepted starts are fixed before any parallel work, so the
    result is independent of ``workers``.
    """
    starts = sample_torus(seed, samples, method="uniform")
    energies = np.asarray(
        sample_torus(seed, samples, method="uniform", stream=1)[:, 0]
        * (energy_high - energy_low) + energy_low
    )
    tasks = []
    rejected = 0
    for i in range(samples):
        x = TorusPoint(float(starts[i, 0]), float(starts[i, 1]))
        op = assemble(window, x, freq, kernel, tau_sing=0.0)
        if np.max(np.abs(op.potential)) > max_diag:
            rejected += 1
            continue
        tasks.append((window, x.x1, x.x2, freq, kernel, float(energies[i]), check))
    out = parallel_map(_nearest_pair_stats, tasks, workers=workers, chunk_size=4)
    return LocalizationReport(window=window, omega=freq.omega,
                              samples=tuple(out), rejected=rejected)


# -- frequency comparison -----------------------------------------------------

def classify_frequency(omega: float, dc_constant: float = 0.1,
                       dc_range: int = 4096, max_den: int = 1024) -> str:
    """Tag a frequency: "rational" (small denominator), "diophantine"
    (verified lower bound on |k*omega| mod 1), or "untagged"."""
    _, den = float(omega).as_integer_ratio()
    if den <= max_den:
        return "rational"
    rep = check_dc(Frequency(omega, dc_constant=dc_constant, dc_range=dc_range))
    return "diophantine" if rep.ok else "untagged"


@dataclass(frozen=True, eq=False)
class FrequencyRecord:
    """Pooled eigenpair statistics for one frequency."""

    omega: float
    tag: str
    median_ipr: float
    median_rate: float
    iprs: np.ndarray = field(repr=False)
    rates: np.ndarray = field(repr=False)
    rejected: int


@dataclass(frozen=True, eq=False)
class FrequencyComparison:
    """Same starts, same kernel, different frequencies."""

    window: Window
    records: tuple[FrequencyRecord, ...]

    def record(self, omega: float) -> FrequencyRecord:
        for r in self.records:
            if r.omega == omega:
                return r
        raise KeyError(f"no record for omega = {omega}")


def frequency_comparison(omegas, window: Window, kernel, seed: int, samples: int,
                         energy_low: float = -10.0, energy_high: float = 10.0,
                         max_diag: float = DEFAULT_MAX_DIAG,
                         check: bool = True, workers: int = 1) -> FrequencyComparison:
    """Paired Monte-Carlo comparison of localization across frequencies.

    All frequencies see the same starting points and the same target
    energies, drawn exactly as in localization_report.  A start is
    dropped for every frequency if any frequency rejects it (potential
    entry above ``max_diag``), keeping the comparison paired; with a
    single frequency the accepted set and per-start statistics coincide
    with localization_report.  The accepted starts and the task order
    are fixed before any parallel work, so the result is independent of
    ``workers``.
    """
    freqs = [om if isinstance(om, Frequency) else Frequency(float(om))
             for om in omegas]
    starts = sample_torus(seed, samples, method="uniform")
    energies = np.asarray(
        sample_torus(seed, samples, method="uniform", stream=1)[:, 0]
        * (energy_high - energy_low) + energy_low
    )
    keep: list[int] = []
    for i in range(samples):
        x = TorusPoint(float(starts[i, 0]), float(starts[i, 1]))
        if all(np.max(np.abs(assemble(window, x, fr, kernel,
                                      tau_sing=0.0).potential)) <= max_diag
               for fr in freqs):
            keep.append(i)
    rejected = samples - len(keep)
    tasks = [(window, float(starts[i, 0]), float(starts[i, 1]), fr, kernel,
              float(energies[i]), check)
             for fr in freqs for i in keep]
    stats = parallel_map(_nearest_pair_stats, tasks, workers=workers, chunk_size=4)
    records = []
    per_freq = len(keep)
    for j, fr in enumerate(freqs):
        block = stats[j * per_freq:(j + 1) * per_freq]
        ipr_arr = np.array([s.ipr for s in block], dtype=np.float64)
        rate_arr = np.array([s.rate for s in block], dtype=np.float64)
        records.append(FrequencyRecord(
            omega=fr.omega, tag=classify_frequency(fr.omega),
            median_ipr=float(np.median(ipr_arr)) if ipr_arr.size else math.nan,
            median_rate=float(np.median(rate_arr)) if rate_arr.size else math.nan,
            iprs=ipr_arr, rates=rate_arr, rejected=rejected,
        ))
    return FrequencyComparison(window=window, records=tuple(records))
