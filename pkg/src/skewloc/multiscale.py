"""Multiscale bookkeeping: initial-scale certificates, site classification,
and Monte-Carlo measure of the resonant set across a geometric family of
window lengths.

Everything here works on the bounded factor B rather than the raw
operator, so estimates stay finite arbitrarily close to potential poles.
A window of n sites is "good" when the inverse of B restricted to it is
small in the l_inf operator norm (cap exp(sqrt(n))) and decays
exponentially off the diagonal; the measure of the bad set is estimated
by sampling starting points and is expected to shrink as the scale
grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TAU_SING
from .dynamics import Frequency, TorusPoint, first_coords_batch
from .green import b_matrix_batch, factorize, fit_decay, invert_b
from .operator import HoppingKernel, Window
from .sampling import sample_torus, standard_error


def norm_cap(sites: int) -> float:
    """Default inverse-norm cap for a block of ``sites`` sites: exp(sqrt(sites))."""
    return math.exp(math.sqrt(sites))


def inf_norm(a: np.ndarray) -> float:
    """l_inf -> l_inf operator norm (max absolute row sum)."""
    return float(np.max(np.sum(np.abs(a), axis=-1)))


@dataclass(frozen=True)
class ScaleSchedule:
    """Window lengths and thresholds for one rung of the scale ladder.

    The base rung uses (l0, m, n) = (8, 32, 256); rung k doubles all
    three.  ``delta`` controls how much clustering of bad sites is
    tolerated, ``rho`` is the kernel decay the thresholds are slaved to.
    """

    l0: int
    m: int
    n: int
    rho: float
    delta: float = 0.3

    def __post_init__(self):
        if not (0 < self.l0 <= self.m <= self.n):
            raise ValueError(f"need 0 < l0 <= m <= n, got {(self.l0, self.m, self.n)}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.rho <= 0:
            raise ValueError(f"rho must be positive, got {self.rho}")

    @classmethod
    def for_scale(cls, k: int, rho: float, delta: float = 0.3) -> "ScaleSchedule":
        if k < 0:
            raise ValueError(f"scale index must be >= 0, got {k}")
        return cls(l0=8 << k, m=32 << k, n=256 << k, rho=rho, delta=delta)

    @property
    def decay_floor(self) -> float:
        """Minimum acceptable fitted decay rate for a good window."""
        return self.rho / 100.0

    @property
    def cap_n(self) -> float:
        return norm_cap(self.n)

    @property
    def cap_m(self) -> float:
        return norm_cap(self.m)

    @property
    def min_subinterval(self) -> int:
        """Shortest subinterval length that enters the density statistic."""
        return int(math.ceil(self.n ** (self.delta / 5.0)))


# -- initial scale ----------------------------------------------------------

@dataclass(frozen=True)
class NeumannCertificate:
    """Perturbative inverse bound at the initial scale.

    When every diagonal entry of B has modulus above the floor eps0 and
    the off-diagonal part is summable with margin, the series for B^{-1}
    converges and gives the entrywise bound

        |Binv[m, n]| <= (1/mu) * (delta_mn + (eps/mu) e^{-(rho/2)|m-n|} / (1-q))

    with mu = min |B_mm| and q = (eps/mu) * (1+e^{-rho/2})/(1-e^{-rho/2}).
    ``max_ratio`` is the largest computed-to-bound ratio; ``ok`` records
    that the bound was verified against the actual inverse.  A start
    point whose diagonal dips to eps0 or below, or whose series does not
    contract, yields a certificate with ``failure`` set instead of an
    exception: such x simply belong to the initial-scale exceptional set.
    """

    window: Window
    mu: float
    q: float
    bound: np.ndarray | None = field(repr=False)
    max_ratio: float
    ok: bool
    failure: str | None = None


def neumann_initial(window: Window, x: TorusPoint, freq: Frequency,
                    kernel: HoppingKernel, energy: float,
                    eps0: float | None = None,
                    tau_sing: float = DEFAULT_TAU_SING) -> NeumannCertificate:
    """Certify B's inverse on a small window by geometric path summation.

    eps0 defaults to exp(-sqrt(sites)), the reference smallness floor for
    the window size; the hopping strength must satisfy eps < eps0.
    """
    if eps0 is None:
        eps0 = math.exp(-math.sqrt(window.sites))
    if not kernel.eps < eps0:
        raise ValueError(
            f"hopping eps = {kernel.eps:g} must lie below the diagonal "
            f"floor eps0 = {eps0:g}")
    f = factorize(window, x, freq, kernel, energy, tau_sing=tau_sing)
    diag = np.abs(np.diagonal(f.b))
    mu = float(np.min(diag))
    if mu <= eps0:
        return NeumannCertificate(window=window, mu=mu, q=math.inf,
                                  bound=None, max_ratio=math.inf, ok=False,
                                  failure="diagonal")
    r = math.exp(-kernel.rho / 2.0)
    lattice_sum = (1.0 + r) / (1.0 - r)
    q = (kernel.eps / mu) * lattice_sum
    if q >= 1.0:
        return NeumannCertificate(window=window, mu=mu, q=q, bound=None,
                                  max_ratio=math.inf, ok=False,
                                  failure="contraction")
    offs = window.offsets()
    dist = np.abs(offs[:, None] - offs[None, :]).astype(np.float64)
    bound = (kernel.eps / mu) * np.exp(-(kernel.rho / 2.0) * dist) / (1.0 - q)
    np.fill_diagonal(bound, bound.diagonal() + 1.0)
    bound /= mu
    bound.setflags(write=False)
    binv = invert_b(f, cond_cap=math.inf)
    max_ratio = float(np.max(np.abs(binv.matrix) / bound))
    return NeumannCertificate(window=window, mu=mu, q=q, bound=bound,
                              max_ratio=max_ratio, ok=max_ratio <= 1.0 + 1e-9)


# -- diagonal smallness ------------------------------------------------------

@dataclass(frozen=True)
class MeasureEstimate:
    """Monte-Carlo estimate of a set's measure on the torus."""

    fraction: float
    std_error: float
    hits: int
    samples: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.fraction - target) <= sigmas * max(self.std_error, 1e-300)


def diag_smallness_measure(sites: int, omega: float, kernel: HoppingKernel,
                           energy: float, eps0: float, seed: int,
                           samples: int, method: str = "uniform") -> MeasureEstimate:
    """Measure of starting points whose window has a near-zero B diagonal.

    Estimates mu{ x : min_{0<=m<sites} |B[m, m](x)| < eps0 } by direct
    sampling.  The diagonal entries are cos(pi(v_m - alpha)) for a fixed
    phase alpha, so for a single site the exact answer is
    (2/pi)*asin(eps0); for several sites the union is subadditive.  A
    threshold at or above 1 captures everything (|B_mm| <= 1 always).
    """
    if not eps0 > 0:
        raise ValueError(f"eps0 must be positive, got {eps0}")
    starts = sample_torus(seed, samples, method=method)
    v = first_coords_batch(starts, omega, sites)
    k_shift = kernel.eps * kernel.k0 - energy
    s = math.hypot(1.0, k_shift)
    diag = (np.sin(np.pi * v) + k_shift * np.cos(np.pi * v)) / s
    hits = int(np.count_nonzero(np.min(np.abs(diag), axis=1) < eps0))
    return MeasureEstimate(fraction=hits / samples,
                           std_error=standard_error(hits, samples),
                           hits=hits, samples=samples)


def single_site_smallness(eps0: float) -> float:
    """Exact measure of {x : |cos(pi(x - alpha))| < eps0} on the circle."""
    if not 0 <= eps0 <= 1:
        raise ValueError(f"eps0 must be in [0, 1], got {eps0}")
    return (2.0 / math.pi) * math.asin(eps0)


# -- site classification -----------------------------------------------------

@dataclass(frozen=True, eq=False)
class SiteClassification:
    """Good/bad verdict per site of a window, from local sub-block inverses."""

    window: Window
    sub_length: int
    cap: float
    decay_floor: float
    good: np.ndarray = field(repr=False)
    norms: np.ndarray = field(repr=False)

    @property
    def bad_sites(self) -> np.ndarray:
        return self.window.offsets()[~self.good] + 0

    @property
    def bad_fraction(self) -> float:
        return float(np.count_nonzero(~self.good)) / self.good.size


def classify_sites(window: Window, x: TorusPoint, freq: Frequency,
                   kernel: HoppingKernel, energy: float, sub_length: int,
                   cap: float | None = None, decay_floor: float | None = None,
                   tau_sing: float = DEFAULT_TAU_SING) -> SiteClassification:
    """Classify each site by inverting B on a short window around it.

    Site n0 is good when, on I0 = [n0 - sub_length/2, n0 + sub_length/2]
    intersected with the parent window, the inverse of B satisfies both
    the norm cap and the entrywise tail bound
    |Binv[m, n]| <= exp(-decay_floor * |m - n|) for |m - n| > sub_length/10.
    Numerically singular sub-blocks mark the site bad rather than raising.

    Restriction commutes with assembly here: B's entries depend only on
    their own row and column sites, so the sub-block of the full-window
    B equals the B built directly on the sub-window.
    """
    if sub_length % 2:
        raise ValueError(f"sub_length must be even, got {sub_length}")
    f = factorize(window, x, freq, kernel, energy, tau_sing=tau_sing)
    b = np.asarray(f.b)
    half = sub_length // 2
    n_sites = window.sites
    if cap is None:
        cap = norm_cap(sub_length + 1)
    if decay_floor is None:
        decay_floor = kernel.rho / 100.0
    tail_from = sub_length / 10.0
    good = np.zeros(n_sites, dtype=bool)
    norms = np.full(n_sites, np.inf, dtype=np.float64)
    for i in range(n_sites):
        lo = max(0, i - half)
        hi = min(n_sites - 1, i + half)
        blk = b[lo:hi + 1, lo:hi + 1]
        try:
            inv = np.linalg.inv(blk)
        except np.linalg.LinAlgError:
            continue
        norms[i] = inf_norm(inv)
        if norms[i] > cap:
            continue
        idx = np.arange(lo, hi + 1)
        dist = np.abs(idx[:, None] - idx[None, :]).astype(np.float64)
        far = dist > tail_from
        if np.all(np.abs(inv)[far] <= np.exp(-decay_floor * dist[far])):
            good[i] = True
    norms.setflags(write=False)
    good.setflags(write=False)
    return SiteClassification(window=window, sub_length=sub_length, cap=float(cap),
                              decay_floor=float(decay_floor), good=good, norms=norms)


@dataclass(frozen=True)
class DensityReport:
    """Worst-case clustering statistic of a bad-site set."""

    max_ratio: float
    interval: tuple[int, int]
    min_length: int
    delta: float


def window_density(bad_mask: np.ndarray, delta: float,
                   min_length: int | None = None) -> DensityReport:
    """max over subintervals J (|J| >= min_length) of |J cap bad| / |J|^(1-delta).

    Sub-unit values mean bad sites stay sparse at every intermediate
    scale, the hypothesis patching arguments need.  Brute force over all
    O(n^2) subintervals via prefix sums.
    """
    bad_mask = np.asarray(bad_mask, dtype=bool)
    n = bad_mask.size
    if n == 0:
        raise ValueError("empty mask")
    if min_length is None:
        min_length = int(math.ceil(n ** (delta / 5.0)))
    min_length = max(1, min_length)
    prefix = np.concatenate([[0], np.cumsum(bad_mask.astype(np.int64))])
    best = -1.0
    best_iv = (0, min(min_length, n) - 1)
    for length in range(min_length, n + 1):
        counts = prefix[length:] - prefix[:-length]
        j = int(np.argmax(counts))
        ratio = counts[j] / length ** (1.0 - delta)
        if ratio > best:
            best = float(ratio)
            best_iv = (j, j + length - 1)
    return DensityReport(max_ratio=best, interval=best_iv,
                         min_length=min_length, delta=delta)


# -- bad-set measure across scales -------------------------------------------

@dataclass(frozen=True)
class ScaleMeasure:
    """Estimated measure of starting points whose scale-n window is bad."""

    sites: int
    energy: float
    cap: float
    decay_floor: float
    samples: int
    fail_norm: int
    fail_decay: int
    fail_singular: int

    @property
    def failures(self) -> int:
        return self.fail_norm + self.fail_decay + self.fail_singular

    @property
    def fraction(self) -> float:
        return self.failures / self.samples

    @property
    def std_error(self) -> float:
        return standard_error(self.failures, self.samples)


def _chunk_samples(sites: int) -> int:
    # ~64 MB of float64 per stacked-inverse chunk
    return max(1, (1 << 23) // (sites * sites))


def _profile_batch(a: np.ndarray) -> np.ndarray:
    """Per-distance max |entry| for a stack of matrices, shape (batch, n)."""
    batch, n, _ = a.shape
    prof = np.empty((batch, n), dtype=np.float64)
    idx = np.arange(n)
    prof[:, 0] = a[:, idx, idx].max(axis=1)
    for d in range(1, n):
        i = idx[:n - d]
        prof[:, d] = np.maximum(a[:, i, i + d].max(axis=1),
                                a[:, i + d, i].max(axis=1))
    return prof


def bad_set_measure(sites: int, omega: float, kernel: HoppingKernel, energy: float,
                    seed: int, samples: int, cap: float | None = None,
                    decay_floor: float | None = None,
                    cutoff_fraction: float = 0.1) -> ScaleMeasure:
    """Fraction of sampled starts x for which the scale window is bad.

    Bad means any of: the inverse of B on [0, sites) exceeds the norm cap
    in the l_inf operator norm, its decay profile fits a rate below
    ``decay_floor``, or the block is numerically singular.  Inverses are
    computed on stacked batches; memory stays bounded by chunking with a
    size that depends only on ``sites``.
    """
    if cap is None:
        cap = norm_cap(sites)
    if decay_floor is None:
        decay_floor = kernel.rho / 100.0
    starts = sample_torus(seed, samples, method="uniform")
    chunk = _chunk_samples(sites)
    fail_norm = fail_decay = fail_singular = 0
    for s0 in range(0, samples, chunk):
        batch = starts[s0:s0 + chunk]
        v = first_coords_batch(batch, omega, sites)
        b = b_matrix_batch(v, kernel, energy)
        try:
            inv = np.linalg.inv(b)
            singular = np.zeros(b.shape[0], dtype=bool)
        except np.linalg.LinAlgError:
            inv = np.empty_like(b)
            singular = np.zeros(b.shape[0], dtype=bool)
            for i in range(b.shape[0]):
                try:
                    inv[i] = np.linalg.inv(b[i])
                except np.linalg.LinAlgError:
                    singular[i] = True
                    inv[i] = np.inf
        fail_singular += int(np.count_nonzero(singular))
        absinv = np.abs(inv)
        norms = np.sum(absinv, axis=-1).max(axis=-1)
        bad_norm = ~singular & ~(norms <= cap)
        fail_norm += int(np.count_nonzero(bad_norm))
        # decay check only for survivors of the cheaper tests
        keep = np.nonzero(~singular & ~bad_norm)[0]
        if keep.size:
            profs = _profile_batch(absinv[keep])
            for row in profs:
                fit = fit_decay(row, cutoff_fraction=cutoff_fraction)
                if not fit.rate >= decay_floor:
                    fail_decay += 1
    return ScaleMeasure(sites=sites, energy=float(energy), cap=float(cap),
                        decay_floor=float(decay_floor), samples=samples,
                        fail_norm=fail_norm, fail_decay=fail_decay,
                        fail_singular=fail_singular)
