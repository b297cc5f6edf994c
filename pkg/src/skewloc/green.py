"""Green's functions through the pole-absorbing factorization.

With K = eps*k(0) - E and s = sqrt(1 + K^2), the shifted operator on a
window factors as H - E = D * B where

    D[m, m] = s / cos(pi v_m)
    B[m, m] = (sin(pi v_m) + K cos(pi v_m)) / s
    B[m, n] = eps * k(m - n) * cos(pi v_m) / s      (m != n)

with v_m = (T^m x)_1.  All entries of B are bounded uniformly in E (the
diagonal by 1, off-diagonals by eps), so the potential's poles live
entirely in the diagonal factor D.  The Green matrix is recovered as

    G[m, n] = cos(pi v_n) / s * Binv[m, n]

(the cosine is indexed by the column), hence |G| <= |Binv| entrywise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .config import DEFAULT_COND_CAP, DEFAULT_TAU_SING
from .dynamics import Frequency, TorusPoint, first_coords
from .errors import IllConditioned, InsufficientData, SingularityGuard
from .operator import HoppingKernel, LatticeOperator, Window, cos_pi, sin_pi


def _phase_alpha(k_shift: float) -> float:
    """Phase alpha with sin(pi v) + K cos(pi v) = sqrt(1+K^2) cos(pi(v - alpha))."""
    return 0.5 - math.atan(k_shift) / math.pi


@dataclass(frozen=True, eq=False)
class Factorization:
    """The B factor and the data needed to rebuild D and G.

    Constructing B never touches the pole; the diagonal factor is only
    materialized through :attr:`d_diag`, which enforces the guard.
    """

    window: Window
    x: TorusPoint
    freq: Frequency
    kernel: HoppingKernel
    energy: float
    s: float
    b: np.ndarray = field(repr=False)
    cos_v: np.ndarray = field(repr=False)
    orbit_first: np.ndarray = field(repr=False)
    tau_sing: float = DEFAULT_TAU_SING

    @property
    def d_diag(self) -> np.ndarray:
        dist = np.abs(self.orbit_first - 0.5)
        bad = np.nonzero(dist < self.tau_sing)[0]
        if bad.size:
            i = int(bad[np.argmin(dist[bad])])
            site = int(self.window.lo + i)
            raise SingularityGuard(
                f"diagonal factor requested at site {site}, {dist[i]:.3e} from the pole "
                f"(guard {self.tau_sing:g})",
                site=site, distance=float(dist[i]),
            )
        return self.s / self.cos_v


def _b_from_coords(v: np.ndarray, kernel: HoppingKernel, energy: float):
    """Dense B matrix from precomputed first coordinates."""
    k_shift = kernel.eps * kernel.k0 - energy
    s = math.hypot(1.0, k_shift)
    cv = cos_pi(v)
    sv = sin_pi(v)
    b = kernel.toeplitz(v.size) * ((kernel.eps / s) * cv)[:, None]
    np.fill_diagonal(b, (sv + k_shift * cv) / s)
    return b, cv, s


def factorize(window: Window, x: TorusPoint, freq: Frequency, kernel: HoppingKernel,
              energy: float, tau_sing: float = DEFAULT_TAU_SING) -> Factorization:
    """Build the bounded factor B on ``window``; never raises the guard."""
    v = first_coords(x, freq, window.offsets())
    b, cv, s = _b_from_coords(v, kernel, energy)
    b.setflags(write=False)
    cv.setflags(write=False)
    v.setflags(write=False)
    return Factorization(window=window, x=x, freq=freq, kernel=kernel,
                         energy=float(energy), s=s, b=b, cos_v=cv,
                         orbit_first=v, tau_sing=tau_sing)


def b_matrix_batch(v_batch: np.ndarray, kernel: HoppingKernel, energy: float) -> np.ndarray:
    """Stack of B matrices for a batch of orbit-coordinate rows.

    Scan-oriented companion of :func:`factorize`; same formulas, no
    per-instance bookkeeping.
    """
    k_shift = kernel.eps * kernel.k0 - energy
    s = math.hypot(1.0, k_shift)
    sites = v_batch.shape[-1]
    cv = cos_pi(v_batch)
    sv = sin_pi(v_batch)
    t = kernel.toeplitz(sites)
    b = (kernel.eps / s) * cv[..., :, None] * t[None, :, :]
    idx = np.arange(sites)
    b[..., idx, idx] = (sv + k_shift * cv) / s
    return b


@dataclass(frozen=True)
class BInverse:
    """Explicit inverse of B with its conditioning evidence."""

    matrix: np.ndarray
    cond: float
    residual: float


def _invert_dense(a: np.ndarray, cond_cap: float, what: str) -> BInverse:
    """LU inverse with one refinement sweep and an exact 1-norm condition."""
    n = a.shape[0]
    if not np.all(np.isfinite(a)):
        raise IllConditioned(f"{what} has non-finite entries", cond=math.inf)
    try:
        with warnings.catch_warnings():
            # an exact zero pivot is reported through IllConditioned below
            warnings.simplefilter("ignore", LinAlgWarning)
            lu = lu_factor(a)
            eye = np.eye(n, dtype=a.dtype)
            inv = lu_solve(lu, eye)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(f"{what} is numerically singular: {exc}", cond=math.inf)
    if not np.all(np.isfinite(inv)):
        raise IllConditioned(f"{what} is numerically singular", cond=math.inf)
    inv += lu_solve(lu, eye - a @ inv)
    resid_mat = a @ inv - eye
    residual = float(np.max(np.abs(resid_mat)))
    cond = float(np.linalg.norm(a, 1) * np.linalg.norm(inv, 1))
    if not math.isfinite(cond) or cond > cond_cap:
        raise IllConditioned(
            f"{what} condition estimate {cond:.3e} exceeds cap {cond_cap:.3e}",
            cond=cond,
        )
    return BInverse(matrix=inv, cond=cond, residual=residual)


def invert_b(f: Factorization, cond_cap: float = DEFAULT_COND_CAP) -> BInverse:
    """Invert the bounded factor; raises IllConditioned past ``cond_cap``."""
    return _invert_dense(np.asarray(f.b), cond_cap, "B factor")


@dataclass(frozen=True, eq=False)
class GreenMatrix:
    """Inverse of H - E on a window together with decay evidence.

    ``cond`` is the condition estimate of whichever matrix was actually
    inverted (B for the factorized route, H - E for the direct route).
    """

    window: Window
    energy: float
    entries: np.ndarray = field(repr=False)
    cond: float
    route: str

    @cached_property
    def profile(self) -> np.ndarray:
        return decay_profile(self.entries)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.entries)))

    @property
    def row_norm(self) -> float:
        return float(np.max(np.sum(np.abs(self.entries), axis=1)))

    def to_rows(self):
        """(m, n, re, im) rows for serialization."""
        lo = self.window.lo
        n = self.entries.shape[0]
        for i in range(n):
            for j in range(n):
                z = complex(self.entries[i, j])
                yield (lo + i, lo + j, z.real, z.imag)


def green(f: Factorization, cond_cap: float = DEFAULT_COND_CAP,
          binv: BInverse | None = None) -> GreenMatrix:
    """Green matrix through the factorized route: column-scale the B inverse.

    Well defined arbitrarily close to the pole: the vanishing cosine
    enters as a factor, never a divisor.
    """
    if binv is None:
        binv = invert_b(f, cond_cap=cond_cap)
    g = binv.matrix * (f.cos_v / f.s)[None, :]
    g.setflags(write=False)
    return GreenMatrix(window=f.window, energy=f.energy, entries=g,
                       cond=binv.cond, route="factorized")


def green_direct(op: LatticeOperator, energy: float,
                 cond_cap: float = DEFAULT_COND_CAP) -> GreenMatrix:
    """Oracle route: invert H - E head on, no factorization involved."""
    a = op.entries - energy * np.eye(op.window.sites, dtype=op.entries.dtype)
    inv = _invert_dense(a, cond_cap, "shifted operator")
    g = inv.matrix.copy()
    g.setflags(write=False)
    return GreenMatrix(window=op.window, energy=float(energy), entries=g,
                       cond=inv.cond, route="direct")


def decay_profile(entries: np.ndarray) -> np.ndarray:
    """Max |entry| per distance class d = |m - n|, d = 0 .. sites-1."""
    a = np.abs(np.asarray(entries))
    n = a.shape[0]
    prof = np.empty(n, dtype=np.float64)
    prof[0] = float(np.max(np.diagonal(a)))
    for d in range(1, n):
        upper = np.diagonal(a, offset=d)
        lower = np.diagonal(a, offset=-d)
        prof[d] = max(float(np.max(upper)), float(np.max(lower)))
    return prof


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential rate of a decay profile tail."""

    rate: float
    residual: float
    n_classes: int


def fit_decay(profile: np.ndarray, cutoff_fraction: float = 0.1,
              min_classes: int = 8) -> DecayFit:
    """Fit log profile ~ const - rate * d over distances d > cutoff * length.

    Zero entries are excluded; a tail that is entirely zero (or has a
    single surviving class) yields the +inf sentinel.  Raises
    InsufficientData when fewer than ``min_classes`` classes lie beyond
    the cutoff at all.
    """
    profile = np.asarray(profile, dtype=np.float64)
    length = profile.size - 1
    d_min = int(math.floor(cutoff_fraction * length)) + 1
    tail = profile[d_min:]
    if tail.size < min_classes:
        raise InsufficientData(
            f"{tail.size} distance classes beyond cutoff {d_min}, need {min_classes}"
        )
    mask = tail > 0.0
    k = int(np.count_nonzero(mask))
    if k < 2:
        return DecayFit(rate=math.inf, residual=0.0, n_classes=k)
    d = np.arange(d_min, profile.size, dtype=np.float64)[mask]
    y = np.log(tail[mask])
    slope, intercept = np.polyfit(d, y, 1)
    fitted = slope * d + intercept
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return DecayFit(rate=float(-slope), residual=residual, n_classes=k)
