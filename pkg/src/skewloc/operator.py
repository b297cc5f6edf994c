"""Lattice operator assembly: tan potential along a skew-shift orbit plus
Toeplitz hopping with an exponentially decaying kernel.

H(x)[m, n] = tan(pi * (T^m x)_1) * delta_mn + eps * k(m - n)

where k is hermitian (k(-n) = conj k(n)) and |k(n)| <= exp(-rho |n|).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .config import DEFAULT_TAU_SING
from .dynamics import Frequency, TorusPoint, first_coords
from .errors import ConfigError, DecayViolation, SingularityGuard, SymmetryViolation

# Relative slack so an envelope touched exactly (e.g. at offset zero) passes.
_DECAY_SLACK = 1.0 + 1e-12


@dataclass(frozen=True)
class Window:
    """Integer interval of lattice sites, endpoints inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ConfigError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def sites(self) -> int:
        return self.hi - self.lo + 1

    @property
    def length(self) -> int:
        """Interval length hi - lo (one less than the site count)."""
        return self.hi - self.lo

    def offsets(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)

    def shift(self, k: int) -> "Window":
        return Window(self.lo + k, self.hi + k)

    def contains(self, other: "Window") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi


# -- stable trig at the pole ------------------------------------------------
#
# tan(pi v) and cos(pi v) are evaluated through the half-shifted argument
# w = v - 1/2 (exact for v in [1/4, 1)), which keeps full relative accuracy
# where the potential blows up and the cosine vanishes.

def cos_pi(v):
    return -np.sin(np.pi * (np.asarray(v, dtype=np.float64) - 0.5))


def sin_pi(v):
    return np.sin(np.pi * np.asarray(v, dtype=np.float64))


def tan_pi(v):
    w = np.asarray(v, dtype=np.float64) - 0.5
    with np.errstate(divide="ignore"):
        return -1.0 / np.tan(np.pi * w)


@dataclass(frozen=True, eq=False)
class HoppingKernel:
    """Finitely supported hopping coefficients with a decay certificate.

    ``values[band + n]`` holds k(n) for offsets n = -band..band.  ``eps``
    is the global coupling in front of the Toeplitz part.  Validation
    enforces hermitian symmetry, a real k(0), and |k(n)| <= exp(-rho |n|).
    """

    rho: float
    eps: float
    band: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.rho <= 0:
            raise ConfigError("rho must be positive")
        if self.eps < 0:
            raise ConfigError("eps must be nonnegative")
        if self.band < 0:
            raise ConfigError("band must be nonnegative")
        vals = np.asarray(self.values)
        if vals.shape != (2 * self.band + 1,):
            raise ConfigError("values must have length 2*band + 1")
        if np.iscomplexobj(vals) and np.any(vals.imag != 0.0):
            vals = vals.astype(np.complex128)
        else:
            vals = vals.real.astype(np.float64)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        self._validate()

    def _validate(self):
        n = np.arange(-self.band, self.band + 1)
        mags = np.abs(self.values)
        envelope = np.exp(-self.rho * np.abs(n)) * _DECAY_SLACK
        bad = np.nonzero(mags > envelope)[0]
        if bad.size:
            k = int(n[bad[0]])
            raise DecayViolation(
                f"|k({k})| = {mags[bad[0]]:.6g} exceeds exp(-rho*|{k}|) = "
                f"{math.exp(-self.rho * abs(k)):.6g}"
            )
        for j in range(1, self.band + 1):
            a = self.values[self.band + j]
            b = self.values[self.band - j]
            if b != np.conj(a):
                raise SymmetryViolation(
                    f"k({-j}) = {b} is not the conjugate of k({j}) = {a}"
                )
        k0 = self.values[self.band]
        if np.iscomplexobj(self.values) and k0.imag != 0.0:
            raise SymmetryViolation(f"k(0) must be real, got {k0}")

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    @property
    def k0(self) -> float:
        return float(np.real(self.values[self.band]))

    def coeff(self, offset: int):
        """k(offset); zero outside the band."""
        if abs(offset) > self.band:
            return 0.0
        return self.values[self.band + offset]

    def toeplitz(self, sites: int) -> np.ndarray:
        """Dense Toeplitz block k(m - n) for an m, n grid of given size."""
        pad = max(0, sites - (self.band + 1))
        col = np.concatenate([self.values[self.band:], np.zeros(pad, dtype=self.values.dtype)])[:sites]
        row = np.concatenate([self.values[self.band::-1], np.zeros(pad, dtype=self.values.dtype)])[:sites]
        return toeplitz(col, row)


def kernel_from_profile(rho: float, eps: float, profile: str = "geometric",
                        band: int | None = None, **params) -> HoppingKernel:
    """Build one of the named kernel families.

    geometric:      k(n) = exp(-decay*rho*|n|), ``decay`` > 1 (default 2).
                    Band defaults to where the tail is machine-negligible.
    single-cosine:  k(0) = theta0, k(+-1) = theta (defaults 0.5 and
                    exp(-2*rho)); the hopping of a two-term cosine symbol.
    """
    if profile == "geometric":
        decay = float(params.pop("decay", 2.0))
        if params:
            raise ConfigError(f"unknown geometric parameters: {sorted(params)}")
        if decay <= 1.0:
            raise ConfigError("geometric decay factor must exceed 1")
        rp = decay * rho
        if band is None:
            band = max(1, math.ceil(40.0 / rp))
        n = np.arange(-band, band + 1)
        vals = np.exp(-rp * np.abs(n))
        return HoppingKernel(rho=rho, eps=eps, band=band, values=vals)
    if profile == "single-cosine":
        theta = float(params.pop("theta", math.exp(-2.0 * rho)))
        theta0 = float(params.pop("theta0", 0.5))
        if params:
            raise ConfigError(f"unknown single-cosine parameters: {sorted(params)}")
        if band is not None and band != 1:
            raise ConfigError("single-cosine kernel has band 1")
        vals = np.array([theta, theta0, theta])
        return HoppingKernel(rho=rho, eps=eps, band=1, values=vals)
    raise ConfigError(f"unknown kernel profile {profile!r}")


def kernel_from_table(rho: float, eps: float, table: dict[int, complex]) -> HoppingKernel:
    """Kernel from an explicit offset -> coefficient map.

    Offsets missing from the table are zero; the negative side may be
    omitted and is filled in by hermitian symmetry.
    """
    if not table:
        raise ConfigError("empty kernel table")
    band = max(abs(int(n)) for n in table)
    vals = np.zeros(2 * band + 1, dtype=np.complex128)
    seen = set()
    for n, v in table.items():
        n = int(n)
        vals[band + n] = complex(v)
        seen.add(n)
    for n in range(1, band + 1):
        if n in seen and -n not in seen:
            vals[band - n] = np.conj(vals[band + n])
        elif -n in seen and n not in seen:
            vals[band + n] = np.conj(vals[band - n])
    return HoppingKernel(rho=rho, eps=eps, band=band, values=vals)


def kernel_from_file(path, rho: float, eps: float) -> HoppingKernel:
    """Load a kernel table from a text file of lines ``n re im``.

    Blank lines and lines starting with '#' are skipped.  Any malformed
    line or validation failure is fatal and reports its line number.
    """
    table: dict[int, complex] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'n re im', got {line!r}"
                )
            try:
                n = int(parts[0])
                re, im = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            if n in table:
                raise ConfigError(f"{path}:{lineno}: duplicate offset {n}")
            table[n] = complex(re, im)
    try:
        return kernel_from_table(rho=rho, eps=eps, table=table)
    except (DecayViolation, SymmetryViolation) as exc:
        raise type(exc)(f"{path}: {exc}") from None


@dataclass(frozen=True, eq=False)
class LatticeOperator:
    """Dense hermitian operator on a site window; immutable after assembly."""

    window: Window
    x: TorusPoint
    freq: Frequency
    kernel: HoppingKernel
    entries: np.ndarray = field(repr=False)
    orbit_first: np.ndarray = field(repr=False)

    @property
    def potential(self) -> np.ndarray:
        return np.real(np.diagonal(self.entries)) - self.kernel.eps * self.kernel.k0


def potential(m: int, x: TorusPoint, freq: Frequency,
              tau_sing: float = DEFAULT_TAU_SING) -> float:
    """tan(pi * (T^m x)_1) with the pole guard enforced."""
    v = first_coords(x, freq, [int(m)])[0]
    dist = abs(v - 0.5)
    if dist < tau_sing:
        raise SingularityGuard(
            f"orbit point at site {m} is {dist:.3e} from the pole (guard {tau_sing:g})",
            site=int(m), distance=dist,
        )
    w = v - 0.5
    return -1.0 / math.tan(math.pi * w)


def assemble(window: Window, x: TorusPoint, freq: Frequency, kernel: HoppingKernel,
             tau_sing: float = DEFAULT_TAU_SING) -> LatticeOperator:
    """Assemble the dense operator on ``window``.

    Raises SingularityGuard naming the closest offending site if any
    orbit point sits within ``tau_sing`` of the pole locus.
    """
    offs = window.offsets()
    v = first_coords(x, freq, offs)
    dist = np.abs(v - 0.5)
    bad = np.nonzero(dist < tau_sing)[0]
    if bad.size:
        i = int(bad[np.argmin(dist[bad])])
        raise SingularityGuard(
            f"orbit point at site {int(offs[i])} is {dist[i]:.3e} from the pole "
            f"(guard {tau_sing:g})",
            site=int(offs[i]), distance=float(dist[i]),
        )
    h = kernel.eps * kernel.toeplitz(window.sites)
    diag = tan_pi(v) + kernel.eps * kernel.k0
    np.fill_diagonal(h, diag.astype(h.dtype) if np.iscomplexobj(h) else diag)
    h.setflags(write=False)
    v.setflags(write=False)
    return LatticeOperator(window=window, x=x, freq=freq, kernel=kernel,
                           entries=h, orbit_first=v)
