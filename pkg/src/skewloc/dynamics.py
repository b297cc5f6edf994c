"""Skew-shift dynamics on the 2-torus.

The map is T(x1, x2) = (x1 + x2, x2 + omega) with both coordinates taken
mod 1.  Its m-th iterate has the closed form

    T^m(x1, x2) = (x1 + m*x2 + m(m-1)/2 * omega,  x2 + m*omega)   (mod 1)

valid for every integer m, negative included.  The shear makes the first
coordinate exquisitely sensitive to drift in the second, so the closed
form is evaluated with exact integer reduction of the products and the
long-orbit iterator carries double-word coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .config import DEFAULT_DC_CONSTANT, DEFAULT_DC_RANGE
from .errors import ConfigError


def _check_unit(value: float, name: str) -> float:
    v = float(value)
    if not (0.0 <= v < 1.0) or not math.isfinite(v):
        raise ConfigError(f"{name} must lie in [0, 1), got {value!r}")
    return v


@dataclass(frozen=True)
class TorusPoint:
    """Point on the 2-torus, coordinates stored in [0, 1)."""

    x1: float
    x2: float

    def __post_init__(self):
        object.__setattr__(self, "x1", _check_unit(self.x1, "x1"))
        object.__setattr__(self, "x2", _check_unit(self.x2, "x2"))


@dataclass(frozen=True)
class Frequency:
    """Rotation number of the second coordinate plus its diophantine budget.

    ``dc_constant`` and ``dc_range`` parametrize the finite-range check
    dist(k*omega, Z) > dc_constant / k^2 for 0 < k <= dc_range.  ``verified``
    is only set by :func:`ensure_dc`; constructing with it is a caller's claim.
    """

    omega: float
    dc_constant: float = DEFAULT_DC_CONSTANT
    dc_range: int = DEFAULT_DC_RANGE
    verified: bool = False

    def __post_init__(self):
        object.__setattr__(self, "omega", _check_unit(self.omega, "omega"))
        if self.dc_constant <= 0:
            raise ConfigError("dc_constant must be positive")
        if int(self.dc_range) < 1:
            raise ConfigError("dc_range must be a positive integer")
        object.__setattr__(self, "dc_range", int(self.dc_range))


@dataclass(frozen=True)
class OrbitSpec:
    """A starting point, a frequency, and the iterate range of interest."""

    start: TorusPoint
    freq: Frequency
    m_min: int
    m_max: int

    def __post_init__(self):
        if self.m_min > self.m_max:
            raise ConfigError("orbit range is empty (m_min > m_max)")


def _mod1(v: float) -> float:
    """v mod 1 landing strictly inside [0, 1).

    For negative v barely below zero, v % 1.0 rounds to exactly 1.0;
    fold that back to 0.0 so TorusPoint construction never trips.
    """
    r = v % 1.0
    return 0.0 if r == 1.0 else r


def circle_dist(a: float, b: float = 0.0) -> float:
    """Distance of a - b to the nearest integer."""
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def torus_dist(p: TorusPoint, q: TorusPoint) -> float:
    """l1 torus distance: sum of the two circle distances."""
    return circle_dist(p.x1, q.x1) + circle_dist(p.x2, q.x2)


def step(p: TorusPoint, freq: Frequency) -> TorusPoint:
    """One forward application of the skew shift."""
    return TorusPoint(_mod1(p.x1 + p.x2), _mod1(p.x2 + freq.omega))


def step_back(p: TorusPoint, freq: Frequency) -> TorusPoint:
    """One backward application; exact inverse of :func:`step` as a map."""
    x2 = _mod1(p.x2 - freq.omega)
    return TorusPoint(_mod1(p.x1 - x2), x2)


def _mul_mod1(k: int, a: float) -> float:
    """Exact (k * a) mod 1 for integer k and float a in [0, 1).

    The float is a dyadic rational, so the product reduces exactly in
    integer arithmetic; the only rounding is the final division.
    """
    if k == 0 or a == 0.0:
        return 0.0
    num, den = a.as_integer_ratio()
    return ((k * num) % den) / den


def iterate_closed(p: TorusPoint, freq: Frequency, m: int) -> TorusPoint:
    """m-th iterate by the closed form, exact for any integer m.

    m(m-1)/2 is computed as an exact integer and both products are reduced
    mod 1 in integer arithmetic, so the result is correct to a final
    rounding regardless of how large m is.
    """
    m = int(m)
    tri = (m * (m - 1)) // 2
    x1 = _mod1(p.x1 + _mul_mod1(m, p.x2) + _mul_mod1(tri, freq.omega))
    x2 = _mod1(p.x2 + _mul_mod1(m, freq.omega))
    return TorusPoint(x1, x2)


def first_coords(x: TorusPoint, freq: Frequency, offsets) -> np.ndarray:
    """First orbit coordinate (T^m x)_1 for each integer offset m.

    Uses the exact closed form per site; cost is linear in the number of
    offsets and independent of their magnitude.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    x2_num, x2_den = x.x2.as_integer_ratio() if x.x2 else (0, 1)
    om_num, om_den = freq.omega.as_integer_ratio() if freq.omega else (0, 1)
    out = np.empty(offsets.shape, dtype=np.float64)
    flat = offsets.ravel()
    res = out.ravel()
    for i, m in enumerate(flat):
        m = int(m)
        tri = (m * (m - 1)) // 2
        t1 = ((m * x2_num) % x2_den) / x2_den
        t2 = ((tri * om_num) % om_den) / om_den
        res[i] = (x.x1 + t1 + t2) % 1.0
    return out


def orbit_coords(x: TorusPoint, freq: Frequency, length: int) -> tuple[np.ndarray, np.ndarray]:
    """Forward orbit T^1 x ... T^length x as two coordinate arrays.

    Plain recursive float iteration; drift stays far below the ball radii
    used in visit counting for any practical length.
    """
    x1 = np.empty(length, dtype=np.float64)
    x2 = np.empty(length, dtype=np.float64)
    a, b = x.x1, x.x2
    om = freq.omega
    for n in range(length):
        a = (a + b) % 1.0
        b = (b + om) % 1.0
        x1[n] = a
        x2[n] = b
    return x1, x2


def first_coords_batch(starts: np.ndarray, omega: float, sites: int) -> np.ndarray:
    """First orbit coordinates for a batch of starting points.

    Parameters
    ----------
    starts : ndarray, shape (batch, 2)
        Torus points as rows (x1, x2).
    omega : float
        Rotation number of the second coordinate.
    sites : int
        Number of consecutive offsets m = 0 .. sites-1.

    Returns
    -------
    ndarray, shape (batch, sites)
        Row b holds (T^m starts[b])_1 for m = 0 .. sites-1.

    Vectorized over the batch with plain float recursion; rounding drift
    over a few thousand steps stays orders of magnitude below the set
    boundaries measured in the scans that use this.
    """
    starts = np.asarray(starts, dtype=np.float64)
    out = np.empty((starts.shape[0], sites), dtype=np.float64)
    a = starts[:, 0].copy()
    b = starts[:, 1].copy()
    for m in range(sites):
        out[:, m] = a
        a = (a + b) % 1.0
        b = (b + omega) % 1.0
    return out


# -- double-word orbit iteration ------------------------------------------
#
# Plain float iteration of the step recursion loses ~m^{3/2} ulp in the
# first coordinate (each rounding of x2 is amplified by the remaining
# shear steps).  At m = 1e5 that is ~1e-9, too coarse to certify the
# closed form at 1e-10.  The production iterator therefore carries each
# coordinate as an unevaluated double-double (hi, lo) pair.

def _two_sum(a, b):
    s = a + b
    bv = s - a
    av = s - bv
    return s, (a - av) + (b - bv)


def _dd_add(hi, lo, b_hi, b_lo):
    s, e = _two_sum(hi, b_hi)
    e = e + (lo + b_lo)
    s, e = _two_sum(s, e)
    return s, e


def _dd_mod1(hi, lo):
    k = np.floor(hi + lo)
    s, e = _two_sum(hi, -k)
    e = e + lo
    s, e = _two_sum(s, e)
    return s, e


def orbit_iterated(p: TorusPoint, freq: Frequency, m: int, snapshots=None):
    """Iterate the step map |m| times with double-word coordinates.

    Negative m iterates the inverse map.  Returns the endpoint as a
    TorusPoint; if ``snapshots`` (iterable of iterate indices with the
    same sign as m) is given, also returns {index: TorusPoint}.
    """
    m = int(m)
    want = set(int(s) for s in snapshots) if snapshots is not None else set()
    taken: dict[int, TorusPoint] = {}
    x1h, x1l = float(p.x1), 0.0
    x2h, x2l = float(p.x2), 0.0
    om = float(freq.omega)
    sign = 1 if m >= 0 else -1
    for j in range(1, abs(m) + 1):
        if sign > 0:
            x1h, x1l = _dd_mod1(*_dd_add(x1h, x1l, x2h, x2l))
            x2h, x2l = _dd_mod1(*_dd_add(x2h, x2l, om, 0.0))
        else:
            x2h, x2l = _dd_mod1(*_dd_add(x2h, x2l, -om, 0.0))
            x1h, x1l = _dd_mod1(*_dd_add(x1h, x1l, -x2h, -x2l))
        if sign * j in want:
            taken[sign * j] = TorusPoint(_mod1(x1h + x1l), _mod1(x2h + x2l))
    end = TorusPoint(_mod1(x1h + x1l), _mod1(x2h + x2l))
    if snapshots is not None:
        return end, taken
    return end


@dataclass(frozen=True)
class DCReport:
    """Outcome of the finite-range diophantine check."""

    ok: bool
    worst_k: int
    worst_margin: float
    dc_constant: float
    dc_range: int


def check_dc(freq: Frequency) -> DCReport:
    """Exhaustive check of dist(k*omega, Z) * k^2 > dc_constant.

    Distances are computed in exact integer arithmetic on the float's
    dyadic representation, so the verdict carries no rounding ambiguity.
    Reports the k minimizing the margin dist(k*omega, Z) * k^2.
    """
    num, den = freq.omega.as_integer_ratio() if freq.omega else (0, 1)
    worst_k = 1
    worst = math.inf
    for k in range(1, freq.dc_range + 1):
        r = (k * num) % den
        dist = min(r, den - r) / den
        margin = dist * k * k
        if margin < worst:
            worst = margin
            worst_k = k
        if margin == 0.0:
            break
    return DCReport(
        ok=worst > freq.dc_constant,
        worst_k=worst_k,
        worst_margin=worst,
        dc_constant=freq.dc_constant,
        dc_range=freq.dc_range,
    )


def ensure_dc(freq: Frequency) -> Frequency:
    """Return a verified copy of ``freq`` or raise ConfigError."""
    report = check_dc(freq)
    if not report.ok:
        raise ConfigError(
            f"frequency {freq.omega} fails the diophantine check: "
            f"k={report.worst_k} has margin {report.worst_margin:.3e} <= {freq.dc_constant}"
        )
    return replace(freq, verified=True)


def singularity_distance(spec: OrbitSpec) -> float:
    """Minimum circle distance of (T^m x)_1 to 1/2 over the orbit range."""
    lo, hi = spec.m_min, spec.m_max
    n = hi - lo + 1
    if n <= 4096 or lo < 0:
        v = first_coords(spec.start, spec.freq, np.arange(lo, hi + 1))
    else:
        p0 = iterate_closed(spec.start, spec.freq, lo - 1)
        x1, _ = orbit_coords(p0, spec.freq, n)
        v = x1
    return float(np.min(np.abs(v - 0.5)))


@dataclass(frozen=True)
class VisitCount:
    """Ball-visit count over an orbit segment and its normalized ratio."""

    count: int
    ratio: float
    eps: float
    length: int


def visit_count(spec: OrbitSpec, a: TorusPoint, eps: float, length: int) -> VisitCount:
    """Count n in 1..length with l1 torus distance of T^n x to ``a`` below eps.

    The ratio count / (eps^2 * length) is the quantity bounded by the
    ergodic ball-visit estimate; it is NaN when eps == 0.
    """
    if eps < 0:
        raise ConfigError("eps must be nonnegative")
    if length < 1:
        raise ConfigError("length must be a positive integer")
    x1, x2 = orbit_coords(spec.start, spec.freq, int(length))
    d1 = np.abs(x1 - a.x1)
    d1 = np.minimum(d1, 1.0 - d1)
    d2 = np.abs(x2 - a.x2)
    d2 = np.minimum(d2, 1.0 - d2)
    count = int(np.count_nonzero(d1 + d2 < eps))
    ratio = count / (eps * eps * length) if eps > 0 else math.nan
    return VisitCount(count=count, ratio=ratio, eps=float(eps), length=int(length))
