"""Closed-form free-energy bounds, their crossing points, and failure certificates.

All logarithms are natural; 0 log 0 is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

RHO_24 = 0.001929
LEECH_DENSITY = float(mpmath.pi ** 12 / mpmath.factorial(12))
SCAN_POINTS = 10_000
BISECT_TOL = 1e-9
PRECISION_DIGITS = 50


class NoCrossingError(ValueError):
    pass


def _xlogy(x: float, y: float) -> float:
    return 0.0 if x == 0 else x * math.log(y)


# -- hard spheres / hard squares ------------------------------------------------

def sphere_birthday_fe(alpha: float, d: int) -> float:
    """Birthday lower bound 2^(d-1) alpha on the hard-sphere free energy."""
    if not 0 <= alpha <= 1:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return math.ldexp(alpha, d - 1)


def cell_model_fe(alpha: float, rho: float, d: int) -> float:
    """Cell-model upper bound 1 - d log(1 - (alpha/rho)^(1/d)) - log rho, limit form."""
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    if alpha < 0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha >= rho:
        raise ValueError(f"alpha = {alpha} >= rho = {rho}: cells have no room (t >= 1)")
    t = (alpha / rho) ** (1.0 / d)
    return 1.0 - d * math.log1p(-t) - math.log(rho)


def leech_gap(t, rho=RHO_24, dps: int = PRECISION_DIGITS) -> mpmath.mpf:
    """BI - CM in dimension 24 at density alpha = t^24 rho; positive means the birthday bound fails."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        rho = mpmath.mpf(rho)
        if not 0 < t < 1:
            raise ValueError(f"t must lie in (0, 1), got {t}")
        return rho / 2 * (2 * t) ** 24 - 1 + 24 * mpmath.log(1 - t) + mpmath.log(rho)


def leech_gap_derivative(t, rho=RHO_24, h: float = 1e-8, dps: int = PRECISION_DIGITS) -> mpmath.mpf:
    """Central finite difference of :func:`leech_gap`."""
    with mpmath.workdps(dps):
        t = mpmath.mpf(t)
        return (leech_gap(t + h, rho, dps) - leech_gap(t - h, rho, dps)) / (2 * mpmath.mpf(h))


# -- root finding ------------------------------------------------------------------

def bisect(f: Callable[[float], float], lo: float, hi: float, tol: float = BISECT_TOL, max_iter: int = 400,
           positive_side: bool = False) -> float:
    """Root of f on a sign-changing bracket; stops when the bracket is below tol (absolute)
    and below tol relative to the endpoint magnitude.

    Returns the bracket midpoint, or with ``positive_side`` the final bracket end where f > 0.
    """
    flo = f(lo)
    if flo == 0:
        return lo
    if (flo > 0) == (f(hi) > 0):
        raise ValueError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi) or (hi - lo <= tol and hi - lo <= tol * abs(mid)):
            break
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    if positive_side:
        return lo if flo > 0 else hi
    return 0.5 * (lo + hi)


def sign_changes(values: np.ndarray) -> np.ndarray:
    s = np.sign(values)
    return np.flatnonzero(s[:-1] * s[1:] < 0)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __iter__(self):
        return iter((self.lo, self.hi))

    def contains(self, a: float, b: float) -> bool:
        return self.lo <= a and b <= self.hi


def _square_gap(d: int) -> Callable[[float], float]:
    return lambda s: math.ldexp(s ** d, d - 1) - (1.0 - d * math.log1p(-s))


def _square_crossings(d: int) -> tuple[float, float] | None:
    """(lower alpha endpoint, w at the upper endpoint) with w = -log(1 - alpha^(1/d))."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    g = _square_gap(d)
    s = np.linspace(0.0, 1.0, SCAN_POINTS + 1)[1:-1]
    vals = np.ldexp(s ** d, d - 1) - (1.0 - d * np.log1p(-s))
    pos = np.flatnonzero(vals > 0)
    if pos.size == 0:
        return None
    i_lo = pos[0]
    s_lo = bisect(g, float(s[i_lo - 1]), float(s[i_lo]), tol=1e-15) if i_lo > 0 else float(s[0])
    lo = bisect(lambda a: g(a ** (1.0 / d)), s_lo ** d * (1 - 1e-6), min(1.0, s_lo ** d * (1 + 1e-6)))

    def gw(w: float) -> float:
        return math.ldexp(math.exp(d * math.log1p(-math.exp(-w))), d - 1) - 1.0 - d * w

    w0 = -math.log1p(-float(s[pos[-1]]))
    w1 = w0
    while gw(w1) > 0:
        w1 *= 2.0
    return lo, bisect(gw, w0, w1, tol=1e-12)


def square_failure_interval(d: int) -> Interval | None:
    """Maximal alpha-interval where 2^(d-1) alpha exceeds the rho = 1 cell-model bound.

    Scanned in s = alpha^(1/d) so the tiny lower endpoint of high dimensions is
    resolved; the upper endpoint is refined in w = -log(1 - s), where it sits at
    1 - O(exp(-2^(d-1)/d)) and rounds to 1.0 in double precision for d >= 9.
    Returns None when the birthday bound is never exceeded.
    """
    found = _square_crossings(d)
    if found is None:
        return None
    lo, w = found
    return Interval(lo, math.exp(d * math.log1p(-math.exp(-w))))


def square_upper_deficit(d: int) -> float:
    """1 minus the upper failure endpoint, without cancellation."""
    found = _square_crossings(d)
    if found is None:
        raise NoCrossingError(f"no failure interval in dimension {d}")
    return -math.expm1(d * math.log1p(-math.exp(-found[1])))


# -- hard-core model -----------------------------------------------------------

@dataclass(frozen=True)
class HardcoreBounds:
    birthday_upper: float
    parity_lower: float
    cgt_third: float


def hardcore_birthday_upper(alpha: float, d: int) -> float:
    return alpha - _xlogy(alpha, alpha) - alpha * alpha * (d + 1) / 2.0


def parity_lower(alpha: float) -> float:
    return 0.0 - _xlogy(alpha, 2 * alpha) - _xlogy(0.5 - alpha, 1 - 2 * alpha)


def hardcore_bounds(alpha: float, d: int) -> HardcoreBounds:
    """Birthday upper bound, parity lower bound and the comparison CGT bound on (1/n) log IS(alpha n)."""
    if not 0 < alpha <= 0.5:
        raise ValueError(f"alpha must lie in (0, 1/2], got {alpha}")
    cgt = -_xlogy(alpha, alpha) - _xlogy(0.5 - alpha, 1 - 2 * alpha)
    return HardcoreBounds(hardcore_birthday_upper(alpha, d), parity_lower(alpha), cgt)


def hardcore_crossing(d: int) -> float:
    """Smallest alpha in (0, 1/2] with parity_lower >= birthday_upper."""
    f = lambda a: parity_lower(a) - hardcore_birthday_upper(a, d)
    grid = np.linspace(0.0, 0.5, SCAN_POINTS + 1)[1:]
    vals = np.array([f(a) for a in grid])
    above = np.flatnonzero(vals >= 0)
    if above.size == 0:
        raise NoCrossingError(f"birthday bound not falsified by parity bound at degree {d}")
    i = above[0]
    if i == 0:
        return float(grid[0])
    # report the end of the bracket where parity >= birthday already holds
    return bisect(f, float(grid[i - 1]), float(grid[i]), positive_side=True)


# -- matchings ---------------------------------------------------------------------

@dataclass(frozen=True)
class MatchingBounds:
    birthday: float
    ilinca_kahn: float
    min: float


def matching_birthday(alpha: float, d: int) -> float:
    return alpha * math.log(d) - _xlogy(alpha, alpha) + alpha - alpha * alpha / 2.0 * (2 * d - 1) / d


def matching_ilinca_kahn(alpha: float, d: int) -> float:
    return (alpha * math.log(d) - _xlogy(alpha, alpha) - 2 * _xlogy(1 - alpha, 1 - alpha) - alpha
            + math.log(d) / (d - 1))


def matching_bounds(alpha: float, d: int) -> MatchingBounds:
    """Two upper bounds on (2/n) log M(alpha n / 2) and their pointwise minimum."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    b, ik = matching_birthday(alpha, d), matching_ilinca_kahn(alpha, d)
    return MatchingBounds(b, ik, min(b, ik))


def matching_crossing(d: int) -> float:
    """The alpha where the birthday and comparison matching bounds intersect."""
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    f = lambda a: matching_birthday(a, d) - matching_ilinca_kahn(a, d)
    grid = np.linspace(0.0, 1.0, SCAN_POINTS + 1)[1:-1]
    vals = np.array([f(a) for a in grid])
    idx = sign_changes(vals)
    if idx.size == 0:
        raise NoCrossingError(f"matching bounds do not cross for d = {d}")
    i = idx[0]
    return bisect(f, float(grid[i]), float(grid[i + 1]))


# -- curves and certificates --------------------------------------------------------

@dataclass
class BoundReport:
    model: str  # sphere | square | hardcore | matching
    d: int
    points: list[tuple[float, float, float]] = field(default_factory=list)
    failure_interval: tuple[float, float] | None = None
    asymptotic_ratio: float | None = None

    def rows(self) -> list[dict]:
        return [{"alpha": a, "birthday": b, "comparison": c, "gap": b - c} for a, b, c in self.points]


def bound_curve(model: str, d: int, alphas: Sequence[float] | None = None, rho: float | None = None) -> BoundReport:
    """Birthday bound and its comparison bound along an alpha grid.

    sphere/square: BI vs the cell model (gap > 0 is a failure of the birthday
    bound). hardcore: birthday upper vs parity lower (gap < 0 is a failure).
    matching: birthday vs the Ilinca-Kahn bound.
    """
    if model == "sphere":
        rho = RHO_24 if rho is None else rho
        alphas = alphas if alphas is not None else np.linspace(0, rho, 201)[1:-1]
        pts = [(float(a), sphere_birthday_fe(a, d), cell_model_fe(a, rho, d)) for a in alphas]
        report = BoundReport(model, d, pts)
        if d == 24 and rho == RHO_24:
            report.failure_interval = (0.79 ** 24 * RHO_24, RHO_24)
        return report
    if model == "square":
        alphas = alphas if alphas is not None else np.linspace(0, 1, 201)[1:-1]
        pts = [(float(a), sphere_birthday_fe(a, d), cell_model_fe(a, 1.0, d)) for a in alphas]
        iv = square_failure_interval(d)
        ratio = iv.lo * 2 ** (d - 1) / (d * math.log(2)) if iv else None
        return BoundReport(model, d, pts, tuple(iv) if iv else None, ratio)
    if model == "hardcore":
        alphas = alphas if alphas is not None else np.linspace(0, 0.5, 201)[1:]
        pts = []
        for a in alphas:
            hb = hardcore_bounds(float(a), d)
            pts.append((float(a), hb.birthday_upper, hb.parity_lower))
        try:
            lo = hardcore_crossing(d)
            iv, ratio = (lo, 0.5), lo * d / (2 * math.log(2))
        except NoCrossingError:
            iv, ratio = None, None
        return BoundReport(model, d, pts, iv, ratio)
    if model == "matching":
        alphas = alphas if alphas is not None else np.linspace(0, 1, 201)[1:-1]
        pts = []
        for a in alphas:
            mb = matching_bounds(float(a), d)
            pts.append((float(a), mb.birthday, mb.ilinca_kahn))
        ratio = matching_crossing(d) / (math.log(d) / d) ** (1 / 3) if d > 1 else None
        return BoundReport(model, d, pts, None, ratio)
    raise ValueError(f"unknown model {model!r}; use sphere, square, hardcore or matching")


def sphere24_certificate(t: float = 0.79, rho: float = RHO_24, grid: int = 200) -> dict:
    """Failure certificate in d = 24: F(t) > 0 and F > 0 on a grid of (t, 1)."""
    with mpmath.workdps(PRECISION_DIGITS):
        f_t = leech_gap(t, rho)
        ts = [t + (1 - 1e-6 - t) * (i + 1) / grid for i in range(grid)]
        grid_min = min(leech_gap(s, rho) for s in ts)
        witnesses = []
        for s in (t, 0.5 * (t + 1), 1 - 1e-3):
            a = mpmath.mpf(s) ** 24 * rho
            bi = 2 ** 23 * a
            cm = 1 - 24 * mpmath.log(1 - mpmath.mpf(s)) - mpmath.log(rho)
            witnesses.append((float(a), float(bi), float(cm)))
    fails = f_t > 0 and grid_min > 0
    return {
        "model": "sphere24", "d": 24, "rho": rho, "t": t,
        "leech_gap": float(f_t), "leech_gap_digits": mpmath.nstr(f_t, 30),
        "grid_points": grid, "grid_min_gap": float(grid_min),
        "failure_interval": [t ** 24 * rho, rho] if fails else None,
        "witnesses": witnesses, "birthday_fails": bool(fails), "limit_form": "asymptotic",
    }


def square_certificate(d: int) -> dict:
    iv = square_failure_interval(d)
    witnesses = []
    if iv:
        for a in (iv.lo + (iv.hi - iv.lo) * q for q in (0.25, 0.5, 0.75)):
            witnesses.append((a, sphere_birthday_fe(a, d), cell_model_fe(a, 1.0, d)))
    return {"model": "square", "d": d, "rho": 1.0, "failure_interval": list(iv) if iv else None,
            "witnesses": witnesses, "birthday_fails": iv is not None, "limit_form": "asymptotic"}


def hardcore_certificate(d: int) -> dict:
    try:
        lo = hardcore_crossing(d)
    except NoCrossingError:
        return {"model": "hardcore", "d": d, "failure_interval": None, "witnesses": [], "birthday_fails": False,
                "limit_form": "asymptotic"}
    witnesses = []
    for a in (lo, 0.5 * (lo + 0.5), 0.5):
        hb = hardcore_bounds(a, d)
        witnesses.append((a, hb.birthday_upper, hb.parity_lower))
    return {"model": "hardcore", "d": d, "failure_interval": [lo, 0.5], "witnesses": witnesses,
            "birthday_fails": True, "limit_form": "asymptotic"}


def finite_is_birthday_bound(n: int, k: int, d: int) -> float:
    """(1/n) log of n^k / k! (1 - (d+1)/n)^C(k,2)."""
    return (k * math.log(n) - math.lgamma(k + 1) + math.comb(k, 2) * math.log1p(-(d + 1) / n)) / n
