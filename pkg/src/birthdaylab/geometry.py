"""Torus points, wraparound metrics, ball volumes and the r / p / alpha conversions."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np


class Metric(str, enum.Enum):
    EUCLIDEAN = "l2"
    CHEBYSHEV = "linf"

    @classmethod
    def parse(cls, value: "str | Metric") -> "Metric":
        if isinstance(value, Metric):
            return value
        key = str(value).lower()
        aliases = {"l2": cls.EUCLIDEAN, "euclidean": cls.EUCLIDEAN,
                   "linf": cls.CHEBYSHEV, "chebyshev": cls.CHEBYSHEV,
                   "square": cls.CHEBYSHEV, "sphere": cls.EUCLIDEAN}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown metric {value!r}; use l2 or linf") from None


def reduce_to_torus(coords) -> np.ndarray:
    """Map coordinates into [0, 1) componentwise."""
    a = np.mod(np.asarray(coords, dtype=float), 1.0)
    # np.mod can return exactly 1.0 for tiny negative inputs
    a[a >= 1.0] = 0.0
    return a


def displacement(x, y) -> np.ndarray:
    """Per-coordinate wraparound displacement min(|x-y|, 1-|x-y|); broadcasts."""
    delta = np.abs(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
    return np.minimum(delta, 1.0 - delta)


def norm(delta: np.ndarray, metric: Metric, axis: int = -1) -> np.ndarray:
    if metric is Metric.CHEBYSHEV:
        return np.max(delta, axis=axis)
    return np.sqrt(np.sum(delta * delta, axis=axis))


def torus_distance(x: Sequence[float], y: Sequence[float], metric: Metric | str = Metric.EUCLIDEAN) -> float:
    metric = Metric.parse(metric)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(norm(displacement(x, y), metric))


def log_unit_ball_volume(d: int, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """log of the volume of the unit ball; the L-infinity unit ball is [-1, 1]^d."""
    metric = Metric.parse(metric)
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if metric is Metric.CHEBYSHEV:
        return d * math.log(2.0)
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


def unit_ball_volume(d: int, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    metric = Metric.parse(metric)
    if metric is Metric.CHEBYSHEV or d == 1:
        return 2.0 ** d
    return math.exp(log_unit_ball_volume(d, metric))


def ball_volume(d: int, r: float, metric: Metric | str = Metric.EUCLIDEAN) -> float:
    """Volume of a radius-r ball on the unit torus, i.e. Pr[dist(X, Y) <= r]."""
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    if r > 0.5:
        raise ValueError(f"radius {r} > 1/2: the ball wraps onto itself and the volume formula is not exact")
    if r == 0:
        return 0.0
    metric = Metric.parse(metric)
    if metric is Metric.CHEBYSHEV or d == 1:
        return (2.0 * r) ** d
    return math.exp(log_unit_ball_volume(d, metric) + d * math.log(r))


@dataclass(frozen=True)
class ModelParams:
    """Particle count, dimension, and the three equivalent density parameters.

    ``p`` is the pair-collision probability, ``alpha`` the packing density of the
    radius r/2 spheres, and ``r`` the exclusion radius. ``p = 2**d * alpha / n``.
    """

    n: int
    d: int
    r: float
    p: float
    alpha: float
    metric: Metric = Metric.EUCLIDEAN
    torus_exact: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        out["metric"] = self.metric.value
        return out


def convert_params(n: int, d: int, metric: Metric | str = Metric.EUCLIDEAN, *,
                   r: float | None = None, p: float | None = None, alpha: float | None = None,
                   allow_large_radius: bool = False) -> ModelParams:
    """Complete a parameter set from exactly one of ``r``, ``p`` or ``alpha``.

    With ``allow_large_radius`` a derived radius above 1/2 is returned with
    ``torus_exact=False`` instead of raising; such a parameter set describes the
    limiting density only and cannot be simulated.
    """
    metric = Metric.parse(metric)
    given = {k: v for k, v in (("r", r), ("p", p), ("alpha", alpha)) if v is not None}
    if len(given) != 1:
        raise ValueError(f"supply exactly one of r, p, alpha (got {sorted(given) or 'none'})")
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    (name, value), = given.items()
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")

    log_vd = log_unit_ball_volume(d, metric)
    if name == "r":
        r_val = float(value)
        p_val = 0.0 if r_val == 0 else (ball_volume(d, r_val, metric) if r_val <= 0.5
                                         else math.exp(log_vd + d * math.log(r_val)))
    else:
        if name == "alpha":
            if n == 0:
                raise ValueError("alpha is undefined for n = 0")
            p_val = math.ldexp(float(value), d) / n
        else:
            p_val = float(value)
        r_val = 0.0 if p_val == 0 else math.exp((math.log(p_val) - log_vd) / d)
    # absorb round-off at the r = 1/2, p = 1 boundary
    if 0.5 < r_val <= 0.5 * (1 + 1e-12):
        r_val = 0.5
    if 1.0 < p_val <= 1.0 + 1e-12 and r_val == 0.5:
        p_val = 1.0
    alpha_val = p_val * n / 2.0 ** d
    exact = r_val <= 0.5
    if not exact and not allow_large_radius:
        raise ValueError(f"derived radius r = {r_val:.6g} exceeds 1/2 on the unit torus")
    if exact and not 0.0 <= p_val <= 1.0:
        raise ValueError(f"p = {p_val} outside [0, 1]")
    return ModelParams(n=n, d=d, r=r_val, p=p_val, alpha=alpha_val, metric=metric, torus_exact=exact)
