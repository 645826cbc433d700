"""Uniform torus configurations, the empty-graph event, and covered volume."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Metric, ModelParams, convert_params, displacement, norm, reduce_to_torus

BRUTE_FORCE_MAX = 64
DEFAULT_PROBES = 100_000


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream labelled by ``(seed, *keys)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))))


@dataclass
class TorusConfiguration:
    points: np.ndarray
    params: ModelParams
    metric: Metric = field(default=Metric.EUCLIDEAN)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1 and pts.size == 0:
            pts = pts.reshape(0, self.params.d)
        if pts.ndim != 2 or pts.shape[1] != self.params.d:
            raise ValueError(f"points must have shape (k, {self.params.d}), got {pts.shape}")
        self.points = reduce_to_torus(pts)
        self.metric = Metric.parse(self.metric)

    @property
    def k(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.params.d

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"x_{i + 1}" for i in range(self.d)])
        for row in self.points:
            writer.writerow([format(float(v), ".17g") for v in row])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_csv(cls, text: str, params: ModelParams, metric: Metric | str = Metric.EUCLIDEAN):
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if len(header) != params.d:
            raise ValueError(f"CSV has {len(header)} columns, expected {params.d}")
        pts = np.array([[float(v) for v in row] for row in body if row], dtype=float).reshape(-1, params.d)
        return cls(pts, params, metric)


@dataclass(frozen=True)
class CoverageResult:
    value: float
    method: str  # "exact-1d" | "monte-carlo" | "grid"
    stderr: float = 0.0


def sample_uniform(n: int, d: int, metric: Metric | str = Metric.EUCLIDEAN, seed: int = 0, *,
                   r: float = 0.0, params: ModelParams | None = None) -> TorusConfiguration:
    if n < 0 or d < 1:
        raise ValueError(f"need n >= 0 and d >= 1, got n={n}, d={d}")
    metric = Metric.parse(metric)
    if params is None:
        params = convert_params(n, d, metric, r=r)
    pts = rng_for(seed).random((n, d))
    return TorusConfiguration(pts, params, metric)


# -- pairwise separation ---------------------------------------------------

def _brute_force_separated(points: np.ndarray, r: float, metric: Metric) -> bool:
    k = points.shape[0]
    if k < 2:
        return True
    i, j = np.triu_indices(k, 1)
    dist = norm(displacement(points[i], points[j]), metric)
    return bool(np.all(dist > r))


def _grid_separated(points: np.ndarray, r: float, metric: Metric) -> bool:
    k, d = points.shape
    cells_per_side = int(math.floor(1.0 / r)) if r > 0 else k
    # wrapped neighbour offsets collide when there are fewer than 3 cells per side,
    # and the 3**d stencil is pointless once it outgrows the point count
    if cells_per_side < 3 or 3 ** d > k:
        return _brute_force_separated(points, r, metric)
    cell_idx = np.minimum((points * cells_per_side).astype(np.int64), cells_per_side - 1)
    buckets: dict[tuple[int, ...], list[int]] = {}
    for idx, cell in enumerate(map(tuple, cell_idx)):
        buckets.setdefault(cell, []).append(idx)
    offsets = list(itertools.product((-1, 0, 1), repeat=d))
    for cell, members in buckets.items():
        neighbours = []
        for off in offsets:
            other = tuple((c + o) % cells_per_side for c, o in zip(cell, off))
            if other in buckets:
                neighbours.extend(buckets[other])
        mine = np.array(members)
        theirs = np.array(neighbours)
        dist = norm(displacement(points[mine][:, None, :], points[theirs][None, :, :]), metric)
        same = mine[:, None] == theirs[None, :]
        if np.any((dist <= r) & ~same):
            return False
    return True


def is_empty_graph(config: TorusConfiguration) -> bool:
    """True iff every pair of points is at distance strictly greater than r."""
    r = config.params.r
    if config.k > BRUTE_FORCE_MAX:
        return _grid_separated(config.points, r, config.metric)
    return _brute_force_separated(config.points, r, config.metric)


def separated_mask(batch: np.ndarray, r: float, metric: Metric) -> np.ndarray:
    """Vectorised E_k test over a batch of configurations of shape (R, k, d)."""
    R, k, _ = batch.shape
    if k < 2:
        return np.ones(R, dtype=bool)
    i, j = np.triu_indices(k, 1)
    dist = norm(displacement(batch[:, i, :], batch[:, j, :]), metric)
    return np.all(dist > r, axis=1)


# -- covered volume ----------------------------------------------------------

def arc_union_length(centers: np.ndarray, r: float) -> float:
    """Exact length of the union of closed arcs [c - r, c + r] on the unit circle."""
    c = np.sort(np.asarray(centers, dtype=float).ravel())
    if c.size == 0:
        return 0.0
    gaps = np.diff(np.append(c, c[0] + 1.0))
    return float(min(1.0, np.sum(np.minimum(gaps, 2.0 * r))))


def arc_union_lengths(batch: np.ndarray, r: float) -> np.ndarray:
    """Row-wise :func:`arc_union_length` for centres of shape (R, k) or (R, k, 1)."""
    c = np.sort(batch.reshape(batch.shape[0], -1), axis=1)
    if c.shape[1] == 0:
        return np.zeros(c.shape[0])
    wrapped = np.concatenate([c, c[:, :1] + 1.0], axis=1)
    gaps = np.diff(wrapped, axis=1)
    return np.minimum(1.0, np.sum(np.minimum(gaps, 2.0 * r), axis=1))


def probe_hits(centers: np.ndarray, probes: np.ndarray, r: float, metric: Metric, chunk: int = 8192) -> np.ndarray:
    """Boolean array: probe covered by some closed ball of radius r."""
    hits = np.zeros(probes.shape[0], dtype=bool)
    if centers.shape[0] == 0:
        return hits
    for start in range(0, probes.shape[0], chunk):
        block = probes[start:start + chunk]
        dist = norm(displacement(block[:, None, :], centers[None, :, :]), metric)
        hits[start:start + chunk] = np.any(dist <= r, axis=1)
    return hits


def covered_fraction(config: TorusConfiguration, test_points: int = DEFAULT_PROBES, seed: int = 0) -> CoverageResult:
    """Fraction of the torus covered by closed radius-r balls around the centres.

    Exact in one dimension; otherwise a uniform-probe estimate whose probe set
    depends only on ``seed`` (so it is shared across nested configurations).
    """
    r = config.params.r
    if r > 0.5:
        raise ValueError(f"radius {r} > 1/2")
    if config.k == 0:
        return CoverageResult(0.0, "exact-1d" if config.d == 1 else "monte-carlo", 0.0)
    if config.d == 1:
        return CoverageResult(arc_union_length(config.points[:, 0], r), "exact-1d", 0.0)
    if test_points <= 0:
        raise ValueError("test_points must be positive for d > 1")
    probes = rng_for(seed, 0xC0FE).random((test_points, config.d))
    frac = float(np.mean(probe_hits(config.points, probes, r, config.metric)))
    return CoverageResult(frac, "monte-carlo", math.sqrt(frac * (1.0 - frac) / test_points))


def sample_in_balls(centers: np.ndarray, r: float, metric: Metric, m: int, rng: np.random.Generator) -> np.ndarray:
    """``m`` uniform points in each radius-r ball; shape (..., m, d) for centres (..., d)."""
    d = centers.shape[-1]
    shape = centers.shape[:-1] + (m, d)
    if metric is Metric.CHEBYSHEV:
        offset = rng.uniform(-r, r, size=shape)
    else:
        g = rng.standard_normal(shape)
        g /= np.linalg.norm(g, axis=-1, keepdims=True)
        offset = g * (r * rng.random(shape[:-1] + (1,)) ** (1.0 / d))
    return np.mod(centers[..., None, :] + offset, 1.0)


def coverage_estimates(batch: np.ndarray, r: float, metric: Metric, ball_probes: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Unbiased per-configuration estimates of the covered fraction V_k.

    Exact for d = 1. For d > 1 uses V_k = sum_i vol(B_i minus earlier balls),
    probing inside each ball, so only the overlap part carries variance.
    """
    R, k, d = batch.shape
    if k == 0:
        return np.zeros(R)
    if d == 1:
        return arc_union_lengths(batch, r)
    vol = convert_params(k, d, metric, r=r).p
    pts = sample_in_balls(batch, r, metric, ball_probes, rng)  # (R, k, m, d)
    fresh = np.ones(pts.shape[:3], dtype=bool)
    for j in range(k - 1):
        dist = norm(displacement(pts[:, j + 1:, :, :], batch[:, j, None, None, :]), metric)
        fresh[:, j + 1:, :] &= dist > r
    return vol * fresh.mean(axis=2).sum(axis=1)
