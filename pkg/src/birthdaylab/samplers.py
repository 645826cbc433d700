"""Hard-sphere conditional sampling and Monte Carlo estimates of Pr[E_n] and E[V_k | E_k].

Every random stream is keyed by ``(seed, purpose, k, block)`` and replicas are
processed in fixed-size blocks reduced in block order, so results do not depend
on the number of worker threads.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .geometry import Metric, ModelParams, displacement, norm
from .rgg import TorusConfiguration, coverage_estimates, rng_for, separated_mask

Z_CONFIDENCE = 4.0
BLOCK = 2048
CHAINS = 128
CHAIN_BLOCK = 32
BALL_PROBES = 32
MIN_ACCEPTANCE = 1e-3
PILOT = 4096

# stream purposes
_NAIVE, _REJECT, _MCMC, _PILOT, _SINGLE, _RUN = 1, 2, 3, 4, 5, 6


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int
    seed: int
    method: str  # "naive-mc" | "telescoping" | "exact"
    backend: str = ""

    def agrees_with(self, target: float, z: float = Z_CONFIDENCE) -> bool:
        return abs(self.mean - target) <= z * self.stderr

    def to_record(self, model: str, params: ModelParams) -> dict:
        return {"model": model, "params": params.to_dict(), "method": self.method,
                "backend": self.backend, "mean": self.mean, "stderr": self.stderr,
                "samples": self.samples, "seed": self.seed}


def exact(value: float, seed: int = 0) -> Estimate:
    return Estimate(float(value), 0.0, 1, seed, "exact")


@dataclass
class ChainState:
    config: TorusConfiguration
    steps_taken: int = 0
    accepts: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accepts / self.steps_taken if self.steps_taken else float("nan")


def _threads(threads: int | None) -> int:
    return max(1, threads or os.cpu_count() or 1)


def _map_blocks(fn: Callable[[int], object], nblocks: int, threads: int | None) -> list:
    t = _threads(threads)
    if t == 1 or nblocks <= 1:
        return [fn(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=min(t, nblocks)) as pool:
        return list(pool.map(fn, range(nblocks)))


def _binomial_stderr(hits: int, total: int) -> float:
    q = hits / total
    if hits in (0, total):
        # keep a nonzero error bar for degenerate counts
        q = (hits + 0.5) / (total + 1.0)
    return math.sqrt(q * (1.0 - q) / total)


def d1_prob_empty(n: int, p: float) -> float:
    """Closed form of Pr[E_n] on the circle: (1 - n p / 2)^(n - 1), zero beyond close packing."""
    if n <= 1:
        return 1.0
    return max(0.0, 1.0 - n * p / 2.0) ** (n - 1)


def birthday_rhs(n: int, p: float) -> float:
    return (1.0 - p) ** math.comb(n, 2)


# -- rejection -----------------------------------------------------------------

def _rejection_batch(k: int, d: int, r: float, metric: Metric, count: int, rng: np.random.Generator,
                     max_attempts: int, acceptance_hint: float = 0.5) -> tuple[np.ndarray, int]:
    out = np.empty((count, k, d))
    got = attempts = 0
    acc = max(acceptance_hint, MIN_ACCEPTANCE)
    while got < count:
        if attempts >= max_attempts:
            raise SamplingError(
                f"rejection sampling of E_{k} exhausted {max_attempts} attempts "
                f"({got} accepted); use the MCMC backend at this density")
        n_try = int(min(max(64, 1.2 * (count - got) / acc), 1 << 15, max_attempts - attempts))
        cand = rng.random((n_try, k, d))
        valid = np.flatnonzero(separated_mask(cand, r, metric))
        need = count - got
        if valid.size >= need:
            out[got:] = cand[valid[:need]]
            attempts += int(valid[need - 1]) + 1
            got = count
        else:
            out[got:got + valid.size] = cand[valid]
            got += valid.size
            attempts += n_try
        acc = max(got / attempts, MIN_ACCEPTANCE)
    return out, attempts


def rejection_sample_Ek(k: int, params: ModelParams, metric: Metric | str | None = None, seed: int = 0,
                        max_attempts: int = 1_000_000) -> tuple[TorusConfiguration, int]:
    """One exact draw from the uniform law on E_k, plus the number of attempts it took."""
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    metric = Metric.parse(metric or params.metric)
    if k <= 1:
        pts = rng_for(seed, _SINGLE, k).random((k, params.d))
        return TorusConfiguration(pts, params, metric), 1
    pts, attempts = _rejection_batch(k, params.d, params.r, metric, 1, rng_for(seed, _SINGLE, k), max_attempts)
    return TorusConfiguration(pts[0], params, metric), attempts


def acceptance_rate(k: int, params: ModelParams, metric: Metric, seed: int, trials: int = PILOT) -> float:
    if k <= 1:
        return 1.0
    cand = rng_for(seed, _PILOT, k).random((trials, k, params.d))
    return float(np.mean(separated_mask(cand, params.r, metric)))


# -- single-particle global-move chain ---------------------------------------

def _chain_steps(points: np.ndarray, r: float, metric: Metric, steps: int, rng: np.random.Generator) -> np.ndarray:
    """Advance C independent chains in place; returns per-chain accept counts."""
    C, k, d = points.shape
    accepts = np.zeros(C, dtype=np.int64)
    if k == 0:
        return accepts
    rows = np.arange(C)
    for _ in range(steps):
        who = rng.integers(k, size=C)
        prop = rng.random((C, d))
        dist = norm(displacement(points, prop[:, None, :]), metric)
        dist[rows, who] = np.inf
        ok = np.all(dist > r, axis=1)
        points[rows[ok], who[ok]] = prop[ok]
        accepts += ok
    return accepts


def _lattice_start(k: int, d: int, r: float, rng: np.random.Generator) -> np.ndarray | None:
    """k points of the m^d grid (m = ceil(k^(1/d))) under a random shift; valid iff 1/m > r."""
    m = max(1, math.ceil(round(k ** (1.0 / d), 9)))
    while m ** d < k:
        m += 1
    if k > 1 and 1.0 / m <= r:
        return None
    idx = np.array(list(itertools.islice(itertools.product(range(m), repeat=d), k)), dtype=float)
    return np.mod(idx / m + rng.random(d), 1.0)


def _sequential_fill(C: int, k: int, d: int, r: float, metric: Metric, rng: np.random.Generator,
                     max_tries: int = 10_000) -> np.ndarray:
    """Valid starting states: place particles one at a time, retrying collisions.

    Chains that jam fall back to a shifted lattice start.
    """
    pts = np.empty((C, k, d))
    live = np.ones(C, dtype=bool)
    for j in range(k):
        todo = np.flatnonzero(live)
        for _ in range(max_tries):
            if todo.size == 0:
                break
            prop = rng.random((todo.size, d))
            if j == 0:
                ok = np.ones(todo.size, dtype=bool)
            else:
                ok = np.all(norm(displacement(pts[todo, :j, :], prop[:, None, :]), metric) > r, axis=1)
            pts[todo[ok], j] = prop[ok]
            todo = todo[~ok]
        live[todo] = False
    for c in np.flatnonzero(~live):
        start = _lattice_start(k, d, r, rng)
        if start is None:
            raise SamplingError(f"could not build a valid start for k={k}: density too high for the chain")
        pts[c] = start
    return pts


def mcmc_run(state: ChainState, steps: int, seed: int = 0) -> ChainState:
    """Apply ``steps`` single-particle global moves; the hard constraint is never violated."""
    cfg = state.config
    pts = cfg.points.copy()[None, :, :]
    acc = _chain_steps(pts, cfg.params.r, cfg.metric, steps, rng_for(seed, _RUN, cfg.k, state.steps_taken))
    new_cfg = TorusConfiguration(pts[0], cfg.params, cfg.metric)
    return ChainState(new_cfg, state.steps_taken + steps, state.accepts + int(acc[0]))


def burn_in_steps(k: int) -> int:
    return int(math.ceil(100 * k * math.log(k + 1)))


# -- conditional coverage --------------------------------------------------------

def _conditional_rejection(k, params, metric, samples, seed, threads, max_attempts, hint):
    nblocks = -(-samples // BLOCK)

    def work(b):
        size = min(BLOCK, samples - b * BLOCK)
        rng = rng_for(seed, _REJECT, k, b)
        batch, attempts = _rejection_batch(k, params.d, params.r, metric, size, rng, max_attempts, hint)
        return coverage_estimates(batch, params.r, metric, BALL_PROBES, rng), attempts

    parts = _map_blocks(work, nblocks, threads)
    values = np.concatenate([v for v, _ in parts])
    se = float(np.std(values, ddof=1) / math.sqrt(values.size)) if values.size > 1 else 0.0
    return float(values.mean()), se, values.size


def _conditional_mcmc(k, params, metric, samples, seed, threads):
    chains = min(CHAINS, max(2, samples))
    per_chain = -(-samples // chains)
    burn, thin = burn_in_steps(k), k
    nblocks = -(-chains // CHAIN_BLOCK)

    def work(b):
        c = min(CHAIN_BLOCK, chains - b * CHAIN_BLOCK)
        rng = rng_for(seed, _MCMC, k, b)
        pts = _sequential_fill(c, k, params.d, params.r, metric, rng)
        _chain_steps(pts, params.r, metric, burn, rng)
        total = np.zeros(c)
        for _ in range(per_chain):
            _chain_steps(pts, params.r, metric, thin, rng)
            total += coverage_estimates(pts, params.r, metric, BALL_PROBES, rng)
        return total / per_chain

    means = np.concatenate(_map_blocks(work, nblocks, threads))
    return float(means.mean()), float(np.std(means, ddof=1) / math.sqrt(means.size)), chains * per_chain


def conditional_coverage(k: int, params: ModelParams, metric: Metric | str | None = None, samples: int = 10_000,
                         seed: int = 0, backend: str = "auto", threads: int | None = 1,
                         max_attempts: int = 50_000_000) -> Estimate:
    """Estimate E[V_k | E_k] from conditional samples.

    ``backend`` is ``rejection``, ``mcmc`` or ``auto`` (rejection unless the
    pilot acceptance rate falls below 1e-3).
    """
    metric = Metric.parse(metric or params.metric)
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    if k == 0:
        return exact(0.0, seed)
    if k == 1:
        return exact(params.p, seed)
    hint = 0.5
    if backend == "auto":
        hint = acceptance_rate(k, params, metric, seed)
        backend = "rejection" if hint >= MIN_ACCEPTANCE else "mcmc"
    if backend == "rejection":
        mean, se, n = _conditional_rejection(k, params, metric, samples, seed, threads, max_attempts, hint)
    elif backend == "mcmc":
        mean, se, n = _conditional_mcmc(k, params, metric, samples, seed, threads)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return Estimate(mean, se, n, seed, "naive-mc", backend)


# -- Pr[E_n] ------------------------------------------------------------------------

def estimate_prob_empty(params: ModelParams, metric: Metric | str | None = None, replicas: int = 10_000,
                        seed: int = 0, method: str = "naive-mc", backend: str = "auto",
                        threads: int | None = 1) -> Estimate:
    """Estimate Pr[E_n] = Z_d(n, r), the probability the random geometric graph is empty.

    ``naive-mc`` counts separated i.i.d. configurations. ``telescoping`` multiplies
    estimates of E[1 - V_k | E_k] over k = 1..n-1, combining relative errors in
    log space. ``exact`` is available for d = 1 and n <= 2.
    """
    metric = Metric.parse(metric or params.metric)
    n = params.n
    if method == "exact":
        if n <= 2:
            return exact(1.0 - params.p if n == 2 else 1.0, seed)
        if params.d == 1:
            return exact(d1_prob_empty(n, params.p), seed)
        raise ValueError("exact Pr[E_n] is only available for d = 1 or n <= 2")
    if replicas < 100:
        raise ValueError(f"replicas must be >= 100, got {replicas}")
    if n <= 1:
        return Estimate(1.0, 0.0, replicas, seed, method, backend)

    if method == "naive-mc":
        nblocks = -(-replicas // BLOCK)

        def work(b):
            size = min(BLOCK, replicas - b * BLOCK)
            batch = rng_for(seed, _NAIVE, n, b).random((size, n, params.d))
            return int(separated_mask(batch, params.r, metric).sum())

        hits = sum(_map_blocks(work, nblocks, threads))
        return Estimate(hits / replicas, _binomial_stderr(hits, replicas), replicas, seed, "naive-mc", "iid")

    if method == "telescoping":
        if params.p >= 1:
            raise SamplingError("telescoping factor 1 - p is not positive")
        # the k = 1 factor is exactly 1 - p
        log_mean, rel_var, used = math.log1p(-params.p), 0.0, set()
        for k in range(2, n):
            cov = conditional_coverage(k, params, metric, replicas, seed, backend, threads)
            used.add(cov.backend)
            factor = 1.0 - cov.mean
            if factor <= 0:
                raise SamplingError(f"telescoping factor for k={k} estimated as {factor:.3g} <= 0; "
                                    "increase the sample size or lower the density")
            log_mean += math.log(factor)
            rel_var += (cov.stderr / factor) ** 2
        mean = math.exp(log_mean)
        return Estimate(mean, mean * math.sqrt(rel_var), replicas, seed, "telescoping",
                        "+".join(sorted(used)) or "exact")

    raise ValueError(f"unknown method {method!r}")


# -- repulsion gap ----------------------------------------------------------------

def sphere_estimate_rhs(k: int, p: float, d: int) -> float | None:
    """Lower bound kp - C(k,2) p^2 (1 - 4^-d) / (1 - kp)^2 on E[V_k | E_k]; None when kp >= 1."""
    if k * p >= 1:
        return None
    return k * p - math.comb(k, 2) * p * p * (1.0 - 4.0 ** -d) / (1.0 - k * p) ** 2


@dataclass(frozen=True)
class RepulsionGap:
    k: int
    conditional: Estimate
    unconditional: float
    gap: Estimate
    sphere_est_rhs: float | None
    rhs_applicable: bool = field(default=True)

    def to_record(self) -> dict:
        return {"k": self.k, "conditional": self.conditional.mean, "conditional_stderr": self.conditional.stderr,
                "unconditional": self.unconditional, "gap": self.gap.mean, "gap_stderr": self.gap.stderr,
                "sphere_est_rhs": self.sphere_est_rhs, "rhs_applicable": self.rhs_applicable,
                "samples": self.conditional.samples, "backend": self.conditional.backend}


def repulsion_gap(k: int, params: ModelParams, metric: Metric | str | None = None, replicas: int = 10_000,
                  seed: int = 0, backend: str = "auto", threads: int | None = 1) -> RepulsionGap:
    """E[V_k | E_k] - E[V_k], where E[V_k] = 1 - (1 - p)^k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    cond = conditional_coverage(k, params, metric, replicas, seed, backend, threads)
    uncond = params.p if k == 1 else -math.expm1(k * math.log1p(-params.p))
    gap = replace(cond, mean=cond.mean - uncond)
    rhs = sphere_estimate_rhs(k, params.p, params.d)
    return RepulsionGap(k, cond, uncond, gap, rhs, rhs is not None)
