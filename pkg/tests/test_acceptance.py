"""Acceptance suite: each test is one criterion, checked at its stated tolerance.

Every test prints a single PASS/FAIL line; the terminal summary repeats them.
"""

import itertools
import json
import math
import time
from fractions import Fraction

import numpy as np

from acceptance_support import Criterion
from birthdaylab import bounds, graphs, samplers
from birthdaylab.cli import EXIT_OK, EXIT_VIOLATION, main
from birthdaylab.geometry import convert_params

CATALOG = ("cycle:4", "cycle:6", "cycle:20", "hypercube:3", "hypercube:4", "kdd:3:2", "torus:2:4")


def _cli_json(tmp_path, name, *argv):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, json.loads(out.read_text())


def test_criterion_01_circle_exactness(tmp_path):
    c = Criterion(1, "dimension-1 Pr[E_n] matches (1 - np/2)^(n-1) within 4 stderr, each run < 10 s")
    for n, p in [(3, 0.2), (4, 0.1), (10, 0.05)]:
        start = time.perf_counter()
        code, rep = _cli_json(tmp_path, f"c1_{n}.json", "simulate", "--d", "1", "--n", str(n), "--p", str(p),
                              "--replicas", "100000", "--seed", "1")
        elapsed = time.perf_counter() - start
        row = rep["results"][0]
        target = (1 - n * p / 2) ** (n - 1)
        c.check(code == EXIT_OK, f"n={n}: exit {code}")
        c.check(abs(row["mean"] - target) <= 4 * row["stderr"],
                f"n={n}: {row['mean']:.5f} +- {row['stderr']:.5f} vs {target:.5f}")
        c.check(elapsed < 10, f"n={n}: {elapsed:.2f} s")
    c.finish()


def test_criterion_02_pair_probability_all_models():
    c = Criterion(2, "Pr[E_2] = 1 - p exactly on graphs and within 4 stderr by simulation")
    for label in CATALOG:
        g = graphs.build_graph(label)
        for mode in ("is", "matchings"):
            chk = graphs.birthday_check(g, 2, mode)
            p = graphs.collision_probability(g, mode)
            c.check(chk.lhs == chk.rhs == 1 - p, f"{label} {mode}: {chk.lhs} vs {1 - p}")
    for metric, d, r in [("l2", 1, 0.2), ("l2", 2, 0.2), ("l2", 3, 0.3), ("linf", 2, 0.2), ("linf", 3, 0.25)]:
        prm = convert_params(2, d, metric, r=r)
        est = samplers.estimate_prob_empty(prm, replicas=100_000, seed=d, method="naive-mc")
        c.check(est.agrees_with(1 - prm.p), f"{metric} d={d}: {est.mean:.5f} +- {est.stderr:.5f} vs {1 - prm.p:.5f}")
    c.finish()


def _power_set_is(g):
    counts = [0] * (g.n + 1)
    for sub in itertools.chain.from_iterable(itertools.combinations(range(g.n), k) for k in range(g.n + 1)):
        if all(b not in g.adjacency[a] for a, b in itertools.combinations(sub, 2)):
            counts[len(sub)] += 1
    return counts


def _edge_subset_matchings(g, k):
    return sum(1 for s in itertools.combinations(g.edges, k) if len({v for e in s for v in e}) == 2 * k)


def test_criterion_03_hypercube_table():
    c = Criterion(3, "Q_3 counts IS = [1, 8, 16, 8, 2], M(1, 2, 4) = (12, 42, 9), agree with brute force, < 1 s")
    start = time.perf_counter()
    q3 = graphs.hypercube(3)
    is_table = graphs.count_by_size(q3, "is")
    m_table = graphs.count_by_size(q3, "matchings")
    elapsed = time.perf_counter() - start
    c.check(list(is_table.counts) == [1, 8, 16, 8, 2], f"IS = {list(is_table.counts)}")
    c.check((m_table[1], m_table[2], m_table[4]) == (12, 42, 9), f"M = {list(m_table.counts)}")
    oracle = _power_set_is(q3)
    c.check(oracle[:5] == list(is_table.counts) and not any(oracle[5:]), f"power-set oracle {oracle}")
    c.check(all(_edge_subset_matchings(q3, k) == m_table[k] for k in range(6)), "edge-subset oracle")
    c.check(elapsed < 1, f"{elapsed:.3f} s")
    c.finish()


def test_criterion_04_exact_ledger():
    c = Criterion(4, "catalog: matching birthday all k, repulsion in proven ranges, bipest where applicable, < 60 s")
    start = time.perf_counter()
    for label in CATALOG:
        g = graphs.build_graph(label)
        mt = graphs.count_by_size(g, "matchings")
        for k in range(mt.max_k + 2):
            chk = graphs.birthday_check(g, k, "matchings", mt)
            c.check(chk.holds, f"{label} matching birthday k={k}")
        for k in range(1, g.n + 1):
            if Fraction(k, g.n) <= Fraction(1, (g.d + 1) ** 2):
                c.check(graphs.repulsion_check(g, k, "is").holds, f"{label} IS repulsion k={k}")
            if Fraction(k) <= Fraction(3, 28) * Fraction(g.n, 2) and mt[k] > 0:
                c.check(graphs.repulsion_check(g, k, "matchings").holds, f"{label} matching repulsion k={k}")
        it = graphs.count_by_size(g, "is")
        for k in range(1, it.max_k + 1):
            if graphs.bipest_applicable(g, k):
                c.check(graphs.bipest_check(g, k).holds, f"{label} bipest k={k}")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 60, f"{elapsed:.2f} s")
    c.finish()


def test_criterion_05_continuum_repulsion_low_density():
    c = Criterion(5, "repulsion gap >= -4 stderr for d in {1, 2}, n <= 6, alpha = 2^(-2-3d), < 2 min")
    start = time.perf_counter()
    for d in (1, 2):
        for n in range(2, 7):
            prm = convert_params(n, d, alpha=2.0 ** (-2 - 3 * d))
            for k in range(1, n + 1):
                gap = samplers.repulsion_gap(k, prm, replicas=10_000, seed=100 * d + 10 * n + k)
                c.check(gap.gap.mean >= -4 * gap.gap.stderr,
                        f"d={d} n={n} k={k}: gap {gap.gap.mean:.3g} +- {gap.gap.stderr:.3g}")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 120, f"{elapsed:.1f} s")
    c.finish()


def test_criterion_06_d24_certificate():
    c = Criterion(6, "d=24: F(0.79) > 0 and = 11.78 +- 0.01, F > 0 on 200 grid points, interval reported, < 1 s")
    start = time.perf_counter()
    cert = bounds.sphere24_certificate(0.79, bounds.RHO_24, 200)
    elapsed = time.perf_counter() - start
    f = cert["leech_gap"]
    c.check(f > 0, f"F(0.79) = {f}")
    c.check(abs(f - 11.78) <= 0.01, f"F(0.79) = {cert['leech_gap_digits']} is not within 0.01 of 11.78")
    ts = np.linspace(0.79, 1.0, 202)[1:-1]
    c.check(all(bounds.leech_gap(t) > 0 for t in ts), "grid positivity")
    lo, hi = cert["failure_interval"]
    c.check(abs(lo - 6.73e-6) <= 0.01e-6 and hi == 1.929e-3, f"interval ({lo:.5g}, {hi:.5g})")
    c.check(math.isclose(lo, 0.79 ** 24 * bounds.RHO_24, rel_tol=1e-12), "interval lower end is 0.79^24 rho")
    c.check(elapsed < 1, f"{elapsed:.3f} s")
    c.finish()


def test_criterion_07_hard_square_certificate():
    c = Criterion(7, "squares: d=5 absent, d=6 contains [0.40, 0.95], lo 2^(d-1)/(d log 2) in [0.85, 1.15], < 5 s")
    start = time.perf_counter()
    c.check(bounds.square_failure_interval(5) is None, "d=5 interval present")
    iv6 = bounds.square_failure_interval(6)
    c.check(iv6 is not None and iv6.contains(0.40, 0.95), f"d=6 interval {iv6}")
    for d in (20, 25, 30):
        iv = bounds.square_failure_interval(d)
        ratio = iv.lo * 2 ** (d - 1) / (d * math.log(2))
        c.check(0.85 <= ratio <= 1.15, f"d={d}: ratio {ratio:.4f} outside [0.85, 1.15]")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 5, f"{elapsed:.2f} s")
    c.finish()


def test_criterion_08_hardcore_crossing():
    c = Criterion(8, "hard-core: d=5 errors, d=6 parity >= birthday on [alpha_l, 1/2], ratio in [0.8, 1.2], < 5 s")
    start = time.perf_counter()
    try:
        bounds.hardcore_crossing(5)
        c.check(False, "d=5 returned a crossing")
    except bounds.NoCrossingError:
        c.check(True, "d=5 errors")
    lo = bounds.hardcore_crossing(6)
    c.check(0 < lo < 0.5, f"alpha_6 = {lo}")
    grid = np.linspace(lo, 0.5, 100)
    c.check(all(bounds.parity_lower(a) >= bounds.hardcore_birthday_upper(a, 6) for a in grid),
            "parity below birthday somewhere on [alpha_6, 1/2]")
    for d in (100, 200):
        ratio = bounds.hardcore_crossing(d) * d / (2 * math.log(2))
        c.check(0.8 <= ratio <= 1.2, f"d={d}: ratio {ratio:.4f}")
    elapsed = time.perf_counter() - start
    c.check(elapsed < 5, f"{elapsed:.2f} s")
    c.finish()


def test_criterion_09_matching_crossing():
    c = Criterion(9, "matching crossing alpha*(d) / ((log d)/d)^(1/3) stays within a factor 3, < 5 s")
    start = time.perf_counter()
    ratios = [bounds.matching_crossing(d) / (math.log(d) / d) ** (1 / 3) for d in (10, 100, 1000)]
    elapsed = time.perf_counter() - start
    c.check(max(ratios) / min(ratios) <= 3, f"ratios {ratios}")
    c.check(elapsed < 5, f"{elapsed:.2f} s")
    c.finish()


def test_criterion_10_estimator_agreement():
    c = Criterion(10, "naive vs telescoping and MCMC vs rejection agree within 4 combined stderr on 10 cases")
    rng = np.random.default_rng(20240610)
    for case in range(10):
        d = int(rng.integers(1, 3))
        n = int(rng.integers(3, 7))
        metric = str(rng.choice(["l2", "linf"]))
        p = float(rng.uniform(0.01, 0.06))
        prm = convert_params(n, d, metric, p=p)
        tag = f"case {case} (d={d}, n={n}, {metric}, p={p:.4f})"
        naive = samplers.estimate_prob_empty(prm, replicas=20_000, seed=case, method="naive-mc")
        tele = samplers.estimate_prob_empty(prm, replicas=10_000, seed=case, method="telescoping",
                                            backend="rejection")
        chain = samplers.estimate_prob_empty(prm, replicas=10_000, seed=case, method="telescoping",
                                             backend="mcmc")
        c.check(abs(naive.mean - tele.mean) <= 4 * math.hypot(naive.stderr, tele.stderr),
                f"{tag}: naive {naive.mean:.5f} vs telescoping {tele.mean:.5f}")
        c.check(abs(chain.mean - tele.mean) <= 4 * math.hypot(chain.stderr, tele.stderr),
                f"{tag}: mcmc {chain.mean:.5f} vs rejection {tele.mean:.5f}")
    c.finish()


MANIFESTS = [
    {"command": "simulate", "n": 5, "d": 2, "p": 0.04, "replicas": 3000, "method": "both", "seed": 17},
    {"command": "simulate", "n": 4, "d": 2, "metric": "linf", "alpha": 0.01, "replicas": 1000,
     "method": "telescoping", "backend": "mcmc", "seed": 3},
    {"command": "simulate", "quantity": "repulsion", "n": 4, "d": 1, "p": 0.1, "replicas": 3000, "seed": 9},
    {"command": "check", "graph": "torus:2:4", "mode": "is", "all_k": True},
    {"command": "certify", "model": "sphere24", "t": 0.79},
    {"command": "bounds", "model": "square", "d": 6, "format": "csv"},
]


def test_criterion_11_determinism(tmp_path):
    c = Criterion(11, "fixed-seed manifests give byte-identical output at 1 and 8 threads")
    for i, manifest in enumerate(MANIFESTS):
        path = tmp_path / f"m{i}.json"
        path.write_text(json.dumps(manifest))
        outputs = []
        for run, threads in enumerate((1, 8, 1, 8)):
            out = tmp_path / f"m{i}_{run}.out"
            code = main(["--manifest", str(path), "--threads", str(threads), "--out", str(out)])
            c.check(code in (EXIT_OK, EXIT_VIOLATION), f"manifest {i}: exit {code}")
            outputs.append(out.read_bytes())
        c.check(len(set(outputs)) == 1, f"manifest {i} ({manifest['command']}): outputs differ")
    c.finish()


if __name__ == "__main__":
    import pytest
    raise SystemExit(pytest.main([__file__, "-q"]))
