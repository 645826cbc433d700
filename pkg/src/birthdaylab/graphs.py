"""Exact counting of independent sets and matchings by size on small regular graphs.

Vertex subsets are Python int bitmasks. Counts are independence / matching
polynomials computed by memoised branching on the lowest remaining vertex, so
sub-counts for G - N[v] and G - {u, v} (needed for exact coverage) come from
the same cache.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

MODES = ("independent-sets", "matchings")
IS_BUDGET = 40
MATCHING_BUDGET = 60


class GraphError(ValueError):
    pass


class EnumerationBudgetError(ValueError):
    pass


def _mode(mode: str) -> str:
    key = mode.lower()
    if key in ("is", "independent-sets", "independent_sets", "hardcore"):
        return "independent-sets"
    if key in ("matching", "matchings", "m"):
        return "matchings"
    raise ValueError(f"unknown mode {mode!r}; use 'is' or 'matchings'")


@dataclass(frozen=True, eq=False)
class RegularGraph:
    n: int
    d: int
    adjacency: tuple[tuple[int, ...], ...]
    label: str = ""
    closed_neighborhoods: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        closed = tuple((1 << v) | sum(1 << u for u in nbrs) for v, nbrs in enumerate(self.adjacency))
        object.__setattr__(self, "closed_neighborhoods", closed)

    @property
    def m(self) -> int:
        return self.n * self.d // 2

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    @property
    def neighbor_masks(self) -> tuple[int, ...]:
        return tuple(c & ~(1 << v) for v, c in enumerate(self.closed_neighborhoods))

    def triangles(self) -> int:
        adj = self.neighbor_masks
        return sum(bin(adj[u] & adj[v]).count("1") for u, v in self.edges) // 3


def from_edges(n: int, edges: Iterable[tuple[int, int]], label: str = "", d: int | None = None) -> RegularGraph:
    """Validate a simple regular graph given by an undirected edge list."""
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) has an endpoint outside 0..{n - 1}")
        if u == v:
            raise GraphError(f"self-loop at vertex {u}")
        if v in nbrs[u]:
            raise GraphError(f"parallel edge ({u}, {v}) at vertex {u}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    degree = d if d is not None else (len(nbrs[0]) if n else 0)
    for v, s in enumerate(nbrs):
        if len(s) != degree:
            raise GraphError(f"vertex {v} has degree {len(s)}, expected {degree}")
    return RegularGraph(n, degree, tuple(tuple(sorted(s)) for s in nbrs), label)


def cycle(n: int) -> RegularGraph:
    if n < 3:
        raise GraphError(f"cycle needs n >= 3, got {n}")
    return from_edges(n, ((i, (i + 1) % n) for i in range(n)), f"cycle:{n}")


def hypercube(d: int) -> RegularGraph:
    if d < 1:
        raise GraphError(f"hypercube needs d >= 1, got {d}")
    n = 1 << d
    return from_edges(n, ((v, v ^ (1 << i)) for v in range(n) for i in range(d) if v < v ^ (1 << i)),
                      f"hypercube:{d}")


def discrete_torus(d: int, side: int) -> RegularGraph:
    """The side^d discrete torus, 2d-regular."""
    if side < 4 or side % 2:
        raise GraphError(f"discrete torus needs an even side >= 4, got {side}")
    coords = list(itertools.product(range(side), repeat=d))
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for c in coords:
        for axis in range(d):
            nxt = list(c)
            nxt[axis] = (nxt[axis] + 1) % side
            edges.append((index[c], index[tuple(nxt)]))
    return from_edges(len(coords), edges, f"torus:{d}:{side}")


def disjoint_kdd(d: int, copies: int) -> RegularGraph:
    """H_{d,n}: ``copies`` disjoint copies of K_{d,d}, n = 2 d copies."""
    if d < 1 or copies < 1:
        raise GraphError(f"need d >= 1 and copies >= 1, got d={d}, copies={copies}")
    edges = [(2 * d * c + i, 2 * d * c + d + j) for c in range(copies) for i in range(d) for j in range(d)]
    return from_edges(2 * d * copies, edges, f"kdd:{d}:{copies}")


def parse_edge_list(text: str, label: str = "edge-list") -> RegularGraph:
    """Parse ``n d`` followed by one ``u v`` pair per line (0-indexed)."""
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines or len(lines[0]) != 2:
        raise GraphError("edge list must start with a line 'n d'")
    n, d = (int(x) for x in lines[0])
    edges = []
    for row in lines[1:]:
        if len(row) != 2:
            raise GraphError(f"malformed edge line: {' '.join(row)!r}")
        edges.append((int(row[0]), int(row[1])))
    g = from_edges(n, edges, label, d)
    if len(edges) != g.m:
        raise GraphError(f"edge list has {len(edges)} edges, expected n*d/2 = {g.m}")
    return g


def from_edge_list(path: str | Path) -> RegularGraph:
    return parse_edge_list(Path(path).read_text(), f"edge-list:{Path(path).name}")


def to_edge_list(g: RegularGraph) -> str:
    return "\n".join([f"{g.n} {g.d}"] + [f"{u} {v}" for u, v in g.edges]) + "\n"


_BUILDERS = {
    "cycle": (cycle, 1), "hypercube": (hypercube, 1), "torus": (discrete_torus, 2), "kdd": (disjoint_kdd, 2),
}


def build_graph(descriptor: str) -> RegularGraph:
    """Build from a descriptor such as ``hypercube:3``, ``cycle:20``, ``torus:2:4``, ``kdd:3:2``
    or ``edges:path/to/file``."""
    if descriptor.startswith(("edges:", "file:")):
        return from_edge_list(descriptor.split(":", 1)[1])
    name, *args = descriptor.split(":")
    if name not in _BUILDERS:
        raise GraphError(f"unknown graph family {name!r}; known: {', '.join(sorted(_BUILDERS))}, edges")
    fn, arity = _BUILDERS[name]
    if len(args) != arity or not all(re.fullmatch(r"\d+", a) for a in args):
        raise GraphError(f"graph descriptor {descriptor!r} needs {arity} integer argument(s)")
    return fn(*(int(a) for a in args))


CATALOG = ("cycle:4", "cycle:6", "cycle:20", "hypercube:3", "hypercube:4", "kdd:3:2", "torus:2:4")


# -- polynomial enumeration -----------------------------------------------------

def _add(a: tuple[int, ...], b: tuple[int, ...], shift: int) -> tuple[int, ...]:
    """a(x) + x**shift * b(x)."""
    size = max(len(a), len(b) + shift)
    out = list(a) + [0] * (size - len(a))
    for i, c in enumerate(b):
        out[i + shift] += c
    return tuple(out)


def independence_counter(closed: Sequence[int]):
    """Memoised ``mask -> (IS_0, IS_1, ...)`` for the induced subgraph on ``mask``."""
    closed = tuple(closed)

    @lru_cache(maxsize=None)
    def poly(mask: int) -> tuple[int, ...]:
        if mask == 0:
            return (1,)
        low = mask & -mask
        v = low.bit_length() - 1
        return _add(poly(mask ^ low), poly(mask & ~closed[v]), 1)

    return poly


def matching_counter(neighbors: Sequence[int]):
    """Memoised ``mask -> (M_0, M_1, ...)``: vertex v is left unmatched or matched to a later neighbour."""
    neighbors = tuple(neighbors)

    @lru_cache(maxsize=None)
    def poly(mask: int) -> tuple[int, ...]:
        if mask == 0:
            return (1,)
        low = mask & -mask
        v = low.bit_length() - 1
        rest = mask ^ low
        out = poly(rest)
        partners = neighbors[v] & rest
        while partners:
            bit = partners & -partners
            out = _add(out, poly(rest ^ bit), 1)
            partners ^= bit
        return out

    return poly


@lru_cache(maxsize=64)
def _counters(g: RegularGraph):
    return independence_counter(g.closed_neighborhoods), matching_counter(g.neighbor_masks)


def _full(g: RegularGraph) -> int:
    return (1 << g.n) - 1


def _check_budget(g: RegularGraph, mode: str, budget: int | None) -> None:
    if mode == "independent-sets":
        limit = IS_BUDGET if budget is None else budget
        if g.n > limit:
            raise EnumerationBudgetError(f"n = {g.n} exceeds the independent-set budget {limit}")
    else:
        limit = MATCHING_BUDGET if budget is None else budget
        if g.m > limit:
            raise EnumerationBudgetError(f"m = {g.m} exceeds the matching budget {limit}")


@dataclass(frozen=True)
class CountTable:
    mode: str
    counts: tuple[int, ...]
    p: Fraction
    size: int  # number of vertices (IS) or edges (matchings): the sampling space
    graph: RegularGraph | None = None

    def __getitem__(self, k: int) -> int:
        return self.counts[k] if 0 <= k < len(self.counts) else 0

    @property
    def max_k(self) -> int:
        return len(self.counts) - 1

    @property
    def total(self) -> int:
        return sum(self.counts)


def collision_probability(g: RegularGraph, mode: str) -> Fraction:
    mode = _mode(mode)
    if mode == "independent-sets":
        return Fraction(g.d + 1, g.n)
    return Fraction(2 * g.d - 1, g.m)


def count_by_size(g: RegularGraph, mode: str = "is", budget: int | None = None) -> CountTable:
    """Exact IS(k) or M(k) for every k."""
    mode = _mode(mode)
    _check_budget(g, mode, budget)
    is_poly, m_poly = _counters(g)
    counts = (is_poly if mode == "independent-sets" else m_poly)(_full(g))
    while len(counts) > 1 and counts[-1] == 0:
        counts = counts[:-1]
    size = g.n if mode == "independent-sets" else g.m
    return CountTable(mode, tuple(counts), collision_probability(g, mode), size, g)


def _coverage_total(g: RegularGraph, k: int, mode: str) -> tuple[int, int]:
    """(sum over size-k configurations of covered elements, number of configurations)."""
    is_poly, m_poly = _counters(g)
    full = _full(g)

    def at(poly: tuple[int, ...]) -> int:
        return poly[k] if k < len(poly) else 0

    if mode == "independent-sets":
        total = at(is_poly(full))
        # u is uncovered by S iff S avoids N[u]
        uncovered = sum(at(is_poly(full & ~c)) for c in g.closed_neighborhoods)
        return g.n * total - uncovered, total
    total = at(m_poly(full))
    # edge uv is uncovered by a matching iff the matching avoids both u and v
    uncovered = sum(at(m_poly(full & ~((1 << u) | (1 << v)))) for u, v in g.edges)
    return g.m * total - uncovered, total


def exact_conditional_coverage(g: RegularGraph, k: int, mode: str = "is", budget: int | None = None) -> Fraction:
    """E[V_k | E_k]: mean covered fraction over all size-k independent sets (or matchings)."""
    mode = _mode(mode)
    _check_budget(g, mode, budget)
    covered, total = _coverage_total(g, k, mode)
    if total == 0:
        raise ValueError(f"no {mode} of size {k}: the event E_{k} is empty")
    size = g.n if mode == "independent-sets" else g.m
    return Fraction(covered, total * size)


# -- exact checks -------------------------------------------------------------

@dataclass(frozen=True)
class ExactCheck:
    """``holds`` is lhs <= rhs for birthday checks and lhs >= rhs for repulsion-type checks.

    ``slack`` is always oriented so that a nonnegative value means the inequality holds.
    """

    name: str
    k: int
    lhs: Fraction
    rhs: Fraction
    holds: bool
    slack: Fraction
    mode: str = "independent-sets"
    graph: str = ""


def birthday_check(g: RegularGraph, k: int, mode: str = "is", table: CountTable | None = None) -> ExactCheck:
    """k! * count(k) / size^k  <=  (1 - p)^C(k, 2)."""
    mode = _mode(mode)
    if k < 0:
        raise ValueError(f"k must be nonnegative, got {k}")
    table = table or count_by_size(g, mode)
    lhs = Fraction(math.factorial(k) * table[k], table.size ** k)
    rhs = (1 - table.p) ** math.comb(k, 2)
    return ExactCheck("birthday", k, lhs, rhs, lhs <= rhs, rhs - lhs, mode, g.label)


def repulsion_check(g: RegularGraph, k: int, mode: str = "is") -> ExactCheck:
    """E[V_k | E_k]  >=  1 - (1 - p)^k."""
    mode = _mode(mode)
    lhs = exact_conditional_coverage(g, k, mode)
    rhs = 1 - (1 - collision_probability(g, mode)) ** k
    return ExactCheck("repulsion", k, lhs, rhs, lhs >= rhs, lhs - rhs, mode, g.label)


def bipest_rhs(g: RegularGraph, k: int) -> Fraction:
    p = collision_probability(g, "is")
    if k * p >= 1:
        raise ValueError(f"bipest bound inapplicable: k p = {k * p} >= 1")
    return Fraction(k * (g.d + 1), g.n) - math.comb(k, 2) * Fraction(g.d * (g.d - 1), g.n ** 2) / (1 - k * p) ** 2


def bipest_check(g: RegularGraph, k: int) -> ExactCheck:
    """E[V_k | E_k] >= k(d+1)/n - C(k,2) d(d-1) / (n^2 (1 - kp)^2), independent-set mode."""
    rhs = bipest_rhs(g, k)
    lhs = exact_conditional_coverage(g, k, "is")
    return ExactCheck("bipest", k, lhs, rhs, lhs >= rhs, lhs - rhs, "independent-sets", g.label)


def bipest_applicable(g: RegularGraph, k: int) -> bool:
    return k * collision_probability(g, "is") < 1 and count_by_size(g, "is")[k] > 0


@dataclass(frozen=True)
class ExtremalComparison:
    k: int
    value_G: Fraction
    value_H: Fraction
    consistent: bool
    graph: str = ""


def extremal_compare(g: RegularGraph, k: int) -> ExtremalComparison:
    """Compare E_H[V_k | E_k] <= E_G[V_k | E_k] with H the disjoint union of K_{d,d}'s on g.n vertices."""
    if g.n % (2 * g.d):
        raise ValueError(f"2d = {2 * g.d} does not divide n = {g.n}; H_(d,n) does not exist")
    h = disjoint_kdd(g.d, g.n // (2 * g.d))
    vg = exact_conditional_coverage(g, k, "is")
    vh = exact_conditional_coverage(h, k, "is")
    return ExtremalComparison(k, vg, vh, vh <= vg, g.label)


def neighbor_pair_probability(g: RegularGraph) -> Fraction:
    """(1/n) sum_v Pr[v neighbours both picks | E_2], by enumerating ordered pairs."""
    closed = g.closed_neighborhoods
    good_pairs = sum(1 for a in range(g.n) for b in range(g.n) if not closed[a] >> b & 1)
    hits = sum(1 for v in range(g.n) for a in g.adjacency[v] for b in g.adjacency[v] if not closed[a] >> b & 1)
    return Fraction(hits, good_pairs * g.n)


def triangle_formula(g: RegularGraph) -> Fraction:
    """(n C(d,2) - 3 #triangles) / (C(n,2) - dn/2) / n."""
    num = g.n * math.comb(g.d, 2) - 3 * g.triangles()
    den = Fraction(math.comb(g.n, 2)) - Fraction(g.d * g.n, 2)
    return num / den / g.n


def all_checks(g: RegularGraph, mode: str = "is", ks: Iterable[int] | None = None) -> list[ExactCheck]:
    """Birthday, repulsion and (IS mode) bipest checks for each feasible k."""
    mode = _mode(mode)
    table = count_by_size(g, mode)
    out = []
    for k in (range(table.max_k + 1) if ks is None else ks):
        out.append(birthday_check(g, k, mode, table))
        if table[k] == 0:
            continue
        out.append(repulsion_check(g, k, mode))
        if mode == "independent-sets" and k * table.p < 1:
            out.append(bipest_check(g, k))
    return out


def count_table_csv(table: CountTable) -> str:
    """CSV with columns k, count, lhs, rhs, holds (birthday check per size)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "count", "lhs", "rhs", "holds"])
    for k in range(table.max_k + 1):
        lhs = Fraction(math.factorial(k) * table[k], table.size ** k)
        rhs = (1 - table.p) ** math.comb(k, 2)
        w.writerow([k, table[k], f"{lhs.numerator}/{lhs.denominator}", f"{rhs.numerator}/{rhs.denominator}",
                    str(lhs <= rhs).lower()])
    return buf.getvalue()
