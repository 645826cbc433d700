import itertools
import math
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from birthdaylab.graphs import (CATALOG, EnumerationBudgetError, GraphError, all_checks, bipest_applicable,
                                bipest_check, birthday_check, build_graph, collision_probability,
                                extremal_compare, count_by_size, count_table_csv, cycle, discrete_torus,
                                disjoint_kdd, exact_conditional_coverage, from_edge_list, from_edges, hypercube,
                                matching_counter, neighbor_pair_probability, parse_edge_list, repulsion_check,
                                to_edge_list, triangle_formula)

CATALOG_GRAPHS = [build_graph(s) for s in CATALOG]
SMALL = [g for g in CATALOG_GRAPHS if g.n <= 16]


# -- independent oracles ------------------------------------------------------

def power_set_is_counts(g):
    counts = [0] * (g.n + 1)
    nbr = g.neighbor_masks
    for mask in range(1 << g.n):
        if all(not (mask >> v & 1) or not (nbr[v] & mask) for v in range(g.n)):
            counts[bin(mask).count("1")] += 1
    while counts[-1] == 0:
        counts.pop()
    return counts


def edge_subset_matching_counts(g):
    edges = g.edges
    counts = [1]
    for k in range(1, g.n // 2 + 1):
        c = sum(1 for sub in itertools.combinations(edges, k) if len({v for e in sub for v in e}) == 2 * k)
        if c == 0:
            break
        counts.append(c)
    return counts


def brute_force_coverage(g, k, mode):
    if mode == "is":
        sets = [s for s in itertools.combinations(range(g.n), k)
                if all(b not in g.adjacency[a] for a, b in itertools.combinations(s, 2))]
        covered = [len(set(s) | {u for v in s for u in g.adjacency[v]}) for s in sets]
        return Fraction(sum(covered), len(sets) * g.n)
    edges = g.edges
    sets = [s for s in itertools.combinations(edges, k) if len({v for e in s for v in e}) == 2 * k]
    covered = [sum(1 for e in edges if set(e) & {v for f in s for v in f}) for s in sets]
    return Fraction(sum(covered), len(sets) * len(edges))


def lucas(n):
    a = np.array([[1, 1], [1, 0]], dtype=object)
    return int(np.trace(np.linalg.matrix_power(a, n)))


# -- construction ---------------------------------------------------------------

def test_builders():
    q3 = hypercube(3)
    assert (q3.n, q3.d, q3.m) == (8, 3, 12)
    c4 = cycle(4)
    assert (c4.n, c4.d, c4.m) == (4, 2, 4)
    t = discrete_torus(2, 4)
    assert (t.n, t.d) == (16, 4)
    h = disjoint_kdd(3, 2)
    assert (h.n, h.d, h.m) == (12, 3, 18)


@pytest.mark.parametrize("descriptor", ["cycle:2", "torus:2:3", "hypercube:0", "bogus:3", "cycle:x", "kdd:3"])
def test_bad_graph_descriptors(descriptor):
    with pytest.raises(GraphError):
        build_graph(descriptor)


def test_non_regular_input_names_vertex(data_dir):
    with pytest.raises(GraphError, match="vertex 0 has degree 3"):
        from_edge_list(data_dir / "nonregular.txt")


def test_loop_input_names_vertex(data_dir):
    with pytest.raises(GraphError, match="self-loop at vertex 1"):
        from_edge_list(data_dir / "loop.txt")


def test_parallel_edge_names_vertex():
    with pytest.raises(GraphError, match=r"parallel edge \(1, 0\) at vertex 1"):
        from_edges(3, [(0, 1), (1, 0), (1, 2), (2, 0)])


def test_edge_list_round_trip(data_dir):
    g = build_graph(f"edges:{data_dir / 'mobius12.txt'}")
    assert (g.n, g.d, g.m) == (12, 3, 18)
    back = parse_edge_list(to_edge_list(g))
    assert back.edges == g.edges


def test_edge_list_header_required():
    with pytest.raises(GraphError, match="'n d'"):
        parse_edge_list("4\n0 1\n")


def test_triangle_counts():
    assert cycle(20).triangles() == 0
    assert from_edges(4, [(a, b) for a, b in itertools.combinations(range(4), 2)]).triangles() == 4


# -- counting ----------------------------------------------------------------------

def test_hypercube_independent_sets():
    t = count_by_size(hypercube(3), "is")
    assert list(t.counts) == [1, 8, 16, 8, 2]
    assert t[5] == 0
    assert t.counts[2] == math.comb(8, 2) - 12


def test_four_cycle_pairs():
    assert count_by_size(cycle(4), "is")[2] == 2


def test_hypercube_matchings():
    t = count_by_size(hypercube(3), "matchings")
    assert (t[1], t[2], t[4]) == (12, 42, 9)
    assert t[2] == math.comb(12, 2) - 24


@pytest.mark.parametrize("g", SMALL, ids=lambda g: g.label)
def test_is_counts_match_power_set(g):
    assert list(count_by_size(g, "is").counts) == power_set_is_counts(g)


@pytest.mark.parametrize("g", [g for g in SMALL if g.m <= 24], ids=lambda g: g.label)
def test_matching_counts_match_edge_subsets(g):
    assert list(count_by_size(g, "matchings").counts) == edge_subset_matching_counts(g)


@pytest.mark.parametrize("n", [4, 5, 6, 10, 20, 31])
def test_cycle_totals_are_lucas_numbers(n):
    assert count_by_size(cycle(n), "is").total == lucas(n)


def test_isomorphic_graphs_share_counts():
    for mode in ("is", "matchings"):
        assert count_by_size(hypercube(4), mode).counts == count_by_size(discrete_torus(2, 4), mode).counts


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([(3, 8), (3, 10), (4, 9), (3, 14), (5, 12)]))
def test_random_regular_totals_match_power_set(seed, shape):
    d, n = shape
    nxg = nx.random_regular_graph(d, n, seed=seed)
    g = from_edges(n, nxg.edges())
    assert count_by_size(g, "is").total == sum(power_set_is_counts(g))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(3, 10), st.floats(0.2, 0.8))
def test_matching_edge_deletion_recurrence(seed, n, prob):
    nxg = nx.gnp_random_graph(n, prob, seed=seed)
    if nxg.number_of_edges() == 0:
        return
    adj = [sum(1 << u for u in nxg[v]) for v in range(n)]
    full = (1 << n) - 1
    u, v = next(iter(nxg.edges()))
    deleted = list(adj)
    deleted[u] &= ~(1 << v)
    deleted[v] &= ~(1 << u)
    m_g = matching_counter(adj)(full)
    m_del = matching_counter(deleted)(full)
    m_contract = matching_counter(adj)(full & ~(1 << u) & ~(1 << v))
    for k in range(len(m_g)):
        below = m_contract[k - 1] if 0 < k <= len(m_contract) else 0
        here = m_del[k] if k < len(m_del) else 0
        assert m_g[k] == here + below
    # networkx agrees on the number of perfect-or-maximum matchings size
    assert len(m_g) - 1 == len(nx.max_weight_matching(nxg, maxcardinality=True))


def test_budget_enforced():
    with pytest.raises(EnumerationBudgetError):
        count_by_size(cycle(41), "is")
    assert count_by_size(cycle(41), "is", budget=50).total == lucas(41)
    with pytest.raises(EnumerationBudgetError):
        count_by_size(cycle(61), "matchings")


# -- coverage ------------------------------------------------------------------------

@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_single_vertex_coverage(g):
    assert exact_conditional_coverage(g, 1, "is") == Fraction(g.d + 1, g.n)


def test_hypercube_coverage_examples():
    q3 = hypercube(3)
    assert exact_conditional_coverage(q3, 2, "is") == Fraction(104, 128)
    assert exact_conditional_coverage(q3, 3, "is") == Fraction(7, 8)


@pytest.mark.parametrize("g", [g for g in SMALL if g.n <= 12], ids=lambda g: g.label)
@pytest.mark.parametrize("mode", ["is", "matchings"])
def test_coverage_matches_brute_force(g, mode):
    table = count_by_size(g, mode)
    for k in range(1, min(table.max_k, 4) + 1):
        assert exact_conditional_coverage(g, k, mode) == brute_force_coverage(g, k, mode)


def test_coverage_of_empty_event():
    with pytest.raises(ValueError, match="empty"):
        exact_conditional_coverage(hypercube(3), 5, "is")


# -- checks -----------------------------------------------------------------------

@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
@pytest.mark.parametrize("mode", ["is", "matchings"])
def test_pair_case_is_equality(g, mode):
    c = birthday_check(g, 2, mode)
    assert c.lhs == c.rhs == 1 - collision_probability(g, mode)


def test_birthday_examples():
    q3 = hypercube(3)
    c = birthday_check(q3, 3, "is")
    assert c.lhs == Fraction(48, 512) and c.rhs == Fraction(1, 8) and c.holds
    c = birthday_check(q3, 4, "matchings")
    assert c.lhs == Fraction(24 * 9, 12 ** 4) and c.rhs == Fraction(7, 12) ** 6 and c.holds
    assert float(c.lhs) == pytest.approx(0.0104167, abs=1e-7)


def test_repulsion_examples():
    q3 = hypercube(3)
    one = repulsion_check(q3, 1, "is")
    assert one.lhs == one.rhs == Fraction(1, 2)
    two = repulsion_check(q3, 2, "is")
    assert two.holds and two.rhs == Fraction(3, 4)
    three = repulsion_check(q3, 3, "is")
    assert three.lhs == three.rhs == Fraction(7, 8) and three.holds


def test_bipest_examples():
    for g in CATALOG_GRAPHS:
        c = bipest_check(g, 1)
        assert c.lhs == c.rhs
    c20 = bipest_check(cycle(20), 3)
    assert c20.holds and collision_probability(cycle(20), "is") == Fraction(3, 20)
    assert bipest_check(discrete_torus(2, 4), 2).holds
    with pytest.raises(ValueError, match="inapplicable"):
        bipest_check(discrete_torus(2, 4), 4)


@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_matching_birthday_for_every_size(g):
    table = count_by_size(g, "matchings")
    assert all(birthday_check(g, k, "matchings", table).holds for k in range(table.max_k + 2))


@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_is_repulsion_in_proven_regime(g):
    ks = [k for k in range(1, g.n + 1) if Fraction(k, g.n) <= Fraction(1, (g.d + 1) ** 2)]
    assert all(repulsion_check(g, k, "is").holds for k in ks)


@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_matching_repulsion_in_proven_regime(g):
    ks = [k for k in range(1, g.n + 1) if Fraction(k) <= Fraction(3, 28) * Fraction(g.n, 2)]
    assert all(repulsion_check(g, k, "matchings").holds for k in ks)


@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_bipest_wherever_applicable(g):
    table = count_by_size(g, "is")
    for k in range(1, table.max_k + 1):
        if bipest_applicable(g, k):
            assert bipest_check(g, k).holds


@pytest.mark.parametrize("g", CATALOG_GRAPHS, ids=lambda g: g.label)
def test_triangle_identity(g):
    assert neighbor_pair_probability(g) == triangle_formula(g)


def test_triangle_identity_with_triangles():
    # complete graph K_4 plus its complement pattern: the 3-prism has two triangles
    prism = from_edges(6, [(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)])
    assert prism.triangles() == 2
    assert neighbor_pair_probability(prism) == triangle_formula(prism)


def test_all_checks_cover_every_size():
    rows = all_checks(hypercube(3), "is")
    assert {c.k for c in rows if c.name == "birthday"} == set(range(5))
    assert all(c.holds for c in rows)


# -- comparison with the disjoint union of K_{d,d} --------------------------------------------------

def test_extremal_graph_against_itself():
    h = disjoint_kdd(3, 2)
    for k in range(1, count_by_size(h, "is").max_k + 1):
        cmp = extremal_compare(h, k)
        assert cmp.value_G == cmp.value_H and cmp.consistent


def test_mobius_ladder_against_two_k33(data_dir):
    g = from_edge_list(data_dir / "mobius12.txt")
    table = count_by_size(g, "is")
    results = [extremal_compare(g, k) for k in range(1, table.max_k + 1)]
    for r in results:
        assert r.value_G == brute_force_coverage(g, r.k, "is")
        assert r.value_H == brute_force_coverage(disjoint_kdd(3, 2), r.k, "is")
    assert all(r.consistent for r in results)


def test_eight_cycle_against_two_k22():
    cmp = extremal_compare(cycle(8), 3)
    assert cmp.value_G == brute_force_coverage(cycle(8), 3, "is")
    assert cmp.value_H == brute_force_coverage(disjoint_kdd(2, 2), 3, "is")
    assert cmp.consistent


def test_extremal_comparison_needs_divisibility():
    with pytest.raises(ValueError, match="does not divide"):
        extremal_compare(cycle(6), 2)


def test_count_table_csv():
    lines = count_table_csv(count_by_size(hypercube(3), "is")).splitlines()
    assert lines[0] == "k,count,lhs,rhs,holds"
    assert lines[3] == "2,16,1/2,1/2,true"
    assert len(lines) == 6


def test_malformed_edge_line():
    with pytest.raises(GraphError, match="malformed edge line"):
        parse_edge_list("3 2\n0 1 2\n")
