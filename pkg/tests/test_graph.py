import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from consyn import (
    DiGraph,
    PreconditionError,
    adjacency,
    classify,
    generalized_connectivity,
    laplacian,
    leader_follower_data,
    left_perron,
    parse_edge_list,
    spectra,
)
from consyn import benchmark
from consyn.graph import digraph_from_adjacency, format_edge_list

from conftest import (
    path_graph,
    random_balanced_sc_digraph,
    random_sc_digraph,
    star_graph,
    three_cycle,
    two_node_graph,
)

BENCH_LAPLACIAN = np.array([
    [2.0, 0.0, -1.0, -1.0, 0.0, 0.0],
    [-1.0, 2.0, 0.0, 0.0, 0.0, -1.0],
    [0.0, -1.0, 1.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 2.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0, 2.0, -1.0],
    [0.0, -1.0, 0.0, 0.0, -1.0, 2.0],
])


def test_digraph_rejects_self_loop():
    with pytest.raises(ValueError):
        DiGraph.from_edges(2, [(1, 1)])


def test_digraph_rejects_out_of_range_nodes():
    with pytest.raises(ValueError):
        DiGraph.from_edges(2, [(1, 3)])
    with pytest.raises(ValueError):
        DiGraph.from_edges(2, [(0, 1)])


def test_laplacian_two_node_bidirectional():
    assert_allclose(laplacian(two_node_graph()),
                    [[1.0, -1.0], [-1.0, 1.0]], atol=0.0)


def test_laplacian_directed_three_cycle():
    assert_allclose(laplacian(three_cycle()),
                    [[1.0, 0.0, -1.0], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]],
                    atol=0.0)


def test_laplacian_benchmark_matrix(bench_graph):
    assert_allclose(laplacian(bench_graph), BENCH_LAPLACIAN, atol=0.0)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_laplacian_row_sums_and_sign(seed):
    rng = np.random.default_rng(seed)
    g = random_sc_digraph(rng)
    ls = laplacian(g)
    assert_allclose(ls @ np.ones(g.n), 0.0, atol=0.0)
    off = ls - np.diag(np.diag(ls))
    assert np.all(off <= 0.0)


def test_adjacency_orientation():
    # edge (parent, child) lands in the child's row
    a = adjacency(DiGraph.from_edges(2, [(1, 2)]))
    assert_allclose(a, [[0.0, 0.0], [1.0, 0.0]], atol=0.0)


def test_classify_benchmark(bench_graph):
    flags = classify(bench_graph)
    assert flags.strongly_connected
    assert flags.balanced
    assert flags.has_spanning_tree
    assert flags.leader_follower_root is None


def test_classify_star():
    flags = classify(star_graph())
    assert not flags.strongly_connected
    assert flags.has_spanning_tree
    assert flags.leader_follower_root == 1


def test_classify_isolated_node():
    flags = classify(DiGraph.from_edges(3, [(1, 2)]))
    assert not flags.strongly_connected
    assert not flags.balanced
    assert not flags.has_spanning_tree
    assert flags.leader_follower_root is None


def test_left_perron_balanced_is_uniform():
    assert_allclose(left_perron(laplacian(two_node_graph())),
                    [0.5, 0.5], atol=1e-12)
    assert_allclose(left_perron(laplacian(three_cycle())),
                    np.full(3, 1 / 3), atol=1e-12)


def test_left_perron_benchmark_uniform(bench_graph):
    assert_allclose(left_perron(laplacian(bench_graph)),
                    np.full(6, 1 / 6), atol=1e-9)


def test_left_perron_unbalanced_against_null_space():
    g = DiGraph.from_edges(3, [(1, 2), (2, 1), (2, 3), (3, 1)])
    ls = laplacian(g)
    r = left_perron(ls)
    assert_allclose(r, [0.25, 0.5, 0.25], atol=1e-12)
    basis = scipy.linalg.null_space(ls.T)
    assert basis.shape[1] == 1
    oracle = basis[:, 0] / basis[:, 0].sum()
    assert_allclose(r, oracle, atol=1e-10)


def test_left_perron_requires_strong_connectivity():
    with pytest.raises(PreconditionError):
        left_perron(laplacian(star_graph()))


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_left_perron_properties(seed):
    rng = np.random.default_rng(seed)
    g = random_sc_digraph(rng)
    ls = laplacian(g)
    r = left_perron(ls)
    assert np.all(r > 0)
    assert_allclose(r.sum(), 1.0, atol=1e-12)
    assert np.linalg.norm(r @ ls) <= 1e-9


def test_generalized_connectivity_two_node():
    ls = laplacian(two_node_graph())
    assert_allclose(generalized_connectivity(ls), 2.0, atol=1e-12)


def test_generalized_connectivity_three_cycle():
    ls = laplacian(three_cycle())
    assert_allclose(generalized_connectivity(ls), 1.5, atol=1e-12)


def test_generalized_connectivity_benchmark(bench_graph):
    a_of_l = generalized_connectivity(laplacian(bench_graph))
    assert_allclose(a_of_l, 0.8138593383654928, atol=1e-9)
    assert_allclose(a_of_l, benchmark.REFERENCE_LAMBDA2, atol=1e-3)


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_lemma_floor_and_positivity(seed):
    rng = np.random.default_rng(seed)
    g = random_sc_digraph(rng)
    ls = laplacian(g)
    r = left_perron(ls)
    q = np.diag(r) @ ls + ls.T @ np.diag(r)
    assert np.linalg.eigvalsh(q).min() >= -1e-9
    assert generalized_connectivity(ls, r) > 0


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_balanced_connectivity_matches_fiedler(seed):
    rng = np.random.default_rng(seed)
    g = random_balanced_sc_digraph(rng)
    ls = laplacian(g)
    lam2 = np.sort(np.linalg.eigvalsh((ls + ls.T) / 2))[1]
    assert abs(generalized_connectivity(ls) - lam2) <= 1e-8


def test_rank_deficiency_matches_spanning_tree_flag():
    # strongly connected, tree-but-not-SC, and treeless graphs
    cases = [
        (three_cycle(), True),
        (star_graph(), True),
        (DiGraph.from_edges(6, [(1, 2), (2, 3), (3, 1),
                                (4, 5), (5, 6), (6, 4)]), False),
        (DiGraph.from_edges(3, [(1, 2)]), False),
    ]
    for g, has_tree in cases:
        assert classify(g).has_spanning_tree == has_tree
        rank = np.linalg.matrix_rank(laplacian(g), tol=1e-9)
        assert (rank == g.n - 1) == has_tree


def test_spectra_requires_strong_connectivity():
    with pytest.raises(PreconditionError):
        spectra(star_graph())


def test_spectra_benchmark_fields(bench_spectra):
    assert bench_spectra.flags.balanced
    assert bench_spectra.lambda2_sym is not None
    assert_allclose(bench_spectra.lambda2_sym, bench_spectra.a_of_l,
                    atol=1e-8)
    assert_allclose(bench_spectra.bigR, np.diag(bench_spectra.r), atol=0.0)


def test_spectra_unbalanced_has_no_lambda2():
    g = DiGraph.from_edges(3, [(1, 2), (2, 1), (2, 3), (3, 1)])
    s = spectra(g)
    assert not s.flags.balanced
    assert s.lambda2_sym is None
    assert s.a_of_l > 0


def test_leader_follower_path_closed_form():
    lf = leader_follower_data(path_graph(), 1)
    assert lf.leader == 1
    assert lf.followers == (2, 3)
    assert_allclose(lf.l1, [[1.0, 0.0], [-1.0, 1.0]], atol=0.0)
    assert_allclose(lf.l2, [[-1.0], [0.0]], atol=0.0)
    assert_allclose(lf.q, [1.0, 2.0], atol=1e-12)
    assert_allclose(lf.bigG, [[1.0, 0.0], [0.0, 0.5]], atol=1e-12)
    assert_allclose(lf.h, [[1.0, -0.25], [-0.25, 0.5]], atol=1e-12)
    assert_allclose(lf.lambda1_h, (3.0 - math.sqrt(2.0)) / 4.0, atol=1e-9)
    assert lf.min_q == pytest.approx(1.0, abs=1e-12)


def test_leader_follower_star_identity():
    lf = leader_follower_data(star_graph(), 1)
    assert_allclose(lf.l1, np.eye(2), atol=0.0)
    assert_allclose(lf.q, [1.0, 1.0], atol=1e-12)
    assert_allclose(lf.h, np.eye(2), atol=1e-12)
    assert_allclose(lf.lambda1_h, 1.0, atol=1e-12)
    # single-edge followers are not strongly connected among themselves
    assert not lf.simplified_applicable


def test_leader_follower_simplified_branch():
    g = DiGraph.from_edges(3, [(1, 2), (1, 3), (2, 3), (3, 2)])
    lf = leader_follower_data(g, 1)
    assert lf.simplified_applicable
    assert_allclose(lf.l1, [[2.0, -1.0], [-1.0, 2.0]], atol=0.0)
    assert_allclose(lf.q, [1.0, 1.0], atol=1e-12)
    sym_vals = np.linalg.eigvalsh((lf.l1 + lf.l1.T) / 2)
    assert sym_vals.min() > 0
    assert_allclose(lf.lambda1_sym, sym_vals.min(), atol=1e-12)


def test_leader_follower_rejects_leader_with_inputs(bench_graph):
    with pytest.raises(PreconditionError):
        leader_follower_data(bench_graph, 1)


def test_leader_follower_rejects_unreachable_follower():
    g = DiGraph.from_edges(3, [(1, 2), (3, 2)])
    with pytest.raises(PreconditionError):
        leader_follower_data(g, 1)


def test_parse_edge_list_with_comments():
    text = """# benchmark pair
nodes 2

1 2
2 1  # back edge
"""
    g = parse_edge_list(text)
    assert g.n == 2
    assert g.edges == frozenset({(1, 2), (2, 1)})


def test_parse_edge_list_requires_header():
    with pytest.raises(ValueError) as exc:
        parse_edge_list("1 2\n")
    assert "line 1" in str(exc.value)


def test_parse_edge_list_reports_bad_line():
    with pytest.raises(ValueError) as exc:
        parse_edge_list("nodes 2\n1 2\n1 two\n")
    assert "line 3" in str(exc.value)


def test_parse_edge_list_rejects_out_of_range():
    with pytest.raises(ValueError):
        parse_edge_list("nodes 2\n1 3\n")


@given(st.integers(0, 10_000))
@settings(max_examples=30, deadline=None)
def test_edge_list_round_trip(seed):
    rng = np.random.default_rng(seed)
    g = random_sc_digraph(rng)
    assert parse_edge_list(format_edge_list(g)) == g


def test_adjacency_round_trip(bench_graph):
    assert digraph_from_adjacency(adjacency(bench_graph)) == bench_graph


def test_adjacency_rejects_weights():
    with pytest.raises(ValueError):
        digraph_from_adjacency([[0.0, 0.5], [1.0, 0.0]])
