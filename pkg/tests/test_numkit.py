import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from consyn import (
    as_matrix,
    eigvals_general,
    is_positive_definite,
    kron,
    laplacian,
    solve_linear,
    sym_eig,
)
from consyn import benchmark


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_matrix([[1.0, np.nan]])
    with pytest.raises(ValueError):
        as_matrix([[np.inf]])


def test_as_matrix_promotes_vector_to_row():
    m = as_matrix([1.0, 2.0, 3.0])
    assert m.shape == (1, 3)


def test_sym_eig_diagonal():
    res = sym_eig([[2.0, 0.0], [0.0, 3.0]])
    assert_allclose(res.values, [2.0, 3.0], atol=1e-14)
    assert_allclose(np.abs(res.vectors), np.eye(2), atol=1e-14)


def test_sym_eig_2x2_closed_form():
    res = sym_eig([[1.0, -0.25], [-0.25, 0.5]])
    tr, det = 1.5, 1.0 * 0.5 - 0.25 ** 2
    lo = (tr - math.sqrt(tr ** 2 - 4 * det)) / 2
    hi = (tr + math.sqrt(tr ** 2 - 4 * det)) / 2
    assert_allclose(res.values, [lo, hi], atol=1e-12)


def test_sym_eig_benchmark_symmetrized_laplacian(bench_graph):
    ls = laplacian(bench_graph)
    res = sym_eig((ls + ls.T) / 2)
    assert abs(res.values[0]) < 1e-12
    assert_allclose(res.values[1], benchmark.REFERENCE_LAMBDA2, atol=1e-3)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(ValueError):
        sym_eig([[0.0, 1.0], [0.0, 0.0]])


def test_sym_eig_rejects_nonsquare():
    with pytest.raises(ValueError):
        sym_eig(np.zeros((2, 3)))


@given(st.integers(0, 10_000), st.integers(2, 8))
@settings(max_examples=40, deadline=None)
def test_sym_eig_eigenpair_residuals(seed, n):
    rng = np.random.default_rng(seed)
    s = rng.standard_normal((n, n))
    s = (s + s.T) / 2
    res = sym_eig(s)
    norm = np.linalg.norm(s)
    for lam, v in zip(res.values, res.vectors.T):
        assert np.linalg.norm(s @ v - lam * v) <= 1e-9 * max(norm, 1.0)
    assert np.all(np.diff(res.values) >= 0)
    assert np.max(np.abs(res.vectors.T @ res.vectors - np.eye(n))) <= 1e-10 * n
    recon = res.vectors @ np.diag(res.values) @ res.vectors.T
    assert np.linalg.norm(s - recon) <= 1e-9 * max(norm, 1.0)


def test_is_positive_definite_identity():
    assert is_positive_definite(np.eye(3), margin=0.0)


def test_is_positive_definite_singular():
    assert not is_positive_definite([[0.0, 0.0], [0.0, 1.0]], margin=0.0)


def test_is_positive_definite_reference_certificate():
    assert is_positive_definite(benchmark.REFERENCE_P, margin=0.0)


def test_is_positive_definite_margin_cutoff():
    s = np.diag([0.5, 2.0])
    assert is_positive_definite(s, margin=0.4)
    assert not is_positive_definite(s, margin=0.6)


def test_solve_linear_identity():
    b = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert_allclose(solve_linear(np.eye(2), b), b, atol=0.0)


def test_solve_linear_forward_substitution():
    a = np.array([[1.0, 0.0], [-1.0, 1.0]])
    x = solve_linear(a, np.array([1.0, 1.0]))
    assert_allclose(np.ravel(x), [1.0, 2.0], atol=1e-14)


def test_solve_linear_reproduces_reference_gain():
    x = solve_linear(benchmark.REFERENCE_P, benchmark.manipulator_model().b)
    k = -0.5 * x.T
    assert np.max(np.abs(k - benchmark.REFERENCE_GAIN)) < 5e-3


def test_solve_linear_singular_reports_condition():
    with pytest.raises(Exception) as exc:
        solve_linear([[1.0, 1.0], [1.0, 1.0]], [1.0, 0.0])
    assert "cond" in str(exc.value).lower()


@given(st.integers(0, 10_000), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_solve_linear_residual_bound(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
    b = rng.standard_normal((n, 2))
    x = solve_linear(a, b)
    assert np.linalg.norm(a @ x - b) <= 1e-9 * max(np.linalg.norm(b), 1.0)


def test_kron_identity_blockdiag():
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = kron(np.eye(2), m)
    expected = np.block([[m, np.zeros((2, 2))], [np.zeros((2, 2)), m]])
    assert_allclose(out, expected, atol=0.0)


def test_kron_swap_scalar():
    assert_allclose(kron([[0.0, 1.0], [1.0, 0.0]], [[2.0]]),
                    [[0.0, 2.0], [2.0, 0.0]], atol=0.0)


def test_kron_row_sum_extracts_agent_total():
    # (1^T (x) I_n) e stacks to the sum of the per-agent blocks
    rng = np.random.default_rng(7)
    n_agents, n = 4, 3
    e = rng.standard_normal(n_agents * n)
    ones = np.ones((1, n_agents))
    total = kron(ones, np.eye(n)) @ e
    assert_allclose(total, e.reshape(n_agents, n).sum(axis=0), atol=1e-12)


@given(st.integers(0, 10_000), st.integers(1, 3), st.integers(1, 3),
       st.integers(1, 3), st.integers(1, 3))
@settings(max_examples=30, deadline=None)
def test_kron_mixed_product(seed, p, q, r, s):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((p, q))
    c = rng.standard_normal((q, r))
    b = rng.standard_normal((r, s))
    d = rng.standard_normal((s, p))
    left = kron(a, b) @ kron(c, d)
    right = kron(a @ c, b @ d)
    scale = max(np.linalg.norm(right), 1.0)
    assert np.linalg.norm(left - right) <= 1e-10 * scale


def test_eigvals_general_known_spectrum():
    vals = np.sort_complex(eigvals_general([[0.0, 1.0], [-2.0, -3.0]]))
    assert_allclose(vals, [-2.0, -1.0], atol=1e-12)


def test_eigvals_general_rejects_nonsquare():
    with pytest.raises(ValueError):
        eigvals_general(np.zeros((2, 3)))
