"""Directed graphs and the spectral quantities consumed by synthesis.

Conventions. Nodes are 1-indexed. An edge (parent, child) means information
flows from parent to child, so the adjacency matrix has a[child-1, parent-1]
= 1 and the Laplacian is in-degree minus adjacency, with zero row sums.
Edge weights are all 1; weighted graphs are out of scope.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from numpy.typing import NDArray

from . import numkit
from .errors import PreconditionError


@dataclass(frozen=True)
class DiGraph:
    """Directed graph on nodes 1..n with unit-weight edges.

    edges hold (parent, child) pairs. Self-loops are rejected.
    """

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        for (p, c) in self.edges:
            if p == c:
                raise ValueError(f"self-loop on node {p} is not allowed")
            if not (1 <= p <= self.n and 1 <= c <= self.n):
                raise ValueError(f"edge ({p}, {c}) is outside 1..{self.n}")

    @staticmethod
    def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> "DiGraph":
        return DiGraph(n=n, edges=frozenset((int(p), int(c)) for p, c in edges))


@dataclass(frozen=True)
class GraphFlags:
    strongly_connected: bool
    balanced: bool
    has_spanning_tree: bool
    leader_follower_root: Optional[int]


@dataclass(frozen=True)
class GraphSpectra:
    """Spectral summary of a strongly connected digraph.

    r is the positive left null vector of the Laplacian normalized to sum 1,
    bigR its diagonal matrix, a_of_l the generalized algebraic connectivity,
    and lambda2_sym the second-smallest eigenvalue of (L + L^T)/2, populated
    only when the graph is balanced.
    """

    laplacian: NDArray[np.float64]
    r: NDArray[np.float64]
    bigR: NDArray[np.float64]
    a_of_l: float
    lambda2_sym: Optional[float]
    flags: GraphFlags


@dataclass(frozen=True)
class LeaderFollowerData:
    """Partitioned quantities for a leader rooted at a source node.

    l1 is the follower block of the Laplacian, l2 the follower-to-leader
    coupling column, q = l1^{-1} 1 (entrywise positive under the spanning
    tree hypothesis), bigG = diag(1/q), h = (G l1 + l1^T G)/2.
    simplified_applicable marks follower subgraphs that are balanced and
    strongly connected, where the alternative threshold based on
    lambda1_sym, the smallest eigenvalue of (l1 + l1^T)/2, is valid.
    """

    leader: int
    followers: tuple[int, ...]
    l1: NDArray[np.float64]
    l2: NDArray[np.float64]
    q: NDArray[np.float64]
    bigG: NDArray[np.float64]
    h: NDArray[np.float64]
    lambda1_h: float
    min_q: float
    simplified_applicable: bool
    lambda1_sym: Optional[float]


def adjacency(g: DiGraph) -> NDArray[np.float64]:
    """Adjacency matrix with a[i, j] = 1 iff there is an edge j+1 -> i+1."""
    a = np.zeros((g.n, g.n))
    for (p, c) in g.edges:
        a[c - 1, p - 1] = 1.0
    return a


def laplacian(g: DiGraph) -> NDArray[np.float64]:
    """In-degree Laplacian: diagonal of row sums of adjacency minus adjacency."""
    a = adjacency(g)
    return np.diag(a.sum(axis=1)) - a


def _out_neighbors(g: DiGraph) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(g.n)]
    for (p, c) in sorted(g.edges):
        out[p - 1].append(c - 1)
    return out


def _in_degrees(g: DiGraph) -> list[int]:
    deg = [0] * g.n
    for (_, c) in g.edges:
        deg[c - 1] += 1
    return deg


def _scc_count(n: int, out: list[list[int]]) -> int:
    # Iterative Tarjan; recursion depth would be a hazard on long paths.
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    count = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(out[v])):
                w = out[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                count += 1
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    if w == v:
                        break
    return count


def _reaches_all(n: int, out: list[list[int]], root: int) -> bool:
    seen = [False] * n
    seen[root] = True
    frontier = [root]
    hits = 1
    while frontier:
        nxt = []
        for v in frontier:
            for w in out[v]:
                if not seen[w]:
                    seen[w] = True
                    hits += 1
                    nxt.append(w)
        frontier = nxt
    return hits == n


def classify(g: DiGraph) -> GraphFlags:
    """Connectivity and balance flags.

    Strong connectivity is decided by counting strongly connected components
    (integer-exact, no spectral test). Balance means in-degree equals
    out-degree at every node. A spanning tree exists when some node reaches
    all others; the leader_follower_root is reported when a node with zero
    in-degree reaches all others.
    """
    out = _out_neighbors(g)
    indeg = _in_degrees(g)
    outdeg = [len(x) for x in out]
    balanced = all(i == o for i, o in zip(indeg, outdeg))
    strongly_connected = _scc_count(g.n, out) == 1 if g.n > 0 else False
    has_tree = False
    root = None
    for v in range(g.n):
        if _reaches_all(g.n, out, v):
            has_tree = True
            break
    for v in range(g.n):
        if indeg[v] == 0 and _reaches_all(g.n, out, v):
            root = v + 1
            break
    return GraphFlags(
        strongly_connected=strongly_connected,
        balanced=balanced,
        has_spanning_tree=has_tree,
        leader_follower_root=root,
    )


def _graph_from_laplacian(l: NDArray[np.float64]) -> DiGraph:
    n = l.shape[0]
    edges = []
    for i in range(n):
        for j in range(n):
            if i != j and l[i, j] < -0.5:
                edges.append((j + 1, i + 1))
    return DiGraph.from_edges(n, edges)


def left_perron(l, tol: numkit.Tolerances = numkit.TOL) -> NDArray[np.float64]:
    """Positive left null vector of a strongly connected Laplacian.

    Normalized so the entries sum to 1. Extraction is deterministic: pin the
    last entry to 1 and solve the leading (n-1) principal block of L^T, which
    is nonsingular exactly when the graph is strongly connected.

    Raises
    ------
    PreconditionError
        If the matrix is not the Laplacian of a strongly connected graph
        (zero eigenvalue not simple, or the null vector not positive).
    """
    lm = numkit.as_matrix(l, "laplacian")
    n = lm.shape[0]
    if lm.shape[0] != lm.shape[1]:
        raise ValueError("laplacian must be square")
    scale = max(1.0, float(np.linalg.norm(lm, "fro")))
    if np.max(np.abs(lm.sum(axis=1))) > tol.perron_resid * scale:
        raise PreconditionError("matrix does not have zero row sums")
    g = _graph_from_laplacian(lm)
    if not classify(g).strongly_connected:
        raise PreconditionError(
            "left null vector requires a strongly connected graph "
            "(zero Laplacian eigenvalue must be simple with a positive vector)"
        )
    if n == 1:
        return np.array([1.0])
    t = lm.T
    y = numkit.solve_linear(t[: n - 1, : n - 1], -t[: n - 1, n - 1], tol)
    r = np.append(y, 1.0)
    r = r / r.sum()
    resid = float(np.linalg.norm(r @ lm))
    if resid > tol.perron_resid * scale or np.any(r <= 0):
        raise PreconditionError(
            f"left null vector extraction failed (residual {resid:.3e})"
        )
    return r


def generalized_connectivity(l, r=None, tol: numkit.Tolerances = numkit.TOL
                             ) -> float:
    """Generalized algebraic connectivity of a strongly connected digraph.

    Defined as the minimum of x^T (R L + L^T R) x / (2 x^T R x) over nonzero
    x with r^T x = 0, where R = diag(r). Computed by one symmetric
    eigensolve: scale by R^{-1/2} on both sides, project out the known null
    direction w = sqrt(r), and take the second-smallest eigenvalue of the
    projected matrix (the projection itself contributes an artificial zero
    along w), halved.

    For balanced graphs this equals the second-smallest eigenvalue of
    (L + L^T)/2.
    """
    lm = numkit.as_matrix(l, "laplacian")
    rv = left_perron(lm, tol) if r is None else numkit.as_vector(r, "r")
    if np.any(rv <= 0):
        raise PreconditionError("weight vector must be entrywise positive")
    q = np.diag(rv) @ lm + lm.T @ np.diag(rv)
    rs = 1.0 / np.sqrt(rv)
    m = q * np.outer(rs, rs)
    w = np.sqrt(rv)
    w = w / np.linalg.norm(w)
    proj = np.eye(lm.shape[0]) - np.outer(w, w)
    pm = proj @ m @ proj
    values = numkit.sym_eig(pm, tol).values
    return float(values[1]) / 2.0


def spectra(g: DiGraph, tol: numkit.Tolerances = numkit.TOL) -> GraphSpectra:
    """Full spectral summary; requires strong connectivity."""
    flags = classify(g)
    if not flags.strongly_connected:
        raise PreconditionError(
            "spectral summary requires a strongly connected graph"
        )
    l = laplacian(g)
    r = left_perron(l, tol)
    a_of_l = generalized_connectivity(l, r, tol)
    lambda2 = None
    if flags.balanced:
        lambda2 = float(numkit.sym_eig((l + l.T) / 2.0, tol).values[1])
    return GraphSpectra(
        laplacian=l,
        r=r,
        bigR=np.diag(r),
        a_of_l=a_of_l,
        lambda2_sym=lambda2,
        flags=flags,
    )


def leader_follower_data(g: DiGraph, leader: int,
                         tol: numkit.Tolerances = numkit.TOL
                         ) -> LeaderFollowerData:
    """Partition the Laplacian around a leader and derive tracking weights.

    The leader must have no incoming edges and must reach every follower
    (directed spanning tree rooted at the leader).
    """
    if not (1 <= leader <= g.n):
        raise ValueError(f"leader {leader} outside 1..{g.n}")
    indeg = _in_degrees(g)
    if indeg[leader - 1] != 0:
        raise PreconditionError("leader must have no incoming edges")
    out = _out_neighbors(g)
    if not _reaches_all(g.n, out, leader - 1):
        raise PreconditionError(
            "graph needs a directed spanning tree rooted at the leader"
        )
    followers = tuple(v for v in range(1, g.n + 1) if v != leader)
    idx = [v - 1 for v in followers]
    l = laplacian(g)
    l1 = l[np.ix_(idx, idx)]
    l2 = l[np.ix_(idx, [leader - 1])]
    q = numkit.solve_linear(l1, np.ones(len(idx)), tol)
    if np.any(q <= 0):
        raise PreconditionError("follower weights q must be positive")
    bigG = np.diag(1.0 / q)
    h = (bigG @ l1 + l1.T @ bigG) / 2.0
    lambda1_h = float(numkit.sym_eig(h, tol).values[0])
    if lambda1_h <= 0:
        raise PreconditionError("follower form H must be positive definite")
    sub_edges = [(p, c) for (p, c) in g.edges if p != leader and c != leader]
    relabel = {v: k + 1 for k, v in enumerate(followers)}
    sub = DiGraph.from_edges(
        len(followers), [(relabel[p], relabel[c]) for (p, c) in sub_edges]
    )
    sub_flags = classify(sub)
    simplified = sub_flags.balanced and sub_flags.strongly_connected
    lambda1_sym = None
    if simplified:
        lambda1_sym = float(numkit.sym_eig((l1 + l1.T) / 2.0, tol).values[0])
    return LeaderFollowerData(
        leader=leader,
        followers=followers,
        l1=l1,
        l2=l2,
        q=q,
        bigG=bigG,
        h=h,
        lambda1_h=lambda1_h,
        min_q=float(q.min()),
        simplified_applicable=simplified,
        lambda1_sym=lambda1_sym,
    )


def parse_edge_list(text: str) -> DiGraph:
    """Parse the plain-text graph format.

    First meaningful line is ``nodes N``; every following line is
    ``parent child`` with 1-indexed node numbers. Blank lines and lines
    starting with ``#`` are ignored. Errors carry line numbers.
    """
    n = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "nodes":
                raise ValueError(
                    f"line {lineno}: expected header 'nodes N', got {raw!r}"
                )
            try:
                n = int(parts[1])
            except ValueError as exc:
                raise ValueError(
                    f"line {lineno}: node count is not an integer"
                ) from exc
            continue
        if len(parts) != 2:
            raise ValueError(
                f"line {lineno}: expected 'parent child', got {raw!r}"
            )
        try:
            p, c = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: endpoints must be integers") from exc
        if not (1 <= p <= n and 1 <= c <= n):
            raise ValueError(f"line {lineno}: edge ({p}, {c}) outside 1..{n}")
        if p == c:
            raise ValueError(f"line {lineno}: self-loop on node {p}")
        edges.append((p, c))
    if n is None:
        raise ValueError("missing 'nodes N' header")
    return DiGraph.from_edges(n, edges)


def format_edge_list(g: DiGraph) -> str:
    lines = [f"nodes {g.n}"]
    lines += [f"{p} {c}" for (p, c) in sorted(g.edges)]
    return "\n".join(lines) + "\n"


def digraph_from_adjacency(a) -> DiGraph:
    """Graph from a 0/1 adjacency matrix with a[i, j] = 1 iff edge j+1 -> i+1."""
    am = numkit.as_matrix(a, "adjacency")
    if am.shape[0] != am.shape[1]:
        raise ValueError("adjacency must be square")
    if not np.all((np.abs(am) < 1e-12) | (np.abs(am - 1.0) < 1e-12)):
        raise ValueError("adjacency entries must be 0 or 1")
    n = am.shape[0]
    edges = [(j + 1, i + 1) for i in range(n) for j in range(n)
             if am[i, j] > 0.5]
    return DiGraph.from_edges(n, edges)
