"""
Weighted graph construction and validation.

A weighted graph G = (V, E, w, mu) carries symmetric positive edge weights w
and a positive node measure mu. Besides the generic constructor this module
provides the standard-Laplacian presets, graphs derived from attention
scores, and recovery of the reversibility measure of a stochastic matrix.
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, List, Sequence, Tuple
import logging

import numpy as np
import scipy.sparse as sp

from analysis_config import DEFAULT_TOLERANCES, PRESETS, Tolerances
from graph_errors import (
    AsymmetricScores, AsymmetricSupport, DimensionMismatch, DisconnectedGraph,
    DuplicateEdge, IndexOutOfRange, IsolatedNode, NonPositiveMeasure,
    NonPositiveWeight, NotReversible, NotRowStochastic, SelfLoopEdge,
)


logger = logging.getLogger(__name__)

# Relative slack for sum_j w_ij <= mu_i, absorbs rounding in derived measures
SUB_STOCHASTIC_RTOL = 1e-12


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def _check_pairs(n: int, pairs: Sequence[Tuple[int, int]]) -> None:
    """Reject out-of-range indices, self-loops and duplicate undirected edges."""
    seen = set()
    for i, j in pairs:
        if not (0 <= i < n and 0 <= j < n):
            raise IndexOutOfRange(f"Edge ({i}, {j}) outside node range 0..{n - 1}")
        if i == j:
            raise SelfLoopEdge(f"Self-loop at node {i}; self-loops are expressed through mu")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise DuplicateEdge(f"Edge {{{key[0]}, {key[1]}}} given more than once")
        seen.add(key)


@dataclass(frozen=True)
class Topology:
    """Unweighted undirected graph: node count plus edge list."""
    n: int
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch(f"A graph needs at least one node, got n={self.n}")
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        _check_pairs(self.n, edges)
        object.__setattr__(self, "edges", edges)

    def degrees(self) -> np.ndarray:
        """Number of neighbours of every node."""
        deg = np.zeros(self.n, dtype=np.int64)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency_mask(self) -> np.ndarray:
        """Dense boolean adjacency, zero diagonal."""
        mask = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.edges:
            mask[i, j] = mask[j, i] = True
        return mask


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """
    Immutable weighted graph.

    Weights are stored as a symmetric CSR matrix with sorted column indices,
    so every row is the ascending neighbour list of that node.
    """
    n: int
    weights: sp.csr_matrix = field(repr=False)
    mu: np.ndarray = field(repr=False)

    @cached_property
    def weighted_degree(self) -> np.ndarray:
        """mu^1_i = sum_{j in N_i} w_ij."""
        rows, _, w = self.edge_arrays
        return _readonly(np.bincount(rows, weights=w, minlength=self.n).astype(float))

    @cached_property
    def edge_arrays(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(rows, cols, w) for every ordered neighbour pair, ascending node then neighbour."""
        counts = np.diff(self.weights.indptr)
        rows = np.repeat(np.arange(self.n), counts)
        return (_readonly(rows), _readonly(self.weights.indices.copy()),
                _readonly(self.weights.data.copy()))

    @property
    def total_measure(self) -> float:
        """|V|_mu."""
        return float(self.mu.sum())

    @property
    def m_max(self) -> float:
        """M_max = max_i mu^1_i / mu_i."""
        return float(np.max(self.weighted_degree / self.mu))

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return int(self.weights.nnz // 2)

    @property
    def topology(self) -> Topology:
        """Underlying unweighted topology."""
        return Topology(self.n, tuple((i, j) for i, j, _ in self.edges()))

    def neighbors(self, i: int) -> np.ndarray:
        """Ascending neighbour indices of node i."""
        self._check_node(i)
        return self.weights.indices[self.weights.indptr[i]:self.weights.indptr[i + 1]]

    def weight(self, i: int, j: int) -> float:
        """w_ij, or 0.0 when {i, j} is not an edge."""
        self._check_node(i)
        self._check_node(j)
        return float(self.weights[i, j])

    def edges(self) -> Iterator[Tuple[int, int, float]]:
        """Undirected edges (i, j, w) with i < j, ascending."""
        rows, cols, w = self.edge_arrays
        for i, j, weight in zip(rows, cols, w):
            if i < j:
                yield int(i), int(j), float(weight)

    def weight_matrix(self) -> np.ndarray:
        """Dense symmetric weight matrix W."""
        return self.weights.toarray()

    def is_sub_stochastic(self, rtol: float = SUB_STOCHASTIC_RTOL) -> bool:
        """True iff sum_j w_ij <= mu_i at every node."""
        return bool(np.all(self.weighted_degree <= self.mu * (1.0 + rtol)))

    def _check_node(self, i: int):
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"Node {i} outside 0..{self.n - 1}")


@dataclass(frozen=True)
class GraphStats:
    """Aggregate quantities of a weighted graph."""
    total_measure: float
    m_max: float
    component_count: int
    component_labels: Tuple[int, ...]
    is_bipartite_structural: bool
    sub_stochastic: bool

    @property
    def connected(self) -> bool:
        return self.component_count == 1


def build_graph(n: int, weighted_edges: Sequence[Tuple[int, int, float]],
                mu: Sequence[float]) -> WeightedGraph:
    """
    Build a validated weighted graph.

    Args:
        n: Node count
        weighted_edges: Undirected edges (i, j, w), each pair at most once
        mu: Positive node measure of length n

    Returns:
        WeightedGraph with symmetric storage
    """
    if n < 1:
        raise DimensionMismatch(f"A graph needs at least one node, got n={n}")

    mu_arr = np.asarray(mu, dtype=float).reshape(-1)
    if mu_arr.shape[0] != n:
        raise DimensionMismatch(f"Measure has {mu_arr.shape[0]} entries for {n} nodes")
    bad = np.flatnonzero(~np.isfinite(mu_arr) | (mu_arr <= 0))
    if bad.size:
        raise NonPositiveMeasure(f"mu_{bad[0]} = {mu_arr[bad[0]]} is not positive")

    edges = [(int(i), int(j), float(w)) for i, j, w in weighted_edges]
    _check_pairs(n, [(i, j) for i, j, _ in edges])
    for i, j, w in edges:
        if not np.isfinite(w) or w <= 0:
            raise NonPositiveWeight(f"Edge ({i}, {j}) has weight {w}")

    if edges:
        src = np.array([e[0] for e in edges])
        dst = np.array([e[1] for e in edges])
        w = np.array([e[2] for e in edges])
        rows = np.concatenate([src, dst])
        cols = np.concatenate([dst, src])
        data = np.concatenate([w, w])
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        data = np.zeros(0)

    weights = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    weights.sort_indices()

    return WeightedGraph(n=n, weights=weights, mu=_readonly(mu_arr.copy()))


def preset_graph(topology: Topology, preset: str) -> WeightedGraph:
    """
    Unit-weight graph whose mu-Laplacian is one of the standard Laplacians.

    adj and adj_selfloop give mu_i = 1, rw gives mu_i = D_i and rw_selfloop
    gives mu_i = D_i + 1 (the self-loop of A + I lives in the measure).
    """
    if preset not in PRESETS:
        raise ValueError(f"Unknown preset '{preset}' (expected one of {', '.join(PRESETS)})")

    degrees = topology.degrees().astype(float)
    if preset in ("adj", "adj_selfloop"):
        mu = np.ones(topology.n)
    elif preset == "rw":
        isolated = np.flatnonzero(degrees == 0)
        if isolated.size:
            raise IsolatedNode(f"Node {isolated[0]} has degree 0; rw preset needs D_i >= 1")
        mu = degrees
    else:
        mu = degrees + 1.0

    return build_graph(topology.n, [(i, j, 1.0) for i, j in topology.edges], mu)


def attention_graph(scores: np.ndarray, adjacency: np.ndarray, shift: bool = False,
                    tolerances: Tolerances = DEFAULT_TOLERANCES) -> WeightedGraph:
    """
    Graph of a softmax attention aggregation with symmetric scores.

    w_ij = exp(e_ij) on neighbours and mu_i = exp(e_ii) + sum_j exp(e_ij),
    so that I + Laplacian reproduces the softmax rows exactly.

    Args:
        scores: n x n score matrix including the diagonal
        adjacency: n x n neighbour mask (diagonal ignored)
        shift: Subtract the largest used score before exponentiating.
            w and mu scale together, so the Laplacian is unchanged.
        tolerances: sym tolerance for e_ij == e_ji

    Returns:
        Strictly sub-stochastic WeightedGraph
    """
    e = np.asarray(scores, dtype=float)
    mask = np.asarray(adjacency, dtype=bool).copy()
    if e.ndim != 2 or e.shape[0] != e.shape[1] or mask.shape != e.shape:
        raise DimensionMismatch(f"Scores {e.shape} and mask {mask.shape} must be equal square shapes")
    n = e.shape[0]
    np.fill_diagonal(mask, False)

    if not np.array_equal(mask, mask.T):
        raise AsymmetricScores("Neighbour mask is not symmetric")
    used = mask | np.eye(n, dtype=bool)
    if not np.all(np.isfinite(e[used])):
        raise AsymmetricScores("Scores must be finite on neighbours and the diagonal")

    scale = np.maximum(1.0, np.maximum(np.abs(e), np.abs(e.T)))
    gap = np.where(mask, np.abs(e - e.T) / scale, 0.0)
    if np.any(gap > tolerances.sym):
        i, j = np.unravel_index(np.argmax(gap), gap.shape)
        raise AsymmetricScores(f"e[{i},{j}] = {e[i, j]} but e[{j},{i}] = {e[j, i]}")

    offset = float(np.max(e[used])) if shift else 0.0
    rows, cols = np.nonzero(np.triu(mask))
    omega = np.exp(e[rows, cols] - offset)
    edges = [(int(i), int(j), float(w)) for i, j, w in zip(rows, cols, omega)]

    mu = np.exp(np.diag(e) - offset)
    np.add.at(mu, rows, omega)
    np.add.at(mu, cols, omega)

    return build_graph(n, edges, mu)


def _check_stochastic(P: np.ndarray, tolerances: Tolerances) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"Transition matrix must be square, got {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0):
        raise NotRowStochastic("Transition matrix has negative or non-finite entries")
    row_error = np.abs(P.sum(axis=1) - 1.0)
    if np.any(row_error > tolerances.row):
        i = int(np.argmax(row_error))
        raise NotRowStochastic(f"Row {i} sums to {P[i].sum()!r}")
    support = P > 0
    np.fill_diagonal(support, False)
    if not np.array_equal(support, support.T):
        i, j = np.argwhere(support != support.T)[0]
        raise AsymmetricSupport(f"P[{i},{j}] = {P[i, j]} but P[{j},{i}] = {P[j, i]}")
    return P


def reversible_measure(P: np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES) -> np.ndarray:
    """
    Measure mu with P_ij mu_i = P_ji mu_j, normalised so min mu = 1.

    Ratios are propagated from node 0 along a BFS spanning tree; every
    non-tree edge is then checked (Kolmogorov consistency).
    """
    P = _check_stochastic(P, tolerances)
    n = P.shape[0]

    mu = np.full(n, np.nan)
    mu[0] = 1.0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in np.flatnonzero(P[i] > 0):
            if j != i and np.isnan(mu[j]):
                mu[j] = mu[i] * P[i, j] / P[j, i]
                queue.append(j)

    unreached = np.flatnonzero(np.isnan(mu))
    if unreached.size:
        raise DisconnectedGraph(f"Node {unreached[0]} unreachable from node 0")

    mu /= mu.min()
    flux = P * mu[:, None]
    imbalance = np.abs(flux - flux.T)
    worst = float(imbalance.max()) if n > 1 else 0.0
    if worst > tolerances.balance * mu.max():
        i, j = np.unravel_index(np.argmax(imbalance), imbalance.shape)
        raise NotReversible(
            f"Detailed balance fails on ({i}, {j}): "
            f"P_ij mu_i = {flux[i, j]!r}, P_ji mu_j = {flux[j, i]!r}"
        )
    logger.debug(f"Reversible measure recovered, max imbalance {worst:.3e}")
    return mu


def graph_from_reversible(P: np.ndarray, tolerances: Tolerances = DEFAULT_TOLERANCES) -> WeightedGraph:
    """Graph with mu the reversible measure of P and w_ij = P_ij mu_i."""
    mu = reversible_measure(P, tolerances)
    P = np.asarray(P, dtype=float)
    flux = P * mu[:, None]
    rows, cols = np.nonzero(np.triu(P > 0, k=1))
    edges = [(int(i), int(j), 0.5 * (flux[i, j] + flux[j, i])) for i, j in zip(rows, cols)]
    return build_graph(P.shape[0], edges, mu)


def _component_scan(g: WeightedGraph) -> Tuple[int, np.ndarray, bool]:
    """BFS over every component: labels plus a 2-colouring attempt."""
    labels = np.full(g.n, -1, dtype=np.int64)
    colour = np.zeros(g.n, dtype=np.int8)
    bipartite = True
    count = 0
    for root in range(g.n):
        if labels[root] >= 0:
            continue
        labels[root] = count
        queue = deque([root])
        while queue:
            i = queue.popleft()
            for j in g.neighbors(i):
                if labels[j] < 0:
                    labels[j] = count
                    colour[j] = 1 - colour[i]
                    queue.append(j)
                elif colour[j] == colour[i]:
                    bipartite = False
        count += 1
    return count, labels, bipartite


def connected_components(g: WeightedGraph) -> Tuple[int, np.ndarray]:
    """Number of connected components and per-node component labels."""
    count, labels, _ = _component_scan(g)
    return count, labels


def subgraph(g: WeightedGraph, nodes: Sequence[int]) -> WeightedGraph:
    """Induced subgraph on the given nodes, reindexed in ascending order."""
    keep = sorted(int(i) for i in nodes)
    index = {old: new for new, old in enumerate(keep)}
    edges = [(index[i], index[j], w) for i, j, w in g.edges() if i in index and j in index]
    return build_graph(len(keep), edges, g.mu[keep])


def graph_stats(g: WeightedGraph) -> GraphStats:
    """Total measure, M_max, components, structural bipartiteness, sub-stochasticity."""
    count, labels, bipartite = _component_scan(g)
    return GraphStats(
        total_measure=g.total_measure,
        m_max=g.m_max,
        component_count=count,
        component_labels=tuple(int(x) for x in labels),
        is_bipartite_structural=bipartite,
        sub_stochastic=g.is_sub_stochastic(),
    )


def component_nodes(g: WeightedGraph) -> List[np.ndarray]:
    """Node indices of every connected component."""
    count, labels = connected_components(g)
    return [np.flatnonzero(labels == c) for c in range(count)]

