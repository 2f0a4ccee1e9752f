"""
Untrained GCN / GAT forward passes for over-smoothing experiments.

A stack of random layers X <- phi(P X W) is applied to node features and
the derivative energies are recorded after every layer. GCN uses the fixed
symmetric aggregation D~^{-1/2}(A + I)D~^{-1/2}; GAT recomputes a softmax
aggregation per layer from symmetrised attention scores, which makes it a
reversible walk on its own (w, mu) graph.

Energies are measured on the rw_selfloop graph of the topology. For GCN the
features are first mapped to D~^{-1/2} X, the coordinates in which the
aggregation is that graph's random walk. Snapshots hold the measured
features, so a report can always be recomputed from them.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy.special import logsumexp

from calculus import NodeFunction, as_node_function
from dynamics import sym_propagate, walk_rate
from energy import energy_m
from graph_core import Topology, WeightedGraph, attention_graph, preset_graph
from graph_errors import (
    AllZeroEnergies, DimensionMismatch, DisconnectedGraph, InsufficientData, InvalidDims, NonPositiveMeasure,
    NonPositiveWeight,
)
from spectral import eigendecompose


logger = logging.getLogger(__name__)

ARCHITECTURES = ("gcn", "gat")
ACTIVATIONS = ("identity", "relu")
WEIGHT_INITS = ("glorot", "identity")

LEAKY_SLOPE = 0.2
# Energies below this are recorded as exact zeros and left out of fits
UNDERFLOW = 1e-300
MIN_FIT_DEPTHS = 4


@dataclass(frozen=True, eq=False)
class LayerStack:
    """Random layer weights (and GAT attention vectors) for one forward pass."""
    arch: str
    dims: Tuple[int, ...]
    weights: Tuple[np.ndarray, ...] = field(repr=False)
    attention: Tuple[np.ndarray, ...] = field(repr=False)
    activation: str
    seed: int

    @property
    def depth(self) -> int:
        return len(self.weights)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int, size) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=size)


def init_stack(arch: str, depth: int, dims: Sequence[int], seed: int = 0,
               activation: str = "relu", weight_init: str = "glorot") -> LayerStack:
    """
    Draw a layer stack.

    Args:
        arch: "gcn" or "gat"
        depth: Number of layers L >= 1
        dims: Feature widths d_0..d_L (length L + 1)
        seed: Seed for numpy's default generator
        activation: "identity" or "relu"
        weight_init: "glorot" (uniform) or "identity" (needs equal widths)

    Returns:
        LayerStack, identical for identical arguments
    """
    if arch not in ARCHITECTURES:
        raise ValueError(f"Unknown architecture '{arch}' (expected one of {', '.join(ARCHITECTURES)})")
    if activation not in ACTIVATIONS:
        raise ValueError(f"Unknown activation '{activation}' (expected one of {', '.join(ACTIVATIONS)})")
    if weight_init not in WEIGHT_INITS:
        raise ValueError(f"Unknown weight init '{weight_init}'")

    dims = tuple(int(d) for d in dims)
    if depth < 1:
        raise InvalidDims(f"Depth must be at least 1, got {depth}")
    if len(dims) != depth + 1:
        raise InvalidDims(f"Need {depth + 1} widths for depth {depth}, got {len(dims)}")
    if any(d < 1 for d in dims):
        raise InvalidDims(f"Widths must be positive: {dims}")
    if weight_init == "identity" and len(set(dims)) != 1:
        raise InvalidDims(f"Identity weights need equal widths, got {dims}")

    rng = np.random.default_rng(seed)
    weights = []
    attention = []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        if weight_init == "identity":
            weights.append(np.eye(d_in))
        else:
            weights.append(_glorot(rng, d_in, d_out, (d_in, d_out)))
        if arch == "gat":
            attention.append(_glorot(rng, 2 * d_out, 1, 2 * d_out))

    logger.debug(f"Initialised {arch} stack: depth {depth}, widths {dims[0]}..{dims[-1]}, seed {seed}")
    return LayerStack(arch=arch, dims=dims, weights=tuple(weights), attention=tuple(attention),
                      activation=activation, seed=seed)


def _activate(activation: str, x: np.ndarray) -> np.ndarray:
    if activation == "relu":
        return np.maximum(x, 0.0)
    return x


def gat_scores(h: np.ndarray, a: np.ndarray) -> np.ndarray:
    """LeakyReLU(a_l . h_i + a_r . h_j), averaged with its transpose."""
    d = h.shape[1]
    left = h @ a[:d]
    right = h @ a[d:]
    raw = left[:, None] + right[None, :]
    e = np.where(raw > 0, raw, LEAKY_SLOPE * raw)
    return 0.5 * (e + e.T)


def _layer_scores(topology: Topology, stack: LayerStack, layer: int, X: NodeFunction) -> np.ndarray:
    if stack.arch != "gat":
        raise ValueError("Only GAT layers carry attention scores")
    return gat_scores(X @ stack.weights[layer], stack.attention[layer])


def attention_matrix(topology: Topology, stack: LayerStack, layer: int, X: NodeFunction) -> np.ndarray:
    """
    Dense GAT aggregation P of one layer applied to input X.

    Each row is a softmax over the node itself and its neighbours, taken
    in the log domain so any finite scores give a row-stochastic matrix.
    """
    e = _layer_scores(topology, stack, layer, X)
    used = topology.adjacency_mask() | np.eye(topology.n, dtype=bool)
    masked = np.where(used, e, -np.inf)
    return np.exp(masked - logsumexp(masked, axis=1, keepdims=True))


def layer_graph(topology: Topology, stack: LayerStack, layer: int, X: NodeFunction) -> Optional[WeightedGraph]:
    """
    (w, mu) graph of the GAT aggregation of one layer applied to input X.

    Returns None, with a warning, when the scores span too wide a range for
    exp(e_ij) to be represented after a common shift.
    """
    e = _layer_scores(topology, stack, layer, X)
    try:
        return attention_graph(e, topology.adjacency_mask(), shift=True)
    except (NonPositiveMeasure, NonPositiveWeight) as exc:
        logger.warning(f"Layer {layer} attention graph not representable: {exc}")
        return None


def measurement_graph(topology: Topology) -> WeightedGraph:
    """Graph the layer energies are measured on."""
    return preset_graph(topology, "rw_selfloop")


def measured_features(arch: str, g: WeightedGraph, X: NodeFunction) -> NodeFunction:
    """D~^{-1/2} X for gcn, X for gat."""
    if arch == "gcn":
        return X / np.sqrt(g.mu)[:, None]
    return X


@dataclass
class OversmoothReport:
    """
    Energies per depth and an exponential fit E_1(k) ~ C_1 exp(-C_2 k).

    The fit fields are None when the recorded data does not support a fit
    (too few depths or every E_1 zero).
    """
    energies_by_depth: Dict[int, Dict[int, float]]
    log_slope: Optional[float] = None
    intercept: Optional[float] = None
    theoretical_rate: Optional[float] = None
    tail_fraction: float = 0.5

    @property
    def c1(self) -> Optional[float]:
        return None if self.intercept is None else math.exp(self.intercept)

    @property
    def c2(self) -> Optional[float]:
        return None if self.log_slope is None else -self.log_slope

    @property
    def orders(self) -> List[int]:
        first = min(self.energies_by_depth)
        return sorted(self.energies_by_depth[first])

    def depth_below(self, threshold: float) -> Optional[int]:
        """First depth with E_1 < threshold, or None."""
        for depth in sorted(self.energies_by_depth):
            if self.energies_by_depth[depth][1] < threshold:
                return depth
        return None

    def rows(self) -> List[Tuple]:
        """(depth, E_m for every recorded order)."""
        orders = self.orders
        return [(depth, *(self.energies_by_depth[depth][m] for m in orders))
                for depth in sorted(self.energies_by_depth)]

    def summary(self) -> Dict[str, Optional[float]]:
        return {
            "log_slope": self.log_slope,
            "depth_below_1e-10": self.depth_below(1e-10),
            "theoretical_rate": self.theoretical_rate,
            "C_1": self.c1,
            "C_2": self.c2,
        }


def _fit_tail(energies_by_depth: Dict[int, Dict[int, float]], tail_fraction: float) -> Tuple[float, float]:
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    depths = np.array(sorted(energies_by_depth), dtype=float)
    if depths.size < MIN_FIT_DEPTHS:
        raise InsufficientData(f"Need at least {MIN_FIT_DEPTHS} depths, got {depths.size}")
    e1 = np.array([energies_by_depth[int(d)][1] for d in depths])
    nonzero = e1 >= UNDERFLOW
    if not nonzero.any():
        raise AllZeroEnergies("Every recorded E_1 is zero or underflowed")

    start = depths[depths.size - math.ceil(tail_fraction * depths.size)]
    use = nonzero & (depths >= start)
    if use.sum() < 2:
        use = nonzero
    if use.sum() < 2:
        raise InsufficientData("Fewer than two nonzero energies to fit")

    slope, intercept = np.polyfit(depths[use], np.log(e1[use]), 1)
    return float(slope), float(intercept)


def oversmooth_report(energies_by_depth: Dict[int, Dict[int, float]], tail_fraction: float = 0.5,
                      theoretical_rate: Optional[float] = None) -> OversmoothReport:
    """
    Least-squares fit of log E_1 against depth over the last tail_fraction of depths.

    Zeros and underflowed values are excluded; when the tail holds fewer
    than two usable points every nonzero point is used.
    """
    slope, intercept = _fit_tail(energies_by_depth, tail_fraction)
    return OversmoothReport(energies_by_depth=energies_by_depth, log_slope=slope, intercept=intercept,
                            theoretical_rate=theoretical_rate, tail_fraction=tail_fraction)


def _record(g: WeightedGraph, Y: NodeFunction, orders: Sequence[int]) -> Dict[int, float]:
    energies = {}
    for m in orders:
        value = energy_m(g, Y, m)
        energies[m] = 0.0 if value < UNDERFLOW else value
    return energies


def _theoretical_rate(g: WeightedGraph) -> Optional[float]:
    try:
        rate, _ = walk_rate(eigendecompose(g))
    except DisconnectedGraph:
        return None
    return rate


def forward(topology: Topology, stack: LayerStack, X0: NodeFunction, record_orders: Sequence[int] = (0, 1, 2),
            tail_fraction: float = 0.5,
            snapshots: Optional[List[NodeFunction]] = None) -> Tuple[NodeFunction, OversmoothReport]:
    """
    Run the stack and record energies at depth 0..L.

    Args:
        topology: Graph topology
        stack: Layer stack from init_stack
        X0: Input features, n x dims[0]
        record_orders: Energy orders to record (E_1 is always recorded)
        tail_fraction: Share of depths used by the decay fit
        snapshots: If given, receives measured_features of the output of
            every layer; energy_m on the measurement graph reproduces the
            report from them

    Returns:
        (features after the last layer, OversmoothReport)
    """
    X = as_node_function(X0, topology.n)
    if X.shape[1] != stack.dims[0]:
        raise DimensionMismatch(f"Input width {X.shape[1]} does not match stack width {stack.dims[0]}")

    orders = sorted(set(record_orders) | {1})
    g = measurement_graph(topology)
    energies = {0: _record(g, measured_features(stack.arch, g, X), orders)}

    for layer, W in enumerate(stack.weights):
        if stack.arch == "gcn":
            aggregated, _ = sym_propagate(g, X @ W, 1, certify=False)
        else:
            aggregated = attention_matrix(topology, stack, layer, X) @ (X @ W)
        X = _activate(stack.activation, aggregated)
        Y = measured_features(stack.arch, g, X)
        energies[layer + 1] = _record(g, Y, orders)
        if snapshots is not None:
            snapshots.append(Y.copy())

    logger.info(f"{stack.arch} forward pass: depth {stack.depth}, "
                f"E_1 {energies[0][1]:.3e} -> {energies[stack.depth][1]:.3e}")

    report = OversmoothReport(energies_by_depth=energies, theoretical_rate=_theoretical_rate(g),
                              tail_fraction=tail_fraction)
    try:
        report.log_slope, report.intercept = _fit_tail(energies, tail_fraction)
    except (InsufficientData, AllZeroEnergies) as e:
        logger.warning(f"No decay fit: {e}")
    return X, report
