"""
Higher-order derivative energies and the inequalities that relate them.

E_m(f) = (1/n) int ||grad^m f||^2 dmu, where grad^m is a power of -Delta_mu
for even m and the gradient of such a power for odd m. m = 0 measures the
mu-centred norm. gamma_m = sqrt(E_m) is a node similarity measure.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple
import logging
import math

import numpy as np

from analysis_config import DEFAULT_TOLERANCES, Tolerances
from calculus import (
    ArrayLike, NodeFunction, as_node_function, gradient_energy, integrate,
    l2_norm_sq, laplacian_apply, laplacian_power,
)
from graph_core import Topology, WeightedGraph, component_nodes, subgraph
from graph_errors import NegativeOrder
from spectral import SpectralDecomposition, eigendecompose, spectral_gap


logger = logging.getLogger(__name__)


@dataclass
class EnergyReport:
    """E_m and gamma_m per order, plus the unnormalised integrals n * E_m."""
    orders: List[int]
    values: Dict[int, Tuple[float, float]]
    integrals: Dict[int, float]
    n: int

    def energy(self, m: int) -> float:
        return self.values[m][0]

    def gamma(self, m: int) -> float:
        return self.values[m][1]

    def rows(self) -> List[Tuple[int, float, float]]:
        """(m, E_m, gamma_m) in the requested order."""
        return [(m, self.values[m][0], self.values[m][1]) for m in self.orders]


@dataclass(frozen=True)
class PoincareCheck:
    """lambda_1 int||f - mean||^2 <= int||grad f||^2 <= 2 M_max int||f - mean||^2."""
    lhs: float
    rhs: float
    upper: float
    holds: bool


@dataclass(frozen=True)
class InequalityCheck:
    """One inequality lhs <= rhs; slack = rhs - lhs."""
    name: str
    lhs: float
    rhs: float
    slack: float
    holds: bool


@dataclass
class EquivalenceReport:
    checks: List[InequalityCheck] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(c.holds for c in self.checks)


def _tolerance(tolerances: Tolerances, *magnitudes: float) -> float:
    return tolerances.check * max(1.0, *(abs(x) for x in magnitudes))


def _inequality(name: str, lhs: float, rhs: float, tolerances: Tolerances) -> InequalityCheck:
    slack = rhs - lhs
    return InequalityCheck(name=name, lhs=lhs, rhs=rhs, slack=slack,
                           holds=slack >= -_tolerance(tolerances, lhs, rhs))


def center(g: WeightedGraph, f: ArrayLike) -> NodeFunction:
    """f minus its mu-mean, columnwise."""
    f = as_node_function(f, g.n)
    return f - integrate(g, f) / g.total_measure


def derivative_integral(g: WeightedGraph, f: ArrayLike, m: int) -> float:
    """
    int ||grad^m f||^2 dmu, without the 1/n prefactor.

    Args:
        g: Weighted graph
        f: Node function (n x d)
        m: Derivative order

    Returns:
        Nonnegative float
    """
    if m < 0:
        raise NegativeOrder(f"Derivative order must be >= 0, got {m}")
    f = as_node_function(f, g.n)
    if m == 0:
        return l2_norm_sq(g, center(g, f))
    if m % 2 == 0:
        return l2_norm_sq(g, laplacian_power(g, f, m // 2))
    return max(0.0, gradient_energy(g, laplacian_power(g, f, (m - 1) // 2)))


def energy_m(g: WeightedGraph, f: ArrayLike, m: int) -> float:
    """E_m(f) = derivative_integral / n."""
    return derivative_integral(g, f, m) / g.n


def gamma_m(g: WeightedGraph, f: ArrayLike, m: int) -> float:
    """Node similarity sqrt(E_m(f))."""
    return math.sqrt(energy_m(g, f, m))


def energy_report(g: WeightedGraph, f: ArrayLike, orders: Sequence[int] = (0, 1, 2)) -> EnergyReport:
    """E_m and gamma_m for every requested order."""
    f = as_node_function(f, g.n)
    integrals = {}
    values = {}
    for m in orders:
        total = derivative_integral(g, f, m)
        integrals[m] = total
        values[m] = (total / g.n, math.sqrt(total / g.n))
    logger.debug(f"Energies for orders {list(orders)}: "
                 + ", ".join(f"E_{m}={values[m][0]:.6g}" for m in orders))
    return EnergyReport(orders=list(orders), values=values, integrals=integrals, n=g.n)


def mean_deviation_energy(f: ArrayLike) -> float:
    """E_W(X) = (1/n) ||X - 1 gamma_X||^2 with gamma_X the row mean."""
    X = np.asarray(f, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return float(np.sum((X - X.mean(axis=0)) ** 2) / X.shape[0])


def edge_dirichlet_energy(topology: Topology, f: ArrayLike) -> float:
    """E_D(X) = (1/n) sum_i sum_{j in N_i} ||X_i - X_j||^2."""
    X = as_node_function(f, topology.n)
    total = 0.0
    for i, j in topology.edges:
        total += 2.0 * float(np.sum((X[i] - X[j]) ** 2))
    return total / topology.n


def poincare_check(g: WeightedGraph, f: ArrayLike, sd: SpectralDecomposition,
                   tolerances: Tolerances = DEFAULT_TOLERANCES) -> PoincareCheck:
    """Both sides of the Poincare inequality on a connected graph."""
    lambda_1 = spectral_gap(sd)
    centred = l2_norm_sq(g, center(g, f))
    lhs = lambda_1 * centred
    rhs = gradient_energy(g, f)
    upper = 2.0 * g.m_max * centred
    tol = _tolerance(tolerances, lhs, rhs, upper)
    return PoincareCheck(lhs=lhs, rhs=rhs, upper=upper,
                         holds=lhs <= rhs + tol and rhs <= upper + tol)


def _sandwich(g: WeightedGraph, f: NodeFunction, lambda_1: float, suffix: str,
              tolerances: Tolerances) -> List[InequalityCheck]:
    lap = laplacian_apply(g, f)
    grad_sq = gradient_energy(g, f)
    lap_sq = l2_norm_sq(g, lap)
    grad_lap_sq = gradient_energy(g, lap)
    bound = 2.0 * g.m_max
    return [
        _inequality(f"gap_grad_le_lap{suffix}", lambda_1 * grad_sq, lap_sq, tolerances),
        _inequality(f"lap_le_mmax_grad{suffix}", lap_sq, bound * grad_sq, tolerances),
        _inequality(f"lap_le_grad_lap_over_gap{suffix}", lap_sq, grad_lap_sq / lambda_1, tolerances),
        _inequality(f"grad_lap_le_mmax_lap{suffix}", grad_lap_sq, bound * lap_sq, tolerances),
    ]


def equivalence_check(g: WeightedGraph, f: ArrayLike, sd: SpectralDecomposition,
                      per_component: bool = False,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> EquivalenceReport:
    """
    The four inequalities chaining int||grad f||^2, int||Delta f||^2 and
    int||grad Delta f||^2 with constants lambda_1 and 2 M_max.

    Without per_component the graph must be connected. With it, every
    component with at least two nodes is checked against its own gap and
    M_max; check names carry a "[cK]" suffix.
    """
    f = as_node_function(f, g.n)
    if not per_component:
        return EquivalenceReport(_sandwich(g, f, spectral_gap(sd), "", tolerances))

    report = EquivalenceReport()
    for index, nodes in enumerate(component_nodes(g)):
        if nodes.size < 2:
            logger.debug(f"Skipping single-node component {index}")
            continue
        part = subgraph(g, nodes)
        lambda_1 = spectral_gap(eigendecompose(part, tolerances))
        report.checks.extend(_sandwich(part, f[nodes], lambda_1, f"[c{index}]", tolerances))
    return report
