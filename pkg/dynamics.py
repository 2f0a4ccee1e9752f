"""
Heat diffusion and random-walk propagation on weighted graphs.

The exact heat flow uses the spectral decomposition; an explicit Euler
stepper cross-checks it. Random walks apply P_mu = I + Delta_mu and require
sum_j w_ij <= mu_i. Decay certificates compare the measured Dirichlet
energy ratio with the guaranteed exponential rate.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from analysis_config import DEFAULT_TOLERANCES, Tolerances
from calculus import ArrayLike, NodeFunction, as_node_function, gradient_energy, l2_norm_sq, laplacian_apply
from energy import energy_m
from graph_core import WeightedGraph
from graph_errors import (
    ConstantInitialCondition, InvalidTimeGrid, NegativeTime, NotSubStochastic,
    PreconditionViolated, UnstableStep,
)
from spectral import SpectralDecomposition, eigendecompose, largest_eigenvalue, spectral_coefficients, spectral_gap


logger = logging.getLogger(__name__)

TRAJECTORY_KINDS = ("heat_exact", "heat_euler", "walk", "sym_walk")
NO_GUARANTEE_NOTE = "no over-smoothing guarantee"

# Relative threshold below which the initial Dirichlet energy counts as zero
CONSTANT_RTOL = 1e-24


@dataclass
class TrajectorySample:
    abscissa: float
    energies: Dict[int, float]
    snapshot: Optional[np.ndarray] = None


@dataclass
class Trajectory:
    """Energies recorded along a diffusion or walk, abscissae strictly increasing."""
    kind: str
    orders: List[int]
    samples: List[TrajectorySample] = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in TRAJECTORY_KINDS:
            raise ValueError(f"Unknown trajectory kind '{self.kind}'")

    def record(self, g: WeightedGraph, abscissa: float, f: NodeFunction, snapshot: bool = False):
        """Append the energies of f at the given time or step."""
        if self.samples and abscissa <= self.samples[-1].abscissa:
            raise ValueError(f"Abscissa {abscissa} does not follow {self.samples[-1].abscissa}")
        energies = {m: energy_m(g, f, m) for m in self.orders}
        self.samples.append(TrajectorySample(abscissa, energies, f.copy() if snapshot else None))

    def energy_series(self, m: int) -> np.ndarray:
        return np.array([s.energies[m] for s in self.samples])

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class DecayCertificate:
    """Observed energy ratio against the guaranteed rate at one time or step."""
    abscissa: float
    rate: float
    observed: float
    satisfied: bool
    slack: float
    note: str = ""


def _certificate(abscissa: float, rate: float, observed: float, tolerances: Tolerances,
                 note: str = "") -> DecayCertificate:
    slack = rate - observed
    return DecayCertificate(abscissa=abscissa, rate=rate, observed=observed,
                            satisfied=observed <= rate + tolerances.check * max(1.0, rate),
                            slack=slack, note=note)


def _initial_energy(g: WeightedGraph, f: NodeFunction) -> float:
    e0 = gradient_energy(g, f)
    if e0 <= CONSTANT_RTOL * max(1.0, l2_norm_sq(g, f)):
        raise ConstantInitialCondition("Initial condition is constant on every component")
    return e0


def _require_sub_stochastic(g: WeightedGraph):
    if not g.is_sub_stochastic():
        i = int(np.argmax(g.weighted_degree / g.mu))
        raise NotSubStochastic(
            f"Node {i}: sum_j w_ij = {g.weighted_degree[i]!r} exceeds mu_i = {g.mu[i]!r}"
        )


# Heat equation

def heat_evolve(g: WeightedGraph, sd: SpectralDecomposition, f0: ArrayLike, t: float) -> NodeFunction:
    """
    Exact solution of df/dt = Delta_mu f at time t.

    Computed as f0 + sum_k (exp(-alpha_k t) - 1) C_k v_k so that t = 0
    returns f0 unchanged and zero modes contribute nothing.
    """
    if t < 0:
        raise NegativeTime(f"Time must be nonnegative, got {t}")
    f0 = as_node_function(f0, g.n)
    if t == 0:
        return f0.copy()
    coefficients = spectral_coefficients(sd, f0)
    decay = np.expm1(-sd.clean_alphas * t)
    return f0 + sd.eigfuncs @ (decay[:, None] * coefficients)


def _step_count(t: float, dt: float) -> int:
    if t < 0:
        raise NegativeTime(f"Time must be nonnegative, got {t}")
    if not dt > 0:
        raise InvalidTimeGrid(f"Step must be positive, got {dt}")
    steps = int(round(t / dt))
    if abs(steps * dt - t) > 1e-9 * max(1.0, t):
        raise InvalidTimeGrid(f"t = {t} is not a multiple of dt = {dt}")
    return steps


def _check_stable(g: WeightedGraph, dt: float, lambda_n: Optional[float]):
    lambda_n = largest_eigenvalue(g) if lambda_n is None else lambda_n
    if lambda_n > 0 and dt > (2.0 / lambda_n) * (1.0 + 1e-12):
        raise UnstableStep(f"dt = {dt} exceeds the stability bound 2/lambda_N = {2.0 / lambda_n:.6g}")


def heat_evolve_euler(g: WeightedGraph, f0: ArrayLike, t: float, dt: float,
                      lambda_n: Optional[float] = None) -> NodeFunction:
    """
    Explicit Euler integration f <- f + dt * Delta_mu f.

    Args:
        g: Weighted graph
        f0: Initial condition
        t: Final time, an integer multiple of dt
        dt: Step, at most 2 / lambda_N
        lambda_n: Largest eigenvalue if already known

    Returns:
        Approximation of f_t, first order in dt
    """
    steps = _step_count(t, dt)
    _check_stable(g, dt, lambda_n)
    f = as_node_function(f0, g.n).copy()
    for _ in range(steps):
        f = f + dt * laplacian_apply(g, f)
    return f


def heat_decay_certificate(g: WeightedGraph, sd: SpectralDecomposition, f0: ArrayLike,
                           t_list: Sequence[float],
                           tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[DecayCertificate]:
    """int||grad f_t||^2 / int||grad f_0||^2 against exp(-2 lambda_1 t)."""
    lambda_1 = spectral_gap(sd)
    f0 = as_node_function(f0, g.n)
    e0 = _initial_energy(g, f0)
    certificates = []
    for t in t_list:
        observed = gradient_energy(g, heat_evolve(g, sd, f0, t)) / e0
        certificates.append(_certificate(float(t), math.exp(-2.0 * lambda_1 * t), observed, tolerances))
    return certificates


# Random walks

def random_walk_step(g: WeightedGraph, f: ArrayLike) -> NodeFunction:
    """P_mu f = f + Delta_mu f."""
    _require_sub_stochastic(g)
    f = as_node_function(f, g.n)
    return f + laplacian_apply(g, f)


def walk_propagate(g: WeightedGraph, f: ArrayLike, k: int) -> NodeFunction:
    """P_mu^k f."""
    if k < 0:
        raise PreconditionViolated(f"Step count must be nonnegative, got {k}")
    _require_sub_stochastic(g)
    f = as_node_function(f, g.n)
    for _ in range(k):
        f = f + laplacian_apply(g, f)
    return f


def random_walk_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense P_mu = I + M^{-1}(W - D_w); the diagonal holds (mu_i - sum_j w_ij) / mu_i."""
    _require_sub_stochastic(g)
    P = g.weight_matrix() / g.mu[:, None]
    P[np.diag_indices(g.n)] = (g.mu - g.weighted_degree) / g.mu
    return P


def walk_rate(sd: SpectralDecomposition, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[float, str]:
    """
    Per-step factor 1 - (2 - lambda_N) lambda_1 with an explanatory note.

    When lambda_N is 2 within the bipartite tolerance the factor is exactly 1.
    """
    lambda_1 = spectral_gap(sd)
    lambda_n = sd.lambda_n
    if abs(lambda_n - 2.0) <= tolerances.bipartite:
        return 1.0, NO_GUARANTEE_NOTE
    return 1.0 - (2.0 - lambda_n) * lambda_1, ""


def walk_decay_certificate(g: WeightedGraph, sd: SpectralDecomposition, f: ArrayLike, k_max: int,
                           tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[DecayCertificate]:
    """
    Energy ratio after k walk steps against rate^k, for k = 1..k_max.

    On a bipartite graph with sum_j w_ij = mu_i the rate is 1 and the
    bound is vacuous; the certificates carry a note and a warning is logged.
    """
    _require_sub_stochastic(g)
    f = as_node_function(f, g.n)
    e0 = _initial_energy(g, f)
    rate, note = walk_rate(sd, tolerances)
    if note:
        logger.warning(f"lambda_N = {sd.lambda_n:.12g}: walk decay rate is 1, {note}")

    certificates = []
    for k in range(1, k_max + 1):
        f = f + laplacian_apply(g, f)
        certificates.append(_certificate(float(k), rate ** k, gradient_energy(g, f) / e0, tolerances, note))
    return certificates


def _require_selfloop_rw(g: WeightedGraph):
    if not np.all(g.weights.data == 1.0) or not np.array_equal(g.mu, g.weighted_degree + 1.0):
        raise PreconditionViolated("Symmetric propagation needs unit weights and mu_i = D_i + 1")


def sym_adjacency_matrix(g: WeightedGraph) -> np.ndarray:
    """Dense D~^{-1/2} (A + I) D~^{-1/2} for a rw_selfloop graph."""
    _require_selfloop_rw(g)
    inv_sqrt = 1.0 / np.sqrt(g.mu)
    A = g.weight_matrix() + np.eye(g.n)
    return inv_sqrt[:, None] * A * inv_sqrt[None, :]


def sym_propagate(g: WeightedGraph, f: ArrayLike, k: int, sd: Optional[SpectralDecomposition] = None,
                  certify: bool = True,
                  tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[NodeFunction, Optional[DecayCertificate]]:
    """
    A_sym^k f computed as D~^{1/2} P^k D~^{-1/2} f on the rw_selfloop graph.

    Args:
        g: Graph built with the rw_selfloop preset
        f: Node function
        k: Number of propagation steps
        sd: Decomposition of g, computed when needed and not given
        certify: Also certify the decay of D~^{-1/2} A_sym^k f
        tolerances: Check and bipartite tolerances

    Returns:
        (A_sym^k f, certificate), the certificate is None when D~^{-1/2} f
        is constant or certify is False
    """
    _require_selfloop_rw(g)
    f = as_node_function(f, g.n)
    scale = np.sqrt(g.mu)[:, None]
    h0 = f / scale
    hk = walk_propagate(g, h0, k)
    out = scale * hk
    if not certify:
        return out, None

    try:
        e0 = _initial_energy(g, h0)
    except ConstantInitialCondition:
        return out, None
    sd = eigendecompose(g, tolerances) if sd is None else sd
    rate, note = walk_rate(sd, tolerances)
    return out, _certificate(float(k), rate ** k, gradient_energy(g, hk) / e0, tolerances, note)


# Trajectories

def heat_trajectory(g: WeightedGraph, sd: SpectralDecomposition, f0: ArrayLike, times: Sequence[float],
                    orders: Sequence[int] = (0, 1, 2), snapshots: bool = False) -> Trajectory:
    """Exact heat flow energies at each requested time."""
    trajectory = Trajectory("heat_exact", list(orders))
    for t in times:
        trajectory.record(g, float(t), heat_evolve(g, sd, f0, t), snapshots)
    return trajectory


def euler_trajectory(g: WeightedGraph, f0: ArrayLike, dt: float, steps: int,
                     orders: Sequence[int] = (0, 1, 2), snapshots: bool = False) -> Trajectory:
    """Energies after every Euler step."""
    _check_stable(g, dt, None)
    trajectory = Trajectory("heat_euler", list(orders))
    f = as_node_function(f0, g.n).copy()
    for step in range(1, steps + 1):
        f = f + dt * laplacian_apply(g, f)
        trajectory.record(g, step * dt, f, snapshots)
    return trajectory


def walk_trajectory(g: WeightedGraph, f0: ArrayLike, steps: int,
                    orders: Sequence[int] = (0, 1, 2), snapshots: bool = False) -> Trajectory:
    """Energies of P_mu^k f0 for k = 1..steps."""
    _require_sub_stochastic(g)
    trajectory = Trajectory("walk", list(orders))
    f = as_node_function(f0, g.n)
    for k in range(1, steps + 1):
        f = f + laplacian_apply(g, f)
        trajectory.record(g, float(k), f, snapshots)
    return trajectory


def sym_trajectory(g: WeightedGraph, f0: ArrayLike, steps: int,
                   orders: Sequence[int] = (0, 1, 2), snapshots: bool = False) -> Trajectory:
    """
    Energies of D~^{-1/2} A_sym^k f0 for k = 1..steps.

    Snapshots hold A_sym^k f0 itself.
    """
    _require_selfloop_rw(g)
    scale = np.sqrt(g.mu)[:, None]
    trajectory = Trajectory("sym_walk", list(orders))
    h = as_node_function(f0, g.n) / scale
    for k in range(1, steps + 1):
        h = h + laplacian_apply(g, h)
        trajectory.record(g, float(k), h, False)
        if snapshots:
            trajectory.samples[-1].snapshot = scale * h
    return trajectory
