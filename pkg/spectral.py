"""
Spectral analysis of -Delta_mu.

The operator is self-adjoint in the mu-weighted inner product, so it is
decomposed through the symmetric conjugate S = M^{-1/2}(D_w - W)M^{-1/2}
with a dense symmetric eigensolver. Eigenfunctions are returned
mu-orthonormal. The scalar operator is decomposed once and acts on every
feature column.
"""

from dataclasses import dataclass, field
from typing import Dict
import hashlib
import logging

import numpy as np
from scipy import linalg

from analysis_config import DEFAULT_TOLERANCES, Tolerances
from calculus import ArrayLike, as_node_function
from graph_core import WeightedGraph, graph_stats
from graph_errors import (
    DisconnectedGraph, NegativeOrder, NumericalFailure, PreconditionViolated,
)


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues of -Delta_mu with mu-orthonormal eigenfunctions (columns)."""
    alphas: np.ndarray = field(repr=False)
    eigfuncs: np.ndarray = field(repr=False)
    mu: np.ndarray = field(repr=False)
    zero_tol: float

    @property
    def n(self) -> int:
        return self.alphas.shape[0]

    @property
    def lambda_n(self) -> float:
        """Largest eigenvalue."""
        return float(self.alphas[-1])

    @property
    def zero_count(self) -> int:
        """Number of eigenvalues classified as zero (= number of components)."""
        return int(np.sum(self.alphas <= self.zero_tol))

    @property
    def clean_alphas(self) -> np.ndarray:
        """Eigenvalues with the zero modes set exactly to 0."""
        return np.where(self.alphas > self.zero_tol, self.alphas, 0.0)


@dataclass(frozen=True)
class LambdaMaxCheck:
    """lambda_N against the 2 M_max bound."""
    lambda_n: float
    bound: float
    holds: bool


def _symmetric_operator(g: WeightedGraph) -> np.ndarray:
    inv_sqrt = 1.0 / np.sqrt(g.mu)
    laplacian = np.diag(g.weighted_degree) - g.weight_matrix()
    return inv_sqrt[:, None] * laplacian * inv_sqrt[None, :]


def eigendecompose(g: WeightedGraph, tolerances: Tolerances = DEFAULT_TOLERANCES) -> SpectralDecomposition:
    """
    Full eigendecomposition of -Delta_mu.

    Args:
        g: Weighted graph
        tolerances: zero tolerance, scaled by max(1, lambda_N)

    Returns:
        SpectralDecomposition with v_k = M^{-1/2} u_k
    """
    try:
        alphas, vectors = linalg.eigh(_symmetric_operator(g))
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Eigensolver failed on a {g.n}-node graph: {e}") from e

    eigfuncs = vectors / np.sqrt(g.mu)[:, None]
    zero_tol = tolerances.zero * max(1.0, float(alphas[-1]))
    for array in (alphas, eigfuncs):
        array.setflags(write=False)

    sd = SpectralDecomposition(alphas=alphas, eigfuncs=eigfuncs, mu=g.mu, zero_tol=zero_tol)
    logger.debug(f"Decomposed {g.n}-node graph: lambda_N = {sd.lambda_n:.6g}, "
                 f"{sd.zero_count} zero eigenvalue(s)")
    return sd


def largest_eigenvalue(g: WeightedGraph) -> float:
    """lambda_N(-Delta_mu) without eigenvectors."""
    try:
        top = linalg.eigh(_symmetric_operator(g), eigvals_only=True,
                          subset_by_index=[g.n - 1, g.n - 1])
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalFailure(f"Eigensolver failed on a {g.n}-node graph: {e}") from e
    return float(top[0])


def spectral_gap(sd: SpectralDecomposition) -> float:
    """lambda_1, the smallest nonzero eigenvalue of a connected graph."""
    zeros = sd.zero_count
    if zeros != 1:
        raise DisconnectedGraph(f"{zeros} zero eigenvalues; spectral gap needs a connected graph")
    if sd.n < 2:
        raise PreconditionViolated("A single node has no nonzero eigenvalue")
    return float(sd.alphas[1])


def lambda_max_check(g: WeightedGraph, sd: SpectralDecomposition) -> LambdaMaxCheck:
    """lambda_N <= 2 M_max, with 1e-9 absolute slack."""
    bound = 2.0 * g.m_max
    return LambdaMaxCheck(lambda_n=sd.lambda_n, bound=bound, holds=sd.lambda_n <= bound + 1e-9)


def bipartite_spectral_test(g: WeightedGraph, sd: SpectralDecomposition,
                            tolerances: Tolerances = DEFAULT_TOLERANCES) -> bool:
    """
    True iff lambda_N == 2 within the bipartite tolerance.

    Requires a connected sub-stochastic graph with at least one edge. The
    equivalence with structural bipartiteness needs sum_j w_ij = mu_i; any
    positive laziness mu_i - sum_j w_ij pulls lambda_N below 2.
    """
    stats = graph_stats(g)
    if g.n < 2 or not stats.connected:
        raise PreconditionViolated("Bipartite test needs a connected graph with at least one edge")
    if not stats.sub_stochastic:
        raise PreconditionViolated("Bipartite test needs sum_j w_ij <= mu_i at every node")
    return abs(sd.lambda_n - 2.0) <= tolerances.bipartite


def spectral_coefficients(sd: SpectralDecomposition, f: ArrayLike) -> np.ndarray:
    """C[k, c] = int v_k f_c dmu."""
    f = as_node_function(f, sd.n)
    return sd.eigfuncs.T @ (f * sd.mu[:, None])


def reconstruct(sd: SpectralDecomposition, coefficients: np.ndarray) -> np.ndarray:
    """sum_k C_k v_k."""
    return sd.eigfuncs @ np.asarray(coefficients, dtype=float)


def order_weights(sd: SpectralDecomposition, m: int) -> np.ndarray:
    """alpha_k^m, with alpha^0 = 1 only on nonzero modes."""
    if m < 0:
        raise NegativeOrder(f"Derivative order must be >= 0, got {m}")
    alphas = sd.clean_alphas
    if m == 0:
        return (alphas > 0).astype(float)
    return alphas ** m


def spectral_energy(sd: SpectralDecomposition, f: ArrayLike, m: int) -> float:
    """int ||grad^m f||^2 dmu = sum_{k,c} alpha_k^m C_{k,c}^2."""
    weights = order_weights(sd, m)
    coefficients = spectral_coefficients(sd, f)
    return float(np.sum(weights[:, None] * coefficients ** 2))


class DecompositionCache:
    """
    In-memory cache of decompositions.

    Keys are md5 digests of the graph arrays, so equal graphs built
    separately share one decomposition.
    """

    def __init__(self, tolerances: Tolerances = DEFAULT_TOLERANCES):
        self.tolerances = tolerances
        self._entries: Dict[str, SpectralDecomposition] = {}

    @staticmethod
    def get_cache_key(g: WeightedGraph) -> str:
        """Digest of n, mu and the CSR weight arrays."""
        digest = hashlib.md5(str(g.n).encode())
        for array in (g.mu, g.weights.indptr, g.weights.indices, g.weights.data):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()

    def get(self, g: WeightedGraph) -> SpectralDecomposition:
        """Cached decomposition of g, computed on first request."""
        key = self.get_cache_key(g)
        if key in self._entries:
            logger.debug(f"Using cached decomposition: {key}")
            return self._entries[key]
        logger.info(f"Decomposing graph with {g.n} nodes, {g.num_edges} edges")
        sd = eigendecompose(g, self.tolerances)
        self._entries[key] = sd
        return sd

    def __len__(self) -> int:
        return len(self._entries)

    def clear(self):
        """Remove all cached decompositions."""
        self._entries.clear()
        logger.info("Cleared decomposition cache")
