#!/usr/bin/env python3
"""
Numerical verification of the graph calculus identities and bounds.

Runs every check on one graph and one node function and reports one row
per check: name, lhs, rhs, slack, pass. A check that cannot run (for
example a spectral-gap bound on a disconnected graph) is reported as a
failed row naming the error.
"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence
import logging
import math
import sys

import numpy as np

from analysis_config import DEFAULT_TOLERANCES, Tolerances
from calculus import as_node_function, ibp_residual, l2_norm_sq, self_adjointness_residual
from dynamics import heat_decay_certificate, walk_decay_certificate
from energy import derivative_integral, equivalence_check, gamma_m, poincare_check
from graph_core import WeightedGraph, graph_from_reversible, graph_stats
from graph_errors import GraphAnalysisError
from spectral import (
    DecompositionCache, SpectralDecomposition, bipartite_spectral_test, lambda_max_check,
    spectral_energy,
)


logger = logging.getLogger(__name__)

HEADER = ("name", "lhs", "rhs", "slack", "pass")
SPECTRAL_RTOL = 1e-7
IBP_RTOL = 1e-10


@dataclass(frozen=True)
class CheckRow:
    """One verified inequality lhs <= rhs."""
    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    detail: str = ""

    def as_tuple(self):
        return (self.name, self.lhs, self.rhs, self.slack, self.passed)


@dataclass
class VerifyResult:
    rows: List[CheckRow]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


def _row(name: str, lhs: float, rhs: float, passed: Optional[bool] = None, detail: str = "") -> CheckRow:
    slack = rhs - lhs
    return CheckRow(name, float(lhs), float(rhs), float(slack), slack >= 0 if passed is None else bool(passed), detail)


def _guarded(name: str, check: Callable[[], List[CheckRow]]) -> List[CheckRow]:
    try:
        return check()
    except GraphAnalysisError as e:
        logger.warning(f"{name}: {type(e).__name__}: {e}")
        return [CheckRow(name, math.nan, math.nan, math.nan, False, type(e).__name__)]


def check_integration_by_parts(g: WeightedGraph, f: np.ndarray, h: np.ndarray,
                               sd: SpectralDecomposition) -> List[CheckRow]:
    """int Delta f . h = -int grad f . grad h, and self-adjointness of Delta."""
    scale = IBP_RTOL * max(1.0, math.sqrt(l2_norm_sq(g, f) * l2_norm_sq(g, h)) * max(1.0, sd.lambda_n))
    return [
        _row("integration_by_parts", ibp_residual(g, f, h), scale),
        _row("self_adjointness", self_adjointness_residual(g, f, h), scale),
    ]


def check_lambda_max(g: WeightedGraph, sd: SpectralDecomposition) -> List[CheckRow]:
    """lambda_N <= 2 M_max."""
    result = lambda_max_check(g, sd)
    return [_row("lambda_max_bound", result.lambda_n, result.bound, result.holds)]


def check_bipartite(g: WeightedGraph, sd: SpectralDecomposition, tolerances: Tolerances) -> List[CheckRow]:
    """lambda_N == 2 agrees with a structural 2-colouring (tight sub-stochastic graphs)."""
    stats = graph_stats(g)
    if stats.connected and not stats.sub_stochastic:
        logger.info("Graph is not sub-stochastic, bipartite check skipped")
        return []
    spectral = bipartite_spectral_test(g, sd, tolerances)
    tight = bool(np.allclose(g.weighted_degree, g.mu, rtol=1e-12, atol=0.0))
    expected = stats.is_bipartite_structural and tight
    detail = "bipartite" if spectral else "non-bipartite"
    return [_row("bipartite_spectral", sd.lambda_n, 2.0, spectral == expected, detail)]


def check_spectral_formula(g: WeightedGraph, sd: SpectralDecomposition, f: np.ndarray,
                           orders: Sequence[int] = range(7)) -> List[CheckRow]:
    """Operator energies against sum_k alpha_k^m C_k^2."""
    rows = []
    for m in orders:
        spectral = spectral_energy(sd, f, m)
        error = abs(derivative_integral(g, f, m) - spectral)
        rows.append(_row(f"spectral_energy_m{m}", error, SPECTRAL_RTOL * max(1.0, spectral)))
    return rows


def check_triangle(g: WeightedGraph, f: np.ndarray, h: np.ndarray,
                   orders: Sequence[int] = range(6)) -> List[CheckRow]:
    """gamma_m(f + h) <= gamma_m(f) + gamma_m(h)."""
    rows = []
    for m in orders:
        lhs = gamma_m(g, f + h, m)
        rhs = gamma_m(g, f, m) + gamma_m(g, h, m)
        rows.append(_row(f"triangle_m{m}", lhs, rhs, lhs <= rhs + 1e-10 * max(1.0, rhs)))
    return rows


def check_poincare(g: WeightedGraph, f: np.ndarray, sd: SpectralDecomposition,
                   tolerances: Tolerances) -> List[CheckRow]:
    result = poincare_check(g, f, sd, tolerances)
    return [
        _row("poincare_lower", result.lhs, result.rhs, result.holds),
        _row("poincare_upper", result.rhs, result.upper, result.holds),
    ]


def check_equivalence(g: WeightedGraph, f: np.ndarray, sd: SpectralDecomposition,
                      tolerances: Tolerances) -> List[CheckRow]:
    report = equivalence_check(g, f, sd, tolerances=tolerances)
    return [CheckRow(f"equivalence_{c.name}", c.lhs, c.rhs, c.slack, c.holds) for c in report.checks]


def check_heat_decay(g: WeightedGraph, sd: SpectralDecomposition, f: np.ndarray, times: Sequence[float],
                     tolerances: Tolerances) -> List[CheckRow]:
    """Observed Dirichlet energy ratio of the heat flow against exp(-2 lambda_1 t)."""
    return [_row(f"heat_decay_t{c.abscissa:g}", c.observed, c.rate, c.satisfied)
            for c in heat_decay_certificate(g, sd, f, times, tolerances)]


def check_walk_decay(g: WeightedGraph, sd: SpectralDecomposition, f: np.ndarray, steps: int,
                     tolerances: Tolerances) -> List[CheckRow]:
    """Observed walk energy ratio against (1 - (2 - lambda_N) lambda_1)^k."""
    if not g.is_sub_stochastic():
        logger.info("Graph is not sub-stochastic, walk decay check skipped")
        return []
    return [_row(f"walk_decay_k{int(c.abscissa)}", c.observed, c.rate, c.satisfied, c.note)
            for c in walk_decay_certificate(g, sd, f, steps, tolerances)]


def check_reversibility(P: np.ndarray, tolerances: Tolerances) -> List[CheckRow]:
    """Detailed balance of P against its recovered measure."""
    g = graph_from_reversible(P, tolerances)
    P = np.asarray(P, dtype=float)
    flux = P * g.mu[:, None]
    imbalance = float(np.max(np.abs(flux - flux.T)))
    return [_row("detailed_balance", imbalance, tolerances.balance * float(g.mu.max()))]


def run_verify(g: WeightedGraph, f: Optional[np.ndarray] = None, seed: int = 0,
               times: Sequence[float] = (0.25, 0.5, 1.0, 2.0, 4.0), steps: int = 10,
               stochastic: Optional[np.ndarray] = None,
               tolerances: Tolerances = DEFAULT_TOLERANCES,
               cache: Optional[DecompositionCache] = None) -> VerifyResult:
    """
    Run every check on one graph.

    Args:
        g: Graph under test
        f: Node function; drawn from a seeded standard normal (3 columns) if None
        seed: Seed for generated functions
        times: Heat decay times
        steps: Walk decay steps
        stochastic: Optional transition matrix for the detailed balance check
        tolerances: Numerical tolerances
        cache: Decomposition cache shared with the caller

    Returns:
        VerifyResult with one row per check
    """
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((g.n, 3)) if f is None else as_node_function(f, g.n)
    h = rng.standard_normal(f.shape)
    cache = cache or DecompositionCache(tolerances)
    sd = cache.get(g)

    rows: List[CheckRow] = []
    rows += _guarded("integration_by_parts", lambda: check_integration_by_parts(g, f, h, sd))
    rows += _guarded("lambda_max_bound", lambda: check_lambda_max(g, sd))
    rows += _guarded("bipartite_spectral", lambda: check_bipartite(g, sd, tolerances))
    rows += _guarded("spectral_energy", lambda: check_spectral_formula(g, sd, f))
    rows += _guarded("triangle", lambda: check_triangle(g, f, h))
    rows += _guarded("poincare", lambda: check_poincare(g, f, sd, tolerances))
    rows += _guarded("equivalence", lambda: check_equivalence(g, f, sd, tolerances))
    rows += _guarded("heat_decay", lambda: check_heat_decay(g, sd, f, times, tolerances))
    rows += _guarded("walk_decay", lambda: check_walk_decay(g, sd, f, steps, tolerances))
    if stochastic is not None:
        rows += _guarded("detailed_balance", lambda: check_reversibility(stochastic, tolerances))

    result = VerifyResult(rows)
    logger.info(f"Verification: {sum(r.passed for r in rows)}/{len(rows)} checks passed")
    return result


def print_summary(result: VerifyResult):
    """Status table in the style of the pre-flight scripts."""
    print("\n" + "=" * 60)
    print("📊 VERIFICATION SUMMARY")
    print("=" * 60)

    for row in result.rows:
        status = "✅ PASS" if row.passed else "❌ FAIL"
        detail = f"  ({row.detail})" if row.detail else ""
        print(f"{status:8} {row.name:36} {row.lhs:.6g} <= {row.rhs:.6g}{detail}")

    passed = sum(1 for r in result.rows if r.passed)
    failed = len(result.rows) - passed
    print(f"\nPassed: {passed} | Failed: {failed}")

    if failed > 0:
        print("\n❌ Some checks failed")
    else:
        print("\n✅ All checks passed!")


if __name__ == "__main__":
    from smoothing_cli import main
    sys.exit(main(["verify", *sys.argv[1:]]))
