#!/usr/bin/env python3
"""
Command-line interface for graph energy analysis.

Commands:
    inspect   graph statistics
    spectrum  eigenvalues of -Delta_mu
    energy    E_m and gamma_m of a node function
    verify    every identity and bound on one graph (exit 1 on failure)
    diffuse   heat flow energies against the continuous decay bound
    walk      random walk energies against the discrete decay bound
    gnn       untrained GCN/GAT forward pass and decay fit

Reports go to --out (CSV, plus a JSON summary for gnn) or to stdout.
"""

from dataclasses import fields
from typing import Callable, Dict, List, Optional, Sequence
import argparse
import csv
import logging
import math
import sys

import numpy as np

from analysis_config import PRESETS, RunConfig
from dynamics import heat_decay_certificate, heat_trajectory, walk_decay_certificate, walk_trajectory
from energy import energy_m, energy_report
from gnn_sim import forward, init_stack
from graph_core import WeightedGraph, graph_stats
from graph_errors import ConstantInitialCondition, GraphAnalysisError
from graph_io import format_value, load_graph, load_node_function, load_stochastic_matrix, write_csv, write_json, write_report
from spectral import DecompositionCache
from verify_theorems import HEADER, print_summary, run_verify


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2

TRAJECTORY_HEADER = ("step", "time_or_k", "E_0", "E_1", "E_2", "bound_value", "satisfied")


def _int_list(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _float_list(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _tolerance(text: str):
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"Expected NAME=VALUE, got '{text}'")
    return name.strip(), float(value)


def build_parser() -> argparse.ArgumentParser:
    """Parser with one subcommand per analysis."""
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--graph", dest="graph_path", help="Edge list file (i j w per line)")
    shared.add_argument("--preset", choices=PRESETS, help="Standard Laplacian preset (unit weights)")
    shared.add_argument("--measure", dest="measure_path", help="Node measure file")
    shared.add_argument("--features", dest="features_path", help="Node function file (one row per node)")
    shared.add_argument("--out", dest="output_path", help="Report path (default: stdout)")
    shared.add_argument("--seed", type=int, help="Seed for generated features and weights")
    shared.add_argument("--dim", dest="feature_dim", type=int, help="Width of generated features")
    shared.add_argument("--config", help="JSON run configuration; flags override it")
    shared.add_argument("--tolerance", action="append", type=_tolerance, default=[],
                        metavar="NAME=VALUE", help="Override a tolerance (repeatable)")
    shared.add_argument("--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(description="Weighted-graph calculus, energies and over-smoothing")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("inspect", parents=[shared], help="Graph statistics")
    sub.add_parser("spectrum", parents=[shared], help="Eigenvalues of -Delta_mu")

    energy = sub.add_parser("energy", parents=[shared], help="E_m and gamma_m")
    energy.add_argument("--orders", type=_int_list, help="Comma-separated orders, e.g. 0,1,2")

    verify = sub.add_parser("verify", parents=[shared], help="Run every check")
    verify.add_argument("--stochastic", dest="stochastic_path", help="Transition matrix for the detailed balance check")
    verify.add_argument("--times", type=_float_list, help="Heat decay times")
    verify.add_argument("--steps", type=int, help="Walk decay steps")

    diffuse = sub.add_parser("diffuse", parents=[shared], help="Heat flow trajectory")
    diffuse.add_argument("--times", type=_float_list, help="Comma-separated increasing times")

    walk = sub.add_parser("walk", parents=[shared], help="Random walk trajectory")
    walk.add_argument("--steps", type=int, help="Number of walk steps")

    gnn = sub.add_parser("gnn", parents=[shared], help="Untrained GNN forward pass")
    gnn.add_argument("--arch", choices=("gcn", "gat"))
    gnn.add_argument("--depth", type=int)
    gnn.add_argument("--width", type=int)
    gnn.add_argument("--activation", choices=("relu", "id", "identity"))
    gnn.add_argument("--weights", dest="weight_init", choices=("glorot", "identity"))
    gnn.add_argument("--tail-fraction", dest="tail_fraction", type=float)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    """RunConfig from --config (if any) with explicit flags taking precedence."""
    config = RunConfig.from_json_file(args.config) if args.config else RunConfig.default(args.command)
    config.command = args.command
    for f in fields(RunConfig):
        if f.name in ("command", "tolerances"):
            continue
        value = getattr(args, f.name, None)
        if value is not None:
            setattr(config, f.name, value)
    if config.activation == "id":
        config.activation = "identity"
    if args.tolerance:
        config.tolerances = config.tolerances.override(**dict(args.tolerance))
    return config


def _emit(config: RunConfig, header: Sequence[str], rows: Sequence[Sequence]):
    if config.output_path:
        write_csv(config.output_path, header, rows)
        logger.info(f"✓ Created: {config.output_path}")
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])


def _features(config: RunConfig, n: int) -> np.ndarray:
    if config.features_path:
        return load_node_function(config.features_path, n)
    rng = np.random.default_rng(config.seed)
    return rng.standard_normal((n, config.feature_dim))


def _trajectory_rows(g, trajectory, f0, certificates) -> List[tuple]:
    e1_initial = energy_m(g, f0, 1)
    rows = []
    for step, sample in enumerate(trajectory.samples, start=1):
        energies = [sample.energies.get(m, math.nan) for m in (0, 1, 2)]
        if certificates is None:
            bound, satisfied = 0.0, sample.energies[1] <= 0.0
        else:
            certificate = certificates[step - 1]
            bound, satisfied = certificate.rate * e1_initial, certificate.satisfied
        rows.append((step, sample.abscissa, *energies, bound, satisfied))
    return rows


def cmd_inspect(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    stats = graph_stats(g)
    summary = {
        "nodes": g.n,
        "edges": g.num_edges,
        "total_measure": stats.total_measure,
        "m_max": stats.m_max,
        "components": stats.component_count,
        "bipartite": stats.is_bipartite_structural,
        "sub_stochastic": stats.sub_stochastic,
    }
    if config.output_path:
        write_json(config.output_path, summary)
    else:
        for key, value in summary.items():
            print(f"{key:16} {format_value(value)}")
    return EXIT_OK


def cmd_spectrum(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    sd = cache.get(g)
    _emit(config, ["k", "alpha_k"], [(k, float(a)) for k, a in enumerate(sd.alphas)])
    return EXIT_OK


def cmd_energy(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    report = energy_report(g, _features(config, g.n), config.orders)
    if config.output_path:
        write_report(report, config.output_path)
    else:
        _emit(config, ["m", "E_m", "gamma_m"], report.rows())
    return EXIT_OK


def cmd_verify(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    f = load_node_function(config.features_path, g.n) if config.features_path else None
    stochastic = load_stochastic_matrix(config.stochastic_path) if config.stochastic_path else None
    result = run_verify(g, f, seed=config.seed, times=config.times, steps=config.steps,
                        stochastic=stochastic, tolerances=config.tolerances, cache=cache)
    if config.output_path:
        write_csv(config.output_path, HEADER, [r.as_tuple() for r in result.rows])
    print_summary(result)
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def cmd_diffuse(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    sd = cache.get(g)
    f0 = _features(config, g.n)
    trajectory = heat_trajectory(g, sd, f0, config.times, orders=(0, 1, 2))
    try:
        certificates = heat_decay_certificate(g, sd, f0, config.times, config.tolerances)
    except ConstantInitialCondition:
        logger.warning("Initial condition is constant, every energy stays 0")
        certificates = None
    _emit(config, TRAJECTORY_HEADER, _trajectory_rows(g, trajectory, f0, certificates))
    return EXIT_OK


def cmd_walk(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    f0 = _features(config, g.n)
    trajectory = walk_trajectory(g, f0, config.steps, orders=(0, 1, 2))
    try:
        certificates = walk_decay_certificate(g, cache.get(g), f0, config.steps, config.tolerances)
    except ConstantInitialCondition:
        logger.warning("Initial condition is constant, every energy stays 0")
        certificates = None
    _emit(config, TRAJECTORY_HEADER, _trajectory_rows(g, trajectory, f0, certificates))
    return EXIT_OK


def cmd_gnn(config: RunConfig, g: WeightedGraph, cache: DecompositionCache) -> int:
    topology = g.topology
    stack = init_stack(config.arch, config.depth, [config.width] * (config.depth + 1), seed=config.seed,
                       activation=config.activation, weight_init=config.weight_init)
    X0 = np.random.default_rng(config.seed).standard_normal((g.n, config.width))
    if config.features_path:
        X0 = load_node_function(config.features_path, g.n)
    _, report = forward(topology, stack, X0, config.orders, tail_fraction=config.tail_fraction)
    if config.output_path:
        write_report(report, config.output_path)
    else:
        _emit(config, ["depth"] + [f"E_{m}" for m in report.orders], report.rows())
        for key, value in report.summary().items():
            print(f"# {key}: {format_value(value)}")
    return EXIT_OK


HANDLERS: Dict[str, Callable[[RunConfig, WeightedGraph, DecompositionCache], int]] = {
    "inspect": cmd_inspect,
    "spectrum": cmd_spectrum,
    "energy": cmd_energy,
    "verify": cmd_verify,
    "diffuse": cmd_diffuse,
    "walk": cmd_walk,
    "gnn": cmd_gnn,
}

def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format='%(levelname)s: %(message)s')

    try:
        config = config_from_args(args)
    except (OSError, ValueError, TypeError) as e:
        logger.error(f"Cannot load configuration: {e}")
        return EXIT_ERROR

    issues = config.validate()
    if issues:
        logger.error("Configuration validation failed:")
        for issue in issues:
            logger.error(f"  {issue}")
        return EXIT_ERROR

    cache = DecompositionCache(config.tolerances)
    try:
        g = load_graph(config.graph_path, config.measure_path, config.preset)
        return HANDLERS[config.command](config, g, cache)
    except GraphAnalysisError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
