"""
File ingestion and report persistence.

Input formats (whitespace or comma separated, '#' starts a comment):
    edge list      one "i j w" line per undirected edge, optional "# nodes: N" header
    measure        one "i mu_i" line per node (or bare mu_i in node order)
    node function  one row of d values per node
    stochastic     one row of n values per node

Reports are CSV (fixed column order) or JSON. Every write goes to a
temporary file first and is moved into place with os.replace.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple
import csv
import json
import logging
import os
import re

import numpy as np

from analysis_config import OutputPaths
from dynamics import Trajectory
from energy import EnergyReport
from gnn_sim import OversmoothReport
from graph_core import Topology, WeightedGraph, build_graph, preset_graph
from graph_errors import DimensionMismatch, IoError, MissingMeasure, ParseError, PreconditionViolated
from spectral import SpectralDecomposition


logger = logging.getLogger(__name__)

NODES_HEADER = re.compile(r"^#\s*nodes:\s*(\d+)\s*$")
SIGNIFICANT_DIGITS = 17


def format_value(value: Any) -> str:
    """Text form used in every report: floats with 17 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), f".{SIGNIFICANT_DIGITS}g")
    return str(value)


def _read_lines(path: str) -> List[str]:
    try:
        with open(path, 'r') as f:
            return f.read().splitlines()
    except OSError as e:
        raise IoError(f"Cannot read {path}: {e}") from e


def _fields(line: str) -> List[str]:
    return line.split("#", 1)[0].replace(",", " ").split()


def _numbered_rows(path: str) -> List[Tuple[int, List[float]]]:
    """(1-based line, numeric values); blank and comment lines skipped, widths must agree."""
    rows = []
    width = None
    for number, line in enumerate(_read_lines(path), start=1):
        tokens = _fields(line)
        if not tokens:
            continue
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(f"Non-numeric value in '{line.strip()}'", line=number, path=path)
        if width is not None and len(values) != width:
            raise ParseError(f"Expected {width} values, got {len(values)}", line=number, path=path)
        width = len(values)
        rows.append((number, values))
    return rows


def _parse_rows(path: str) -> List[List[float]]:
    return [values for _, values in _numbered_rows(path)]


def _parse_edges(path: str) -> Tuple[Optional[int], List[Tuple[int, int, float]]]:
    declared = None
    edges = []
    for number, line in enumerate(_read_lines(path), start=1):
        header = NODES_HEADER.match(line.strip())
        if header:
            declared = int(header.group(1))
            continue
        tokens = _fields(line)
        if not tokens:
            continue
        if len(tokens) != 3:
            raise ParseError(f"Expected 'i j w', got {len(tokens)} field(s)", line=number, path=path)
        try:
            i, j, w = int(tokens[0]), int(tokens[1]), float(tokens[2])
        except ValueError:
            raise ParseError(f"Cannot parse edge '{line.strip()}'", line=number, path=path)
        edges.append((i, j, w))
    return declared, edges


def load_measure(path: str) -> np.ndarray:
    """Measure as 'i mu_i' lines (any order, every node once) or one mu_i per line."""
    rows = _numbered_rows(path)
    if not rows or len(rows[0][1]) == 1:
        return np.array([values[0] for _, values in rows], dtype=float)
    if len(rows[0][1]) != 2:
        raise ParseError(f"Measure lines need 'i mu' or 'mu', got {len(rows[0][1])} values",
                         line=rows[0][0], path=path)

    mu = np.full(len(rows), np.nan)
    for number, (i, value) in rows:
        if i != int(i) or not 0 <= i < len(rows) or not np.isnan(mu[int(i)]):
            raise ParseError(f"Node index {i} is out of range or repeated", line=number, path=path)
        mu[int(i)] = value
    return mu


def load_graph(edge_path: str, measure_path: Optional[str] = None,
               preset: Optional[str] = None) -> WeightedGraph:
    """
    Load an edge list and attach a measure.

    Args:
        edge_path: Edge list file
        measure_path: Measure file (mutually exclusive with preset)
        preset: adj, adj_selfloop, rw or rw_selfloop; file weights are
            replaced by 1 for presets

    Returns:
        Validated WeightedGraph
    """
    if preset is not None and measure_path is not None:
        raise PreconditionViolated("A preset and a measure file are mutually exclusive")
    if preset is None and measure_path is None:
        raise MissingMeasure("Give either a preset or a measure file")

    declared, edges = _parse_edges(edge_path)
    mu = load_measure(measure_path) if measure_path is not None else None

    n = max([declared or 0] + [max(i, j) + 1 for i, j, _ in edges])
    if mu is not None:
        n = max(n, mu.shape[0])

    if preset is not None:
        if any(w != 1.0 for _, _, w in edges):
            logger.warning(f"Preset '{preset}' uses unit weights; weights in {edge_path} are ignored")
        g = preset_graph(Topology(n, tuple((i, j) for i, j, _ in edges)), preset)
    else:
        g = build_graph(n, edges, mu)

    logger.info(f"Loaded graph {edge_path}: {g.n} nodes, {g.num_edges} edges"
                + (f", preset {preset}" if preset else f", measure {measure_path}"))
    return g


def load_node_function(path: str, n: Optional[int] = None) -> np.ndarray:
    """n x d feature matrix, one row per node."""
    rows = _parse_rows(path)
    if not rows:
        raise ParseError("No values found", path=path)
    f = np.array(rows, dtype=float)
    if n is not None and f.shape[0] != n:
        raise DimensionMismatch(f"{path} has {f.shape[0]} rows for {n} nodes")
    return f


def load_stochastic_matrix(path: str) -> np.ndarray:
    """Square transition matrix; stochasticity is checked by graph_core."""
    P = load_node_function(path)
    if P.shape[0] != P.shape[1]:
        raise DimensionMismatch(f"{path} is {P.shape[0]} x {P.shape[1]}, expected square")
    return P


# Writing

def _atomic_write(path: str, write):
    directory = os.path.dirname(os.path.abspath(path))
    tmp = path + ".tmp"
    try:
        os.makedirs(directory, exist_ok=True)
        with open(tmp, 'w', newline='') as f:
            write(f)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except OSError as e:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise IoError(f"Cannot write {path}: {e}") from e
    logger.debug(f"Wrote {path}")


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
    """CSV with a header line; values formatted by format_value."""
    def write(f):
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    _atomic_write(path, write)


def write_json(path: str, payload: Dict):
    """Sorted, indented JSON."""
    def write(f):
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    _atomic_write(path, write)


def save_graph(g: WeightedGraph, edge_path: str, measure_path: str):
    """Edge list with a node-count header plus the measure file."""
    def write_edges(f):
        f.write(f"# nodes: {g.n}\n")
        for i, j, w in g.edges():
            f.write(f"{i}\t{j}\t{format_value(w)}\n")
    _atomic_write(edge_path, write_edges)
    def write_measure(f):
        for i, value in enumerate(g.mu):
            f.write(f"{i}\t{format_value(value)}\n")
    _atomic_write(measure_path, write_measure)


def save_node_function(f: np.ndarray, path: str):
    """One tab-separated row per node."""
    values = np.asarray(f, dtype=float)
    if values.ndim == 1:
        values = values[:, None]

    def write(out):
        for row in values:
            out.write("\t".join(format_value(v) for v in row) + "\n")
    _atomic_write(path, write)


def report_table(report: Any) -> Tuple[List[str], List[Tuple]]:
    """Header and rows of a report object in its fixed column order."""
    if isinstance(report, EnergyReport):
        return ["m", "E_m", "gamma_m"], report.rows()
    if isinstance(report, SpectralDecomposition):
        return ["k", "alpha_k"], [(k, float(a)) for k, a in enumerate(report.alphas)]
    if isinstance(report, Trajectory):
        header = ["step", "time_or_k"] + [f"E_{m}" for m in report.orders]
        rows = [(step, s.abscissa, *(s.energies[m] for m in report.orders))
                for step, s in enumerate(report.samples, start=1)]
        return header, rows
    if isinstance(report, OversmoothReport):
        return ["depth"] + [f"E_{m}" for m in report.orders], report.rows()
    raise TypeError(f"No table layout for {type(report).__name__}")


def write_report(report: Any, path: str):
    """
    Persist a report.

    Dicts are written as JSON, report objects as CSV. An OversmoothReport
    also gets its fit summary in a sibling .json file.
    """
    if isinstance(report, dict):
        write_json(path, report)
        return
    header, rows = report_table(report)
    write_csv(path, header, rows)
    if isinstance(report, OversmoothReport):
        write_json(OutputPaths(path).sibling(".json"), report.summary())
    logger.info(f"Report written: {path}")
