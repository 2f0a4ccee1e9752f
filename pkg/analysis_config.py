"""
Configuration models for graph energy analysis runs.

Provides dataclass-based models that can be loaded from JSON (or built from
command-line arguments) and used throughout the pipeline to ensure the same
tolerances and output locations everywhere.
"""

from dataclasses import dataclass, field, fields, asdict
from typing import Dict, List, Optional
import json
import os


COMMANDS = ("inspect", "spectrum", "energy", "verify", "diffuse", "walk", "gnn")
PRESETS = ("adj", "adj_selfloop", "rw", "rw_selfloop")


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances (relative unless noted)."""
    sym: float = 1e-9        # attention score symmetry
    row: float = 1e-9        # row sums of stochastic matrices
    balance: float = 1e-9    # detailed balance, scaled by max(mu)
    zero: float = 1e-9       # zero eigenvalues, scaled by max(1, lambda_N)
    bipartite: float = 1e-8  # |lambda_N - 2| for the bipartite test (absolute)
    check: float = 1e-9      # inequality slack, scaled by the magnitudes involved

    def override(self, **values: float) -> 'Tolerances':
        """Return a copy with some tolerances replaced."""
        known = {f.name for f in fields(self)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"Unknown tolerance(s): {', '.join(sorted(unknown))}")
        merged = asdict(self)
        merged.update({k: float(v) for k, v in values.items()})
        return Tolerances(**merged)

    @classmethod
    def from_dict(cls, data: Dict) -> 'Tolerances':
        """Load tolerances from a dictionary, keeping defaults for missing keys."""
        return cls().override(**data)


DEFAULT_TOLERANCES = Tolerances()


@dataclass
class OutputPaths:
    """Output location for reports."""
    output_path: str
    base_dir: str = field(init=False)

    def __post_init__(self):
        """Derive the report directory."""
        self.base_dir = os.path.dirname(os.path.abspath(self.output_path))

    def ensure_directories(self):
        """Create the report directory if it doesn't exist."""
        os.makedirs(self.base_dir, exist_ok=True)

    def sibling(self, suffix: str) -> str:
        """Path next to the main report, e.g. the JSON summary of a CSV."""
        stem, _ = os.path.splitext(self.output_path)
        return stem + suffix


@dataclass
class RunConfig:
    """Complete configuration for one command-line invocation."""
    command: str
    graph_path: Optional[str] = None
    measure_path: Optional[str] = None
    features_path: Optional[str] = None
    stochastic_path: Optional[str] = None
    preset: Optional[str] = None
    orders: List[int] = field(default_factory=lambda: [0, 1, 2])
    times: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    steps: int = 10
    seed: int = 0
    feature_dim: int = 3
    arch: str = "gcn"
    depth: int = 64
    width: int = 16
    activation: str = "relu"
    weight_init: str = "glorot"
    tail_fraction: float = 0.5
    output_path: Optional[str] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    @classmethod
    def from_dict(cls, data: Dict) -> 'RunConfig':
        """Load a run configuration from a dictionary."""
        data = dict(data)
        tolerances = Tolerances.from_dict(data.pop("tolerances", {}) or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown configuration key(s): {', '.join(sorted(unknown))}")
        return cls(tolerances=tolerances, **data)

    @classmethod
    def from_json_file(cls, json_path: str) -> 'RunConfig':
        """Load a run configuration from a JSON file."""
        with open(json_path, 'r') as f:
            data = json.load(f)
        return cls.from_dict(data)

    @classmethod
    def default(cls, command: str, graph_path: Optional[str] = None,
                preset: Optional[str] = None) -> 'RunConfig':
        """Create a default configuration for a command."""
        return cls(command=command, graph_path=graph_path, preset=preset)

    @property
    def output(self) -> Optional[OutputPaths]:
        """Output paths, or None when reports go to stdout."""
        if self.output_path is None:
            return None
        return OutputPaths(self.output_path)

    def validate(self) -> list[str]:
        """Validate configuration and return list of issues."""
        issues = []

        if self.command not in COMMANDS:
            issues.append(f"Unknown command '{self.command}' (expected one of {', '.join(COMMANDS)})")

        if self.graph_path is None:
            issues.append("No graph file given (--graph)")

        if self.preset is not None and self.measure_path is not None:
            issues.append("--preset and --measure are mutually exclusive")
        if self.preset is not None and self.preset not in PRESETS:
            issues.append(f"Unknown preset '{self.preset}' (expected one of {', '.join(PRESETS)})")

        # Check referenced files
        for name, path in [
            ("graph", self.graph_path),
            ("measure", self.measure_path),
            ("features", self.features_path),
            ("stochastic", self.stochastic_path),
        ]:
            if path is not None and not os.path.exists(path):
                issues.append(f"Missing {name} file: {path}")

        if any(m < 0 for m in self.orders):
            issues.append(f"Derivative orders must be nonnegative: {self.orders}")
        if any(t < 0 for t in self.times):
            issues.append(f"Times must be nonnegative: {self.times}")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            issues.append(f"Times must be strictly increasing: {self.times}")
        if self.steps < 0:
            issues.append(f"Step count must be nonnegative: {self.steps}")
        if self.arch not in ("gcn", "gat"):
            issues.append(f"Unknown architecture '{self.arch}' (expected gcn or gat)")
        if self.activation not in ("identity", "relu"):
            issues.append(f"Unknown activation '{self.activation}' (expected identity or relu)")
        if self.weight_init not in ("glorot", "identity"):
            issues.append(f"Unknown weight init '{self.weight_init}' (expected glorot or identity)")
        if self.depth < 1 or self.width < 1 or self.feature_dim < 1:
            issues.append("depth, width and feature_dim must be positive")
        if not 0.0 < self.tail_fraction <= 1.0:
            issues.append(f"tail_fraction must lie in (0, 1]: {self.tail_fraction}")

        # Check output directory is writable
        if self.output is not None:
            try:
                self.output.ensure_directories()
            except Exception as e:
                issues.append(f"Cannot create output directory: {e}")

        return issues
